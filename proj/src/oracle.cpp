#include "dle/oracle.hpp"

#include "dle/message_codec.hpp"

#include <fmt/format.h>
#include <fmt/ranges.h>

#include <algorithm>
#include <cmath>
#include <unordered_map>

namespace dle {

const char* to_string(ViolationKind k) noexcept {
    switch (k) {
    case ViolationKind::agreement: return "agreement";
    case ViolationKind::validity: return "validity";
    case ViolationKind::stability: return "stability";
    case ViolationKind::termination: return "termination";
    case ViolationKind::uniqueness: return "uniqueness";
    case ViolationKind::budget: return "budget";
    case ViolationKind::freshness: return "freshness";
    }
    return "?";
}

namespace {

std::string id_list(const std::vector<NodeId>& ids) {
    std::vector<std::uint64_t> raw;
    raw.reserve(ids.size());
    for (NodeId v : ids) {
        raw.push_back(to_underlying(v));
    }
    return fmt::format("{}", fmt::join(raw, ","));
}

std::string describe(const Message& m) {
    if (const auto* r = std::get_if<Rank>(&m)) {
        return fmt::format("rank(owner={},p={},U={})", to_underlying(r->owner), r->phase_count,
                           r->uniform);
    }
    const auto& b = std::get<Beep>(m);
    return fmt::format("beep(leader={},ts={})", to_underlying(b.leader), b.timestamp);
}

} // namespace

std::string format_violation(const Violation& v) {
    std::string evidence;
    evidence.reserve(v.evidence.size());
    for (char c : v.evidence) {
        if (c == '"' || c == '\\') {
            evidence.push_back('\\');
        }
        evidence.push_back(c == '\n' ? ' ' : c);
    }
    return fmt::format("kind={} round={} nodes={} evidence=\"{}\"", to_string(v.kind), v.round,
                       id_list(v.nodes), evidence);
}

std::vector<Violation> check_agreement(const Trace& t) {
    std::vector<Violation> out;
    for (const auto& round : t.rounds()) {
        const NodeRecord* first = nullptr;
        for (const auto& rec : round.nodes) {
            if (!rec.state.leader) {
                continue;
            }
            if (first == nullptr) {
                first = &rec;
            } else if (*rec.state.leader != *first->state.leader) {
                out.push_back(Violation{
                    ViolationKind::agreement, round.round, {first->state.self, rec.state.self},
                    fmt::format("node {} follows {}, node {} follows {}",
                                to_underlying(first->state.self), to_underlying(*first->state.leader),
                                to_underlying(rec.state.self), to_underlying(*rec.state.leader))});
                break;
            }
        }
    }
    return out;
}

std::vector<Violation> check_validity(const Trace& t, Round diameter) {
    std::vector<Violation> out;
    for (const auto& round : t.rounds()) {
        const Round r = round.round;
        for (const auto& rec : round.nodes) {
            const auto& leader = rec.state.leader;
            if (!leader || *leader == rec.state.self) {
                continue;
            }
            const NodeRecord* before = t.find(r - 1, rec.state.self);
            if (before != nullptr && before->state.leader == leader) {
                continue; // not an adoption
            }
            bool witnessed = false;
            for (Round q = std::max<Round>(1, r - diameter - 1); q <= r && !witnessed; ++q) {
                const NodeRecord* cand = t.find(q, *leader);
                witnessed = cand != nullptr && cand->state.leader == *leader;
            }
            if (!witnessed) {
                out.push_back(Violation{
                    ViolationKind::validity, r, {rec.state.self, *leader},
                    fmt::format("node {} adopted {} which was not its own leader in [{}, {}]",
                                to_underlying(rec.state.self), to_underlying(*leader),
                                std::max<Round>(1, r - diameter - 1), r)});
            }
        }
    }
    return out;
}

std::vector<Violation> check_stability(const Trace& t) {
    std::vector<Violation> out;
    const auto& s = t.schedule();
    for (const auto& round : t.rounds()) {
        const Round r = round.round;
        for (const auto& rec : round.nodes) {
            const NodeRecord* before = t.find(r - 1, rec.state.self);
            if (before == nullptr || !before->state.leader ||
                rec.state.leader == before->state.leader) {
                continue;
            }
            const NodeId old = *before->state.leader;
            if (s.alive(old, r)) {
                out.push_back(Violation{
                    ViolationKind::stability, r, {rec.state.self, old},
                    fmt::format("node {} dropped leader {} which is still present",
                                to_underlying(rec.state.self), to_underlying(old))});
            }
        }
    }
    return out;
}

std::vector<TerminationEpisode> termination_episodes(const Trace& t) {
    std::vector<TerminationEpisode> done;
    std::unordered_map<std::uint64_t, Round> open;
    for (const auto& round : t.rounds()) {
        for (const auto& rec : round.nodes) {
            const auto key = to_underlying(rec.state.self);
            auto it = open.find(key);
            if (!rec.state.leader) {
                if (it == open.end()) {
                    open.emplace(key, round.round);
                }
            } else if (it != open.end()) {
                done.push_back(TerminationEpisode{rec.state.self, it->second, round.round, 0});
                open.erase(it);
            }
        }
    }
    for (const auto& [key, start] : open) {
        done.push_back(TerminationEpisode{NodeId{key}, start, std::nullopt, 0});
    }
    const auto& s = t.schedule();
    for (auto& e : done) {
        const auto* m = s.membership(e.node);
        e.last_alive = std::min(m != nullptr ? m->last : 0, t.last_round());
    }
    std::sort(done.begin(), done.end(), [](const auto& a, const auto& b) {
        return a.node != b.node ? a.node < b.node : a.start < b.start;
    });
    return done;
}

std::vector<Violation> check_termination(const Trace& t, Round bound) {
    std::vector<Violation> out;
    if (bound < 0) {
        throw ParameterError("check_termination: negative bound");
    }
    for (const auto& e : termination_episodes(t)) {
        const Round deadline = e.start + bound;
        if (deadline > e.last_alive) {
            continue;
        }
        if (!e.end || *e.end > deadline) {
            out.push_back(Violation{
                ViolationKind::termination, deadline, {e.node},
                fmt::format("node {} has no leader {} rounds after round {}", to_underlying(e.node),
                            bound, e.start)});
        }
    }
    std::sort(out.begin(), out.end(), [](const Violation& a, const Violation& b) {
        return a.round != b.round ? a.round < b.round : a.nodes < b.nodes;
    });
    return out;
}

std::vector<Violation> check_unique_candidate(const Trace& t) {
    std::vector<Violation> out;
    const Round D = t.diameter();
    const PhaseClock clock(D);
    for (Round phase = 0;; ++phase) {
        const Round s = clock.phase_start(phase);
        const Round decision = s + D;
        if (decision > t.last_round()) {
            break;
        }
        std::vector<NodeId> unbeaten;
        for (const auto& rec : t.at(s).nodes) {
            const Rank* own = rec.outbound ? std::get_if<Rank>(&*rec.outbound) : nullptr;
            if (own == nullptr || own->owner != rec.state.self ||
                t.find(decision, rec.state.self) == nullptr) {
                continue;
            }
            bool beaten = false;
            for (Round q = s + 1; q <= decision && !beaten; ++q) {
                for (const auto& m : t.inbox(q, rec.state.self)) {
                    const Rank* other = std::get_if<Rank>(&m);
                    if (other != nullptr && !(*other == *own) && rank_less(*other, *own)) {
                        beaten = true;
                        break;
                    }
                }
            }
            if (!beaten) {
                unbeaten.push_back(rec.state.self);
            }
        }
        if (unbeaten.size() >= 2) {
            out.push_back(Violation{ViolationKind::uniqueness, decision, unbeaten,
                                    fmt::format("{} nodes kept the smallest rank through phase {}",
                                                unbeaten.size(), phase)});
        }
    }
    return out;
}

std::vector<Violation> check_budget(const Trace& t) {
    std::vector<Violation> out;
    const auto w = bit_widths(t.schedule(), t.uniform_bits());
    for (const auto& round : t.rounds()) {
        for (const auto& rec : round.nodes) {
            if (!rec.outbound) {
                continue;
            }
            const auto& m = *rec.outbound;
            const unsigned size = compact_size(m, w);
            if (!fits_widths(m, w) || size > w.budget()) {
                out.push_back(Violation{
                    ViolationKind::budget, round.round, {rec.state.self},
                    fmt::format("{} needs {} bits against a budget of {}", describe(m), size,
                                w.budget())});
            }
        }
    }
    return out;
}

std::vector<Violation> check_freshness(const Trace& t) {
    std::vector<Violation> out;
    const Round D = t.diameter();
    for (const auto& round : t.rounds()) {
        for (const auto& rec : round.nodes) {
            const Beep* b = rec.outbound ? std::get_if<Beep>(&*rec.outbound) : nullptr;
            if (b != nullptr && (!is_fresh(*b, round.round, D) || b->timestamp > round.round)) {
                out.push_back(Violation{ViolationKind::freshness, round.round, {rec.state.self},
                                        fmt::format("broadcast {} in round {}", describe(*rec.outbound),
                                                    round.round)});
            }
        }
    }
    return out;
}

std::vector<Violation> check_safety(const Trace& t) {
    std::vector<Violation> all;
    auto append = [&all](std::vector<Violation> v) {
        all.insert(all.end(), std::make_move_iterator(v.begin()), std::make_move_iterator(v.end()));
    };
    append(check_agreement(t));
    append(check_validity(t, t.diameter()));
    append(check_stability(t));
    append(check_unique_candidate(t));
    append(check_budget(t));
    append(check_freshness(t));
    return all;
}

Round termination_bound(double coefficient, Round diameter, std::size_t n) {
    if (coefficient < 0 || diameter < 1 || n < 1) {
        throw ParameterError("termination_bound: need c >= 0, D >= 1, n >= 1");
    }
    const auto log_n = std::max<unsigned>(1, static_cast<unsigned>(std::bit_width(n - 1)));
    return static_cast<Round>(std::ceil(coefficient * static_cast<double>(diameter) * log_n));
}

double compute_potential(const Trace& t, Round round, NodeId reference,
                         std::span<const NodeId> cohort) {
    const NodeRecord* ref = t.find(round, reference);
    if (ref == nullptr || ref->state.status != Status::active) {
        throw ParameterError(fmt::format("compute_potential: node {} is not active in round {}",
                                         to_underlying(reference), round));
    }
    const int p_ref = static_cast<int>(ref->state.phase_count);
    double sum = 0.0;
    for (NodeId b : cohort) {
        if (const NodeRecord* rec = t.find(round, b)) {
            sum += std::ldexp(1.0, static_cast<int>(rec->state.phase_count) - p_ref);
        }
    }
    return sum;
}

std::vector<bool> no_leader_indicators(const Trace& t, std::size_t max_i) {
    const Round D = t.diameter();
    if (static_cast<Round>(max_i) * D > t.last_round()) {
        throw RangeError(fmt::format("no_leader_indicators: round {} beyond trace end {}",
                                     static_cast<Round>(max_i) * D, t.last_round()));
    }
    // First round with a defined leader, per node present since round 1.
    const Round horizon_end = static_cast<Round>(max_i) * D;
    std::unordered_map<std::uint64_t, Round> first_leader;
    if (t.last_round() >= 1) {
        for (const auto& rec : t.at(1).nodes) {
            first_leader.emplace(to_underlying(rec.state.self), horizon_end + 1);
        }
    }
    for (Round r = 1; r <= horizon_end; ++r) {
        for (const auto& rec : t.at(r).nodes) {
            auto it = first_leader.find(to_underlying(rec.state.self));
            if (it != first_leader.end() && rec.state.leader && it->second > r) {
                it->second = r;
            }
        }
    }
    const auto& s = t.schedule();
    std::vector<bool> out(max_i + 1, false);
    out[0] = true;
    for (std::size_t i = 1; i <= max_i; ++i) {
        const Round r = static_cast<Round>(i) * D;
        for (const auto& [raw, first] : first_leader) {
            if (first > r && s.alive_throughout(NodeId{raw}, 1, r)) {
                out[i] = true;
                break;
            }
        }
    }
    return out;
}

void LowerBoundCurve::add(const std::vector<bool>& indicators) {
    if (indicators.size() != hits_.size()) {
        throw ParameterError("LowerBoundCurve: indicator length mismatch");
    }
    for (std::size_t i = 0; i < hits_.size(); ++i) {
        hits_[i] += indicators[i] ? 1 : 0;
    }
    ++runs_;
}

std::vector<double> LowerBoundCurve::probabilities() const {
    std::vector<double> p(hits_.size(), 0.0);
    if (runs_ == 0) {
        return p;
    }
    for (std::size_t i = 0; i < hits_.size(); ++i) {
        p[i] = static_cast<double>(hits_[i]) / static_cast<double>(runs_);
    }
    return p;
}

std::vector<double> lower_bound_curve(std::span<const Trace> traces, std::size_t max_i) {
    LowerBoundCurve curve(max_i);
    for (const auto& t : traces) {
        curve.add(t);
    }
    return curve.probabilities();
}

} // namespace dle

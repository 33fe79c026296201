#include "dle/engine.hpp"

#include "dle/oracle.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <limits>

namespace dle {

namespace {

struct Slot {
    NodeState state;
    Rng rng;
    InboxDigest pending; ///< messages received last round, consumed this round
};

std::size_t index_of(const std::vector<Slot>& slots, NodeId v) {
    auto it = std::lower_bound(slots.begin(), slots.end(), v,
                               [](const Slot& s, NodeId id) { return s.state.self < id; });
    return static_cast<std::size_t>(it - slots.begin());
}

/// Best and runner-up over one message kind, by sender position. On a clique
/// every node hears all senders but itself, so two entries always suffice.
template <class T, class Better>
struct TopTwo {
    static constexpr std::size_t none = std::numeric_limits<std::size_t>::max();
    const T* best = nullptr;
    std::size_t best_from = none;
    const T* second = nullptr;

    void offer(const T& m, std::size_t from, Better better) {
        if (best == nullptr || better(m, *best)) {
            second = best;
            best = &m;
            best_from = from;
        } else if (second == nullptr || better(m, *second)) {
            second = &m;
        }
    }
    const T* excluding(std::size_t self) const { return best_from == self ? second : best; }
};

} // namespace

Trace run(std::shared_ptr<const Schedule> schedule, std::uint64_t master_seed,
          const RunOptions& options) {
    if (!schedule) {
        throw ParameterError("run: null schedule");
    }
    if (options.uniform_bits < 1 || options.uniform_bits > 64) {
        throw ParameterError("run: uniform_bits must be in [1, 64]");
    }
    if (!options.allow_unverified) {
        if (auto bad = verify_comm_diameter(*schedule)) {
            throw UnverifiedScheduleError(fmt::format(
                "schedule violates D = {}: flood from {} at round {} misses {}",
                schedule->diameter(), to_underlying(bad->source), bad->start,
                to_underlying(bad->receiver)));
        }
    }

    const ProtocolConfig config{schedule->diameter(), options.uniform_bits};
    const PhaseClock clock(config.diameter);
    Trace trace(schedule, master_seed, options.uniform_bits);

    std::vector<Slot> slots;
    std::vector<Slot> merged;
    std::vector<std::optional<Message>> outbound;

    auto rank_better = [](const Rank& a, const Rank& b) { return rank_less(a, b); };
    auto beep_better = [](const Beep& a, const Beep& b) { return newer_beep(a, b); };

    for (Round r = 1; r <= schedule->horizon(); ++r) {
        const auto& g = schedule->snapshot_at(r);

        // Topology update: keep survivors, create entrants, drop the rest.
        merged.clear();
        merged.reserve(g.size());
        std::size_t old = 0;
        for (NodeId v : g.vertices()) {
            while (old < slots.size() && slots[old].state.self < v) {
                ++old;
            }
            if (old < slots.size() && slots[old].state.self == v) {
                merged.push_back(std::move(slots[old++]));
            } else {
                merged.push_back(Slot{on_enter(v, r, clock), Rng(node_stream_seed(master_seed, v)), {}});
            }
        }
        std::swap(slots, merged);

        // Local computation.
        RoundRecord record{r, {}};
        record.nodes.reserve(slots.size());
        outbound.assign(slots.size(), std::nullopt);
        for (std::size_t i = 0; i < slots.size(); ++i) {
            auto& slot = slots[i];
            auto result = step(slot.state, r, slot.pending, slot.rng, config);
            slot.state = result.state;
            outbound[i] = result.outbound;
            record.nodes.push_back(NodeRecord{std::move(result.state), std::move(result.outbound)});
        }

        // Communication along E^r, consumed in round r + 1.
        for (auto& slot : slots) {
            slot.pending = InboxDigest{};
        }
        const Round consume = r + 1;
        if (g.is_complete()) {
            TopTwo<Rank, decltype(rank_better)> ranks;
            TopTwo<Beep, decltype(beep_better)> beeps;
            for (std::size_t i = 0; i < slots.size(); ++i) {
                if (!outbound[i]) {
                    continue;
                }
                if (const auto* rk = std::get_if<Rank>(&*outbound[i])) {
                    ranks.offer(*rk, i, rank_better);
                } else {
                    beeps.offer(std::get<Beep>(*outbound[i]), i, beep_better);
                }
            }
            for (std::size_t i = 0; i < slots.size(); ++i) {
                if (const auto* rk = ranks.excluding(i)) {
                    slots[i].pending.add(*rk, consume);
                }
                if (const auto* bp = beeps.excluding(i)) {
                    slots[i].pending.add(*bp, consume);
                }
            }
        } else {
            for (const auto& [a, b] : g.explicit_edges()) {
                const std::size_t ia = index_of(slots, a);
                const std::size_t ib = index_of(slots, b);
                if (outbound[ia]) {
                    slots[ib].pending.add(*outbound[ia], consume);
                }
                if (outbound[ib]) {
                    slots[ia].pending.add(*outbound[ib], consume);
                }
            }
        }

        trace.append(std::move(record));
    }
    return trace;
}

std::map<NodeId, std::vector<Message>> deliver(const GraphSnapshot& snapshot,
                                               const std::map<NodeId, Message>& outbounds) {
    for (const auto& [sender, msg] : outbounds) {
        if (!snapshot.contains(sender)) {
            throw ParameterError(fmt::format("deliver: sender {} is not a vertex of round {}",
                                             to_underlying(sender), snapshot.round()));
        }
    }
    std::map<NodeId, std::vector<Message>> inboxes;
    for (NodeId v : snapshot.vertices()) {
        inboxes[v];
    }
    if (snapshot.is_complete()) {
        for (NodeId v : snapshot.vertices()) {
            auto& inbox = inboxes[v];
            for (const auto& [sender, msg] : outbounds) {
                if (sender != v) {
                    inbox.push_back(msg);
                }
            }
        }
        return inboxes;
    }
    // Edges are sorted, so each inbox ends up ordered by sender id only per
    // endpoint role; sort by sender afterwards for a canonical order.
    std::map<NodeId, std::vector<std::pair<NodeId, Message>>> tagged;
    for (const auto& [a, b] : snapshot.explicit_edges()) {
        if (auto it = outbounds.find(a); it != outbounds.end()) {
            tagged[b].emplace_back(a, it->second);
        }
        if (auto it = outbounds.find(b); it != outbounds.end()) {
            tagged[a].emplace_back(b, it->second);
        }
    }
    for (auto& [v, list] : tagged) {
        std::sort(list.begin(), list.end(),
                  [](const auto& x, const auto& y) { return x.first < y.first; });
        for (auto& [sender, msg] : list) {
            inboxes[v].push_back(std::move(msg));
        }
    }
    return inboxes;
}

const char* to_string(PhaseOutcome o) noexcept {
    switch (o) {
    case PhaseOutcome::no_election: return "no_election";
    case PhaseOutcome::successful: return "successful";
    case PhaseOutcome::failed: return "failed";
    }
    return "?";
}

std::optional<std::size_t> RunStats::phases_to_success() const {
    std::optional<std::size_t> first;
    for (std::size_t i = 0; i < phases.size(); ++i) {
        if (phases[i].outcome == PhaseOutcome::no_election) {
            continue;
        }
        if (!first) {
            first = i;
        }
        if (phases[i].outcome == PhaseOutcome::successful) {
            return i - *first + 1;
        }
    }
    return std::nullopt;
}

RunStats summarize(const Trace& t) {
    RunStats stats;
    stats.episodes = termination_episodes(t);

    for (const auto& round : t.rounds()) {
        for (const auto& rec : round.nodes) {
            if (!rec.outbound) {
                continue;
            }
            if (std::holds_alternative<Rank>(*rec.outbound)) {
                ++stats.rank_messages;
            } else {
                ++stats.beep_messages;
            }
        }
    }

    const PhaseClock clock(t.diameter());
    const Round D = t.diameter();
    for (Round phase = 0;; ++phase) {
        const Round s = clock.phase_start(phase);
        const Round end = s + 2 * D - 1;
        if (end > t.last_round()) {
            break;
        }
        PhaseSummary summary;
        summary.index = phase;

        std::vector<NodeId> cohort;
        NodeId reference{};
        std::uint32_t reference_p = 0;
        for (const auto& rec : t.at(s).nodes) {
            if (rec.state.status != Status::active) {
                continue;
            }
            if (cohort.empty() || rec.state.phase_count > reference_p) {
                reference = rec.state.self;
                reference_p = rec.state.phase_count;
            }
            cohort.push_back(rec.state.self);
        }
        summary.candidates = cohort.size();
        if (!cohort.empty()) {
            summary.potential = compute_potential(t, s, reference, cohort);
        }

        // Self-election inside the first D rounds (inclusive of the decision round).
        for (Round r = s; r <= s + D && !summary.elected; ++r) {
            for (const auto& rec : t.at(r).nodes) {
                if (rec.state.status != Status::leader) {
                    continue;
                }
                const NodeRecord* before = t.find(r - 1, rec.state.self);
                if (before == nullptr || before->state.status != Status::leader) {
                    summary.elected = rec.state.self;
                    break;
                }
            }
        }
        if (summary.elected && t.find(end, *summary.elected) != nullptr) {
            summary.outcome = PhaseOutcome::successful;
        } else if (!summary.elected && cohort.empty()) {
            summary.outcome = PhaseOutcome::no_election;
        } else {
            summary.outcome = PhaseOutcome::failed;
        }
        stats.phases.push_back(std::move(summary));
    }
    return stats;
}

} // namespace dle

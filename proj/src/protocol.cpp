#include "dle/protocol.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

namespace dle {

double Rank::value() const {
    // U / 2^b near 1 loses everything to cancellation under log(); log1p of
    // the exact complement keeps full precision there.
    const double scale = std::ldexp(1.0, -static_cast<int>(uniform_bits));
    const std::uint64_t half = std::uint64_t{1} << (uniform_bits - 1);
    double e = 0.0;
    if (uniform >= half) {
        const std::uint64_t complement =
            uniform_bits == 64 ? (~uniform + 1) : ((std::uint64_t{1} << uniform_bits) - uniform);
        e = -std::log1p(-static_cast<double>(complement) * scale);
    } else {
        e = -std::log(static_cast<double>(uniform) * scale);
    }
    return std::ldexp(e, -static_cast<int>(std::min<std::uint32_t>(phase_count, 4096)));
}

bool rank_less(const Rank& a, const Rank& b) {
    const double va = a.value();
    const double vb = b.value();
    if (va != vb) {
        return va < vb;
    }
    return a.owner < b.owner;
}

Ordering compare_ranks(const Rank& a, const Rank& b) {
    const double va = a.value();
    const double vb = b.value();
    if (va < vb) {
        return Ordering::a_smaller;
    }
    if (vb < va) {
        return Ordering::b_smaller;
    }
    if (a.owner == b.owner) {
        throw InvariantError(
            fmt::format("compare_ranks: two ranks of node {} with equal value", to_underlying(a.owner)));
    }
    return a.owner < b.owner ? Ordering::a_smaller : Ordering::b_smaller;
}

Rank draw_rank(std::uint32_t phase_count, NodeId owner, Rng& rng, unsigned uniform_bits) {
    if (uniform_bits < 1 || uniform_bits > 64) {
        throw ParameterError("draw_rank: uniform_bits must be in [1, 64]");
    }
    std::uint64_t u = 0;
    do {
        u = rng.next_bits(uniform_bits);
    } while (u == 0);
    return Rank{phase_count, u, uniform_bits, owner};
}

PhaseClock::PhaseClock(Round diameter) : diameter_(diameter) {
    if (diameter < 1) {
        throw ParameterError("PhaseClock: D must be at least 1");
    }
}

Round PhaseClock::next_phase_start_at_or_after(Round r) const noexcept {
    const Round off = offset(r);
    return off == 0 ? r : r + (phase_length() - off);
}

const char* to_string(Status s) noexcept {
    switch (s) {
    case Status::passive: return "passive";
    case Status::waiting: return "waiting";
    case Status::active: return "active";
    case Status::follower: return "follower";
    case Status::leader: return "leader";
    }
    return "?";
}

NodeState on_enter(NodeId self, Round r, const PhaseClock& clock) {
    NodeState s;
    s.self = self;
    s.status = Status::passive;
    s.entry_round = r;
    s.passive_anchor = clock.next_phase_start_at_or_after(r);
    return s;
}

void InboxDigest::add(const Message& m, Round r) {
    if (const auto* beep = std::get_if<Beep>(&m)) {
        if (beep->timestamp > r) {
            throw MalformedInputError(fmt::format("beep from {} stamped {} received in round {}",
                                                  to_underlying(beep->leader), beep->timestamp, r));
        }
        if (!beep_ || newer_beep(*beep, *beep_)) {
            beep_ = *beep;
        }
        return;
    }
    const auto& rank = std::get<Rank>(m);
    if (!rank_ || rank_less(rank, *rank_)) {
        rank_ = rank;
    }
}

InboxDigest InboxDigest::fold(std::span<const Message> inbox, Round r) {
    InboxDigest d;
    for (const auto& m : inbox) {
        d.add(m, r);
    }
    return d;
}

StepResult step(const NodeState& in, Round r, const InboxDigest& inbox, Rng& rng,
                const ProtocolConfig& config) {
    if (in.last_step == 0 ? r != in.entry_round : r != in.last_step + 1) {
        throw LifecycleError(fmt::format("node {} stepped in round {} (entry {}, last step {})",
                                         to_underlying(in.self), r, in.entry_round, in.last_step));
    }
    const PhaseClock clock(config.diameter);
    const Round D = config.diameter;
    const Round pos = clock.offset(r);

    NodeState s = in;
    s.last_step = r;
    if (pos == 0) {
        s.best_rank.reset();
    }

    // Keep only the newest fresh beep.
    if (const auto& b = inbox.newest_beep(); b && is_fresh(*b, r, D)) {
        if (!s.freshest_beep || newer_beep(*b, *s.freshest_beep)) {
            s.freshest_beep = *b;
        }
    }
    if (s.freshest_beep && !is_fresh(*s.freshest_beep, r, D)) {
        s.freshest_beep.reset();
    }

    if (s.status == Status::leader) {
        const Beep own{s.self, r};
        s.freshest_beep = own;
        return {s, Message{own}};
    }

    if (s.freshest_beep) {
        s.leader = s.freshest_beep->leader;
        if (s.status != Status::follower) {
            s.status = Status::follower;
            s.phase_count = 0;
            s.my_rank.reset();
        }
    } else if (s.status == Status::follower) {
        // Leader gone: a new election starts at the next phase boundary.
        s.leader.reset();
        s.status = Status::waiting;
        s.phase_count = 0;
        s.my_rank.reset();
        s.election_start = clock.next_phase_start_at_or_after(r);
    }

    if (pos == 0) {
        if (s.status == Status::passive && r >= s.passive_anchor + clock.phase_length()) {
            s.status = Status::active;
        } else if (s.status == Status::waiting && r >= s.election_start) {
            s.status = Status::active;
        }
    }

    if (const auto& rank = inbox.smallest_rank(); rank && pos >= 1 && pos <= D) {
        if (!s.best_rank || rank_less(*rank, *s.best_rank)) {
            s.best_rank = *rank;
        }
    }

    if (s.status == Status::active) {
        if (pos == 0) {
            if (s.my_rank) {
                ++s.phase_count;
            }
            s.my_rank = draw_rank(s.phase_count, s.self, rng, config.uniform_bits);
            s.best_rank = s.my_rank;
        } else if (pos == D && s.my_rank && s.best_rank == s.my_rank) {
            s.status = Status::leader;
            s.leader = s.self;
            s.phase_count = 0;
            s.my_rank.reset();
            const Beep own{s.self, r};
            s.freshest_beep = own;
            return {s, Message{own}};
        }
    }

    std::optional<Message> out;
    if (s.freshest_beep) {
        out = *s.freshest_beep;
    } else if (pos < D && s.best_rank) {
        out = *s.best_rank;
    }
    return {s, out};
}

StepResult step(const NodeState& state, Round r, std::span<const Message> inbox, Rng& rng,
                const ProtocolConfig& config) {
    return step(state, r, InboxDigest::fold(inbox, r), rng, config);
}

} // namespace dle

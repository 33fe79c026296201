#include "dle/trace.hpp"

#include <fmt/format.h>

#include <algorithm>

namespace dle {

Trace::Trace(std::shared_ptr<const Schedule> schedule, std::uint64_t master_seed,
             unsigned uniform_bits)
    : schedule_(std::move(schedule)), master_seed_(master_seed), uniform_bits_(uniform_bits) {
    if (!schedule_) {
        throw ParameterError("Trace: null schedule");
    }
    rounds_.reserve(static_cast<std::size_t>(schedule_->horizon()));
}

const RoundRecord& Trace::at(Round r) const {
    if (r < 1 || r > last_round()) {
        throw RangeError(fmt::format("trace round {} outside [1, {}]", r, last_round()));
    }
    return rounds_[static_cast<std::size_t>(r - 1)];
}

const NodeRecord* Trace::find(Round r, NodeId v) const {
    if (r < 1 || r > last_round()) {
        return nullptr;
    }
    const auto& nodes = rounds_[static_cast<std::size_t>(r - 1)].nodes;
    auto it = std::lower_bound(nodes.begin(), nodes.end(), v,
                               [](const NodeRecord& rec, NodeId id) { return rec.state.self < id; });
    return it != nodes.end() && it->state.self == v ? &*it : nullptr;
}

std::vector<Message> Trace::inbox(Round r, NodeId v) const {
    std::vector<Message> out;
    if (r <= 1 || find(r - 1, v) == nullptr) {
        return out;
    }
    const auto& g = schedule_->snapshot_at(r - 1);
    for (const auto& rec : at(r - 1).nodes) {
        if (rec.outbound && rec.state.self != v && g.has_edge(rec.state.self, v)) {
            out.push_back(*rec.outbound);
        }
    }
    return out;
}

void Trace::append(RoundRecord record) {
    if (record.round != last_round() + 1) {
        throw InvariantError(fmt::format("trace append: expected round {}, got {}", last_round() + 1,
                                         record.round));
    }
    rounds_.push_back(std::move(record));
}

namespace {

struct Fnv1a {
    std::uint64_t h = 0xCBF29CE484222325ULL;

    void bytes(const void* p, std::size_t n) {
        const auto* c = static_cast<const unsigned char*>(p);
        for (std::size_t i = 0; i < n; ++i) {
            h ^= c[i];
            h *= 0x100000001B3ULL;
        }
    }
    void u64(std::uint64_t v) { bytes(&v, sizeof v); }
    void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }
    void rank(const std::optional<Rank>& r) {
        u64(r.has_value());
        if (r) {
            u64(r->phase_count);
            u64(r->uniform);
            u64(r->uniform_bits);
            u64(to_underlying(r->owner));
        }
    }
    void beep(const std::optional<Beep>& b) {
        u64(b.has_value());
        if (b) {
            u64(to_underlying(b->leader));
            i64(b->timestamp);
        }
    }
};

} // namespace

std::uint64_t Trace::fingerprint() const {
    Fnv1a f;
    f.u64(master_seed_);
    f.u64(uniform_bits_);
    for (const auto& round : rounds_) {
        f.i64(round.round);
        f.u64(round.nodes.size());
        for (const auto& rec : round.nodes) {
            const auto& s = rec.state;
            f.u64(to_underlying(s.self));
            f.u64(static_cast<std::uint64_t>(s.status));
            f.u64(s.leader ? to_underlying(*s.leader) : 0);
            f.u64(s.phase_count);
            f.rank(s.my_rank);
            f.rank(s.best_rank);
            f.beep(s.freshest_beep);
            f.i64(s.entry_round);
            f.i64(s.passive_anchor);
            f.i64(s.election_start);
            f.i64(s.last_step);
            if (!rec.outbound) {
                f.u64(0);
            } else if (const auto* r = std::get_if<Rank>(&*rec.outbound)) {
                f.u64(1);
                f.rank(*r);
            } else {
                f.u64(2);
                f.beep(std::get<Beep>(*rec.outbound));
            }
        }
    }
    return f.h;
}

bool Trace::operator==(const Trace& other) const {
    return master_seed_ == other.master_seed_ && uniform_bits_ == other.uniform_bits_ &&
           (schedule_ == other.schedule_ || *schedule_ == *other.schedule_) &&
           rounds_ == other.rounds_;
}

} // namespace dle

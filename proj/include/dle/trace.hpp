#pragma once

#include "dle/protocol.hpp"
#include "dle/schedule.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

namespace dle {

/// One node's post-step state and its broadcast for a round.
struct NodeRecord {
    NodeState state;
    std::optional<Message> outbound;

    bool operator==(const NodeRecord&) const = default;
};

/// All nodes alive in a round, sorted by id (the alive set is V^r).
struct RoundRecord {
    Round round = 0;
    std::vector<NodeRecord> nodes;

    bool operator==(const RoundRecord&) const = default;
};

/// Complete, append-only record of one execution.
///
/// Inboxes are not stored; they are a function of the previous round's
/// broadcasts and edges and are recomputed on demand by `inbox`.
class Trace {
public:
    Trace(std::shared_ptr<const Schedule> schedule, std::uint64_t master_seed,
          unsigned uniform_bits);

    const Schedule& schedule() const noexcept { return *schedule_; }
    const std::shared_ptr<const Schedule>& schedule_ptr() const noexcept { return schedule_; }
    std::uint64_t master_seed() const noexcept { return master_seed_; }
    unsigned uniform_bits() const noexcept { return uniform_bits_; }
    Round diameter() const noexcept { return schedule_->diameter(); }

    /// Rounds recorded so far, 1..last_round().
    std::span<const RoundRecord> rounds() const noexcept { return rounds_; }
    Round last_round() const noexcept { return static_cast<Round>(rounds_.size()); }

    /// Throws RangeError for unrecorded rounds.
    const RoundRecord& at(Round r) const;
    const NodeRecord* find(Round r, NodeId v) const;

    /// Messages consumed by v at the computation step of round r: the
    /// round-(r-1) broadcasts of v's round-(r-1) neighbors. Empty when v was
    /// not present in round r-1.
    std::vector<Message> inbox(Round r, NodeId v) const;

    /// Appends the next round. Rounds must arrive in order.
    void append(RoundRecord record);

    /// FNV-1a over a canonical serialization of every record.
    std::uint64_t fingerprint() const;

    bool operator==(const Trace& other) const;

private:
    std::shared_ptr<const Schedule> schedule_;
    std::uint64_t master_seed_;
    unsigned uniform_bits_;
    std::vector<RoundRecord> rounds_;
};

} // namespace dle

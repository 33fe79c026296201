#pragma once

// Per-node state machine for randomized dynamic leader election.
//
// Rounds are grouped into phases of 2D rounds. In the first D rounds of a
// phase every active node floods the smallest rank it has seen; at the first
// round of the second half a node whose own rank is still the smallest
// declares itself leader and starts beeping. Beeps are conditionally flooded
// (newest only, discarded after D rounds) and tell every other node who the
// leader is. A node that stops hearing fresh beeps concludes the leader left
// and joins the next phase's election.

#include "dle/rng.hpp"
#include "dle/types.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <variant>

namespace dle {

inline constexpr unsigned kDefaultUniformBits = 64;

/// Election ticket. Carries the uniform bits rather than the exponential
/// value; every receiver evaluates -ln(U / 2^b) / 2^p the same way.
struct Rank {
    std::uint32_t phase_count = 0; ///< p: the rate is 2^p
    std::uint64_t uniform = 1;     ///< U in [1, 2^b - 1]
    unsigned uniform_bits = kDefaultUniformBits;
    NodeId owner{};

    /// Effective exponential value, evaluated in binary64.
    double value() const;

    bool operator==(const Rank&) const = default;
};

/// Leader heartbeat stamped with the round it was generated in.
struct Beep {
    NodeId leader{};
    Round timestamp = 0;

    bool operator==(const Beep&) const = default;
};

using Message = std::variant<Rank, Beep>;

enum class Ordering { a_smaller, b_smaller };

/// Strict total order on ranks: effective value, then owner id.
/// Throws InvariantError for two ranks with equal value and owner.
Ordering compare_ranks(const Rank& a, const Rank& b);

/// True when `a` precedes `b` in the rank order. Identical ranks compare
/// false both ways.
bool rank_less(const Rank& a, const Rank& b);

/// Samples U uniformly from {1, ..., 2^b - 1}.
Rank draw_rank(std::uint32_t phase_count, NodeId owner, Rng& rng,
               unsigned uniform_bits = kDefaultUniformBits);

/// fresh <=> r - timestamp <= D.
constexpr bool is_fresh(const Beep& beep, Round r, Round diameter) noexcept {
    return r - beep.timestamp <= diameter;
}

/// Newer beep wins; equal timestamps fall back to the smaller leader id so
/// the choice is deterministic.
constexpr bool newer_beep(const Beep& a, const Beep& b) noexcept {
    return a.timestamp != b.timestamp ? a.timestamp > b.timestamp : a.leader < b.leader;
}

/// Global phase arithmetic. Phase i covers rounds [2iD + 1, 2(i+1)D].
class PhaseClock {
public:
    explicit PhaseClock(Round diameter);

    Round diameter() const noexcept { return diameter_; }
    Round phase_length() const noexcept { return 2 * diameter_; }
    Round phase_index(Round r) const noexcept { return (r - 1) / phase_length(); }
    /// 0-based position of r inside its phase.
    Round offset(Round r) const noexcept { return (r - 1) % phase_length(); }
    bool first_half(Round r) const noexcept { return offset(r) < diameter_; }
    bool is_phase_start(Round r) const noexcept { return offset(r) == 0; }
    /// First round of the second half, where candidates decide.
    bool is_decision_round(Round r) const noexcept { return offset(r) == diameter_; }
    Round phase_start(Round phase) const noexcept { return phase * phase_length() + 1; }
    /// Smallest phase start >= r.
    Round next_phase_start_at_or_after(Round r) const noexcept;

private:
    Round diameter_;
};

enum class Status : std::uint8_t {
    passive,  ///< newly entered, observing for one full phase
    waiting,  ///< lost its leader, joins the election at `election_start`
    active,   ///< participating in the election
    follower, ///< leader adopted from a fresh beep
    leader,
};

const char* to_string(Status s) noexcept;

struct NodeState {
    NodeId self{};
    Status status = Status::passive;
    std::optional<NodeId> leader;      ///< nullopt is the undefined leader
    std::uint32_t phase_count = 0;     ///< p, active phases in this election
    std::optional<Rank> my_rank;       ///< drawn at the current (or last) phase start
    std::optional<Rank> best_rank;     ///< smallest rank seen this phase
    std::optional<Beep> freshest_beep;
    Round entry_round = 0;
    Round passive_anchor = 0;          ///< first full phase observed while passive
    Round election_start = 0;          ///< meaningful while waiting
    Round last_step = 0;

    bool operator==(const NodeState&) const = default;
};

/// Fresh node entering in round r: passive, no leader, p = 0.
NodeState on_enter(NodeId self, Round r, const PhaseClock& clock);

/// Everything a node uses from one round's inbox: the smallest rank and the
/// newest beep. Folding a message set into a digest is equivalent to
/// handing step the set itself.
class InboxDigest {
public:
    /// Folds one message received for computation in round r. A beep
    /// stamped after r violates the global clock.
    void add(const Message& m, Round r);

    const std::optional<Rank>& smallest_rank() const noexcept { return rank_; }
    const std::optional<Beep>& newest_beep() const noexcept { return beep_; }

    static InboxDigest fold(std::span<const Message> inbox, Round r);

private:
    std::optional<Rank> rank_;
    std::optional<Beep> beep_;
};

struct ProtocolConfig {
    Round diameter = 1;
    unsigned uniform_bits = kDefaultUniformBits;
};

struct StepResult {
    NodeState state;
    std::optional<Message> outbound;
};

/// One round of local computation. Order: beep processing, leader beeping,
/// leader-loss detection, passive/waiting activation, rank merging, election
/// (draw at phase start, decide at the first round of the second half),
/// then outbound selection. A fresh beep always takes the single broadcast
/// slot; otherwise the smallest rank of the phase is flooded during the
/// first half.
StepResult step(const NodeState& state, Round r, const InboxDigest& inbox, Rng& rng,
                const ProtocolConfig& config);

StepResult step(const NodeState& state, Round r, std::span<const Message> inbox, Rng& rng,
                const ProtocolConfig& config);

} // namespace dle

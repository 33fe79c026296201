#pragma once

// Synchronous round loop. Each round r: apply G^r (create entering nodes,
// drop departed ones), run every alive node's step on the messages broadcast
// to it in round r-1, then deliver the round-r broadcasts along E^r.

#include "dle/protocol.hpp"
#include "dle/schedule.hpp"
#include "dle/trace.hpp"

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <vector>

namespace dle {

struct RunOptions {
    unsigned uniform_bits = kDefaultUniformBits;
    /// Runs schedules that fail verify_comm_diameter. Only meant for
    /// demonstrating what breaks without the guarantee.
    bool allow_unverified = false;
};

/// Thrown by run for schedules that fail verification.
struct UnverifiedScheduleError : ConstructionError {
    using ConstructionError::ConstructionError;
};

/// Deterministic in (schedule, master_seed). Node v draws from a private
/// stream seeded by node_stream_seed(master_seed, v).
Trace run(std::shared_ptr<const Schedule> schedule, std::uint64_t master_seed,
          const RunOptions& options = {});

/// inbox(v) = messages broadcast by v's neighbors in `snapshot`, for every
/// vertex v. No self-delivery. Senders must be vertices of the snapshot.
std::map<NodeId, std::vector<Message>> deliver(const GraphSnapshot& snapshot,
                                               const std::map<NodeId, Message>& outbounds);

// ---------------------------------------------------------------------------
// Run summaries

/// Maximal interval during which a node's leader variable is undefined.
struct TerminationEpisode {
    NodeId node{};
    Round start = 0;
    std::optional<Round> end;   ///< first round with a leader, if reached
    Round last_alive = 0;

    std::optional<Round> duration() const {
        return end ? std::optional<Round>(*end - start) : std::nullopt;
    }
    bool operator==(const TerminationEpisode&) const = default;
};

enum class PhaseOutcome {
    no_election, ///< nobody drew a rank and nobody elected itself
    successful,  ///< a node elected itself in the first half and stayed to the end
    failed,
};

const char* to_string(PhaseOutcome o) noexcept;

struct PhaseSummary {
    Round index = 0;
    PhaseOutcome outcome = PhaseOutcome::no_election;
    std::size_t candidates = 0;
    std::optional<NodeId> elected;
    /// Potential of the phase-start candidates relative to the longest-active one.
    std::optional<double> potential;

    bool operator==(const PhaseSummary&) const = default;
};

struct RunStats {
    std::vector<TerminationEpisode> episodes;
    std::vector<PhaseSummary> phases; ///< complete phases only
    std::size_t rank_messages = 0;
    std::size_t beep_messages = 0;

    /// Phases from the first election phase up to and including the first
    /// successful one; nullopt if no phase succeeded.
    std::optional<std::size_t> phases_to_success() const;

    bool operator==(const RunStats&) const = default;
};

RunStats summarize(const Trace& trace);

} // namespace dle

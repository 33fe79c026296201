#pragma once

// Oblivious-adversary schedules: the full sequence of graph snapshots that an
// adversary commits to before round 1, plus the generators used in
// experiments and the communication-diameter verifier.

#include "dle/types.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace dle {

/// Undirected edge, normalized so that first < second.
using Edge = std::pair<NodeId, NodeId>;

Edge make_edge(NodeId a, NodeId b);

/// The committed graph G^r = (V^r, E^r) for one round.
///
/// Edges are either stored explicitly or, for cliques, represented by the
/// `complete` flag. Construction normalizes: an explicit edge set that covers
/// every pair is stored as complete, so equal graphs have equal
/// representations.
class GraphSnapshot {
public:
    GraphSnapshot(Round round, std::vector<NodeId> vertices, std::vector<Edge> edges);

    static GraphSnapshot complete(Round round, std::vector<NodeId> vertices);
    static GraphSnapshot edgeless(Round round, std::vector<NodeId> vertices);

    Round round() const noexcept { return round_; }
    std::span<const NodeId> vertices() const noexcept { return vertices_; }
    std::size_t size() const noexcept { return vertices_.size(); }
    bool is_complete() const noexcept { return complete_; }

    /// Materialized sorted edge list (all pairs when complete).
    std::vector<Edge> edges() const;
    /// Explicit edges only; empty when complete.
    std::span<const Edge> explicit_edges() const noexcept { return edges_; }
    std::size_t edge_count() const noexcept;

    bool contains(NodeId v) const;
    bool has_edge(NodeId a, NodeId b) const;

    bool operator==(const GraphSnapshot&) const = default;

private:
    GraphSnapshot() = default;

    Round round_ = 0;
    std::vector<NodeId> vertices_;
    std::vector<Edge> edges_;
    bool complete_ = false;
};

/// Contiguous membership interval of one node: present in every round of
/// [entry, last] and in no other round.
struct Membership {
    NodeId id;
    Round entry;
    Round last;

    bool operator==(const Membership&) const = default;
};

struct ScheduleHeader {
    std::size_t n = 0;            ///< max simultaneous node count
    Round diameter = 0;           ///< communication diameter bound D
    Round horizon = 0;            ///< number of rounds
    std::string generator;
    std::uint64_t seed = 0;
    std::uint64_t id_space = 0;   ///< ids are drawn from {1, ..., id_space}

    bool operator==(const ScheduleHeader&) const = default;
};

/// Finite prefix of an adversary's graph sequence. Immutable once built.
class Schedule {
public:
    /// Validates: rounds are 1..horizon in order, |V^r| <= n, every node's
    /// membership is one contiguous interval, ids lie in the id space.
    Schedule(ScheduleHeader header, std::vector<GraphSnapshot> snapshots);

    const ScheduleHeader& header() const noexcept { return header_; }
    std::size_t n() const noexcept { return header_.n; }
    Round diameter() const noexcept { return header_.diameter; }
    Round horizon() const noexcept { return header_.horizon; }
    const std::string& generator() const noexcept { return header_.generator; }
    std::uint64_t seed() const noexcept { return header_.seed; }
    std::uint64_t id_space() const noexcept { return header_.id_space; }

    /// Throws RangeError outside [1, horizon].
    const GraphSnapshot& snapshot_at(Round r) const;
    std::span<const GraphSnapshot> snapshots() const noexcept { return snapshots_; }

    /// All nodes, sorted by id.
    std::span<const Membership> members() const noexcept { return members_; }
    const Membership* membership(NodeId id) const;
    bool alive(NodeId id, Round r) const;
    /// v in V^[from, to].
    bool alive_throughout(NodeId id, Round from, Round to) const;

    bool operator==(const Schedule& other) const {
        return header_ == other.header_ && snapshots_ == other.snapshots_;
    }

private:
    ScheduleHeader header_;
    std::vector<GraphSnapshot> snapshots_;
    std::vector<Membership> members_;
};

inline const GraphSnapshot& snapshot_at(const Schedule& s, Round r) { return s.snapshot_at(r); }

// ---------------------------------------------------------------------------
// Generators

/// Adversary that drives any algorithm to Omega(D log n) termination.
///
/// Epoch i spans rounds iD+1 .. (i+1)D. Rounds iD+1 .. (i+1)D-1 are edgeless.
/// In round (i+1)D every node is removed independently with probability 1/2,
/// fresh nodes restore the count to n, and the resulting n nodes form a clique.
/// Ids are sampled uniformly without replacement from {1, ..., n^5}.
///
/// Requires 1 <= n <= 255 (ids must fit the 40-bit wire field), D >= 2,
/// epochs >= 1.
Schedule build_lower_bound_schedule(std::size_t n, Round diameter, std::size_t epochs,
                                    std::uint64_t seed);

enum class EpochTopology {
    complete_at_epoch,        ///< edgeless inside an epoch, clique at its boundary
    random_connected_at_epoch ///< one random low-diameter graph per epoch, all rounds
};

struct ChurnParams {
    std::size_t n = 0;
    Round diameter = 0;
    Round horizon = 0;
    double churn_rate = 0.5;
    EpochTopology topology = EpochTopology::complete_at_epoch;
    std::uint64_t seed = 0;
};

/// Epoch structure of the lower-bound adversary with a configurable removal
/// probability, sequential ids, and a choice of per-epoch topology. The
/// result is verified; failure to meet the diameter bound is a
/// ConstructionError.
Schedule build_churn_schedule(const ChurnParams& params);

/// Zero-churn baseline: every snapshot carries the same connected topology
/// over ids 1..n. Throws ConstructionError when the topology is disconnected
/// or its graph diameter exceeds D.
Schedule build_static_schedule(std::size_t n, Round diameter, Round horizon,
                               const std::vector<Edge>& topology);

// Topology helpers over ids 1..n.
std::vector<Edge> path_topology(std::size_t n);
std::vector<Edge> ring_topology(std::size_t n);
std::vector<Edge> complete_topology(std::size_t n);
std::vector<Edge> star_topology(std::size_t n);
std::vector<Edge> torus_topology(std::size_t rows, std::size_t cols);

/// Hop diameter of a static graph, nullopt when disconnected.
std::optional<std::size_t> graph_diameter(std::span<const NodeId> vertices,
                                          std::span<const Edge> edges);

// ---------------------------------------------------------------------------
// Communication-diameter verification

/// A flood from `source` started at round `start` that misses `receiver`.
struct FloodCounterexample {
    NodeId source;
    Round start;
    NodeId receiver;

    bool operator==(const FloodCounterexample&) const = default;
};

/// Checks the bounded-communication-diameter guarantee.
///
/// For every round r with r + D <= horizon and every source u in V^[r, r+D],
/// a token flooded from u in round r (each informed node alive in round t
/// broadcasts along E^t; receipt becomes usable in round t+1) must be held by
/// every v in V^[r, r+D] at the computation step of round r+D.
///
/// Returns the first violation ordered by (start, source, receiver), or
/// nullopt when the schedule satisfies the bound.
std::optional<FloodCounterexample> verify_comm_diameter(const Schedule& s);

} // namespace dle

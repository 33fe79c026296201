#pragma once

// Trace checkers for the correctness conditions of dynamic leader election
// (agreement, validity, stability, termination) plus the per-phase
// uniqueness property, message budget and beep freshness. All checks are
// pure functions of a Trace.

#include "dle/engine.hpp"
#include "dle/trace.hpp"

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace dle {

enum class ViolationKind { agreement, validity, stability, termination, uniqueness, budget, freshness };

const char* to_string(ViolationKind k) noexcept;

struct Violation {
    ViolationKind kind;
    Round round = 0;
    std::vector<NodeId> nodes;
    std::string evidence;

    bool operator==(const Violation&) const = default;
};

/// Single-line record: `kind=<k> round=<r> nodes=<a,b> evidence="<text>"`.
std::string format_violation(const Violation& v);

/// Any two alive nodes with defined leaders agree, every round.
std::vector<Violation> check_agreement(const Trace& t);

/// Adopting v != u in round r requires v to have been leader of itself in
/// some round of [r - D - 1, r].
std::vector<Violation> check_validity(const Trace& t, Round diameter);

/// Dropping or replacing leader v in round r requires v not in V^r.
std::vector<Violation> check_stability(const Trace& t);

/// Flags every undefined-leader episode whose node is still alive `bound`
/// rounds after the episode began but has not yet adopted a leader.
std::vector<Violation> check_termination(const Trace& t, Round bound);

/// Per phase, at most one node that drew a rank at the phase start, is alive
/// at the decision round, and saw no smaller rank in between.
std::vector<Violation> check_unique_candidate(const Trace& t);

/// Every broadcast fits its compact field widths and the per-round budget.
std::vector<Violation> check_budget(const Trace& t);

/// No beep is broadcast more than D rounds after it was stamped.
std::vector<Violation> check_freshness(const Trace& t);

/// Agreement, validity, stability, uniqueness, budget and freshness.
std::vector<Violation> check_safety(const Trace& t);

/// c * D * ceil(log2 n), with ceil(log2 n) taken as at least 1.
Round termination_bound(double coefficient, Round diameter, std::size_t n);

/// Undefined-leader episodes of every node, ordered by (node, start).
std::vector<TerminationEpisode> termination_episodes(const Trace& t);

/// sum over alive cohort members b of 2^{p_b} / 2^{p_reference}, using p as
/// recorded at `round`. Throws ParameterError unless the reference is alive
/// and active at that round.
double compute_potential(const Trace& t, Round round, NodeId reference,
                         std::span<const NodeId> cohort);

/// Element i (0 <= i <= max_i): some node present in every round of
/// [1, iD] has not assigned its leader variable in any of those rounds.
/// Element 0 is always true. The events are nested, so each run's
/// indicators are non-increasing in i.
std::vector<bool> no_leader_indicators(const Trace& t, std::size_t max_i);

/// Streaming form of lower_bound_curve, so campaigns need not retain traces.
class LowerBoundCurve {
public:
    explicit LowerBoundCurve(std::size_t max_i) : hits_(max_i + 1, 0) {}

    void add(const std::vector<bool>& indicators);
    void add(const Trace& t) { add(no_leader_indicators(t, hits_.size() - 1)); }

    std::size_t runs() const noexcept { return runs_; }
    std::vector<double> probabilities() const;

private:
    std::vector<std::size_t> hits_;
    std::size_t runs_ = 0;
};

/// Empirical probability, per i, that a run still has a leaderless
/// original survivor at round iD.
std::vector<double> lower_bound_curve(std::span<const Trace> traces, std::size_t max_i);

} // namespace dle

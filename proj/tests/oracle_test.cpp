#include "dle/oracle.hpp"

#include "dle/campaign.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

using namespace dle;
using namespace dle::testing;

namespace {

Message own_rank(std::uint64_t v, std::uint32_t p, std::uint64_t u) { return Rank{p, u, 64, NodeId{v}}; }

Trace protocol_trace(std::uint64_t seed) {
    ChurnParams p{24, 4, 240, 0.5, EpochTopology::random_connected_at_epoch, seed};
    return run(share(build_churn_schedule(p)), seed);
}

} // namespace

TEST(Agreement, ProtocolTraceIsClean) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        EXPECT_TRUE(check_agreement(protocol_trace(seed)).empty());
    }
}

TEST(Agreement, TwoSimultaneousLeadersAreOneViolation) {
    auto s = fixed_clique(1, ids({1, 2, 3}), 2);
    TraceBuilder b(s);
    b.round({record(id(1), Status::passive, {}), record(id(2), Status::passive, {}),
             record(id(3), Status::passive, {})})
        .round({record(id(1), Status::leader, id(1)), record(id(2), Status::leader, id(2)),
                record(id(3), Status::passive, {})});
    const auto v = check_agreement(b.build());
    ASSERT_EQ(v.size(), 1U);
    EXPECT_EQ(v[0].kind, ViolationKind::agreement);
    EXPECT_EQ(v[0].round, 2);
    EXPECT_EQ(v[0].nodes, ids({1, 2}));
}

TEST(Agreement, UndefinedLeadersDoNotConflict) {
    auto s = fixed_clique(1, ids({1, 2}), 2);
    TraceBuilder b(s);
    b.round({record(id(1), Status::leader, id(1)), record(id(2), Status::passive, {})})
        .round({record(id(1), Status::passive, {}), record(id(2), Status::leader, id(2))});
    EXPECT_TRUE(check_agreement(b.build()).empty());
}

TEST(Validity, ProtocolTraceIsClean) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        EXPECT_TRUE(check_validity(protocol_trace(seed), 4).empty());
    }
}

TEST(Validity, AdoptingANonLeaderIsAViolation) {
    auto s = fixed_clique(2, ids({1, 2}), 3);
    TraceBuilder b(s);
    b.round({record(id(1), Status::active, {}), record(id(2), Status::passive, {})})
        .round({record(id(1), Status::active, {}), record(id(2), Status::passive, {})})
        .round({record(id(1), Status::active, {}), record(id(2), Status::follower, id(1))});
    const auto v = check_validity(b.build(), 2);
    ASSERT_EQ(v.size(), 1U);
    EXPECT_EQ(v[0].round, 3);
    EXPECT_EQ(v[0].nodes, ids({2, 1}));
}

TEST(Validity, WindowIncludesRoundRMinusDMinusOne) {
    const Round D = 2;
    // Node 1 leads itself only in round 1.
    auto s = clique_schedule(D, {ids({1, 2}), ids({2}), ids({2}), ids({2}), ids({2})});
    auto build = [&](Round adopt) {
        TraceBuilder b(s);
        b.round({record(id(1), Status::leader, id(1)), record(id(2), Status::passive, {})});
        for (Round r = 2; r <= 5; ++r) {
            b.round({r >= adopt ? record(id(2), Status::follower, id(1)) : record(id(2), Status::passive, {})});
        }
        return b.build();
    };
    EXPECT_TRUE(check_validity(build(1 + D + 1), D).empty());
    const auto late = check_validity(build(1 + D + 2), D);
    ASSERT_EQ(late.size(), 1U);
    EXPECT_EQ(late[0].round, 1 + D + 2);
}

TEST(Stability, ProtocolTraceIsClean) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        EXPECT_TRUE(check_stability(protocol_trace(seed)).empty());
    }
}

TEST(Stability, DroppingAPresentLeaderIsAViolation) {
    auto s = fixed_clique(1, ids({1, 2}), 2);
    TraceBuilder b(s);
    b.round({record(id(1), Status::leader, id(1)), record(id(2), Status::follower, id(1))})
        .round({record(id(1), Status::leader, id(1)), record(id(2), Status::waiting, {})});
    const auto v = check_stability(b.build());
    ASSERT_EQ(v.size(), 1U);
    EXPECT_EQ(v[0].kind, ViolationKind::stability);
    EXPECT_EQ(v[0].round, 2);
}

TEST(Stability, ClearingAfterTheLeaderLeftIsAllowed) {
    auto s = clique_schedule(1, {ids({1, 2}), ids({2}), ids({2})});
    TraceBuilder b(s);
    b.round({record(id(1), Status::leader, id(1)), record(id(2), Status::follower, id(1))})
        .round({record(id(2), Status::follower, id(1))})
        .round({record(id(2), Status::waiting, {})});
    EXPECT_TRUE(check_stability(b.build()).empty());
}

TEST(Termination, StaticRunsFinishWithinFourD) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const Round D = 4;
        auto s = share(build_static_schedule(16, D, 40 * D, torus_topology(4, 4)));
        EXPECT_TRUE(check_termination(run(s, seed), 4 * D).empty());
    }
}

TEST(Termination, NodeLeavingMidEpisodeIsNeverFlagged) {
    auto s = clique_schedule(1, {ids({1, 2}), ids({1, 2}), ids({2}), ids({2}), ids({2})});
    TraceBuilder b(s);
    b.round({record(id(1), Status::passive, {}), record(id(2), Status::leader, id(2))})
        .round({record(id(1), Status::passive, {}), record(id(2), Status::leader, id(2))})
        .round({record(id(2), Status::leader, id(2))})
        .round({record(id(2), Status::leader, id(2))})
        .round({record(id(2), Status::leader, id(2))});
    EXPECT_TRUE(check_termination(b.build(), 2).empty());
}

TEST(Termination, BoundZeroFlagsEveryEpisode) {
    const auto t = protocol_trace(3);
    const auto episodes = termination_episodes(t);
    EXPECT_EQ(check_termination(t, 0).size(), episodes.size());
}

TEST(Termination, FlagsAnEpisodeThatOutlivesTheBound) {
    auto s = fixed_clique(1, ids({1}), 6);
    TraceBuilder b(s);
    for (int r = 0; r < 4; ++r) {
        b.round({record(id(1), Status::passive, {})});
    }
    b.round({record(id(1), Status::leader, id(1))}).round({record(id(1), Status::leader, id(1))});
    const auto t = b.build();
    EXPECT_TRUE(check_termination(t, 4).empty());
    const auto v = check_termination(t, 3);
    ASSERT_EQ(v.size(), 1U);
    EXPECT_EQ(v[0].round, 4);
}

TEST(UniqueCandidate, ProtocolTraceIsClean) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        EXPECT_TRUE(check_unique_candidate(protocol_trace(seed)).empty());
    }
}

TEST(UniqueCandidate, TieBrokenByIdLeavesOneCandidate) {
    // Equal effective values: 2^62 at p = 1 and 2^63 at p = 0.
    auto s = fixed_clique(1, ids({1, 2}), 2);
    TraceBuilder b(s);
    b.round({record(id(1), Status::active, {}, own_rank(1, 1, std::uint64_t{1} << 62), 1),
             record(id(2), Status::active, {}, own_rank(2, 0, std::uint64_t{1} << 63))})
        .round({record(id(1), Status::leader, id(1)), record(id(2), Status::active, {})});
    EXPECT_TRUE(check_unique_candidate(b.build()).empty());
}

TEST(UniqueCandidate, DisconnectedHalvesProduceTwoCandidates) {
    const Round D = 2;
    std::vector<GraphSnapshot> snaps;
    for (Round r = 1; r <= 8 * D; ++r) {
        snaps.emplace_back(r, ids({1, 2, 3, 4}),
                           std::vector<Edge>{make_edge(id(1), id(2)), make_edge(id(3), id(4))});
    }
    auto s = share(Schedule(ScheduleHeader{4, D, 8 * D, "split", 0, 4}, std::move(snaps)));
    RunOptions o;
    o.allow_unverified = true;
    const auto t = run(s, 1, o);
    const auto v = check_unique_candidate(t);
    ASSERT_FALSE(v.empty());
    EXPECT_EQ(v[0].kind, ViolationKind::uniqueness);
    EXPECT_EQ(v[0].round, 3 * D + 1);
    EXPECT_EQ(v[0].nodes.size(), 2U);
    EXPECT_FALSE(check_agreement(t).empty());
}

TEST(Budget, OversizedFieldIsFlagged) {
    auto s = fixed_clique(1, ids({1, 2}), 2); // id space 1000, horizon 2
    TraceBuilder b(s);
    b.round({record(id(1), Status::leader, id(1), Beep{id(1), 1}), record(id(2), Status::passive, {})})
        .round({record(id(1), Status::leader, id(1), Beep{id(1), 9}), record(id(2), Status::active, {}, own_rank(2, 9, 4))});
    const auto v = check_budget(b.build());
    ASSERT_EQ(v.size(), 2U);
    EXPECT_EQ(v[0].kind, ViolationKind::budget);
    EXPECT_EQ(v[0].round, 2);
}

TEST(Freshness, StaleRebroadcastIsFlagged) {
    auto s = fixed_clique(2, ids({1, 2}), 5);
    TraceBuilder b(s);
    for (int r = 0; r < 4; ++r) {
        b.round({record(id(1), Status::leader, id(1)), record(id(2), Status::follower, id(1), Beep{id(1), 1})});
    }
    b.round({record(id(1), Status::leader, id(1)), record(id(2), Status::follower, id(1), Beep{id(1), 1})});
    const auto v = check_freshness(b.build());
    ASSERT_EQ(v.size(), 2U);
    EXPECT_EQ(v[0].round, 4);
    EXPECT_EQ(v[1].round, 5);
}

TEST(Oracle, ChecksArePure) {
    const auto t = protocol_trace(5);
    EXPECT_EQ(check_safety(t), check_safety(t));
    EXPECT_EQ(check_termination(t, 10), check_termination(t, 10));
}

TEST(Oracle, ViolationRecordFormat) {
    const Violation v{ViolationKind::agreement, 7, ids({3, 9}), "node 3 follows \"3\""};
    EXPECT_EQ(format_violation(v), "kind=agreement round=7 nodes=3,9 evidence=\"node 3 follows \\\"3\\\"\"");
}

TEST(Oracle, TerminationBoundUsesCeilLog2) {
    EXPECT_EQ(termination_bound(14, 4, 16), 14 * 4 * 4);
    EXPECT_EQ(termination_bound(14, 4, 17), 14 * 4 * 5);
    EXPECT_EQ(termination_bound(14, 8, 256), 14 * 8 * 8);
    EXPECT_EQ(termination_bound(2, 3, 1), 6);
}

// ---------------------------------------------------------------------------
// Potential

TEST(Potential, SingletonCohortIsOne) {
    auto s = fixed_clique(1, ids({1, 2}), 1);
    TraceBuilder b(s);
    b.round({record(id(1), Status::active, {}, std::nullopt, 3), record(id(2), Status::active, {}, std::nullopt, 1)});
    const auto t = b.build();
    const std::vector<NodeId> cohort{id(1)};
    EXPECT_DOUBLE_EQ(compute_potential(t, 1, id(1), cohort), 1.0);
    const std::vector<NodeId> both = ids({1, 2});
    EXPECT_DOUBLE_EQ(compute_potential(t, 1, id(1), both), 1.25);
}

TEST(Potential, EqualPhaseCountsGiveCohortSize) {
    auto s = fixed_clique(1, ids({1, 2, 3, 4, 5}), 1);
    TraceBuilder b(s);
    std::vector<NodeRecord> recs;
    for (std::uint64_t v = 1; v <= 5; ++v) {
        recs.push_back(record(id(v), Status::active, {}, std::nullopt, 2));
    }
    b.round(recs);
    const auto cohort = ids({1, 2, 3, 4, 5});
    EXPECT_DOUBLE_EQ(compute_potential(b.build(), 1, id(3), cohort), 5.0);
}

TEST(Potential, ReferenceMustBeAliveAndActive) {
    auto s = fixed_clique(1, ids({1, 2}), 1);
    TraceBuilder b(s);
    b.round({record(id(1), Status::follower, id(2)), record(id(2), Status::leader, id(2))});
    const auto t = b.build();
    const auto cohort = ids({1, 2});
    EXPECT_THROW(compute_potential(t, 1, id(1), cohort), ParameterError);
    EXPECT_THROW(compute_potential(t, 1, id(7), cohort), ParameterError);
}

TEST(Potential, NonIncreasingAcrossPhasesForMaximalReference) {
    std::size_t sequences = 0;
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
        ChurnParams p{32, 4, 400, 0.5, EpochTopology::complete_at_epoch, seed};
        const auto t = run(share(build_churn_schedule(p)), seed);
        const PhaseClock clock(4);
        for (Round phase = 0; clock.phase_start(phase) <= t.last_round(); ++phase) {
            const Round s0 = clock.phase_start(phase);
            std::vector<NodeId> cohort;
            const NodeRecord* ref = nullptr;
            for (const auto& rec : t.at(s0).nodes) {
                if (rec.state.status == Status::active) {
                    cohort.push_back(rec.state.self);
                    if (ref == nullptr || rec.state.phase_count > ref->state.phase_count) {
                        ref = &rec;
                    }
                }
            }
            if (ref == nullptr) {
                continue;
            }
            const NodeId reference = ref->state.self;
            double previous = compute_potential(t, s0, reference, cohort);
            std::uint32_t p_prev = ref->state.phase_count;
            for (Round k = phase + 1; clock.phase_start(k) <= t.last_round(); ++k) {
                const auto* now = t.find(clock.phase_start(k), reference);
                if (now == nullptr || now->state.status != Status::active || now->state.phase_count != p_prev + 1) {
                    break;
                }
                const double psi = compute_potential(t, clock.phase_start(k), reference, cohort);
                EXPECT_LE(psi, previous + 1e-12) << "seed " << seed << " phase " << k;
                previous = psi;
                p_prev = now->state.phase_count;
                ++sequences;
            }
        }
    }
    EXPECT_GT(sequences, 0U);
}

// ---------------------------------------------------------------------------
// Lower-bound curve

TEST(LowerBoundCurve, StartsAtOneAndNeverIncreases) {
    std::vector<Trace> traces;
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
        traces.push_back(run(share(build_lower_bound_schedule(16, 4, 24, seed)), run_master_seed(seed)));
    }
    const auto curve = lower_bound_curve(traces, 24);
    ASSERT_EQ(curve.size(), 25U);
    EXPECT_DOUBLE_EQ(curve[0], 1.0);
    for (std::size_t i = 1; i < curve.size(); ++i) {
        EXPECT_LE(curve[i], curve[i - 1]);
    }
    for (const auto& t : traces) {
        const auto ind = no_leader_indicators(t, 24);
        for (std::size_t i = 1; i < ind.size(); ++i) {
            EXPECT_TRUE(!ind[i] || ind[i - 1]);
        }
    }
}

TEST(LowerBoundCurve, RejectsRoundsBeyondTheTrace) {
    const auto t = run(share(build_lower_bound_schedule(4, 2, 3, 1)), 1);
    EXPECT_THROW(no_leader_indicators(t, 4), RangeError);
    EXPECT_EQ(no_leader_indicators(t, 3).size(), 4U);
}

TEST(LowerBoundCurve, StreamingMatchesBatch) {
    std::vector<Trace> traces;
    LowerBoundCurve streaming(6);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        traces.push_back(run(share(build_lower_bound_schedule(8, 2, 10, seed)), seed));
        streaming.add(traces.back());
    }
    EXPECT_EQ(streaming.runs(), 10U);
    EXPECT_EQ(streaming.probabilities(), lower_bound_curve(traces, 6));
}

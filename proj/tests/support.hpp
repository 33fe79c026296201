#pragma once

// Builders for hand-made schedules and traces used across the test suites.

#include "dle/engine.hpp"
#include "dle/protocol.hpp"
#include "dle/schedule.hpp"
#include "dle/trace.hpp"

#include <initializer_list>
#include <memory>
#include <optional>
#include <vector>

namespace dle::testing {

inline NodeId id(std::uint64_t v) { return NodeId{v}; }

inline std::vector<NodeId> ids(std::initializer_list<std::uint64_t> raw) {
    std::vector<NodeId> out;
    for (auto v : raw) {
        out.push_back(NodeId{v});
    }
    return out;
}

/// Every round a clique over the given vertex set.
inline std::shared_ptr<const Schedule> clique_schedule(Round diameter,
                                                       const std::vector<std::vector<NodeId>>& rounds,
                                                       std::uint64_t id_space = 1000) {
    std::vector<GraphSnapshot> snaps;
    std::size_t n = 1;
    for (std::size_t i = 0; i < rounds.size(); ++i) {
        snaps.push_back(GraphSnapshot::complete(static_cast<Round>(i + 1), rounds[i]));
        n = std::max(n, rounds[i].size());
    }
    ScheduleHeader h{n, diameter, static_cast<Round>(rounds.size()), "test", 0, id_space};
    return std::make_shared<const Schedule>(h, std::move(snaps));
}

/// Same vertex set and clique in every round.
inline std::shared_ptr<const Schedule> fixed_clique(Round diameter, const std::vector<NodeId>& v,
                                                    Round horizon) {
    return clique_schedule(diameter, std::vector<std::vector<NodeId>>(static_cast<std::size_t>(horizon), v));
}

inline std::shared_ptr<const Schedule> share(Schedule s) {
    return std::make_shared<const Schedule>(std::move(s));
}

inline NodeRecord record(NodeId self, Status status, std::optional<NodeId> leader,
                         std::optional<Message> out = std::nullopt, std::uint32_t p = 0) {
    NodeRecord rec;
    rec.state.self = self;
    rec.state.status = status;
    rec.state.leader = leader;
    rec.state.phase_count = p;
    rec.outbound = out;
    return rec;
}

/// Appends rounds of hand-made node records, sorting each round by id.
class TraceBuilder {
public:
    explicit TraceBuilder(std::shared_ptr<const Schedule> s, unsigned bits = kDefaultUniformBits)
        : trace_(std::move(s), 0, bits) {}

    TraceBuilder& round(std::vector<NodeRecord> nodes) {
        std::sort(nodes.begin(), nodes.end(),
                  [](const NodeRecord& a, const NodeRecord& b) { return a.state.self < b.state.self; });
        const Round r = trace_.last_round() + 1;
        for (auto& n : nodes) {
            n.state.last_step = r;
        }
        trace_.append(RoundRecord{r, std::move(nodes)});
        return *this;
    }

    Trace build() const { return trace_; }

private:
    Trace trace_;
};

} // namespace dle::testing

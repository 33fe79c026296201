#include "dle/schedule.hpp"

#include "dle/rng.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <bit>
#include <deque>
#include <limits>
#include <unordered_map>
#include <unordered_set>

namespace dle {

Edge make_edge(NodeId a, NodeId b) {
    return a < b ? Edge{a, b} : Edge{b, a};
}

// ---------------------------------------------------------------------------
// GraphSnapshot

namespace {

void sort_unique_vertices(std::vector<NodeId>& vertices) {
    std::sort(vertices.begin(), vertices.end());
    if (std::adjacent_find(vertices.begin(), vertices.end()) != vertices.end()) {
        throw ParameterError("GraphSnapshot: duplicate vertex");
    }
}

} // namespace

GraphSnapshot::GraphSnapshot(Round round, std::vector<NodeId> vertices, std::vector<Edge> edges)
    : round_(round), vertices_(std::move(vertices)) {
    if (round < 1) {
        throw ParameterError("GraphSnapshot: round must be positive");
    }
    sort_unique_vertices(vertices_);
    for (auto& e : edges) {
        if (e.first == e.second) {
            throw ParameterError(fmt::format("GraphSnapshot: self-loop on {} in round {}",
                                             to_underlying(e.first), round));
        }
        e = make_edge(e.first, e.second);
        if (!std::binary_search(vertices_.begin(), vertices_.end(), e.first) ||
            !std::binary_search(vertices_.begin(), vertices_.end(), e.second)) {
            throw ParameterError(fmt::format("GraphSnapshot: edge {}-{} leaves the vertex set in round {}",
                                             to_underlying(e.first), to_underlying(e.second), round));
        }
    }
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    const std::size_t m = vertices_.size();
    if (m >= 2 && edges.size() == m * (m - 1) / 2) {
        complete_ = true;
    } else {
        edges_ = std::move(edges);
    }
}

GraphSnapshot GraphSnapshot::complete(Round round, std::vector<NodeId> vertices) {
    if (round < 1) {
        throw ParameterError("GraphSnapshot: round must be positive");
    }
    GraphSnapshot g;
    g.round_ = round;
    g.vertices_ = std::move(vertices);
    sort_unique_vertices(g.vertices_);
    g.complete_ = g.vertices_.size() >= 2;
    return g;
}

GraphSnapshot GraphSnapshot::edgeless(Round round, std::vector<NodeId> vertices) {
    return GraphSnapshot(round, std::move(vertices), {});
}

std::vector<Edge> GraphSnapshot::edges() const {
    if (!complete_) {
        return edges_;
    }
    std::vector<Edge> all;
    all.reserve(edge_count());
    for (std::size_t i = 0; i < vertices_.size(); ++i) {
        for (std::size_t j = i + 1; j < vertices_.size(); ++j) {
            all.emplace_back(vertices_[i], vertices_[j]);
        }
    }
    return all;
}

std::size_t GraphSnapshot::edge_count() const noexcept {
    const std::size_t m = vertices_.size();
    return complete_ ? m * (m - 1) / 2 : edges_.size();
}

bool GraphSnapshot::contains(NodeId v) const {
    return std::binary_search(vertices_.begin(), vertices_.end(), v);
}

bool GraphSnapshot::has_edge(NodeId a, NodeId b) const {
    if (a == b || !contains(a) || !contains(b)) {
        return false;
    }
    if (complete_) {
        return true;
    }
    return std::binary_search(edges_.begin(), edges_.end(), make_edge(a, b));
}

// ---------------------------------------------------------------------------
// Schedule

Schedule::Schedule(ScheduleHeader header, std::vector<GraphSnapshot> snapshots)
    : header_(std::move(header)), snapshots_(std::move(snapshots)) {
    if (header_.diameter < 1) {
        throw ParameterError("Schedule: D must be at least 1");
    }
    if (header_.horizon < 1) {
        throw ParameterError("Schedule: horizon must be at least 1");
    }
    if (snapshots_.size() != static_cast<std::size_t>(header_.horizon)) {
        throw ParameterError(fmt::format("Schedule: {} snapshots for horizon {}", snapshots_.size(),
                                         header_.horizon));
    }
    std::unordered_map<NodeId, std::size_t> index;
    for (std::size_t i = 0; i < snapshots_.size(); ++i) {
        const Round r = static_cast<Round>(i) + 1;
        const auto& g = snapshots_[i];
        if (g.round() != r) {
            throw ParameterError(fmt::format("Schedule: snapshot {} labelled round {}", r, g.round()));
        }
        if (g.size() > header_.n) {
            throw ParameterError(fmt::format("Schedule: round {} has {} vertices, n = {}", r, g.size(),
                                             header_.n));
        }
        for (NodeId v : g.vertices()) {
            const auto raw = to_underlying(v);
            if (raw == 0 || raw > header_.id_space) {
                throw ParameterError(fmt::format("Schedule: id {} outside id space", raw));
            }
            auto [it, inserted] = index.try_emplace(v, members_.size());
            if (inserted) {
                members_.push_back({v, r, r});
                continue;
            }
            auto& m = members_[it->second];
            if (m.last != r - 1) {
                throw ParameterError(fmt::format("Schedule: node {} re-enters in round {}", raw, r));
            }
            m.last = r;
        }
    }
    std::sort(members_.begin(), members_.end(),
              [](const Membership& a, const Membership& b) { return a.id < b.id; });
}

const GraphSnapshot& Schedule::snapshot_at(Round r) const {
    if (r < 1 || r > header_.horizon) {
        throw RangeError(fmt::format("round {} outside [1, {}]", r, header_.horizon));
    }
    return snapshots_[static_cast<std::size_t>(r - 1)];
}

const Membership* Schedule::membership(NodeId id) const {
    auto it = std::lower_bound(members_.begin(), members_.end(), id,
                               [](const Membership& m, NodeId v) { return m.id < v; });
    return it != members_.end() && it->id == id ? &*it : nullptr;
}

bool Schedule::alive(NodeId id, Round r) const {
    const auto* m = membership(id);
    return m != nullptr && m->entry <= r && r <= m->last;
}

bool Schedule::alive_throughout(NodeId id, Round from, Round to) const {
    const auto* m = membership(id);
    return m != nullptr && m->entry <= from && to <= m->last;
}

// ---------------------------------------------------------------------------
// Generators

namespace {

constexpr std::uint64_t kCoinSalt = 1;
constexpr std::uint64_t kIdSalt = 2;
constexpr std::uint64_t kTopologySalt = 3;
constexpr std::uint64_t kMaxWireId = (std::uint64_t{1} << 40) - 1;

/// Draws distinct ids uniformly from {1, ..., space}.
class IdPool {
public:
    IdPool(std::uint64_t space, std::uint64_t seed) : space_(space), rng_(seed) {}

    NodeId draw() {
        if (used_.size() >= space_) {
            throw ConstructionError("id space exhausted");
        }
        for (;;) {
            const auto candidate = rng_.uniform(1, space_);
            if (used_.insert(candidate).second) {
                return NodeId{candidate};
            }
        }
    }

private:
    std::uint64_t space_;
    Rng rng_;
    std::unordered_set<std::uint64_t> used_;
};

/// Random connected graph whose hop diameter is at most `max_diameter`:
/// a random tree of bounded depth plus sparse random chords.
std::vector<Edge> random_low_diameter_graph(const std::vector<NodeId>& vertices, Round max_diameter,
                                            Rng& rng) {
    const std::size_t m = vertices.size();
    std::vector<Edge> edges;
    if (m < 2) {
        return edges;
    }
    const Round depth_limit = max_diameter / 2;
    if (depth_limit < 1 || m == 2) {
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = i + 1; j < m; ++j) {
                edges.emplace_back(vertices[i], vertices[j]);
            }
        }
        return edges;
    }
    std::vector<NodeId> order = vertices;
    for (std::size_t i = m - 1; i > 0; --i) {
        std::swap(order[i], order[rng.uniform(0, i)]);
    }
    std::vector<Round> depth(m, 0);
    std::vector<std::size_t> attachable{0};
    for (std::size_t i = 1; i < m; ++i) {
        const std::size_t parent = attachable[rng.uniform(0, attachable.size() - 1)];
        depth[i] = depth[parent] + 1;
        edges.push_back(make_edge(order[i], order[parent]));
        if (depth[i] < depth_limit) {
            attachable.push_back(i);
        }
    }
    const double chord_probability = 2.0 / static_cast<double>(m);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = i + 1; j < m; ++j) {
            if (rng.bernoulli(chord_probability)) {
                edges.push_back(make_edge(order[i], order[j]));
            }
        }
    }
    return edges;
}

struct EpochPlan {
    std::size_t n;
    Round diameter;
    Round horizon;
    double removal_probability;
    EpochTopology topology;
    std::uint64_t seed;
};

/// Shared epoch machinery. Removal coins are consumed from their own stream
/// in entry order, so two generators that differ only in id assignment see
/// identical churn for the same seed.
template <typename NextId>
std::vector<GraphSnapshot> build_epochs(const EpochPlan& plan, NextId&& next_id) {
    Rng coins(derive_seed(plan.seed, kCoinSalt));
    Rng topo_rng(derive_seed(plan.seed, kTopologySalt));

    std::vector<NodeId> population;
    population.reserve(plan.n);
    for (std::size_t i = 0; i < plan.n; ++i) {
        population.push_back(next_id());
    }

    std::vector<GraphSnapshot> snapshots;
    snapshots.reserve(static_cast<std::size_t>(plan.horizon));
    std::vector<Edge> epoch_edges;
    auto redraw_topology = [&] {
        if (plan.topology == EpochTopology::random_connected_at_epoch) {
            epoch_edges = random_low_diameter_graph(population, plan.diameter / 2, topo_rng);
        }
    };
    redraw_topology();

    for (Round r = 1; r <= plan.horizon; ++r) {
        const bool boundary = r % plan.diameter == 0;
        if (boundary) {
            std::vector<NodeId> survivors;
            survivors.reserve(plan.n);
            for (NodeId v : population) {
                if (!coins.bernoulli(plan.removal_probability)) {
                    survivors.push_back(v);
                }
            }
            while (survivors.size() < plan.n) {
                survivors.push_back(next_id());
            }
            population = std::move(survivors);
            redraw_topology();
        }
        if (plan.topology == EpochTopology::complete_at_epoch) {
            snapshots.push_back(boundary ? GraphSnapshot::complete(r, population)
                                         : GraphSnapshot::edgeless(r, population));
        } else {
            snapshots.emplace_back(r, population, epoch_edges);
        }
    }
    return snapshots;
}

std::uint64_t checked_pow5(std::size_t n) {
    std::uint64_t v = 1;
    for (int i = 0; i < 5; ++i) {
        v *= n;
    }
    return v;
}

} // namespace

Schedule build_lower_bound_schedule(std::size_t n, Round diameter, std::size_t epochs,
                                    std::uint64_t seed) {
    if (n < 1 || n > 255) {
        throw ParameterError("lower-bound schedule: n must be in [1, 255]");
    }
    if (diameter < 2) {
        throw ParameterError("lower-bound schedule: D must be at least 2");
    }
    if (epochs < 1) {
        throw ParameterError("lower-bound schedule: epochs must be at least 1");
    }
    // n^5 leaves room for every replacement except at toy sizes, where the
    // space is widened to the worst-case number of ids the run can consume.
    const std::uint64_t id_space =
        std::min(kMaxWireId, std::max<std::uint64_t>(checked_pow5(n), n * (epochs + 1)));
    IdPool pool(id_space, derive_seed(seed, kIdSalt));
    const Round horizon = static_cast<Round>(epochs) * diameter;
    EpochPlan plan{n, diameter, horizon, 0.5, EpochTopology::complete_at_epoch, seed};
    auto snapshots = build_epochs(plan, [&] { return pool.draw(); });
    return Schedule(ScheduleHeader{n, diameter, horizon, "lower-bound", seed, id_space},
                    std::move(snapshots));
}

Schedule build_churn_schedule(const ChurnParams& params) {
    if (params.n < 1) {
        throw ParameterError("churn schedule: n must be positive");
    }
    if (params.diameter < 1 || params.horizon < 1) {
        throw ParameterError("churn schedule: D and horizon must be positive");
    }
    if (!(params.churn_rate >= 0.0 && params.churn_rate <= 1.0)) {
        throw ParameterError("churn schedule: churn_rate must lie in [0, 1]");
    }
    std::uint64_t next = 0;
    EpochPlan plan{params.n, params.diameter, params.horizon, params.churn_rate, params.topology,
                   params.seed};
    auto snapshots = build_epochs(plan, [&] {
        if (next >= kMaxWireId) {
            throw ConstructionError("churn schedule: id space exhausted");
        }
        return NodeId{++next};
    });
    const char* name = params.topology == EpochTopology::complete_at_epoch ? "churn-complete"
                                                                           : "churn-random";
    Schedule s(ScheduleHeader{params.n, params.diameter, params.horizon, name, params.seed, next},
               std::move(snapshots));
    if (auto bad = verify_comm_diameter(s)) {
        throw ConstructionError(fmt::format(
            "churn schedule violates D = {}: flood from {} at round {} misses {}", params.diameter,
            to_underlying(bad->source), bad->start, to_underlying(bad->receiver)));
    }
    return s;
}

Schedule build_static_schedule(std::size_t n, Round diameter, Round horizon,
                               const std::vector<Edge>& topology) {
    if (n < 1 || diameter < 1 || horizon < 1) {
        throw ParameterError("static schedule: n, D and horizon must be positive");
    }
    std::vector<NodeId> vertices;
    vertices.reserve(n);
    for (std::size_t i = 1; i <= n; ++i) {
        vertices.push_back(NodeId{i});
    }
    const GraphSnapshot first(1, vertices, topology);
    const auto edges = first.edges();
    const auto d = graph_diameter(first.vertices(), edges);
    if (!d) {
        throw ConstructionError("static schedule: topology is disconnected");
    }
    if (static_cast<Round>(*d) > diameter) {
        throw ConstructionError(
            fmt::format("static schedule: graph diameter {} exceeds D = {}", *d, diameter));
    }
    std::vector<GraphSnapshot> snapshots;
    snapshots.reserve(static_cast<std::size_t>(horizon));
    for (Round r = 1; r <= horizon; ++r) {
        snapshots.push_back(first.is_complete() ? GraphSnapshot::complete(r, vertices)
                                                : GraphSnapshot(r, vertices, edges));
    }
    return Schedule(ScheduleHeader{n, diameter, horizon, "static", 0, n}, std::move(snapshots));
}

std::vector<Edge> path_topology(std::size_t n) {
    std::vector<Edge> edges;
    for (std::size_t i = 1; i < n; ++i) {
        edges.emplace_back(NodeId{i}, NodeId{i + 1});
    }
    return edges;
}

std::vector<Edge> ring_topology(std::size_t n) {
    auto edges = path_topology(n);
    if (n >= 3) {
        edges.push_back(make_edge(NodeId{n}, NodeId{1}));
    }
    return edges;
}

std::vector<Edge> complete_topology(std::size_t n) {
    std::vector<Edge> edges;
    for (std::size_t i = 1; i <= n; ++i) {
        for (std::size_t j = i + 1; j <= n; ++j) {
            edges.emplace_back(NodeId{i}, NodeId{j});
        }
    }
    return edges;
}

std::vector<Edge> star_topology(std::size_t n) {
    std::vector<Edge> edges;
    for (std::size_t i = 2; i <= n; ++i) {
        edges.emplace_back(NodeId{1}, NodeId{i});
    }
    return edges;
}

std::vector<Edge> torus_topology(std::size_t rows, std::size_t cols) {
    auto id = [cols](std::size_t r, std::size_t c) { return NodeId{r * cols + c + 1}; };
    std::vector<Edge> edges;
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            if (cols > 1) {
                edges.push_back(make_edge(id(r, c), id(r, (c + 1) % cols)));
            }
            if (rows > 1) {
                edges.push_back(make_edge(id(r, c), id((r + 1) % rows, c)));
            }
        }
    }
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    std::erase_if(edges, [](const Edge& e) { return e.first == e.second; });
    return edges;
}

std::optional<std::size_t> graph_diameter(std::span<const NodeId> vertices,
                                          std::span<const Edge> edges) {
    const std::size_t m = vertices.size();
    if (m == 0) {
        return 0;
    }
    auto slot = [&](NodeId v) {
        return static_cast<std::size_t>(std::lower_bound(vertices.begin(), vertices.end(), v) -
                                        vertices.begin());
    };
    std::vector<std::vector<std::size_t>> adj(m);
    for (const auto& [a, b] : edges) {
        adj[slot(a)].push_back(slot(b));
        adj[slot(b)].push_back(slot(a));
    }
    std::size_t diameter = 0;
    std::vector<std::size_t> dist(m);
    for (std::size_t s = 0; s < m; ++s) {
        std::fill(dist.begin(), dist.end(), std::numeric_limits<std::size_t>::max());
        std::deque<std::size_t> queue{s};
        dist[s] = 0;
        std::size_t seen = 1;
        while (!queue.empty()) {
            const auto x = queue.front();
            queue.pop_front();
            for (auto y : adj[x]) {
                if (dist[y] == std::numeric_limits<std::size_t>::max()) {
                    dist[y] = dist[x] + 1;
                    diameter = std::max(diameter, dist[y]);
                    ++seen;
                    queue.push_back(y);
                }
            }
        }
        if (seen != m) {
            return std::nullopt;
        }
    }
    return diameter;
}

// ---------------------------------------------------------------------------
// Verification

std::optional<FloodCounterexample> verify_comm_diameter(const Schedule& s) {
    const Round D = s.diameter();
    const Round horizon = s.horizon();
    const auto members = s.members();

    auto dense = [&](NodeId v) {
        return static_cast<std::size_t>(
            std::lower_bound(members.begin(), members.end(), v,
                             [](const Membership& m, NodeId id) { return m.id < id; }) -
            members.begin());
    };
    // Dense vertex and edge lists per round, computed once.
    std::vector<std::vector<std::uint32_t>> round_vertices(static_cast<std::size_t>(horizon));
    std::vector<std::vector<std::pair<std::uint32_t, std::uint32_t>>> round_edges(
        static_cast<std::size_t>(horizon));
    for (Round r = 1; r <= horizon; ++r) {
        const auto& g = s.snapshot_at(r);
        auto& vs = round_vertices[static_cast<std::size_t>(r - 1)];
        for (NodeId v : g.vertices()) {
            vs.push_back(static_cast<std::uint32_t>(dense(v)));
        }
        for (const auto& [a, b] : g.explicit_edges()) {
            round_edges[static_cast<std::size_t>(r - 1)].emplace_back(
                static_cast<std::uint32_t>(dense(a)), static_cast<std::uint32_t>(dense(b)));
        }
    }

    std::vector<std::uint64_t> bits;
    std::vector<std::uint64_t> next;
    std::vector<std::size_t> sources;
    std::vector<std::uint64_t> acc;

    for (Round r = 1; r + D <= horizon; ++r) {
        sources.clear();
        for (std::size_t i = 0; i < members.size(); ++i) {
            if (members[i].entry <= r && members[i].last >= r + D) {
                sources.push_back(i);
            }
        }
        if (sources.size() < 2) {
            continue;
        }
        const std::size_t words = (sources.size() + 63) / 64;
        bits.assign(members.size() * words, 0);
        auto row = [&](std::vector<std::uint64_t>& b, std::size_t node) { return &b[node * words]; };
        for (std::size_t k = 0; k < sources.size(); ++k) {
            row(bits, sources[k])[k / 64] |= std::uint64_t{1} << (k % 64);
        }

        for (Round t = r; t < r + D; ++t) {
            const auto idx = static_cast<std::size_t>(t - 1);
            const auto& g = s.snapshot_at(t);
            const auto& vs = round_vertices[idx];
            if (g.is_complete()) {
                acc.assign(words, 0);
                for (auto v : vs) {
                    const auto* src = row(bits, v);
                    for (std::size_t w = 0; w < words; ++w) {
                        acc[w] |= src[w];
                    }
                }
                for (auto v : vs) {
                    std::copy(acc.begin(), acc.end(), row(bits, v));
                }
            } else if (!round_edges[idx].empty()) {
                next = bits;
                for (const auto& [a, b] : round_edges[idx]) {
                    const auto* ra = row(bits, a);
                    const auto* rb = row(bits, b);
                    auto* na = row(next, a);
                    auto* nb = row(next, b);
                    for (std::size_t w = 0; w < words; ++w) {
                        na[w] |= rb[w];
                        nb[w] |= ra[w];
                    }
                }
                bits.swap(next);
            }
        }

        auto informed = [&](std::size_t receiver, std::size_t k) {
            return (row(bits, receiver)[k / 64] >> (k % 64)) & 1U;
        };
        for (std::size_t k = 0; k < sources.size(); ++k) {
            for (auto v : sources) {
                if (!informed(v, k)) {
                    return FloodCounterexample{members[sources[k]].id, r, members[v].id};
                }
            }
        }
    }
    return std::nullopt;
}

} // namespace dle

#include "dle/campaign.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>

namespace dle {

namespace {

constexpr std::uint64_t kRunSalt = 0x52554E0000000001ULL;

std::vector<Edge> static_topology(const std::string& name, std::size_t n) {
    if (name == "complete") {
        return complete_topology(n);
    }
    if (name == "path") {
        return path_topology(n);
    }
    if (name == "ring") {
        return ring_topology(n);
    }
    if (name == "star") {
        return star_topology(n);
    }
    if (name == "torus") {
        // Squarest factorization rows x cols = n.
        std::size_t rows = static_cast<std::size_t>(std::sqrt(static_cast<double>(n)));
        while (rows > 1 && n % rows != 0) {
            --rows;
        }
        return torus_topology(std::max<std::size_t>(rows, 1), n / std::max<std::size_t>(rows, 1));
    }
    throw ParameterError(fmt::format("unknown topology '{}'", name));
}

} // namespace

const std::vector<std::string>& generator_names() {
    static const std::vector<std::string> names{"static", "lower-bound", "churn-complete", "churn-random"};
    return names;
}

Schedule generate_schedule(const GeneratorConfig& c, std::uint64_t seed) {
    if (c.generator == "static") {
        return build_static_schedule(c.n, c.diameter, c.horizon, static_topology(c.topology, c.n));
    }
    if (c.generator == "lower-bound") {
        return build_lower_bound_schedule(c.n, c.diameter, c.epochs, seed);
    }
    if (c.generator == "churn-complete" || c.generator == "churn-random") {
        ChurnParams p;
        p.n = c.n;
        p.diameter = c.diameter;
        p.horizon = c.horizon;
        p.churn_rate = c.churn;
        p.topology = c.generator == "churn-complete" ? EpochTopology::complete_at_epoch
                                                     : EpochTopology::random_connected_at_epoch;
        p.seed = seed;
        return build_churn_schedule(p);
    }
    throw ParameterError(fmt::format("unknown generator '{}'", c.generator));
}

std::uint64_t run_master_seed(std::uint64_t seed) noexcept { return derive_seed(seed, kRunSalt); }

unsigned worker_count() {
    if (const char* env = std::getenv("DLE_WORKERS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v >= 1) {
            return static_cast<unsigned>(v);
        }
    }
    return std::max(1U, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t count, unsigned workers, const std::function<void(std::size_t)>& body) {
    workers = std::max(1U, std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(count, 1))));
    if (workers == 1) {
        for (std::size_t i = 0; i < count; ++i) {
            body(i);
        }
        return;
    }
    std::atomic<std::size_t> next{0};
    std::atomic<bool> stop{false};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&] {
        while (!stop.load(std::memory_order_relaxed)) {
            const std::size_t i = next.fetch_add(1);
            if (i >= count) {
                return;
            }
            try {
                body(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) {
                    error = std::current_exception();
                }
                stop = true;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back(worker);
    }
    for (auto& t : pool) {
        t.join();
    }
    if (error) {
        std::rethrow_exception(error);
    }
}

RunRecord evaluate(const Trace& trace, std::uint64_t seed, const CampaignOptions& options) {
    RunRecord rec;
    rec.seed = seed;
    rec.fingerprint = trace.fingerprint();
    if (options.checks) {
        const auto violations = check_safety(trace);
        rec.safety_violations = violations.size();
        if (!violations.empty()) {
            rec.first_violation = format_violation(violations.front());
        }
    }
    const auto& s = trace.schedule();
    const Round bound = termination_bound(options.bound_coefficient, s.diameter(), s.n());
    const auto late = check_termination(trace, bound);
    rec.termination_violations = late.size();
    if (rec.first_violation.empty() && !late.empty()) {
        rec.first_violation = format_violation(late.front());
    }

    const auto stats = summarize(trace);
    rec.episodes = stats.episodes.size();
    for (const auto& e : stats.episodes) {
        if (auto d = e.duration()) {
            rec.durations.push_back(*d);
        }
    }
    rec.phases_to_success = stats.phases_to_success();
    for (const auto& p : stats.phases) {
        rec.successful_phases += p.outcome == PhaseOutcome::successful ? 1 : 0;
        rec.failed_phases += p.outcome == PhaseOutcome::failed ? 1 : 0;
    }
    rec.rank_messages = stats.rank_messages;
    rec.beep_messages = stats.beep_messages;
    if (options.lower_bound_max_i > 0) {
        rec.no_leader = no_leader_indicators(trace, options.lower_bound_max_i);
    }
    return rec;
}

std::vector<RunRecord> run_campaign(const GeneratorConfig& config, std::uint64_t seed_start,
                                    std::size_t seeds, const CampaignOptions& options,
                                    unsigned workers) {
    std::vector<RunRecord> out(seeds);
    parallel_for(seeds, workers, [&](std::size_t i) {
        const std::uint64_t seed = seed_start + i;
        auto schedule = std::make_shared<const Schedule>(generate_schedule(config, seed));
        const Trace trace = run(schedule, run_master_seed(seed), options.run);
        out[i] = evaluate(trace, seed, options);
    });
    return out;
}

std::vector<RunRecord> run_campaign(std::shared_ptr<const Schedule> schedule,
                                    std::uint64_t seed_start, std::size_t seeds,
                                    const CampaignOptions& options, unsigned workers) {
    if (!options.run.allow_unverified) {
        if (auto bad = verify_comm_diameter(*schedule)) {
            throw UnverifiedScheduleError(
                fmt::format("schedule violates D = {}: flood from {} at round {} misses {}",
                            schedule->diameter(), to_underlying(bad->source), bad->start,
                            to_underlying(bad->receiver)));
        }
    }
    // Verified once above; skip the per-run check.
    CampaignOptions per_run = options;
    per_run.run.allow_unverified = true;
    std::vector<RunRecord> out(seeds);
    parallel_for(seeds, workers, [&](std::size_t i) {
        const std::uint64_t seed = seed_start + i;
        const Trace trace = run(schedule, run_master_seed(seed), per_run.run);
        out[i] = evaluate(trace, seed, per_run);
    });
    return out;
}

std::optional<Round> percentile(std::vector<Round> values, double q) {
    if (values.empty()) {
        return std::nullopt;
    }
    if (!(q > 0.0 && q <= 1.0)) {
        throw ParameterError("percentile: q must lie in (0, 1]");
    }
    const auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(values.size())));
    const std::size_t k = std::max<std::size_t>(rank, 1) - 1;
    std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(k), values.end());
    return values[k];
}

CellStats aggregate(const std::vector<RunRecord>& records, std::size_t n, Round diameter) {
    CellStats c;
    c.n = n;
    c.diameter = diameter;
    c.runs = records.size();
    std::vector<Round> pooled;
    double phase_sum = 0.0;
    std::size_t phase_runs = 0;
    for (const auto& r : records) {
        c.safety_violations += r.safety_violations;
        c.runs_within_bound += r.termination_violations == 0 ? 1 : 0;
        c.episodes += r.episodes;
        pooled.insert(pooled.end(), r.durations.begin(), r.durations.end());
        if (r.phases_to_success) {
            phase_sum += static_cast<double>(*r.phases_to_success);
            ++phase_runs;
        }
    }
    c.completed_episodes = pooled.size();
    c.p99_termination = percentile(std::move(pooled), 0.99);
    if (phase_runs > 0) {
        c.mean_phases_to_success = phase_sum / static_cast<double>(phase_runs);
    }
    if (c.p99_termination && n >= 2) {
        c.ratio = static_cast<double>(*c.p99_termination) /
                  (static_cast<double>(diameter) * std::log2(static_cast<double>(n)));
    }
    return c;
}

std::uint64_t config_hash(std::string_view canonical) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : canonical) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

} // namespace dle

#pragma once

// Seeded experiment campaigns: schedule generation by name, per-seed runs
// with oracle checks, and aggregation into per-cell statistics. Shared by
// the command-line tool and the acceptance suite.

#include "dle/engine.hpp"
#include "dle/oracle.hpp"
#include "dle/schedule.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace dle {

struct GeneratorConfig {
    std::string generator = "churn-complete"; ///< static, lower-bound, churn-complete, churn-random
    std::size_t n = 16;
    Round diameter = 4;
    Round horizon = 0;          ///< lower-bound uses epochs * D instead
    std::size_t epochs = 0;     ///< lower-bound only
    double churn = 0.5;         ///< churn generators only
    std::string topology = "complete"; ///< static only: complete, path, ring, star, torus
};

const std::vector<std::string>& generator_names();

/// Builds the schedule for one seed. Throws ParameterError for unknown
/// generators or topologies.
Schedule generate_schedule(const GeneratorConfig& config, std::uint64_t seed);

/// Master seed of the run paired with schedule seed `seed`. Salted so that
/// node streams never coincide with the generator's streams.
std::uint64_t run_master_seed(std::uint64_t seed) noexcept;

/// Worker count from DLE_WORKERS, else the hardware concurrency (at least 1).
unsigned worker_count();

/// Calls body(i) for i in [0, count) on `workers` threads. The first
/// exception thrown by any call is rethrown after all workers stop.
void parallel_for(std::size_t count, unsigned workers, const std::function<void(std::size_t)>& body);

struct CampaignOptions {
    bool checks = true;              ///< run the safety oracle
    double bound_coefficient = 14.0; ///< c in the termination bound c * D * ceil(log2 n)
    std::size_t lower_bound_max_i = 0; ///< record no-leader indicators for i <= this
    RunOptions run;
};

/// Condensed result of one seeded run.
struct RunRecord {
    std::uint64_t seed = 0;
    std::uint64_t fingerprint = 0;
    std::size_t safety_violations = 0;
    std::size_t termination_violations = 0;
    std::string first_violation;          ///< formatted, empty when none
    std::size_t episodes = 0;
    std::vector<Round> durations;         ///< completed episode lengths
    std::optional<std::size_t> phases_to_success;
    std::size_t successful_phases = 0;
    std::size_t failed_phases = 0;
    std::size_t rank_messages = 0;
    std::size_t beep_messages = 0;
    std::vector<bool> no_leader;          ///< lower-bound indicators, when requested

    bool operator==(const RunRecord&) const = default;
};

RunRecord evaluate(const Trace& trace, std::uint64_t seed, const CampaignOptions& options);

/// One run per seed in [seed_start, seed_start + seeds), each on its own
/// generated schedule. Records are returned sorted by seed.
std::vector<RunRecord> run_campaign(const GeneratorConfig& config, std::uint64_t seed_start,
                                    std::size_t seeds, const CampaignOptions& options,
                                    unsigned workers);

/// Same, on one fixed schedule.
std::vector<RunRecord> run_campaign(std::shared_ptr<const Schedule> schedule,
                                    std::uint64_t seed_start, std::size_t seeds,
                                    const CampaignOptions& options, unsigned workers);

/// Nearest-rank percentile, q in (0, 1]. nullopt for an empty sample.
std::optional<Round> percentile(std::vector<Round> values, double q);

struct CellStats {
    std::size_t n = 0;
    Round diameter = 0;
    std::size_t runs = 0;
    std::size_t safety_violations = 0;
    std::size_t runs_within_bound = 0;   ///< runs with no termination violation
    std::size_t episodes = 0;
    std::size_t completed_episodes = 0;
    std::optional<Round> p99_termination; ///< over pooled completed episodes
    std::optional<double> mean_phases_to_success;
    std::optional<double> ratio;          ///< p99 / (D * log2 n)
};

CellStats aggregate(const std::vector<RunRecord>& records, std::size_t n, Round diameter);

/// Hash of a canonical config string, written into output headers.
std::uint64_t config_hash(std::string_view canonical);

} // namespace dle

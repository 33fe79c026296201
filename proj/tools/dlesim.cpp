// dlesim: schedule generation, seeded campaigns and trace verification for
// the dynamic leader election simulator.
//
// Exit codes: 0 success, 1 usage, 2 parse error, 3 validation or
// construction error, 4 oracle violation, 5 I/O error.

#include "dle/campaign.hpp"
#include "dle/engine.hpp"
#include "dle/io.hpp"
#include "dle/oracle.hpp"
#include "dle/schedule.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

namespace {

using dle::Round;
using json = nlohmann::ordered_json;

enum Exit : int { ok = 0, usage = 1, parse = 2, validation = 3, violation = 4, io = 5 };

struct Options {
    dle::GeneratorConfig gen;
    std::vector<std::size_t> ns{16, 64, 256};
    std::vector<Round> ds{4, 8};
    std::string schedule_path;
    std::string trace_path;
    std::string trace_out;
    std::string out;
    std::size_t seeds = 1;
    std::uint64_t seed_start = 0;
    std::uint64_t seed = 0;
    std::string checks = "on";
    double bound_coefficient = 14.0;
    std::size_t max_i = 3;
};

std::string hex64(std::uint64_t v) { return fmt::format("{:016x}", v); }

/// Writes `<out>.csv` and `<out>.json`, or the CSV alone to stdout.
void emit(const Options& o, const std::string& command, const json& config, const std::string& csv_body) {
    const std::string canonical = config.dump();
    const std::uint64_t hash = dle::config_hash(canonical);
    const std::string csv = fmt::format("# dlesim {} config_hash={}\n{}", command, hex64(hash), csv_body);
    if (o.out.empty()) {
        std::cout << csv;
        return;
    }
    json sidecar;
    sidecar["command"] = command;
    sidecar["config_hash"] = hex64(hash);
    sidecar["config"] = config;
    dle::write_file(o.out + ".csv", csv);
    dle::write_file(o.out + ".json", sidecar.dump(2) + "\n");
}

json generator_json(const dle::GeneratorConfig& g) {
    return json{{"generator", g.generator}, {"n", g.n},         {"D", g.diameter},
                {"horizon", g.horizon},     {"epochs", g.epochs}, {"churn", g.churn},
                {"topology", g.topology}};
}

dle::CampaignOptions campaign_options(const Options& o) {
    dle::CampaignOptions c;
    c.checks = o.checks == "on";
    c.bound_coefficient = o.bound_coefficient;
    return c;
}

int cmd_generate(const Options& o) {
    const auto s = dle::generate_schedule(o.gen, o.seed);
    if (auto bad = dle::verify_comm_diameter(s)) {
        std::cerr << fmt::format("error: schedule violates D = {}: flood from {} at round {} misses {}\n",
                                 s.diameter(), dle::to_underlying(bad->source), bad->start,
                                 dle::to_underlying(bad->receiver));
        return validation;
    }
    const std::string text = dle::schedule_to_string(s);
    if (o.out.empty()) {
        std::cout << text;
    } else {
        dle::write_file(o.out, text);
    }
    return ok;
}

std::shared_ptr<const dle::Schedule> load_schedule(const std::string& path) {
    std::istringstream in(dle::read_file(path));
    return std::make_shared<const dle::Schedule>(dle::read_schedule(in));
}

int cmd_run(const Options& o) {
    auto schedule = load_schedule(o.schedule_path);
    const auto options = campaign_options(o);
    const auto records = dle::run_campaign(schedule, o.seed_start, o.seeds, options, dle::worker_count());

    std::string csv =
        "seed,fingerprint,safety_violations,termination_violations,episodes,completed_episodes,"
        "max_termination,phases_to_success,successful_phases,failed_phases,rank_messages,beep_messages\n";
    std::size_t violations = 0;
    for (const auto& r : records) {
        const Round longest = r.durations.empty() ? 0 : *std::max_element(r.durations.begin(), r.durations.end());
        csv += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{}\n", r.seed, hex64(r.fingerprint),
                           r.safety_violations, r.termination_violations, r.episodes, r.durations.size(),
                           r.durations.empty() ? std::string("") : std::to_string(longest),
                           r.phases_to_success ? std::to_string(*r.phases_to_success) : std::string(""),
                           r.successful_phases, r.failed_phases, r.rank_messages, r.beep_messages);
        if (options.checks && (r.safety_violations > 0 || r.termination_violations > 0)) {
            ++violations;
            std::cerr << fmt::format("seed {}: {}\n", r.seed, r.first_violation);
        }
    }
    json config{{"schedule", o.schedule_path},
                {"schedule_header",
                 {{"n", schedule->n()},
                  {"D", schedule->diameter()},
                  {"horizon", schedule->horizon()},
                  {"generator", schedule->generator()},
                  {"seed", schedule->seed()}}},
                {"seeds", o.seeds},
                {"seed_start", o.seed_start},
                {"checks", o.checks},
                {"bound_coefficient", o.bound_coefficient}};
    emit(o, "run", config, csv);

    if (!o.trace_out.empty() && o.seeds > 0) {
        dle::RunOptions ro;
        ro.allow_unverified = true; // verified by run_campaign above
        const auto trace = dle::run(schedule, dle::run_master_seed(o.seed_start), ro);
        std::ostringstream ts;
        dle::write_trace(ts, trace);
        dle::write_file(o.trace_out, ts.str());
    }
    return violations > 0 ? violation : ok;
}

int cmd_scaling(const Options& o) {
    if (o.seeds < 1000) {
        std::cerr << "error: scaling needs at least 1000 seeds per cell\n";
        return validation;
    }
    if (o.ns.size() < 3 || o.ds.size() < 2) {
        std::cerr << "error: scaling needs at least 3 values of n and 2 values of D\n";
        return validation;
    }
    const auto options = campaign_options(o);
    std::string csv =
        "n,D,runs,horizon,p99_termination,mean_phases_to_success,ratio,runs_within_bound,safety_violations\n";
    json cells = json::array();
    std::size_t violations = 0;
    for (Round d : o.ds) {
        for (std::size_t n : o.ns) {
            auto gen = o.gen;
            gen.n = n;
            gen.diameter = d;
            gen.horizon = dle::termination_bound(o.bound_coefficient, d, n) + 4 * d;
            const auto records = dle::run_campaign(gen, o.seed_start, o.seeds, options, dle::worker_count());
            const auto c = dle::aggregate(records, n, d);
            violations += c.safety_violations;
            csv += fmt::format("{},{},{},{},{},{},{},{},{}\n", n, d, c.runs, gen.horizon,
                               c.p99_termination ? std::to_string(*c.p99_termination) : "",
                               c.mean_phases_to_success ? fmt::format("{:.4f}", *c.mean_phases_to_success) : "",
                               c.ratio ? fmt::format("{:.4f}", *c.ratio) : "", c.runs_within_bound,
                               c.safety_violations);
            cells.push_back(generator_json(gen));
        }
    }
    json config{{"cells", cells},
                {"seeds", o.seeds},
                {"seed_start", o.seed_start},
                {"checks", o.checks},
                {"bound_coefficient", o.bound_coefficient}};
    emit(o, "scaling", config, csv);
    return violations > 0 && options.checks ? violation : ok;
}

int cmd_lowerbound(const Options& o) {
    auto gen = o.gen;
    gen.generator = "lower-bound";
    if (static_cast<std::size_t>(o.max_i) > gen.epochs) {
        std::cerr << "error: --max-i exceeds the number of epochs\n";
        return validation;
    }
    auto options = campaign_options(o);
    options.lower_bound_max_i = o.max_i;
    const auto records = dle::run_campaign(gen, o.seed_start, o.seeds, options, dle::worker_count());
    dle::LowerBoundCurve curve(o.max_i);
    std::size_t violations = 0;
    for (const auto& r : records) {
        curve.add(r.no_leader);
        violations += r.safety_violations;
    }
    const auto p = curve.probabilities();
    std::string csv = "i,round,empirical,bound,std_err\n";
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double bound = std::ldexp(1.0, -static_cast<int>(2 * i + 1));
        const double se = std::sqrt(bound * (1 - bound) / static_cast<double>(std::max<std::size_t>(curve.runs(), 1)));
        csv += fmt::format("{},{},{:.6f},{:.6f},{:.6f}\n", i, static_cast<Round>(i) * gen.diameter, p[i], bound, se);
    }
    json config{{"cell", generator_json(gen)},
                {"seeds", o.seeds},
                {"seed_start", o.seed_start},
                {"max_i", o.max_i},
                {"checks", o.checks}};
    emit(o, "lowerbound", config, csv);
    return violations > 0 && options.checks ? violation : ok;
}

int cmd_verify(const Options& o) {
    if (o.schedule_path.empty() == o.trace_path.empty()) {
        std::cerr << "error: verify takes exactly one of --schedule or --trace\n";
        return usage;
    }
    if (!o.schedule_path.empty()) {
        const auto s = load_schedule(o.schedule_path);
        if (auto bad = dle::verify_comm_diameter(*s)) {
            std::cout << fmt::format("FAIL flood from {} at round {} misses {}\n",
                                     dle::to_underlying(bad->source), bad->start,
                                     dle::to_underlying(bad->receiver));
            return violation;
        }
        std::cout << "OK\n";
        return ok;
    }
    std::istringstream in(dle::read_file(o.trace_path));
    const auto trace = dle::read_trace(in);
    auto violations = dle::check_safety(trace);
    const auto& s = trace.schedule();
    auto late = dle::check_termination(trace, dle::termination_bound(o.bound_coefficient, s.diameter(), s.n()));
    violations.insert(violations.end(), late.begin(), late.end());
    dle::RunOptions ro;
    ro.uniform_bits = trace.uniform_bits();
    ro.allow_unverified = true;
    const bool replay_matches = dle::run(trace.schedule_ptr(), trace.master_seed(), ro) == trace;
    for (const auto& v : violations) {
        std::cout << dle::format_violation(v) << '\n';
    }
    if (!replay_matches) {
        std::cout << "replay differs from the recorded trace\n";
    }
    if (violations.empty() && replay_matches) {
        std::cout << "OK\n";
        return ok;
    }
    return violation;
}

void add_generator_flags(CLI::App* cmd, Options& o) {
    cmd->add_option("--generator", o.gen.generator, "static, lower-bound, churn-complete or churn-random");
    cmd->add_option("--n", o.gen.n, "node count");
    cmd->add_option("--d", o.gen.diameter, "communication diameter D");
    cmd->add_option("--horizon", o.gen.horizon, "rounds (static and churn generators)");
    cmd->add_option("--epochs", o.gen.epochs, "epochs (lower-bound generator)");
    cmd->add_option("--churn", o.gen.churn, "per-epoch removal probability");
    cmd->add_option("--topology", o.gen.topology, "static topology: complete, path, ring, star, torus");
}

void add_campaign_flags(CLI::App* cmd, Options& o) {
    cmd->add_option("--seeds", o.seeds, "number of seeds")->check(CLI::PositiveNumber);
    cmd->add_option("--seed-start", o.seed_start, "first seed");
    cmd->add_option("--checks", o.checks, "oracle checks")->check(CLI::IsMember({"on", "off"}));
    cmd->add_option("--bound-coefficient", o.bound_coefficient, "c in the termination bound c*D*ceil(log2 n)");
    cmd->add_option("--out", o.out, "output prefix for <out>.csv and <out>.json");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Dynamic leader election simulator"};
    app.require_subcommand(1);
    Options o;

    auto* gen = app.add_subcommand("generate", "write a schedule file");
    add_generator_flags(gen, o);
    gen->add_option("--seed", o.seed, "generator seed");
    gen->add_option("--out", o.out, "output file (stdout when omitted)");

    auto* run = app.add_subcommand("run", "run seeded executions on a schedule file");
    run->add_option("--schedule", o.schedule_path, "schedule file")->required();
    add_campaign_flags(run, o);
    run->add_option("--trace-out", o.trace_out, "write the trace of the first seed");

    auto* scaling = app.add_subcommand("scaling", "termination statistics over an (n, D) grid");
    add_generator_flags(scaling, o);
    scaling->add_option("--ns", o.ns, "node counts")->delimiter(',');
    scaling->add_option("--ds", o.ds, "diameters")->delimiter(',');
    add_campaign_flags(scaling, o);

    auto* lower = app.add_subcommand("lowerbound", "no-leader probability on the lower-bound adversary");
    add_generator_flags(lower, o);
    lower->add_option("--max-i", o.max_i, "largest i reported");
    add_campaign_flags(lower, o);

    auto* verify = app.add_subcommand("verify", "check a schedule's diameter bound or re-check a trace");
    verify->add_option("--schedule", o.schedule_path, "schedule file");
    verify->add_option("--trace", o.trace_path, "trace file");
    verify->add_option("--bound-coefficient", o.bound_coefficient, "c in the termination bound");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? ok : usage;
    }

    try {
        if (*gen) {
            return cmd_generate(o);
        }
        if (*run) {
            return cmd_run(o);
        }
        if (*scaling) {
            if (o.gen.generator == "lower-bound") {
                std::cerr << "error: scaling uses a churn or static generator\n";
                return validation;
            }
            return cmd_scaling(o);
        }
        if (*lower) {
            return cmd_lowerbound(o);
        }
        return cmd_verify(o);
    } catch (const dle::ParseError& e) {
        std::cerr << "parse error: " << e.what() << '\n';
        return parse;
    } catch (const dle::IoError& e) {
        std::cerr << "I/O error: " << e.what() << '\n';
        return io;
    } catch (const dle::ConstructionError& e) {
        std::cerr << "construction error: " << e.what() << '\n';
        return validation;
    } catch (const dle::ParameterError& e) {
        std::cerr << "invalid parameter: " << e.what() << '\n';
        return validation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return validation;
    }
}

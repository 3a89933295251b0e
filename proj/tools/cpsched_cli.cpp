// cpsched: fit cost models, generate traces, plan batches, run the simulator
// and the exhaustive oracle from the command line.

#include "cpsched/baselines.hpp"
#include "cpsched/cost_model.hpp"
#include "cpsched/error.hpp"
#include "cpsched/gds.hpp"
#include "cpsched/json.hpp"
#include "cpsched/oracle.hpp"
#include "cpsched/simulator.hpp"
#include "cpsched/workload.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

using namespace cpsched;
using nlohmann::json;

namespace {

struct Common {
    std::int64_t dp = 4;
    std::int64_t cp = 8;
    Tokens bucket = 26'000;
    std::int64_t batch = 64;
    std::size_t iterations = 100;
    std::uint64_t seed = 0;
    std::vector<std::string> schedulers;
    std::string dist = "wikipedia";
    std::string trace;
    std::string cost_model = "realistic";
    bool no_rollback = false;
    std::string out;
    std::string format = "json";
};

void add_cluster_flags(CLI::App* app, Common& o) {
    app->add_option("--dp", o.dp, "data-parallel world size")->capture_default_str();
    app->add_option("--cp", o.cp, "context-parallel degree N")->capture_default_str();
    app->add_option("--bucket-tokens", o.bucket, "per-rank token capacity C")->capture_default_str();
    app->add_option("--cost-model", o.cost_model, "cost model JSON path or preset name")
        ->capture_default_str();
    app->add_flag("--no-rollback", o.no_rollback, "disable roll-back in the placement heuristics");
}

void add_workload_flags(CLI::App* app, Common& o) {
    app->add_option("--dist", o.dist, "length distribution preset")
        ->check(CLI::IsMember({"wikipedia", "lmsys", "chatqa2"}))
        ->capture_default_str();
    app->add_option("--trace", o.trace, "length trace file (overrides --dist)");
    app->add_option("--seed", o.seed)->capture_default_str();
}

void add_output_flags(CLI::App* app, Common& o, bool with_csv) {
    app->add_option("--out", o.out, "output path (default stdout)");
    if (with_csv)
        app->add_option("--format", o.format)->check(CLI::IsMember({"json", "csv"}))->capture_default_str();
}

CostModel resolve_cost(const std::string& name_or_path) {
    if (!std::filesystem::exists(name_or_path) && (name_or_path == "realistic" || name_or_path == "identity"))
        return preset_cost_model(name_or_path);
    return load_cost_model(name_or_path);
}

DistributionSpec resolve_dist(const Common& o) {
    if (o.trace.empty())
        return preset_distribution(o.dist);
    DistributionSpec spec;
    spec.kind = DistributionSpec::Kind::File;
    spec.path = o.trace;
    return spec;
}

ClusterConfig resolve_cluster(const Common& o) {
    ClusterConfig c{o.cp, o.dp, o.bucket, o.batch};
    c.validate();
    return c;
}

void write_text(const std::string& path, const std::string& text) {
    if (path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot write " + path);
    out << text;
}

std::vector<Tokens> parse_lengths(const std::string& csv) {
    std::string joined = csv;
    for (auto& ch : joined)
        if (ch == ',')
            ch = '\n';
    return parse_trace(joined, "lengths").lengths;
}

json gap_to_json(const GapStats& g) {
    return {{"trials", g.trials},
            {"both_succeeded", g.both_succeeded},
            {"heuristic_errors", g.heuristic_errors},
            {"oracle_infeasible", g.oracle_infeasible},
            {"missed", g.missed},
            {"dominance_violations", g.dominance_violations},
            {"median_ratio", g.median_ratio},
            {"max_ratio", g.max_ratio},
            {"feasibility_agreement", g.feasibility_agreement}};
}

// Optional JSON config for `simulate`; command-line flags given explicitly win.
void apply_sim_config(const std::string& path, Common& o, const CLI::App& app) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot read " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("invalid config JSON: ") + e.what());
    }
    auto take = [&](const char* key, const char* flag, auto& field) {
        if (j.contains(key) && app.count(flag) == 0)
            field = j.at(key).get<std::decay_t<decltype(field)>>();
    };
    take("dp", "--dp", o.dp);
    take("cp", "--cp", o.cp);
    take("bucket_tokens", "--bucket-tokens", o.bucket);
    take("batch_size", "--batch-size", o.batch);
    take("iterations", "--iterations", o.iterations);
    take("seed", "--seed", o.seed);
    take("schedulers", "--scheduler", o.schedulers);
    take("dist", "--dist", o.dist);
    take("trace", "--trace", o.trace);
    take("cost_model", "--cost-model", o.cost_model);
    if (j.contains("rollback") && app.count("--no-rollback") == 0)
        o.no_rollback = !j.at("rollback").get<bool>();
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sequence scheduling for context-parallel long-context fine-tuning"};
    app.require_subcommand(1);
    Common o;

    // fit
    auto* fit = app.add_subcommand("fit", "profile CSV -> cost model JSON");
    std::string profile;
    std::string role = "comm";
    double min_size = 16.0;
    double bytes_per_element = 2.0;
    fit->add_option("profile", profile, "CSV with header size,latency")->required();
    fit->add_option("--role", role, "which fit to replace")
        ->check(CLI::IsMember({"comm", "comp"}))
        ->capture_default_str();
    fit->add_option("--min-size", min_size, "ignore rows below this size")->capture_default_str();
    fit->add_option("--bytes-per-element", bytes_per_element)->capture_default_str();
    fit->add_option("--cost-model", o.cost_model, "base cost model (path or preset)")
        ->capture_default_str();
    add_output_flags(fit, o, false);

    // gen
    auto* gen = app.add_subcommand("gen", "distribution -> trace file");
    std::size_t count = 100'000;
    gen->add_option("--count", count)->capture_default_str();
    add_workload_flags(gen, o);
    add_output_flags(gen, o, false);
    gen->add_option("--format", o.format, "json array or newline-separated")
        ->check(CLI::IsMember({"json", "text"}))
        ->capture_default_str();

    std::size_t trace_size = 100'000;

    // schedule
    auto* sched = app.add_subcommand("schedule", "one global batch -> plan JSON");
    std::string scheduler = "skrull";
    std::string lengths_arg;
    std::uint64_t iteration = 0;
    add_cluster_flags(sched, o);
    add_workload_flags(sched, o);
    add_output_flags(sched, o, false);
    sched->add_option("--batch-size", o.batch, "sequences per DP rank; the global batch is dp x this")
        ->capture_default_str();
    sched->add_option("--scheduler", scheduler)
        ->check(CLI::IsMember({"skrull", "skrull-full", "skrull-dacp-only", "rr", "full-shard", "sorted"}))
        ->capture_default_str();
    sched->add_option("--lengths", lengths_arg, "explicit comma-separated batch (skips sampling)");
    sched->add_option("--trace-size", trace_size, "synthetic trace length")->capture_default_str();
    sched->add_option("--iteration", iteration, "which sampled batch to plan")->capture_default_str();

    // simulate
    auto* sim = app.add_subcommand("simulate", "multi-iteration comparison report");
    std::string config_path;
    std::string baseline = "full-shard";
    add_cluster_flags(sim, o);
    add_workload_flags(sim, o);
    add_output_flags(sim, o, true);
    sim->add_option("--batch-size", o.batch, "sequences per DP rank; the global batch is dp x this")
        ->capture_default_str();
    sim->add_option("--iterations", o.iterations)->capture_default_str();
    sim->add_option("--scheduler", o.schedulers, "repeatable; default: all");
    sim->add_option("--baseline", baseline)->capture_default_str();
    sim->add_option("--trace-size", trace_size, "synthetic trace length")->capture_default_str();
    sim->add_option("--config", config_path, "JSON config; explicit flags override it");

    // oracle
    auto* orc = app.add_subcommand("oracle", "small instance -> optimum and gap statistics");
    std::size_t trials = 0;
    std::size_t max_k = 8;
    orc->add_option("--lengths", lengths_arg, "comma-separated instance");
    orc->add_option("--cp", o.cp)->capture_default_str();
    orc->add_option("--bucket-tokens", o.bucket)->capture_default_str();
    orc->add_option("--cost-model", o.cost_model)->capture_default_str();
    orc->add_flag("--no-rollback", o.no_rollback);
    orc->add_option("--trials", trials, "random gap instances")->capture_default_str();
    orc->add_option("--max-k", max_k, "largest random instance")->capture_default_str();
    add_workload_flags(orc, o);
    add_output_flags(orc, o, false);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*fit) {
            CostModel cost = resolve_cost(o.cost_model);
            const auto points = load_profile_csv(profile);
            if (role == "comm") {
                cost.comm_fit = fit_comm_profile(points, min_size, bytes_per_element);
                cost.bytes_per_element = bytes_per_element;
            } else {
                cost.comp_fit = fit_linear(points, min_size, FitUnit::TimePerFlop);
            }
            cost.validate();
            write_text(o.out, json(cost).dump(2) + "\n");
        } else if (*gen) {
            const auto trace = generate(resolve_dist(o), count, o.seed);
            std::ostringstream out;
            if (o.format == "json") {
                out << json(trace.lengths).dump() << '\n';
            } else {
                for (auto s : trace.lengths)
                    out << s << '\n';
            }
            write_text(o.out, out.str());
        } else if (*sched) {
            const auto cluster = resolve_cluster(o);
            const auto cost = resolve_cost(o.cost_model);
            std::vector<Tokens> batch;
            if (!lengths_arg.empty()) {
                batch = parse_lengths(lengths_arg);
            } else {
                const auto trace = generate(resolve_dist(o), trace_size, o.seed);
                batch = sample_global_batch(trace, static_cast<std::size_t>(o.batch * o.dp), o.seed, iteration);
            }
            const auto plan =
                plan_for_scheduler(scheduler, batch, cluster, cost, !o.no_rollback, o.seed ^ iteration);
            json j = plan_to_json(plan, batch, cluster, cost);
            j["scheduler"] = scheduler;
            j["cluster"] = cluster;
            j["lengths"] = batch;
            write_text(o.out, j.dump(2) + "\n");
        } else if (*sim) {
            if (!config_path.empty())
                apply_sim_config(config_path, o, *sim);
            SimConfig cfg;
            cfg.cluster = resolve_cluster(o);
            cfg.cost = resolve_cost(o.cost_model);
            cfg.dist = resolve_dist(o);
            cfg.trace_size = trace_size;
            cfg.iterations = o.iterations;
            cfg.seed = o.seed;
            cfg.rollback = !o.no_rollback;
            cfg.baseline = baseline;
            if (o.schedulers.empty())
                o.schedulers = {"skrull", "skrull-dacp-only", "rr", "full-shard", "sorted"};
            cfg.schedulers = o.schedulers;
            const auto report = simulate(cfg);
            const auto fmt = o.format == "csv" ? ReportFormat::Csv : ReportFormat::Json;
            if (o.out.empty())
                std::cout << (fmt == ReportFormat::Json ? report_to_json(report) + "\n"
                                                        : report_to_csv(report));
            else
                emit_report(report, fmt, o.out);
        } else if (*orc) {
            const auto cost = resolve_cost(o.cost_model);
            const ClusterConfig cluster{o.cp, 1, o.bucket, 1};
            cluster.validate();
            json j = json::object();
            if (!lengths_arg.empty()) {
                const auto lens = parse_lengths(lengths_arg);
                const auto best = optimal_dacp(lens, cluster, cost);
                if (best) {
                    j["optimum"] = schedule_to_json(best->best_schedule,
                                                    eval_tdacp(lens, best->best_schedule, cluster, cost));
                    j["optimum"]["feasible_count"] = best->feasible_count;
                    j["optimum"]["explored"] = best->explored;
                } else {
                    j["optimum"] = nullptr;
                }
                try {
                    const auto s = schedule_dacp(lens, cluster, cost, !o.no_rollback);
                    j["heuristic"] = schedule_to_json(s, eval_tdacp(lens, s, cluster, cost));
                } catch (const SchedulingError& e) {
                    j["heuristic"] = {{"error", e.what()}};
                }
            }
            if (trials > 0) {
                GapInstanceSpec spec;
                spec.max_k = max_k;
                spec.lengths = resolve_dist(o);
                j["gap"] = gap_to_json(heuristic_gap(trials, spec, cluster, cost, o.seed));
            }
            if (j.empty())
                throw ConfigError("oracle needs --lengths and/or --trials");
            write_text(o.out, j.dump(2) + "\n");
        }
    } catch (const SchedulingError& e) {
        std::cerr << "scheduling error: " << e.what() << '\n';
        return 3;
    } catch (const ParseError& e) {
        std::cerr << "parse error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}

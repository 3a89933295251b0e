#include "cpsched/simulator.hpp"

#include "cpsched/error.hpp"
#include "cpsched/json.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace cpsched {

namespace {

constexpr std::array<std::string_view, 6> kSchedulers{
    "skrull", "skrull-full", "skrull-dacp-only", "rr", "full-shard", "sorted"};

} // namespace

std::span<const std::string_view> scheduler_names() { return kSchedulers; }

IterationPlan plan_for_scheduler(std::string_view name, std::span<const Tokens> global_lengths,
                                 const ClusterConfig& cluster, const CostModel& cost,
                                 bool rollback_enabled, std::uint64_t seed) {
    if (name == "skrull" || name == "skrull-full")
        return plan_iteration(global_lengths, cluster, cost, rollback_enabled);
    if (name == "skrull-dacp-only")
        return plan_fifo(global_lengths, cluster, cost, dacp_scheduler(), rollback_enabled);
    if (name == "rr")
        return plan_iteration(global_lengths, cluster, cost, rollback_enabled,
                              round_robin_scheduler());
    if (name == "full-shard")
        return plan_full_shard(global_lengths, cluster, cost);
    if (name == "sorted")
        return plan_sorted_batching(global_lengths, cluster, cost, seed);
    throw ConfigError("unknown scheduler '" + std::string(name) + "'");
}

PeakTokens peak_tokens(const IterationPlan& plan, std::span<const Tokens> global_lengths,
                       const ClusterConfig& cluster) {
    PeakTokens out{std::numeric_limits<double>::infinity(), 0.0};
    for (const auto& mbs : plan.per_dp) {
        std::vector<double> peak(static_cast<std::size_t>(cluster.cp_degree), 0.0);
        for (const auto& mb : mbs) {
            const auto usage = rank_token_usage(micro_batch_lengths(global_lengths, mb),
                                                mb.schedule, cluster.cp_degree);
            for (std::size_t r = 0; r < peak.size(); ++r)
                peak[r] = std::max(peak[r], usage[r]);
        }
        for (double p : peak) {
            out.min = std::min(out.min, p);
            out.max = std::max(out.max, p);
        }
    }
    if (plan.per_dp.empty())
        out.min = 0.0;
    return out;
}

void SimConfig::validate() const {
    cluster.validate();
    cost.validate();
    dist.validate();
    if (iterations < 1)
        throw ConfigError("iterations must be >= 1");
    if (schedulers.empty())
        throw ConfigError("at least one scheduler is required");
    for (const auto& s : schedulers)
        if (std::find(kSchedulers.begin(), kSchedulers.end(), s) == kSchedulers.end())
            throw ConfigError("unknown scheduler '" + s + "'");
}

void finalize(SchedulerReport& report) {
    report.total_time = 0.0;
    report.mean_time = 0.0;
    report.p95_time = 0.0;
    if (report.iterations.empty())
        return;
    std::vector<double> times;
    for (const auto& rec : report.iterations) {
        times.push_back(rec.time);
        report.total_time += rec.time;
    }
    report.mean_time = report.total_time / static_cast<double>(times.size());
    std::sort(times.begin(), times.end());
    // Nearest-rank percentile.
    const auto rank = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(times.size())));
    report.p95_time = times[std::max<std::size_t>(rank, 1) - 1];
}

SimReport simulate(const SimConfig& config) {
    config.validate();
    const LengthTrace trace = generate(config.dist, config.trace_size, config.seed);
    trace.validate();
    const auto batch_size =
        static_cast<std::size_t>(config.cluster.dp_worldsize * config.cluster.per_dp_batch);

    SimReport report;
    for (const auto& name : config.schedulers)
        report.per_scheduler[name];

    for (std::size_t it = 0; it < config.iterations; ++it) {
        const auto batch = sample_global_batch(trace, batch_size, config.seed, it);
        for (const auto& name : config.schedulers) {
            auto& rep = report.per_scheduler[name];
            try {
                const auto plan = plan_for_scheduler(name, batch, config.cluster, config.cost,
                                                     config.rollback, config.seed ^ it);
                const auto cost = eval_iteration(plan, batch, config.cluster, config.cost);
                const auto peaks = peak_tokens(plan, batch, config.cluster);
                rep.iterations.push_back(
                    IterationRecord{it, cost.iteration_time, peaks.min, peaks.max});
            } catch (const SchedulingError& e) {
                rep.errored_iterations.push_back(it);
                if (e.stage() == SchedulingError::Stage::Placement)
                    ++rep.dacp_error_count;
            }
        }
    }

    for (auto& [name, rep] : report.per_scheduler)
        finalize(rep);

    const auto base = report.per_scheduler.find(config.baseline);
    if (base != report.per_scheduler.end() && base->second.mean_time > 0.0)
        for (const auto& [name, rep] : report.per_scheduler)
            if (rep.mean_time > 0.0)
                report.speedups[name] = base->second.mean_time / rep.mean_time;
    return report;
}

std::vector<AblationRow> ablate_rollback(const std::vector<std::vector<Tokens>>& instances,
                                         const ClusterConfig& cluster, const CostModel& cost) {
    const std::array<std::pair<const char*, MicroBatchScheduler>, 2> policies{{
        {"skrull", dacp_scheduler()},
        {"rr", round_robin_scheduler()},
    }};
    std::vector<AblationRow> rows;
    for (const auto& [name, scheduler] : policies) {
        for (bool rollback : {true, false}) {
            AblationRow row{name, rollback, instances.size(), 0, std::nullopt};
            double base_total = 0.0;
            double sched_total = 0.0;
            for (const auto& lengths : instances) {
                try {
                    const auto s = scheduler(lengths, cluster, cost, rollback);
                    const DacpSchedule sharded{std::vector<int>(lengths.size(), kDistributed)};
                    base_total += eval_tdacp(lengths, sharded, cluster, cost).tdacp;
                    sched_total += eval_tdacp(lengths, s, cluster, cost).tdacp;
                } catch (const SchedulingError&) {
                    ++row.errors;
                }
            }
            if (row.errors == 0 && sched_total > 0.0)
                row.speedup = base_total / sched_total;
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

std::string report_to_json(const SimReport& report) { return nlohmann::json(report).dump(); }

SimReport report_from_json(std::string_view text) {
    try {
        return nlohmann::json::parse(text).get<SimReport>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("invalid report JSON: ") + e.what());
    }
}

std::string report_to_csv(const SimReport& report) {
    std::ostringstream out;
    out.precision(17);
    out << "iteration,scheduler,time,min_peak_tokens,max_peak_tokens\n";
    for (const auto& [name, rep] : report.per_scheduler)
        for (const auto& rec : rep.iterations)
            out << rec.iteration << ',' << name << ',' << rec.time << ',' << rec.min_peak_tokens
                << ',' << rec.max_peak_tokens << '\n';
    return out.str();
}

void emit_report(const SimReport& report, ReportFormat format, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot write " + path.string());
    out << (format == ReportFormat::Json ? report_to_json(report) : report_to_csv(report));
    if (format == ReportFormat::Json)
        out << '\n';
    if (!out)
        throw std::runtime_error("failed writing " + path.string());
}

} // namespace cpsched

#pragma once

// Multi-iteration replay of the schedulers over sampled global batches, with
// comparison reports and the roll-back ablation.

#include "cpsched/baselines.hpp"
#include "cpsched/cost_model.hpp"
#include "cpsched/dacp.hpp"
#include "cpsched/gds.hpp"
#include "cpsched/workload.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cpsched {

// Iteration-level planners, by name:
//   skrull (alias skrull-full)  GDS micro-batching + DACP placement
//   skrull-dacp-only            FIFO micro-batching + DACP placement
//   rr                          GDS micro-batching + round-robin placement
//   full-shard                  FIFO micro-batching, everything sharded
//   sorted                      sorted consecutive windows, everything sharded
std::span<const std::string_view> scheduler_names();

IterationPlan plan_for_scheduler(std::string_view name, std::span<const Tokens> global_lengths,
                                 const ClusterConfig& cluster, const CostModel& cost,
                                 bool rollback_enabled, std::uint64_t seed);

// Largest and smallest per-GPU peak of resident tokens (the bucket-constraint
// left-hand side) over all DP x CP ranks, maximised across micro-batches.
struct PeakTokens {
    double min = 0.0;
    double max = 0.0;
};

PeakTokens peak_tokens(const IterationPlan& plan, std::span<const Tokens> global_lengths,
                       const ClusterConfig& cluster);

struct SimConfig {
    ClusterConfig cluster;
    CostModel cost;
    DistributionSpec dist;
    std::size_t trace_size = 100'000;
    std::size_t iterations = 1;
    std::uint64_t seed = 0;
    std::vector<std::string> schedulers{"skrull"};
    std::string baseline = "full-shard";
    bool rollback = true;

    void validate() const;
};

struct IterationRecord {
    std::uint64_t iteration = 0;
    double time = 0.0;
    double min_peak_tokens = 0.0;
    double max_peak_tokens = 0.0;

    bool operator==(const IterationRecord&) const = default;
};

struct SchedulerReport {
    std::vector<IterationRecord> iterations; // successful iterations, in order
    std::vector<std::uint64_t> errored_iterations;
    double mean_time = 0.0;
    double p95_time = 0.0;
    double total_time = 0.0;
    std::size_t dacp_error_count = 0;

    bool operator==(const SchedulerReport&) const = default;
};

struct SimReport {
    std::map<std::string, SchedulerReport> per_scheduler;
    // mean_time(baseline) / mean_time(scheduler)
    std::map<std::string, double> speedups;

    bool operator==(const SimReport&) const = default;
};

SimReport simulate(const SimConfig& config);

// Summary statistics from the recorded iterations.
void finalize(SchedulerReport& report);

struct AblationRow {
    std::string scheduler; // "skrull" or "rr"
    bool rollback = true;
    std::size_t instances = 0;
    std::size_t errors = 0;
    // Summed all-sharded tdacp over summed scheduler tdacp; empty on any error.
    std::optional<double> speedup;
};

// Micro-batch-level placement on each instance with and without roll-back.
std::vector<AblationRow> ablate_rollback(const std::vector<std::vector<Tokens>>& instances,
                                         const ClusterConfig& cluster, const CostModel& cost);

enum class ReportFormat { Json, Csv };

std::string report_to_json(const SimReport& report);
SimReport report_from_json(std::string_view text);
std::string report_to_csv(const SimReport& report);
// Throws std::runtime_error if the path cannot be written.
void emit_report(const SimReport& report, ReportFormat format, const std::filesystem::path& path);

} // namespace cpsched

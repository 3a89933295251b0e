#pragma once

// Global data scheduling: split a global batch across DP ranks by FLOPs,
// then cut each rank's share into micro-batches that pair long and short
// sequences, and schedule every micro-batch with DACP.

#include "cpsched/cost_model.hpp"
#include "cpsched/dacp.hpp"

#include <functional>
#include <span>
#include <vector>

namespace cpsched {

struct MicroBatch {
    std::vector<std::size_t> indices; // into the global batch
    DacpSchedule schedule;            // indexed like `indices`

    bool operator==(const MicroBatch&) const = default;
};

struct IterationPlan {
    std::vector<std::vector<MicroBatch>> per_dp; // [dp rank][micro-batch]

    bool operator==(const IterationPlan&) const = default;
};

struct IterationCost {
    std::vector<double> per_dp_time; // sum of micro-batch times per DP rank
    double iteration_time = 0.0;     // max over DP ranks
};

// Per-micro-batch placement policy (DACP heuristic, round-robin, ...).
using MicroBatchScheduler = std::function<DacpSchedule(
    std::span<const Tokens>, const ClusterConfig&, const CostModel&, bool rollback_enabled)>;

MicroBatchScheduler dacp_scheduler();

// Longest-processing-time greedy: heaviest weight first into the lightest bin;
// ties go to the lower index / lower bin.
std::vector<std::vector<std::size_t>> lpt_partition(std::span<const double> weights,
                                                    std::size_t bins);

std::vector<std::vector<std::size_t>> binpack_flops(std::span<const Tokens> lengths,
                                                    std::size_t bins, const CostModel& cost);

// Micro-batches of one DP rank, each with its schedule. Starts at
// ceil(subset tokens / (C*N)) micro-batches and takes the subset sorted
// ascending with stride `count`; any micro-batch above C*N tokens or
// unschedulable aborts that count and retries with one more.
std::vector<MicroBatch> schedule_gds(std::span<const Tokens> global_lengths,
                                     const ClusterConfig& cluster, const CostModel& cost,
                                     int dp_rank, bool rollback_enabled = true,
                                     const MicroBatchScheduler& scheduler = dacp_scheduler());

// Same as above but on an explicit subset of global indices.
std::vector<MicroBatch> partition_subset(std::span<const Tokens> global_lengths,
                                         std::vector<std::size_t> subset,
                                         const ClusterConfig& cluster, const CostModel& cost,
                                         bool rollback_enabled, const MicroBatchScheduler& scheduler);

IterationPlan plan_iteration(std::span<const Tokens> global_lengths, const ClusterConfig& cluster,
                             const CostModel& cost, bool rollback_enabled = true,
                             const MicroBatchScheduler& scheduler = dacp_scheduler());

std::vector<Tokens> micro_batch_lengths(std::span<const Tokens> global_lengths,
                                        const MicroBatch& mb);

// Time_ij for every micro-batch.
std::vector<std::vector<DacpCostBreakdown>> eval_micro_batches(const IterationPlan& plan,
                                                               std::span<const Tokens> global_lengths,
                                                               const ClusterConfig& cluster,
                                                               const CostModel& cost);

IterationCost combine_iteration(const std::vector<std::vector<double>>& micro_batch_times);

IterationCost eval_iteration(const IterationPlan& plan, std::span<const Tokens> global_lengths,
                             const ClusterConfig& cluster, const CostModel& cost);

// Structural checks of a plan against its global batch. Empty result means
// every index appears exactly once, every micro-batch fits C*N tokens, and
// every micro-batch schedule is feasible.
std::vector<std::string> validate_plan(const IterationPlan& plan,
                                       std::span<const Tokens> global_lengths,
                                       const ClusterConfig& cluster);

} // namespace cpsched

#pragma once

// Exhaustive reference optimum for small instances, used to bound the
// suboptimality of the greedy schedulers.

#include "cpsched/dacp.hpp"
#include "cpsched/gds.hpp"
#include "cpsched/workload.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace cpsched {

struct OracleLimits {
    std::size_t max_k = 10;
    std::uint64_t max_states = 10'000'000;
};

struct OracleResult {
    DacpSchedule best_schedule;
    double best_tdacp = 0.0;
    std::uint64_t feasible_count = 0;
    std::uint64_t explored = 0;
};

// Enumerates {-1, 0, ..., N-1}^K in lexicographic order, keeps feasible
// assignments and returns the minimum tdacp; ties resolve to the
// lexicographically smallest assignment. std::nullopt when nothing is
// feasible. Throws LimitExceededError when K or (N+1)^K exceed `limits`.
std::optional<OracleResult> optimal_dacp(std::span<const Tokens> lengths,
                                         const ClusterConfig& cluster, const CostModel& cost,
                                         const OracleLimits& limits = {});

struct OracleIterationResult {
    IterationPlan plan;
    double iteration_time = 0.0;
};

// Joint micro-batching + placement optimum for a single DP rank: minimum
// over all set partitions of the batch (each block within C*N tokens) of the
// summed per-block DACP optimum. K <= 8, dp_worldsize == 1.
std::optional<OracleIterationResult> optimal_iteration(std::span<const Tokens> lengths,
                                                       const ClusterConfig& cluster,
                                                       const CostModel& cost);

struct GapInstanceSpec {
    std::size_t min_k = 1;
    std::size_t max_k = 8;
    std::vector<std::int64_t> cp_choices{2, 4};
    DistributionSpec lengths;
};

struct GapStats {
    std::size_t trials = 0;
    std::size_t both_succeeded = 0;
    std::size_t heuristic_errors = 0;
    std::size_t oracle_infeasible = 0;
    std::size_t missed = 0; // heuristic error while the oracle found a schedule
    std::size_t dominance_violations = 0;
    double median_ratio = 0.0; // heuristic / oracle tdacp
    double max_ratio = 0.0;
    double feasibility_agreement = 1.0; // 1 - missed / trials
    std::vector<double> ratios;
};

// Random instances: K uniform in [min_k, max_k], N drawn from cp_choices,
// lengths from the distribution, bucket from `cluster`.
GapStats heuristic_gap(std::size_t trials, const GapInstanceSpec& spec,
                       const ClusterConfig& cluster, const CostModel& cost, std::uint64_t seed);

} // namespace cpsched

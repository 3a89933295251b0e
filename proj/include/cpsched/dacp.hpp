#pragma once

// Distribution-aware context parallelism: for one micro-batch, decide which
// sequences are sharded across all CP ranks and which are placed whole on a
// single rank, and evaluate the resulting overlapped micro-batch time.

#include "cpsched/cost_model.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace cpsched {

struct ClusterConfig {
    std::int64_t cp_degree = 1;    // N
    std::int64_t dp_worldsize = 1; // ws
    Tokens bucket_tokens = 1;      // C, per-rank token capacity
    std::int64_t per_dp_batch = 1; // sequences per DP rank per iteration

    void validate() const;
    Tokens micro_batch_budget() const { return bucket_tokens * cp_degree; }
    bool operator==(const ClusterConfig&) const = default;
};

inline constexpr int kDistributed = -1;

// One entry per sequence in input order: kDistributed, or the CP rank that
// holds the whole sequence.
struct DacpSchedule {
    std::vector<int> assignment;

    std::size_t distributed_count() const;
    bool operator==(const DacpSchedule&) const = default;
};

struct DacpCostBreakdown {
    std::vector<double> per_rank_time;
    double comm_time = 0.0;
    double dist_comp_time = 0.0;
    std::vector<double> local_comp_time;
    double tdacp = 0.0;
    bool feasible = true;
};

struct FeasibilityReport {
    bool feasible = true;
    std::vector<double> residuals; // C minus tokens held, per CP rank
};

// Throws ConfigError if sizes differ or an entry is outside {-1} U [0, N).
void validate_schedule(std::span<const Tokens> lengths, const DacpSchedule& schedule,
                       std::int64_t cp_degree);

// Tokens resident on each CP rank: whole local sequences plus S/N of every
// distributed one.
std::vector<double> rank_token_usage(std::span<const Tokens> lengths,
                                     const DacpSchedule& schedule, std::int64_t cp_degree);

FeasibilityReport check_feasible(std::span<const Tokens> lengths, const DacpSchedule& schedule,
                                 const ClusterConfig& cluster);

// Time_j = max(T_comm(V), T_comp(Local_j)) + T_comp(Dist); tdacp = max_j Time_j.
// A compute term with no contributing sequence costs nothing. Infeasible
// schedules are evaluated and flagged.
DacpCostBreakdown eval_tdacp(std::span<const Tokens> lengths, const DacpSchedule& schedule,
                             const ClusterConfig& cluster, const CostModel& cost);

// Greedy heuristic: ascending length order, prefer the least-loaded rank,
// then the emptiest bucket, then sharding; when even a shard does not fit,
// the shortest local sequence on the fullest bucket is converted to
// distributed and the current sequence is retried.
//
// Throws SchedulingError if a roll-back is required but impossible (or
// disabled). Any returned schedule passes check_feasible.
DacpSchedule schedule_dacp(std::span<const Tokens> lengths, const ClusterConfig& cluster,
                           const CostModel& cost, bool rollback_enabled = true);

// Mean over ranks of min(comm, local compute): the time hidden by overlap.
double overlap_gain(const DacpCostBreakdown& breakdown);

} // namespace cpsched

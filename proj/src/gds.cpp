#include "cpsched/gds.hpp"

#include "cpsched/error.hpp"

#include <algorithm>
#include <numeric>
#include <string>

namespace cpsched {

MicroBatchScheduler dacp_scheduler() {
    return [](std::span<const Tokens> lengths, const ClusterConfig& cluster,
              const CostModel& cost, bool rollback) {
        return schedule_dacp(lengths, cluster, cost, rollback);
    };
}

std::vector<std::vector<std::size_t>> lpt_partition(std::span<const double> weights,
                                                    std::size_t bins) {
    if (bins == 0)
        throw ConfigError("bin count must be >= 1");
    std::vector<std::size_t> order(weights.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return weights[a] > weights[b]; });

    std::vector<std::vector<std::size_t>> out(bins);
    std::vector<double> totals(bins, 0.0);
    for (std::size_t idx : order) {
        const auto lightest = static_cast<std::size_t>(
            std::min_element(totals.begin(), totals.end()) - totals.begin());
        out[lightest].push_back(idx);
        totals[lightest] += weights[idx];
    }
    return out;
}

std::vector<std::vector<std::size_t>> binpack_flops(std::span<const Tokens> lengths,
                                                    std::size_t bins, const CostModel& cost) {
    std::vector<double> w(lengths.size());
    std::transform(lengths.begin(), lengths.end(), w.begin(),
                   [&](Tokens s) { return flops(s, cost.model); });
    return lpt_partition(w, bins);
}

std::vector<Tokens> micro_batch_lengths(std::span<const Tokens> global_lengths,
                                        const MicroBatch& mb) {
    std::vector<Tokens> out;
    out.reserve(mb.indices.size());
    for (std::size_t idx : mb.indices)
        out.push_back(global_lengths[idx]);
    return out;
}

std::vector<MicroBatch> partition_subset(std::span<const Tokens> global_lengths,
                                         std::vector<std::size_t> subset,
                                         const ClusterConfig& cluster, const CostModel& cost,
                                         bool rollback_enabled,
                                         const MicroBatchScheduler& scheduler) {
    if (subset.empty())
        return {};
    std::stable_sort(subset.begin(), subset.end(), [&](std::size_t a, std::size_t b) {
        return global_lengths[a] < global_lengths[b];
    });

    const Tokens budget = cluster.micro_batch_budget();
    Tokens total = 0;
    for (std::size_t idx : subset)
        total += global_lengths[idx];
    const std::size_t first = std::max<std::size_t>(1, static_cast<std::size_t>((total + budget - 1) / budget));

    for (std::size_t count = first; count <= subset.size() + 1; ++count) {
        std::vector<MicroBatch> mbs;
        bool ok = true;
        for (std::size_t j = 0; j < count && ok; ++j) {
            MicroBatch mb;
            Tokens sum = 0;
            for (std::size_t p = j; p < subset.size(); p += count) {
                mb.indices.push_back(subset[p]);
                sum += global_lengths[subset[p]];
            }
            if (mb.indices.empty())
                continue;
            if (sum > budget) {
                ok = false;
                break;
            }
            try {
                mb.schedule = scheduler(micro_batch_lengths(global_lengths, mb), cluster, cost,
                                        rollback_enabled);
            } catch (const SchedulingError&) {
                ok = false;
                break;
            }
            mbs.push_back(std::move(mb));
        }
        if (ok)
            return mbs;
    }
    throw SchedulingError("no micro-batch count up to " + std::to_string(subset.size() + 1) +
                          " yields schedulable micro-batches");
}

std::vector<MicroBatch> schedule_gds(std::span<const Tokens> global_lengths,
                                     const ClusterConfig& cluster, const CostModel& cost,
                                     int dp_rank, bool rollback_enabled,
                                     const MicroBatchScheduler& scheduler) {
    cluster.validate();
    if (dp_rank < 0 || dp_rank >= cluster.dp_worldsize)
        throw ConfigError("dp_rank out of range");
    auto bins = binpack_flops(global_lengths, static_cast<std::size_t>(cluster.dp_worldsize), cost);
    try {
        return partition_subset(global_lengths, std::move(bins[dp_rank]), cluster, cost,
                                rollback_enabled, scheduler);
    } catch (const SchedulingError& e) {
        throw SchedulingError(e.what(), dp_rank);
    }
}

IterationPlan plan_iteration(std::span<const Tokens> global_lengths, const ClusterConfig& cluster,
                             const CostModel& cost, bool rollback_enabled,
                             const MicroBatchScheduler& scheduler) {
    cluster.validate();
    if (global_lengths.empty())
        throw ConfigError("global batch is empty");
    auto bins = binpack_flops(global_lengths, static_cast<std::size_t>(cluster.dp_worldsize), cost);
    IterationPlan plan;
    plan.per_dp.reserve(bins.size());
    for (std::size_t i = 0; i < bins.size(); ++i) {
        try {
            plan.per_dp.push_back(partition_subset(global_lengths, std::move(bins[i]), cluster,
                                                   cost, rollback_enabled, scheduler));
        } catch (const SchedulingError& e) {
            throw SchedulingError("DP rank " + std::to_string(i) + ": " + e.what(),
                                  static_cast<int>(i));
        }
    }
    return plan;
}

std::vector<std::vector<DacpCostBreakdown>> eval_micro_batches(const IterationPlan& plan,
                                                               std::span<const Tokens> global_lengths,
                                                               const ClusterConfig& cluster,
                                                               const CostModel& cost) {
    std::vector<std::vector<DacpCostBreakdown>> out(plan.per_dp.size());
    for (std::size_t i = 0; i < plan.per_dp.size(); ++i)
        for (const auto& mb : plan.per_dp[i])
            out[i].push_back(
                eval_tdacp(micro_batch_lengths(global_lengths, mb), mb.schedule, cluster, cost));
    return out;
}

IterationCost combine_iteration(const std::vector<std::vector<double>>& micro_batch_times) {
    IterationCost cost;
    for (const auto& times : micro_batch_times) {
        const double sum = std::accumulate(times.begin(), times.end(), 0.0);
        cost.per_dp_time.push_back(sum);
        cost.iteration_time = std::max(cost.iteration_time, sum);
    }
    return cost;
}

IterationCost eval_iteration(const IterationPlan& plan, std::span<const Tokens> global_lengths,
                             const ClusterConfig& cluster, const CostModel& cost) {
    const auto breakdowns = eval_micro_batches(plan, global_lengths, cluster, cost);
    std::vector<std::vector<double>> times(breakdowns.size());
    for (std::size_t i = 0; i < breakdowns.size(); ++i)
        for (const auto& b : breakdowns[i])
            times[i].push_back(b.tdacp);
    return combine_iteration(times);
}

std::vector<std::string> validate_plan(const IterationPlan& plan,
                                       std::span<const Tokens> global_lengths,
                                       const ClusterConfig& cluster) {
    std::vector<std::string> problems;
    std::vector<int> seen(global_lengths.size(), 0);
    for (std::size_t i = 0; i < plan.per_dp.size(); ++i) {
        for (std::size_t j = 0; j < plan.per_dp[i].size(); ++j) {
            const auto& mb = plan.per_dp[i][j];
            const std::string where = "dp " + std::to_string(i) + " mb " + std::to_string(j);
            Tokens sum = 0;
            bool indices_ok = true;
            for (std::size_t idx : mb.indices) {
                if (idx >= global_lengths.size()) {
                    problems.push_back(where + ": index out of range");
                    indices_ok = false;
                    continue;
                }
                ++seen[idx];
                sum += global_lengths[idx];
            }
            if (!indices_ok)
                continue;
            if (sum > cluster.micro_batch_budget())
                problems.push_back(where + ": " + std::to_string(sum) + " tokens exceed C*N");
            const auto lens = micro_batch_lengths(global_lengths, mb);
            try {
                if (!check_feasible(lens, mb.schedule, cluster).feasible)
                    problems.push_back(where + ": schedule exceeds a rank bucket");
            } catch (const ConfigError& e) {
                problems.push_back(where + ": " + e.what());
            }
        }
    }
    for (std::size_t k = 0; k < seen.size(); ++k)
        if (seen[k] != 1)
            problems.push_back("sequence " + std::to_string(k) + " assigned " +
                               std::to_string(seen[k]) + " times");
    return problems;
}

} // namespace cpsched

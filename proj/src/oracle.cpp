#include "cpsched/oracle.hpp"

#include "cpsched/error.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <random>
#include <string>

namespace cpsched {

namespace {

// Evaluates one complete assignment with the same arithmetic order as
// eval_tdacp. Returns +inf when the assignment overflows a bucket.
class AssignmentEvaluator {
public:
    AssignmentEvaluator(std::span<const Tokens> lengths, const ClusterConfig& cluster,
                        const CostModel& cost)
        : lengths_(lengths), cluster_(cluster), cost_(cost),
          seq_flops_(lengths.size()),
          local_tokens_(static_cast<std::size_t>(cluster.cp_degree)),
          local_flops_(static_cast<std::size_t>(cluster.cp_degree)),
          local_count_(static_cast<std::size_t>(cluster.cp_degree)) {
        for (std::size_t k = 0; k < lengths.size(); ++k)
            seq_flops_[k] = flops(lengths[k], cost.model);
    }

    double operator()(std::span<const int> assignment) {
        const std::int64_t n = cluster_.cp_degree;
        std::fill(local_tokens_.begin(), local_tokens_.end(), 0);
        std::fill(local_flops_.begin(), local_flops_.end(), 0.0);
        std::fill(local_count_.begin(), local_count_.end(), 0);
        Tokens dist_tokens = 0;
        double dist_flops = 0.0;
        std::size_t dist_count = 0;
        for (std::size_t k = 0; k < lengths_.size(); ++k) {
            if (assignment[k] == kDistributed) {
                dist_tokens += lengths_[k];
                dist_flops += seq_flops_[k];
                ++dist_count;
            } else {
                local_tokens_[assignment[k]] += lengths_[k];
                local_flops_[assignment[k]] += seq_flops_[k];
                ++local_count_[assignment[k]];
            }
        }
        for (Tokens local : local_tokens_)
            if (local * n + dist_tokens > cluster_.bucket_tokens * n)
                return std::numeric_limits<double>::infinity();

        dist_flops /= static_cast<double>(n);
        const double comm = t_comm(comm_volume(dist_tokens, cost_.model), cost_.comm_fit);
        const double dist = compute_time(dist_flops * cost_.shard_penalty, dist_count, cost_);
        double worst = 0.0;
        for (std::size_t j = 0; j < local_flops_.size(); ++j) {
            const double local = compute_time(local_flops_[j], local_count_[j], cost_);
            worst = std::max(worst, std::max(comm, local) + dist);
        }
        return worst;
    }

private:
    std::span<const Tokens> lengths_;
    const ClusterConfig& cluster_;
    const CostModel& cost_;
    std::vector<double> seq_flops_;
    std::vector<Tokens> local_tokens_;
    std::vector<double> local_flops_;
    std::vector<std::size_t> local_count_;
};

} // namespace

std::optional<OracleResult> optimal_dacp(std::span<const Tokens> lengths,
                                         const ClusterConfig& cluster, const CostModel& cost,
                                         const OracleLimits& limits) {
    cluster.validate();
    const std::size_t k = lengths.size();
    if (k > limits.max_k)
        throw LimitExceededError("oracle limited to " + std::to_string(limits.max_k) +
                                 " sequences, got " + std::to_string(k));
    const auto radix = static_cast<std::uint64_t>(cluster.cp_degree + 1);
    std::uint64_t states = 1;
    for (std::size_t i = 0; i < k; ++i) {
        if (states > limits.max_states / radix)
            throw LimitExceededError("oracle search space exceeds " +
                                     std::to_string(limits.max_states) + " states");
        states *= radix;
    }

    if (k == 0)
        return OracleResult{DacpSchedule{}, 0.0, 1, 1};

    AssignmentEvaluator evaluate(lengths, cluster, cost);
    std::vector<int> current(k, kDistributed);
    OracleResult result;
    double best = std::numeric_limits<double>::infinity();
    for (;;) {
        ++result.explored;
        const double t = evaluate(current);
        if (std::isfinite(t)) {
            ++result.feasible_count;
            if (t < best) {
                best = t;
                result.best_schedule.assignment = current;
            }
        }
        // Odometer increment, last position fastest.
        std::size_t pos = k;
        while (pos > 0) {
            --pos;
            if (current[pos] + 1 < cluster.cp_degree) {
                ++current[pos];
                break;
            }
            current[pos] = kDistributed;
            if (pos == 0) {
                pos = k; // wrapped
                break;
            }
        }
        if (pos == k)
            break;
    }

    if (result.feasible_count == 0)
        return std::nullopt;
    result.best_tdacp = best;
    return result;
}

std::optional<OracleIterationResult> optimal_iteration(std::span<const Tokens> lengths,
                                                       const ClusterConfig& cluster,
                                                       const CostModel& cost) {
    cluster.validate();
    const std::size_t k = lengths.size();
    if (k > 8)
        throw LimitExceededError("joint oracle limited to 8 sequences");
    if (cluster.dp_worldsize != 1)
        throw ConfigError("joint oracle supports a single DP rank only");
    if (k == 0)
        return OracleIterationResult{IterationPlan{{{}}}, 0.0};

    const std::uint32_t full = (1u << k) - 1;
    constexpr double kInf = std::numeric_limits<double>::infinity();

    // Per-block optimum.
    std::vector<double> block_time(full + 1, kInf);
    std::vector<DacpSchedule> block_schedule(full + 1);
    for (std::uint32_t mask = 1; mask <= full; ++mask) {
        std::vector<Tokens> sub;
        Tokens sum = 0;
        for (std::size_t i = 0; i < k; ++i)
            if (mask & (1u << i)) {
                sub.push_back(lengths[i]);
                sum += lengths[i];
            }
        if (sum > cluster.micro_batch_budget())
            continue;
        if (auto r = optimal_dacp(sub, cluster, cost)) {
            block_time[mask] = r->best_tdacp;
            block_schedule[mask] = std::move(r->best_schedule);
        }
    }

    // best[mask]: cheapest partition of `mask`; the block holding the lowest
    // set bit is enumerated explicitly.
    std::vector<double> best(full + 1, kInf);
    std::vector<std::uint32_t> choice(full + 1, 0);
    best[0] = 0.0;
    for (std::uint32_t mask = 1; mask <= full; ++mask) {
        const std::uint32_t low = mask & (~mask + 1);
        const std::uint32_t rest = mask ^ low;
        for (std::uint32_t sub = rest;; sub = (sub - 1) & rest) {
            const std::uint32_t block = sub | low;
            const double t = block_time[block] + best[mask ^ block];
            if (t < best[mask]) {
                best[mask] = t;
                choice[mask] = block;
            }
            if (sub == 0)
                break;
        }
    }
    if (!std::isfinite(best[full]))
        return std::nullopt;

    OracleIterationResult out;
    out.iteration_time = best[full];
    out.plan.per_dp.resize(1);
    for (std::uint32_t mask = full; mask;) {
        const std::uint32_t block = choice[mask];
        MicroBatch mb;
        for (std::size_t i = 0; i < k; ++i)
            if (block & (1u << i))
                mb.indices.push_back(i);
        mb.schedule = block_schedule[block];
        out.plan.per_dp[0].push_back(std::move(mb));
        mask ^= block;
    }
    return out;
}

GapStats heuristic_gap(std::size_t trials, const GapInstanceSpec& spec,
                       const ClusterConfig& cluster, const CostModel& cost, std::uint64_t seed) {
    GapStats stats;
    stats.trials = trials;
    if (trials == 0)
        return stats;
    if (spec.cp_choices.empty() || spec.min_k < 1 || spec.max_k < spec.min_k)
        throw ConfigError("invalid gap instance spec");

    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick_k(spec.min_k, spec.max_k);
    std::uniform_int_distribution<std::size_t> pick_n(0, spec.cp_choices.size() - 1);
    for (std::size_t t = 0; t < trials; ++t) {
        ClusterConfig c = cluster;
        c.cp_degree = spec.cp_choices[pick_n(rng)];
        const std::size_t k = pick_k(rng);
        const auto lengths = generate(spec.lengths, k, rng()).lengths;

        std::optional<double> heuristic;
        try {
            heuristic = eval_tdacp(lengths, schedule_dacp(lengths, c, cost), c, cost).tdacp;
        } catch (const SchedulingError&) {
            ++stats.heuristic_errors;
        }
        const auto oracle = optimal_dacp(lengths, c, cost);
        if (!oracle)
            ++stats.oracle_infeasible;
        if (!heuristic && oracle)
            ++stats.missed;
        if (heuristic && oracle) {
            ++stats.both_succeeded;
            if (*heuristic < oracle->best_tdacp)
                ++stats.dominance_violations;
            stats.ratios.push_back(*heuristic / oracle->best_tdacp);
        }
    }
    stats.feasibility_agreement =
        1.0 - static_cast<double>(stats.missed) / static_cast<double>(trials);
    if (!stats.ratios.empty()) {
        std::vector<double> sorted = stats.ratios;
        std::sort(sorted.begin(), sorted.end());
        const std::size_t m = sorted.size();
        stats.median_ratio = m % 2 ? sorted[m / 2] : 0.5 * (sorted[m / 2 - 1] + sorted[m / 2]);
        stats.max_ratio = sorted.back();
    }
    return stats;
}

} // namespace cpsched

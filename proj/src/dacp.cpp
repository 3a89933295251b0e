#include "cpsched/dacp.hpp"

#include "bucket_ledger.hpp"
#include "cpsched/error.hpp"

#include <algorithm>
#include <numeric>
#include <string>

namespace cpsched {

void ClusterConfig::validate() const {
    if (cp_degree < 1 || dp_worldsize < 1 || bucket_tokens < 1 || per_dp_batch < 1)
        throw ConfigError("cluster parameters must all be >= 1");
}

std::size_t DacpSchedule::distributed_count() const {
    return static_cast<std::size_t>(std::count(assignment.begin(), assignment.end(), kDistributed));
}

void validate_schedule(std::span<const Tokens> lengths, const DacpSchedule& schedule,
                       std::int64_t cp_degree) {
    if (schedule.assignment.size() != lengths.size())
        throw ConfigError("schedule has " + std::to_string(schedule.assignment.size()) +
                          " entries for " + std::to_string(lengths.size()) + " sequences");
    for (int a : schedule.assignment)
        if (a != kDistributed && (a < 0 || a >= cp_degree))
            throw ConfigError("schedule entry " + std::to_string(a) + " out of range");
}

std::vector<double> rank_token_usage(std::span<const Tokens> lengths,
                                     const DacpSchedule& schedule, std::int64_t cp_degree) {
    validate_schedule(lengths, schedule, cp_degree);
    std::vector<Tokens> local(static_cast<std::size_t>(cp_degree), 0);
    Tokens distributed = 0;
    for (std::size_t k = 0; k < lengths.size(); ++k) {
        if (schedule.assignment[k] == kDistributed)
            distributed += lengths[k];
        else
            local[schedule.assignment[k]] += lengths[k];
    }
    std::vector<double> usage(local.size());
    for (std::size_t j = 0; j < local.size(); ++j)
        usage[j] = static_cast<double>(local[j]) +
                   static_cast<double>(distributed) / static_cast<double>(cp_degree);
    return usage;
}

FeasibilityReport check_feasible(std::span<const Tokens> lengths, const DacpSchedule& schedule,
                                 const ClusterConfig& cluster) {
    validate_schedule(lengths, schedule, cluster.cp_degree);
    const std::int64_t n = cluster.cp_degree;
    std::vector<Tokens> local(static_cast<std::size_t>(n), 0);
    Tokens distributed = 0;
    for (std::size_t k = 0; k < lengths.size(); ++k) {
        if (schedule.assignment[k] == kDistributed)
            distributed += lengths[k];
        else
            local[schedule.assignment[k]] += lengths[k];
    }

    FeasibilityReport report;
    report.residuals.resize(local.size());
    for (std::size_t j = 0; j < local.size(); ++j) {
        // Compare N * usage against N * C in integers.
        const Tokens scaled_usage = local[j] * n + distributed;
        report.feasible = report.feasible && scaled_usage <= cluster.bucket_tokens * n;
        report.residuals[j] =
            static_cast<double>(cluster.bucket_tokens * n - scaled_usage) / static_cast<double>(n);
    }
    return report;
}

DacpCostBreakdown eval_tdacp(std::span<const Tokens> lengths, const DacpSchedule& schedule,
                             const ClusterConfig& cluster, const CostModel& cost) {
    validate_schedule(lengths, schedule, cluster.cp_degree);
    const auto n = static_cast<std::size_t>(cluster.cp_degree);

    std::vector<double> local_flops(n, 0.0);
    std::vector<std::size_t> local_count(n, 0);
    double dist_flops = 0.0;
    Tokens dist_tokens = 0;
    std::size_t dist_count = 0;
    for (std::size_t k = 0; k < lengths.size(); ++k) {
        const double f = flops(lengths[k], cost.model);
        if (schedule.assignment[k] == kDistributed) {
            dist_flops += f;
            dist_tokens += lengths[k];
            ++dist_count;
        } else {
            local_flops[schedule.assignment[k]] += f;
            ++local_count[schedule.assignment[k]];
        }
    }
    dist_flops /= static_cast<double>(n);

    DacpCostBreakdown out;
    out.comm_time = t_comm(comm_volume(dist_tokens, cost.model), cost.comm_fit);
    out.dist_comp_time = compute_time(dist_flops * cost.shard_penalty, dist_count, cost);
    out.local_comp_time.resize(n);
    out.per_rank_time.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
        out.local_comp_time[j] = compute_time(local_flops[j], local_count[j], cost);
        out.per_rank_time[j] =
            std::max(out.comm_time, out.local_comp_time[j]) + out.dist_comp_time;
    }
    out.tdacp = n ? *std::max_element(out.per_rank_time.begin(), out.per_rank_time.end()) : 0.0;
    out.feasible = check_feasible(lengths, schedule, cluster).feasible;
    return out;
}

DacpSchedule schedule_dacp(std::span<const Tokens> lengths, const ClusterConfig& cluster,
                           const CostModel& cost, bool rollback_enabled) {
    cluster.validate();
    const std::size_t k = lengths.size();

    std::vector<std::size_t> order(k);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return lengths[a] < lengths[b]; });

    std::vector<double> seq_flops(k);
    for (std::size_t i = 0; i < k; ++i)
        seq_flops[i] = flops(lengths[i], cost.model);

    detail::BucketLedger ledger(cluster.cp_degree, cluster.bucket_tokens, k);
    for (std::size_t pos = 0; pos < k;) {
        const std::size_t seq = order[pos];
        const Tokens len = lengths[seq];

        if (int t = ledger.argmin_load(); ledger.fits_whole(t, len)) {
            ledger.place_local(seq, t, len, seq_flops[seq]);
        } else if (t = ledger.argmax_remaining(); ledger.fits_whole(t, len)) {
            ledger.place_local(seq, t, len, seq_flops[seq]);
        } else if (t = ledger.argmin_remaining(); ledger.fits_shard(t, len)) {
            ledger.place_distributed(seq, len, seq_flops[seq]);
        } else {
            if (!rollback_enabled)
                throw SchedulingError("sequence of " + std::to_string(len) +
                                      " tokens does not fit and roll-back is disabled");
            if (!ledger.roll_back(t, order, lengths, seq_flops))
                throw SchedulingError("roll-back failed on CP rank " + std::to_string(t) +
                                      " while placing a sequence of " + std::to_string(len) +
                                      " tokens");
            continue; // retry the same sequence
        }
        ++pos;
    }
    return std::move(ledger).take_schedule();
}

double overlap_gain(const DacpCostBreakdown& breakdown) {
    if (breakdown.local_comp_time.empty())
        return 0.0;
    double hidden = 0.0;
    for (double local : breakdown.local_comp_time)
        hidden += (breakdown.comm_time + local) - std::max(breakdown.comm_time, local);
    return hidden / static_cast<double>(breakdown.local_comp_time.size());
}

} // namespace cpsched

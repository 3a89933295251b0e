#include "cpsched/baselines.hpp"

#include "bucket_ledger.hpp"
#include "cpsched/error.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <string>

namespace cpsched {

namespace {

std::vector<MicroBatch> fifo_pack(std::span<const Tokens> global_lengths,
                                  std::span<const std::size_t> ordered, const ClusterConfig& cluster,
                                  const CostModel& cost, const MicroBatchScheduler& scheduler,
                                  bool rollback_enabled) {
    const Tokens budget = cluster.micro_batch_budget();
    std::vector<MicroBatch> mbs;
    Tokens current = 0;
    for (std::size_t idx : ordered) {
        const Tokens len = global_lengths[idx];
        if (len > budget)
            throw SchedulingError("sequence of " + std::to_string(len) +
                                  " tokens exceeds the micro-batch budget",
                                  -1, -1, SchedulingError::Stage::Packing);
        if (mbs.empty() || current + len > budget) {
            mbs.emplace_back();
            current = 0;
        }
        mbs.back().indices.push_back(idx);
        current += len;
    }
    for (std::size_t j = 0; j < mbs.size(); ++j) {
        try {
            mbs[j].schedule = scheduler(micro_batch_lengths(global_lengths, mbs[j]), cluster, cost,
                                        rollback_enabled);
        } catch (const SchedulingError& e) {
            throw SchedulingError(e.what(), -1, static_cast<int>(j), e.stage());
        }
    }
    return mbs;
}

IterationPlan pack_ranks(std::span<const Tokens> global_lengths,
                         const std::vector<std::vector<std::size_t>>& per_rank,
                         const ClusterConfig& cluster, const CostModel& cost,
                         const MicroBatchScheduler& scheduler, bool rollback_enabled) {
    IterationPlan plan;
    for (std::size_t i = 0; i < per_rank.size(); ++i) {
        try {
            plan.per_dp.push_back(
                fifo_pack(global_lengths, per_rank[i], cluster, cost, scheduler, rollback_enabled));
        } catch (const SchedulingError& e) {
            throw SchedulingError("DP rank " + std::to_string(i) + ": " + e.what(),
                                  static_cast<int>(i), e.micro_batch(), e.stage());
        }
    }
    return plan;
}

} // namespace

DacpSchedule schedule_round_robin(std::span<const Tokens> lengths, const ClusterConfig& cluster,
                                  bool rollback_enabled) {
    cluster.validate();
    const std::size_t k = lengths.size();
    std::vector<std::size_t> order(k);
    std::iota(order.begin(), order.end(), std::size_t{0});
    // Loads are not consulted; zeros keep the ledger's bookkeeping inert.
    const std::vector<double> no_flops(k, 0.0);

    detail::BucketLedger ledger(cluster.cp_degree, cluster.bucket_tokens, k);
    for (std::size_t seq = 0; seq < k;) {
        const Tokens len = lengths[seq];
        if (int t = ledger.argmax_remaining(); ledger.fits_whole(t, len)) {
            ledger.place_local(seq, t, len, 0.0);
        } else if (t = ledger.argmin_remaining(); ledger.fits_shard(t, len)) {
            ledger.place_distributed(seq, len, 0.0);
        } else {
            if (!rollback_enabled)
                throw SchedulingError("sequence of " + std::to_string(len) +
                                      " tokens does not fit and roll-back is disabled");
            if (!ledger.roll_back(t, order, lengths, no_flops))
                throw SchedulingError("roll-back failed on CP rank " + std::to_string(t));
            continue;
        }
        ++seq;
    }
    return std::move(ledger).take_schedule();
}

MicroBatchScheduler round_robin_scheduler() {
    return [](std::span<const Tokens> lengths, const ClusterConfig& cluster, const CostModel&,
              bool rollback) { return schedule_round_robin(lengths, cluster, rollback); };
}

MicroBatchScheduler full_shard_scheduler() {
    return [](std::span<const Tokens> lengths, const ClusterConfig& cluster, const CostModel&,
              bool) {
        DacpSchedule s{std::vector<int>(lengths.size(), kDistributed)};
        if (!check_feasible(lengths, s, cluster).feasible)
            throw SchedulingError("micro-batch does not fit even when fully sharded");
        return s;
    };
}

IterationPlan plan_fifo(std::span<const Tokens> global_lengths, const ClusterConfig& cluster,
                        const CostModel& cost, const MicroBatchScheduler& scheduler,
                        bool rollback_enabled) {
    cluster.validate();
    std::vector<std::vector<std::size_t>> per_rank(static_cast<std::size_t>(cluster.dp_worldsize));
    for (std::size_t k = 0; k < global_lengths.size(); ++k)
        per_rank[k % per_rank.size()].push_back(k);
    return pack_ranks(global_lengths, per_rank, cluster, cost, scheduler, rollback_enabled);
}

IterationPlan plan_full_shard(std::span<const Tokens> global_lengths, const ClusterConfig& cluster,
                              const CostModel& cost) {
    if (global_lengths.empty())
        return {};
    return plan_fifo(global_lengths, cluster, cost, full_shard_scheduler());
}

IterationPlan plan_sorted_batching(std::span<const Tokens> global_lengths,
                                   const ClusterConfig& cluster, const CostModel& cost,
                                   std::uint64_t seed) {
    cluster.validate();
    if (global_lengths.empty())
        return {};
    std::vector<std::size_t> sorted(global_lengths.size());
    std::iota(sorted.begin(), sorted.end(), std::size_t{0});
    std::stable_sort(sorted.begin(), sorted.end(), [&](std::size_t a, std::size_t b) {
        return global_lengths[a] < global_lengths[b];
    });

    const auto ws = static_cast<std::size_t>(cluster.dp_worldsize);
    std::vector<std::vector<std::size_t>> windows(ws);
    const std::size_t base = sorted.size() / ws;
    const std::size_t extra = sorted.size() % ws;
    std::size_t pos = 0;
    for (std::size_t w = 0; w < ws; ++w) {
        const std::size_t len = base + (w < extra ? 1 : 0);
        windows[w].assign(sorted.begin() + static_cast<std::ptrdiff_t>(pos),
                          sorted.begin() + static_cast<std::ptrdiff_t>(pos + len));
        pos += len;
    }

    std::vector<std::size_t> rank_of_window(ws);
    std::iota(rank_of_window.begin(), rank_of_window.end(), std::size_t{0});
    std::mt19937_64 rng(seed);
    std::shuffle(rank_of_window.begin(), rank_of_window.end(), rng);
    std::vector<std::vector<std::size_t>> per_rank(ws);
    for (std::size_t w = 0; w < ws; ++w)
        per_rank[rank_of_window[w]] = std::move(windows[w]);

    return pack_ranks(global_lengths, per_rank, cluster, cost, full_shard_scheduler(), true);
}

} // namespace cpsched

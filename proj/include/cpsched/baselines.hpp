#pragma once

// Reference schedulers: round-robin placement inside a micro-batch, and
// iteration planners that shard every sequence (FIFO packing or LongAlign
// style sorted batching).

#include "cpsched/dacp.hpp"
#include "cpsched/gds.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace cpsched {

// Input order, no load tracking: whole sequence into the emptiest bucket,
// else shard if S/N fits the fullest bucket, else roll back the first local
// sequence on the fullest bucket (same accounting as schedule_dacp).
DacpSchedule schedule_round_robin(std::span<const Tokens> lengths, const ClusterConfig& cluster,
                                  bool rollback_enabled = true);

MicroBatchScheduler round_robin_scheduler();

// Every sequence sharded across the CP group.
MicroBatchScheduler full_shard_scheduler();

// Sequence k goes to DP rank k % ws; each rank packs its sequences FIFO into
// micro-batches of at most C*N tokens, then `scheduler` places each one.
IterationPlan plan_fifo(std::span<const Tokens> global_lengths, const ClusterConfig& cluster,
                        const CostModel& cost, const MicroBatchScheduler& scheduler,
                        bool rollback_enabled = true);

// DeepSpeed-style baseline: FIFO packing, every sequence sharded.
IterationPlan plan_full_shard(std::span<const Tokens> global_lengths, const ClusterConfig& cluster,
                              const CostModel& cost);

// Global batch sorted ascending and cut into ws consecutive windows; the
// window-to-rank mapping is a seeded shuffle. FIFO packing, all sharded.
IterationPlan plan_sorted_batching(std::span<const Tokens> global_lengths,
                                   const ClusterConfig& cluster, const CostModel& cost,
                                   std::uint64_t seed);

} // namespace cpsched

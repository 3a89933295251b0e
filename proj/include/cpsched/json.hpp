#pragma once

// nlohmann::json bindings for the public value types.

#include "cpsched/cost_model.hpp"
#include "cpsched/dacp.hpp"
#include "cpsched/gds.hpp"
#include "cpsched/simulator.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>

namespace cpsched {

void to_json(nlohmann::json& j, const ModelConfig& m);
void from_json(const nlohmann::json& j, ModelConfig& m);

// Fits serialize as {slope, intercept}; the unit follows from the role.
void to_json(nlohmann::json& j, const LinearFit& f);

// {"model", "comp_fit", "comm_fit", "mem_fit"} plus optional
// "bytes_per_element" and "shard_penalty".
void to_json(nlohmann::json& j, const CostModel& c);
void from_json(const nlohmann::json& j, CostModel& c);

void to_json(nlohmann::json& j, const ClusterConfig& c);
void from_json(const nlohmann::json& j, ClusterConfig& c);

// {"assignment", "tdacp", "per_rank_time", "feasible"}
nlohmann::json schedule_to_json(const DacpSchedule& schedule, const DacpCostBreakdown& breakdown);

// {"iteration_time", "per_dp_time", "per_dp": [[{"indices", "lengths", "assignment",
//   "tdacp", "per_rank_time", "comm_time", "dist_comp_time", "local_comp_time",
//   "feasible"}]]}
nlohmann::json plan_to_json(const IterationPlan& plan, std::span<const Tokens> global_lengths,
                            const ClusterConfig& cluster, const CostModel& cost);

void to_json(nlohmann::json& j, const SchedulerReport& r);
void from_json(const nlohmann::json& j, SchedulerReport& r);
void to_json(nlohmann::json& j, const SimReport& r);
void from_json(const nlohmann::json& j, SimReport& r);

CostModel load_cost_model(const std::filesystem::path& path);
void save_cost_model(const CostModel& cost, const std::filesystem::path& path);

} // namespace cpsched

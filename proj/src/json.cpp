#include "cpsched/json.hpp"

#include "cpsched/error.hpp"

#include <fstream>

namespace cpsched {

using nlohmann::json;

namespace {

LinearFit fit_from_json(const json& j, FitUnit unit) {
    return LinearFit{j.at("slope").get<double>(), j.at("intercept").get<double>(), unit};
}

} // namespace

void to_json(json& j, const ModelConfig& m) {
    j = json{{"hidden", m.hidden}, {"kv_hidden", m.kv_hidden}, {"pack_batch", m.pack_batch}};
}

void from_json(const json& j, ModelConfig& m) {
    m.hidden = j.at("hidden").get<std::int64_t>();
    m.kv_hidden = j.at("kv_hidden").get<std::int64_t>();
    m.pack_batch = j.value("pack_batch", std::int64_t{1});
}

void to_json(json& j, const LinearFit& f) {
    j = json{{"slope", f.slope}, {"intercept", f.intercept}};
}

void to_json(json& j, const CostModel& c) {
    j = json{{"model", c.model},
             {"comp_fit", c.comp_fit},
             {"comm_fit", c.comm_fit},
             {"mem_fit", c.mem_fit},
             {"bytes_per_element", c.bytes_per_element},
             {"shard_penalty", c.shard_penalty},
             {"intercept_per_sequence", c.intercept_per_sequence}};
}

void from_json(const json& j, CostModel& c) {
    try {
        c.model = j.at("model").get<ModelConfig>();
        c.comp_fit = fit_from_json(j.at("comp_fit"), FitUnit::TimePerFlop);
        c.comm_fit = fit_from_json(j.at("comm_fit"), FitUnit::TimePerElement);
        c.mem_fit = fit_from_json(j.at("mem_fit"), FitUnit::MemoryPerToken);
        c.bytes_per_element = j.value("bytes_per_element", 2.0);
        c.shard_penalty = j.value("shard_penalty", 1.0);
        c.intercept_per_sequence = j.value("intercept_per_sequence", false);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed cost model: ") + e.what());
    }
    c.validate();
}

void to_json(json& j, const ClusterConfig& c) {
    j = json{{"cp_degree", c.cp_degree},
             {"dp_worldsize", c.dp_worldsize},
             {"bucket_tokens", c.bucket_tokens},
             {"per_dp_batch", c.per_dp_batch}};
}

void from_json(const json& j, ClusterConfig& c) {
    c.cp_degree = j.value("cp_degree", c.cp_degree);
    c.dp_worldsize = j.value("dp_worldsize", c.dp_worldsize);
    c.bucket_tokens = j.value("bucket_tokens", c.bucket_tokens);
    c.per_dp_batch = j.value("per_dp_batch", c.per_dp_batch);
    c.validate();
}

json schedule_to_json(const DacpSchedule& schedule, const DacpCostBreakdown& breakdown) {
    return json{{"assignment", schedule.assignment},
                {"tdacp", breakdown.tdacp},
                {"per_rank_time", breakdown.per_rank_time},
                {"feasible", breakdown.feasible}};
}

json plan_to_json(const IterationPlan& plan, std::span<const Tokens> global_lengths,
                  const ClusterConfig& cluster, const CostModel& cost) {
    const auto breakdowns = eval_micro_batches(plan, global_lengths, cluster, cost);
    json per_dp = json::array();
    std::vector<std::vector<double>> times(plan.per_dp.size());
    for (std::size_t i = 0; i < plan.per_dp.size(); ++i) {
        json mbs = json::array();
        for (std::size_t j = 0; j < plan.per_dp[i].size(); ++j) {
            const auto& mb = plan.per_dp[i][j];
            const auto& b = breakdowns[i][j];
            json entry = schedule_to_json(mb.schedule, b);
            entry["indices"] = mb.indices;
            entry["lengths"] = micro_batch_lengths(global_lengths, mb);
            entry["comm_time"] = b.comm_time;
            entry["dist_comp_time"] = b.dist_comp_time;
            entry["local_comp_time"] = b.local_comp_time;
            mbs.push_back(std::move(entry));
            times[i].push_back(b.tdacp);
        }
        per_dp.push_back(std::move(mbs));
    }
    const auto total = combine_iteration(times);
    return json{{"iteration_time", total.iteration_time},
                {"per_dp_time", total.per_dp_time},
                {"per_dp", std::move(per_dp)}};
}

void to_json(json& j, const SchedulerReport& r) {
    json times = json::array();
    json iters = json::array();
    json peaks = json::array();
    for (const auto& rec : r.iterations) {
        times.push_back(rec.time);
        iters.push_back(rec.iteration);
        peaks.push_back(json::array({rec.min_peak_tokens, rec.max_peak_tokens}));
    }
    j = json{{"iterations", std::move(iters)},
             {"per_iteration_time", std::move(times)},
             {"peak_tokens_per_rank_min_max", std::move(peaks)},
             {"errored_iterations", r.errored_iterations},
             {"mean_time", r.mean_time},
             {"p95_time", r.p95_time},
             {"total_time", r.total_time},
             {"dacp_error_count", r.dacp_error_count}};
}

void from_json(const json& j, SchedulerReport& r) {
    const auto& iters = j.at("iterations");
    const auto& times = j.at("per_iteration_time");
    const auto& peaks = j.at("peak_tokens_per_rank_min_max");
    if (iters.size() != times.size() || times.size() != peaks.size())
        throw ConfigError("report arrays differ in length");
    r.iterations.clear();
    for (std::size_t k = 0; k < times.size(); ++k)
        r.iterations.push_back(IterationRecord{iters[k].get<std::uint64_t>(), times[k].get<double>(),
                                               peaks[k].at(0).get<double>(),
                                               peaks[k].at(1).get<double>()});
    r.errored_iterations = j.at("errored_iterations").get<std::vector<std::uint64_t>>();
    r.mean_time = j.at("mean_time").get<double>();
    r.p95_time = j.at("p95_time").get<double>();
    r.total_time = j.at("total_time").get<double>();
    r.dacp_error_count = j.at("dacp_error_count").get<std::size_t>();
}

void to_json(json& j, const SimReport& r) {
    j = json{{"per_scheduler", json::object()}, {"speedups", json::object()}};
    for (const auto& [name, rep] : r.per_scheduler)
        j["per_scheduler"][name] = rep;
    for (const auto& [name, s] : r.speedups)
        j["speedups"][name] = s;
}

void from_json(const json& j, SimReport& r) {
    r.per_scheduler = j.at("per_scheduler").get<std::map<std::string, SchedulerReport>>();
    r.speedups = j.at("speedups").get<std::map<std::string, double>>();
}

CostModel load_cost_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open cost model " + path.string());
    try {
        return json::parse(in).get<CostModel>();
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("invalid cost model JSON: ") + e.what());
    }
}

void save_cost_model(const CostModel& cost, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot write " + path.string());
    out << json(cost).dump(2) << '\n';
}

} // namespace cpsched

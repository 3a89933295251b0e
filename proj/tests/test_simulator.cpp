#include "cpsched/error.hpp"
#include "cpsched/simulator.hpp"

#include "doctest.h"
#include "helpers.hpp"

#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

using namespace cpsched;
using namespace cpsched::testing;

namespace {

SimConfig small_config(std::vector<std::string> schedulers) {
    SimConfig cfg;
    cfg.cluster = ClusterConfig{4, 2, 8000, 8};
    cfg.cost = preset_cost_model("realistic");
    cfg.dist = preset_distribution("wikipedia");
    cfg.trace_size = 2000;
    cfg.iterations = 5;
    cfg.seed = 13;
    cfg.schedulers = std::move(schedulers);
    return cfg;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

TEST_CASE("simulate: single iteration is reproducible") {
    auto cfg = small_config({"skrull"});
    cfg.iterations = 1;
    cfg.cluster.dp_worldsize = 1;
    const auto a = simulate(cfg);
    REQUIRE(a.per_scheduler.at("skrull").iterations.size() == 1);
    CHECK(report_to_json(a) == report_to_json(simulate(cfg)));
}

TEST_CASE("simulate: report structure") {
    const auto cfg = small_config({"skrull", "skrull-dacp-only", "rr", "full-shard", "sorted"});
    const auto r = simulate(cfg);
    CHECK(r.speedups.at("full-shard") == 1.0);
    for (const auto& [name, rep] : r.per_scheduler) {
        CHECK(rep.iterations.size() + rep.errored_iterations.size() == cfg.iterations);
        for (const auto& rec : rep.iterations) {
            CHECK(rec.max_peak_tokens <= static_cast<double>(cfg.cluster.bucket_tokens));
            CHECK(rec.min_peak_tokens <= rec.max_peak_tokens);
        }
        if (!rep.iterations.empty()) {
            CHECK(rep.p95_time >= rep.mean_time * 0.0);
            CHECK(rep.total_time == doctest::Approx(rep.mean_time * rep.iterations.size()));
        }
    }
}

TEST_CASE("plans conserve the global batch tokens") {
    const auto cfg = small_config({});
    const auto trace = generate(cfg.dist, cfg.trace_size, cfg.seed);
    for (std::uint64_t it = 0; it < 5; ++it) {
        const auto batch = sample_global_batch(trace, 16, cfg.seed, it);
        const Tokens expect = std::accumulate(batch.begin(), batch.end(), Tokens{0});
        for (auto name : scheduler_names()) {
            try {
                const auto plan = plan_for_scheduler(name, batch, cfg.cluster, cfg.cost, true, it);
                Tokens got = 0;
                for (const auto& mbs : plan.per_dp)
                    for (const auto& mb : mbs)
                        for (auto i : mb.indices)
                            got += batch[i];
                CHECK(got == expect);
            } catch (const SchedulingError&) {
            }
        }
    }
    CHECK_THROWS_AS(plan_for_scheduler("magic", std::vector<Tokens>{1}, cfg.cluster, cfg.cost, true, 0),
                    ConfigError);
}

TEST_CASE("SimConfig validation") {
    auto cfg = small_config({"skrull"});
    cfg.iterations = 0;
    CHECK_THROWS_AS(simulate(cfg), ConfigError);
    cfg = small_config({});
    CHECK_THROWS_AS(simulate(cfg), ConfigError);
    cfg = small_config({"bogus"});
    CHECK_THROWS_AS(simulate(cfg), ConfigError);
}

TEST_CASE("finalize") {
    SchedulerReport rep;
    for (int i = 1; i <= 20; ++i)
        rep.iterations.push_back(IterationRecord{static_cast<std::uint64_t>(i), double(i), 0, 0});
    finalize(rep);
    CHECK(rep.total_time == 210.0);
    CHECK(rep.mean_time == 10.5);
    CHECK(rep.p95_time == 19.0);

    SchedulerReport empty;
    finalize(empty);
    CHECK(empty.mean_time == 0.0);
}

TEST_CASE("reports") {
    const auto dir = std::filesystem::temp_directory_path();
    emit_report(SimReport{}, ReportFormat::Json, dir / "cpsched_empty.json");
    CHECK(slurp(dir / "cpsched_empty.json") == "{\"per_scheduler\":{},\"speedups\":{}}\n");

    auto cfg = small_config({"skrull", "full-shard"});
    cfg.iterations = 1;
    const auto r = simulate(cfg);
    const auto csv = report_to_csv(r);
    std::istringstream lines(csv);
    std::string line;
    std::getline(lines, line);
    CHECK(line == "iteration,scheduler,time,min_peak_tokens,max_peak_tokens");
    int rows = 0;
    while (std::getline(lines, line))
        ++rows;
    CHECK(rows == 2);

    CHECK(report_from_json(report_to_json(r)) == r);
    CHECK_THROWS_AS(report_from_json("{"), ConfigError);
    CHECK_THROWS_AS(emit_report(r, ReportFormat::Csv, "/nonexistent/dir/x.csv"), std::runtime_error);
}

TEST_CASE("ablate_rollback") {
    const std::vector<std::vector<Tokens>> crafted{{50, 60, 90}};
    const auto rows = ablate_rollback(crafted, cluster(2, 100), toy_identity());
    REQUIRE(rows.size() == 4);
    for (const auto& row : rows) {
        if (row.rollback) {
            CHECK(row.errors == 0);
            CHECK(row.speedup.has_value());
        } else {
            CHECK(row.errors == 1);
            CHECK_FALSE(row.speedup.has_value());
        }
    }
    const std::vector<std::vector<Tokens>> ample{{5, 6, 7}, {10, 20}};
    for (const auto& row : ablate_rollback(ample, cluster(2, 1000), toy_identity()))
        CHECK(row.errors == 0);
}

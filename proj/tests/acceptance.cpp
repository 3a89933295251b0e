// One line per acceptance criterion; exit status is the number of failures.

#include "cpsched/baselines.hpp"
#include "cpsched/cost_model.hpp"
#include "cpsched/dacp.hpp"
#include "cpsched/error.hpp"
#include "cpsched/gds.hpp"
#include "cpsched/oracle.hpp"
#include "cpsched/simulator.hpp"
#include "cpsched/workload.hpp"

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>

using namespace cpsched;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

int failures = 0;

void run(int id, const char* name, double limit_s, const std::function<Outcome()>& body) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (secs > limit_s) {
        o.pass = false;
        o.detail += " [over time limit " + std::to_string(limit_s) + " s]";
    }
    if (!o.pass)
        ++failures;
    std::printf("%s %d %s: %s (%.2f s)\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str(), secs);
    std::fflush(stdout);
}

std::string fmt(const char* f, double a, double b = 0, double c = 0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c);
    return buf;
}

// Shared run for the end-to-end trend and memory criteria.
SimConfig trend_config() {
    SimConfig cfg;
    cfg.cluster = ClusterConfig{8, 4, 26'000, 64};
    cfg.cost = preset_cost_model("realistic");
    cfg.dist = preset_distribution("wikipedia");
    cfg.iterations = 100;
    cfg.seed = 2025;
    cfg.schedulers = {"skrull", "skrull-dacp-only", "full-shard"};
    return cfg;
}

} // namespace

int main() {
    run(1, "evaluator exactness", 1.0, [] {
        const CostModel cost;
        const ClusterConfig c{2, 1, 100, 1};
        const std::vector<Tokens> lens{4, 2, 2};
        const double mixed = eval_tdacp(lens, DacpSchedule{{kDistributed, 0, 1}}, c, cost).tdacp;
        const std::vector<Tokens> one{4};
        const double local = eval_tdacp(one, DacpSchedule{{0}}, c, cost).tdacp;
        const double dist = eval_tdacp(one, DacpSchedule{{kDistributed}}, c, cost).tdacp;
        return Outcome{mixed == 144.0 && local == 160.0 && dist == 84.0,
                       fmt("mixed=%g local=%g distributed=%g", mixed, local, dist)};
    });

    run(2, "feasibility fuzz", 30.0, [] {
        std::mt19937_64 rng(1);
        const auto dist = preset_distribution("lmsys");
        const std::array<std::int64_t, 3> degrees{2, 4, 8};
        const CostModel cost = preset_cost_model("realistic");
        std::size_t violations = 0, returned = 0, errors = 0;
        for (int t = 0; t < 1000; ++t) {
            const std::int64_t n = degrees[rng() % 3];
            const std::int64_t ws = 1 + static_cast<std::int64_t>(rng() % 4);
            const Tokens cap = 1000 + static_cast<Tokens>(rng() % 16'000);
            const ClusterConfig c{n, ws, cap, 1};
            const std::size_t k = 1 + rng() % 64;
            auto lens = generate(dist, k, rng()).lengths;
            for (auto& s : lens)
                s = std::min<Tokens>(s, cap * n);

            auto check_one = [&](const std::function<DacpSchedule()>& f) {
                try {
                    const auto s = f();
                    ++returned;
                    validate_schedule(lens, s, c.cp_degree);
                    if (!check_feasible(lens, s, c).feasible)
                        ++violations;
                } catch (const SchedulingError&) {
                    ++errors;
                } catch (const ConfigError&) {
                    ++violations; // malformed schedule
                }
            };
            check_one([&] { return schedule_dacp(lens, c, cost); });
            check_one([&] { return schedule_round_robin(lens, c); });
            try {
                const auto plan = plan_iteration(lens, c, cost);
                ++returned;
                violations += validate_plan(plan, lens, c).empty() ? 0 : 1;
            } catch (const SchedulingError&) {
                ++errors;
            }
        }
        return Outcome{violations == 0 && returned > 0,
                       fmt("violations=%g returned=%g errors=%g", double(violations), double(returned),
                           double(errors))};
    });

    run(3, "oracle dominance and gap", 300.0, [] {
        GapInstanceSpec spec;
        spec.min_k = 1;
        spec.max_k = 8;
        spec.cp_choices = {2, 4};
        spec.lengths = preset_distribution("wikipedia");
        const ClusterConfig c{2, 1, 1500, 1};
        const auto g = heuristic_gap(200, spec, c, preset_cost_model("realistic"), 3);
        const bool ok = g.dominance_violations == 0 && g.feasibility_agreement >= 0.95 &&
                        g.max_ratio <= 2.0;
        return Outcome{ok, fmt("dominance_violations=%g agreement=%.3f max_ratio=%.4f",
                               double(g.dominance_violations), g.feasibility_agreement, g.max_ratio) +
                               fmt(" median_ratio=%.4f oracle_infeasible=%g heuristic_errors=%g",
                                   g.median_ratio, double(g.oracle_infeasible),
                                   double(g.heuristic_errors))};
    });

    run(4, "roll-back ablation", 1.0, [] {
        const std::vector<std::vector<Tokens>> crafted{{50, 60, 90}};
        const auto rows = ablate_rollback(crafted, ClusterConfig{2, 1, 100, 1}, CostModel{});
        bool ok = rows.size() == 4;
        std::string detail;
        for (const auto& r : rows) {
            ok = ok && (r.rollback ? r.errors == 0 : r.errors == 1);
            detail += r.scheduler + (r.rollback ? "+rb:" : "-rb:") +
                      (r.errors ? "error " : "ok ");
        }
        return Outcome{ok, detail};
    });

    run(5, "comm fit held-out row", 1.0, [] {
        std::vector<ProfilePoint> train;
        for (const auto& p : reference_all_to_all_profile())
            if (p.size != 512.0)
                train.push_back(p);
        const double pred = fit_linear(train, 16.0)(512.0);
        const double rel = std::abs(pred - 3411.2) / 3411.2;
        return Outcome{rel <= 0.20, fmt("predicted=%.1f us rel_err=%.3f", pred, rel)};
    });

    run(6, "distribution calibration", 5.0, [] {
        const std::array<Tokens, 3> th{1000, 4000, 8000};
        const auto w = quantiles(generate(preset_distribution("wikipedia"), 100'000, 7), th);
        const auto q = quantiles(generate(preset_distribution("chatqa2"), 100'000, 7), th);
        const bool ok = std::abs(w.fractions[0] - 0.8788) <= 0.03 &&
                        std::abs(w.fractions[1] - 0.9934) <= 0.03 &&
                        std::abs(w.fractions[2] - 0.9992) <= 0.03 &&
                        std::abs(q.fractions[2] - 0.4043) <= 0.05;
        return Outcome{ok, fmt("wikipedia <1K=%.4f <4K=%.4f <8K=%.4f", w.fractions[0], w.fractions[1],
                               w.fractions[2]) +
                               fmt(" chatqa2 <8K=%.4f", q.fractions[2])};
    });

    const SimConfig cfg = trend_config();
    SimReport report;
    run(7, "step-by-step trend", 120.0, [&] {
        report = simulate(cfg);
        const double full = report.per_scheduler.at("full-shard").mean_time;
        const double dacp = report.per_scheduler.at("skrull-dacp-only").mean_time;
        const double gds = report.per_scheduler.at("skrull").mean_time;
        bool complete = true;
        for (const auto& [name, rep] : report.per_scheduler)
            complete = complete && rep.errored_iterations.empty();
        const double speedup = report.speedups.at("skrull");
        return Outcome{complete && full >= dacp && dacp >= gds && speedup >= 1.5,
                       fmt("mean full-shard=%.0f dacp-only=%.0f gds+dacp=%.0f", full, dacp, gds) +
                           fmt(" speedup=%.3f", speedup)};
    });

    run(8, "memory imbalance pattern", 1.0, [&] {
        const auto& sk = report.per_scheduler.at("skrull").iterations;
        const auto& fs = report.per_scheduler.at("full-shard").iterations;
        if (sk.size() != cfg.iterations || fs.size() != cfg.iterations)
            return Outcome{false, "missing iterations"};
        std::size_t wider = 0;
        bool within = true;
        for (std::size_t i = 0; i < sk.size(); ++i) {
            wider += (sk[i].max_peak_tokens - sk[i].min_peak_tokens >=
                      fs[i].max_peak_tokens - fs[i].min_peak_tokens)
                         ? 1
                         : 0;
        }
        for (const auto& [name, rep] : report.per_scheduler)
            for (const auto& rec : rep.iterations)
                within = within && rec.max_peak_tokens <= double(cfg.cluster.bucket_tokens);
        const double frac = double(wider) / double(sk.size());
        return Outcome{frac >= 0.90 && within,
                       fmt("imbalance>=full-shard in %.2f of iterations, peaks within C: %g", frac,
                           within ? 1.0 : 0.0)};
    });

    run(9, "determinism", 120.0, [&] {
        SimConfig small = cfg;
        small.iterations = 20;
        small.schedulers = {"skrull", "rr", "full-shard", "sorted", "skrull-dacp-only"};
        const auto a = report_to_json(simulate(small));
        const auto b = report_to_json(simulate(small));
        return Outcome{a == b, fmt("json bytes=%g identical=%g", double(a.size()), a == b ? 1.0 : 0.0)};
    });

    return failures;
}

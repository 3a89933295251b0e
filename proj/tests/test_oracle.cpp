#include "cpsched/error.hpp"
#include "cpsched/oracle.hpp"

#include "doctest.h"
#include "helpers.hpp"

#include <algorithm>
#include <fstream>
#include <random>

using namespace cpsched;
using namespace cpsched::testing;

TEST_CASE("optimal_dacp: traced instances") {
    const std::vector<Tokens> one{10};
    const auto id = optimal_dacp(one, cluster(2, 100), toy_identity());
    REQUIRE(id);
    CHECK(id->best_schedule.assignment == std::vector<int>{kDistributed});
    CHECK(id->best_tdacp == 330.0);
    CHECK(id->explored == 3);
    CHECK(id->feasible_count == 3);

    const auto fixed = optimal_dacp(one, cluster(2, 100), toy_with_fixed_comm());
    REQUIRE(fixed);
    CHECK(fixed->best_schedule.assignment == std::vector<int>{0});
    CHECK(fixed->best_tdacp == 640.0);

    const std::vector<Tokens> three{60, 60, 60};
    const auto opt = optimal_dacp(three, cluster(2, 100), toy_identity());
    REQUIRE(opt);
    const auto heur = schedule_dacp(three, cluster(2, 100), toy_identity());
    CHECK(opt->best_tdacp <= eval_tdacp(three, heur, cluster(2, 100), toy_identity()).tdacp);
    CHECK(check_feasible(three, opt->best_schedule, cluster(2, 100)).feasible);

    const auto empty = optimal_dacp({}, cluster(2, 100), toy_identity());
    REQUIRE(empty);
    CHECK(empty->best_schedule.assignment.empty());
    CHECK(empty->best_tdacp == 0.0);

    CHECK_FALSE(optimal_dacp(std::vector<Tokens>{30}, cluster(2, 6), toy_identity()));
}

TEST_CASE("optimal_dacp: limits") {
    const std::vector<Tokens> many(11, 1);
    CHECK_THROWS_AS(optimal_dacp(many, cluster(2, 100), toy_identity()), LimitExceededError);
    const std::vector<Tokens> eight(8, 1);
    CHECK_THROWS_AS(optimal_dacp(eight, cluster(8, 100), toy_identity(), OracleLimits{10, 1000}),
                    LimitExceededError);
    CHECK_NOTHROW(optimal_dacp(eight, cluster(2, 100), toy_identity(), OracleLimits{10, 6561}));
}

TEST_CASE("optimal_dacp: invariances") {
    std::mt19937_64 rng(21);
    for (int t = 0; t < 60; ++t) {
        auto lens = random_lengths(rng, 1 + rng() % 6, 300);
        const auto c = cluster(2 + static_cast<std::int64_t>(rng() % 2), 100 + static_cast<Tokens>(rng() % 200));
        const auto a = optimal_dacp(lens, c, toy_with_fixed_comm(100.0));
        std::shuffle(lens.begin(), lens.end(), rng);
        const auto b = optimal_dacp(lens, c, toy_with_fixed_comm(100.0));
        REQUIRE(a.has_value() == b.has_value());
        if (a)
            CHECK(a->best_tdacp == doctest::Approx(b->best_tdacp).epsilon(1e-12));
    }
    // N = 1: the optimum costs the summed compute. Sharding can tie when its
    // collective hides under local compute, so the all-local schedule is
    // checked to attain the optimum rather than to be the one returned.
    const std::vector<Tokens> lens{5, 7, 3};
    double total = 0.0;
    for (auto s : lens)
        total += flops(s, ModelConfig{});
    const auto r = optimal_dacp(lens, cluster(1, 100), toy_with_fixed_comm(10.0));
    REQUIRE(r);
    CHECK(r->best_tdacp == total);
    CHECK(eval_tdacp(lens, DacpSchedule{{0, 0, 0}}, cluster(1, 100), toy_with_fixed_comm(10.0)).tdacp ==
          total);
    // With an expensive collective the all-local schedule is the unique optimum.
    const auto heavy = optimal_dacp(lens, cluster(1, 100), toy_with_fixed_comm(1000.0));
    REQUIRE(heavy);
    CHECK(heavy->best_schedule.assignment == std::vector<int>{0, 0, 0});
    CHECK(heavy->best_tdacp == total);
}

TEST_CASE("optimal_dacp dominates the heuristic") {
    std::mt19937_64 rng(77);
    int compared = 0;
    for (int t = 0; t < 300; ++t) {
        const std::int64_t n = (rng() % 2) ? 2 : 4;
        const auto c = cluster(n, 40 + static_cast<Tokens>(rng() % 300));
        const auto lens = random_lengths(rng, 1 + rng() % 7, 600);
        const auto cost = (t % 2) ? toy_identity() : toy_with_fixed_comm(200.0);
        const auto opt = optimal_dacp(lens, c, cost);
        try {
            const auto s = schedule_dacp(lens, c, cost);
            REQUIRE(opt);
            CHECK(opt->best_tdacp <= eval_tdacp(lens, s, c, cost).tdacp + 1e-9);
            ++compared;
        } catch (const SchedulingError&) {
        }
    }
    CHECK(compared > 100);
}

TEST_CASE("optimal_iteration") {
    const auto cost = toy_identity();
    const std::vector<Tokens> lens{8, 2, 6, 4};
    const auto c = cluster(2, 6);
    const auto joint = optimal_iteration(lens, c, cost);
    REQUIRE(joint);
    CHECK(validate_plan(joint->plan, lens, c).empty());
    const auto gds = plan_iteration(lens, c, cost);
    CHECK(joint->iteration_time <= eval_iteration(gds, lens, c, cost).iteration_time);
    CHECK(joint->iteration_time == doctest::Approx(eval_iteration(joint->plan, lens, c, cost).iteration_time));

    CHECK_FALSE(optimal_iteration(std::vector<Tokens>{30}, c, cost));
    CHECK_THROWS_AS(optimal_iteration(std::vector<Tokens>(9, 1), c, cost), LimitExceededError);
    CHECK_THROWS_AS(optimal_iteration(lens, cluster(2, 6, 2), cost), ConfigError);

    std::mt19937_64 rng(4);
    for (int t = 0; t < 60; ++t) {
        const auto cc = cluster(2, 60 + static_cast<Tokens>(rng() % 100));
        const auto ls = random_lengths(rng, 1 + rng() % 6, 200);
        try {
            const auto plan = plan_iteration(ls, cc, toy_with_fixed_comm(300.0));
            const auto best = optimal_iteration(ls, cc, toy_with_fixed_comm(300.0));
            REQUIRE(best);
            CHECK(best->iteration_time <=
                  eval_iteration(plan, ls, cc, toy_with_fixed_comm(300.0)).iteration_time + 1e-9);
        } catch (const SchedulingError&) {
        }
    }
}

TEST_CASE("heuristic_gap") {
    GapInstanceSpec spec;
    spec.lengths = preset_distribution("wikipedia");
    const auto none = heuristic_gap(0, spec, cluster(2, 1000), toy_identity(), 1);
    CHECK(none.trials == 0);
    CHECK(none.feasibility_agreement == 1.0);

    // Equal-length pairs on two ranks: both land one per rank.
    spec.cp_choices = {2};
    spec.lengths = DistributionSpec{};
    spec.lengths.kind = DistributionSpec::Kind::File;
    spec.lengths.path = std::filesystem::temp_directory_path() / "cpsched_pair.txt";
    std::ofstream(spec.lengths.path) << "50\n50\n";
    const auto sym = heuristic_gap(20, spec, cluster(2, 1000), toy_identity(), 2);
    CHECK(sym.both_succeeded == 20);
    CHECK(sym.max_ratio == doctest::Approx(1.0));
    CHECK(sym.median_ratio == doctest::Approx(1.0));
    CHECK(sym.dominance_violations == 0);
}

TEST_CASE("optimal_dacp agrees with the evaluator under the realistic model") {
    const auto cost = preset_cost_model("realistic");
    std::mt19937_64 rng(31);
    for (int t = 0; t < 40; ++t) {
        const auto c = cluster(2 + 2 * static_cast<std::int64_t>(rng() % 2), 3000);
        const auto lens = generate(preset_distribution("wikipedia"), 1 + rng() % 6, rng()).lengths;
        const auto r = optimal_dacp(lens, c, cost);
        if (!r)
            continue;
        CHECK(r->best_tdacp == eval_tdacp(lens, r->best_schedule, c, cost).tdacp);
        CHECK(check_feasible(lens, r->best_schedule, c).feasible);
        try {
            const auto s = schedule_dacp(lens, c, cost);
            CHECK(r->best_tdacp <= eval_tdacp(lens, s, c, cost).tdacp);
        } catch (const SchedulingError&) {
        }
    }
}

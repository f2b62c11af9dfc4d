#include <doctest.h>

#include <cmath>

#include "flockplan/planner/oracle.hpp"
#include "flockplan/planner/report.hpp"

using namespace flockplan;
using namespace flockplan::planner;
using dataset::kPrevOutputOffset;

namespace {

// Zero weights make the network output its bias on every day, so the
// predicted outputs are whatever the bias denormalises to.
surrogate::WeekModel bias_model(int week, const std::array<double, 3>& bias) {
    surrogate::WeekModel m;
    m.week = week;
    m.week_len = week == 6 ? 5 : 7;
    m.net = surrogate::LstmNetwork(10, 3, 3, 3);
    m.net.b_out.assign(bias.begin(), bias.end());
    const auto n = static_cast<std::size_t>(m.genome_length());
    m.bounds.mini.assign(n, 0.0);
    m.bounds.maxi.assign(n, 100.0);
    m.bounds.maxi[kPrevOutputOffset] = 4000.0;
    m.bounds.maxi[kPrevOutputOffset + 1] = 10.0;
    m.bounds.maxi[kPrevOutputOffset + 2] = 20.0;
    return m;
}

const std::vector<FlockSample>& corpus() {
    static const auto c = dataset::generate_corpus(dataset::GeneratorConfig{}, 6);
    return c;
}

const surrogate::ModelSet& tiny_models() {
    static const auto m = [] {
        surrogate::Hyperparams hp;
        hp.epochs = 30;
        hp.hidden_size = 3;
        hp.restarts = 1;
        return surrogate::train_models(corpus(), corpus(), hp);
    }();
    return m;
}

} // namespace

TEST_CASE("week-6 fitness is the predicted day-40 FCR") {
    // MdW 2800 g and dFCpB 4.36856 kg/bird give 1000 * 4.36856 / 2800 = 1.5602
    auto m = bias_model(6, {0.7, 0.436856, 0.5});
    std::vector<double> genome(38, 50.0);
    genome[kPrevOutputOffset] = 2000.0;
    genome[kPrevOutputOffset + 1] = 3.0;
    genome[kPrevOutputOffset + 2] = 14.0;
    CHECK(fitness_week6(genome, m) == doctest::Approx(1.5602).epsilon(1e-12));
}

TEST_CASE("boundary fitness is the mean normalised gap") {
    auto m = bias_model(3, {0.7, 0.436856, 0.5});
    std::vector<double> genome(52, 50.0);
    genome[kPrevOutputOffset] = 1000.0;
    genome[kPrevOutputOffset + 1] = 1.0;
    genome[kPrevOutputOffset + 2] = 14.0;
    const std::vector<double> above{0.71, 0.426856, 0.51}, below{0.69, 0.446856, 0.49};
    CHECK(fitness_boundary(genome, m, above) == doctest::Approx(0.01).epsilon(1e-9));
    CHECK(fitness_boundary(genome, m, below) == doctest::Approx(fitness_boundary(genome, m, above)).epsilon(1e-9));
    const std::vector<double> exact{0.7, 0.436856, 0.5};
    CHECK(fitness_boundary(genome, m, exact) == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
}

TEST_CASE("week genome repair orders every triplet") {
    std::vector<double> g(38, 0.0);
    for (int d = 1; d <= 5; ++d) {
        const int o = dataset::day_offset(d);
        g[o] = d;
        g[o + 1] = 33.0, g[o + 2] = 29.0, g[o + 3] = 31.0;
        g[o + 4] = 80.0, g[o + 5] = 60.0, g[o + 6] = 70.0;
    }
    repair_week_genome(g, 5);
    for (const auto& p : dataset::week_plans(g, 5)) {
        CHECK(p.t_min == 29.0);
        CHECK(p.t_avg == 31.0);
        CHECK(p.t_max == 33.0);
        CHECK(p.h_min == 60.0);
        CHECK(p.h_max == 80.0);
    }
}

TEST_CASE("search space from the corpus") {
    auto space = derive_search_space(corpus());
    for (int w = 0; w < kWeeks; ++w) {
        CHECK_NOTHROW(space.boxes[w].validate());
        for (const auto& s : corpus()) CHECK(space.feasible(w + 1, dataset::week_vector(s, w + 1)));
        // day genes are pinned
        const auto first = dataset::week_span(w + 1).first_day;
        CHECK(space.boxes[w].frozen(0));
        CHECK(space.boxes[w].lower[0] == first);
    }
    CHECK_FALSE(space.start_fcr[0].active());
    CHECK(space.start_fcr[3].active());

    auto form = space.inequality(4);
    CHECK(form.a.rows() == 2 * space.boxes[3].size() + 2);

    pin_initial_conditions(space, corpus().front().initial);
    CHECK(space.boxes[0].frozen(kPrevOutputOffset));
    CHECK(space.boxes[0].lower[kPrevOutputOffset] == corpus().front().initial.mdw0);
}

TEST_CASE("a plan round-trips through genomes and JSON") {
    const auto& s = corpus().front();
    auto plan = FinalActionPlan::from_plans(s.plans, s.initial);
    CHECK(plan.expand() == s.plans);
    CHECK(plan.genomes[5].size() == 38);
    CHECK(plan.genomes[0].size() == 52);
    auto j = plan_to_json(plan, 1.5, 1.6);
    auto back = plan_from_json(j);
    CHECK(back.expand() == s.plans);
    CHECK(back.i_c == s.initial);
    CHECK_THROWS_AS(FinalActionPlan::from_plans({s.plans.begin(), s.plans.begin() + 39}, s.initial), ShapeError);
}

TEST_CASE("exhaustive oracle") {
    SUBCASE("a single point") {
        std::vector<GridAxis> axes{{2.0, 2.0, 0.5}};
        auto r = exhaustive_oracle(axes, [](std::span<const double> x) { return x[0] * 3.0; });
        CHECK(r.evaluations == 1);
        CHECK(r.point == std::vector<double>{2.0});
        CHECK(r.value == 6.0);
    }
    SUBCASE("a convex function over eleven points") {
        std::vector<GridAxis> axes{{0.0, 1.0, 0.1}};
        CHECK(axes[0].points() == 11);
        auto r = exhaustive_oracle(axes, [](std::span<const double> x) { return (x[0] - 0.3) * (x[0] - 0.3); });
        CHECK(r.evaluations == 11);
        CHECK(r.point[0] == doctest::Approx(0.3).epsilon(1e-12));
    }
    SUBCASE("ties keep the first point") {
        std::vector<GridAxis> axes{{0.0, 2.0, 1.0}, {5.0, 6.0, 1.0}};
        auto r = exhaustive_oracle(axes, [](std::span<const double>) { return 1.0; });
        CHECK(r.evaluations == 6);
        CHECK(r.point == std::vector<double>{0.0, 5.0});
    }
    SUBCASE("the full plan grid is out of reach") {
        auto space = derive_search_space(corpus());
        auto grid = full_plan_grid(space.boxes);
        CHECK(grid.size() == 240);
        CHECK(grid_cardinality(grid) > 1e100);
        CHECK_THROWS_AS(exhaustive_oracle(grid, [](std::span<const double>) { return 0.0; }), BudgetExceeded);
    }
}

TEST_CASE("GA agrees with the oracle on a generator instance") {
    auto inst = generator_instance(dataset::GeneratorConfig{}, dataset::default_houses()[0], 2, false);
    auto truth = exhaustive_oracle(inst.axes, inst.objective);
    evolve::GaConfig cfg;
    cfg.pop_size = 40;
    cfg.max_generations = 80;
    cfg.seed = 2;
    auto ga = evolve::run_ga(inst.objective, inst.box(), cfg);
    CHECK(ga.best_fitness <= truth.value * 1.01);
}

TEST_CASE("planning with small models") {
    const auto& models = tiny_models();
    const auto& ic = corpus().front().initial;

    SUBCASE("a progressive rollout covers the flock") {
        auto r = rollout_progressive(models, comfort_plans(dataset::GeneratorConfig{}), ic);
        REQUIRE(r.days.size() == 40);
        CHECK(r.fcr == doctest::Approx(1000.0 * r.days.back()[1] / r.days.back()[0]).epsilon(1e-12));
    }
    SUBCASE("a degenerate search space leaves one plan to find") {
        SearchSpace space = derive_search_space({corpus().front()});
        evolve::GaConfig cfg;
        cfg.pop_size = 6;
        cfg.max_generations = 3;
        auto res = optimize_flock(models, space, cfg);
        CHECK(res.plan.expand() == corpus().front().plans);
        CHECK(res.report.runs.size() == 6);
        CHECK(res.report.boundary.size() == 5);
        CHECK(std::isfinite(res.report.fcr_res));
    }
    SUBCASE("a benchmark of one plan has no spread") {
        auto space = derive_search_space(corpus());
        auto b = benchmark_random_specialists(models, 1, space.boxes, 4, ic);
        REQUIRE(b.fcr.size() == 1);
        CHECK(b.best == b.fcr[0]);
        CHECK(b.mean == b.fcr[0]);
        CHECK(b.sd == 0.0);
        CHECK(b.best_plan.size() == 40);
        auto again = benchmark_random_specialists(models, 1, space.boxes, 4, ic);
        CHECK(again.fcr == b.fcr);
    }
}

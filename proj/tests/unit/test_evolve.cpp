#include <doctest.h>

#include <cmath>
#include <numeric>
#include <sstream>

#include "flockplan/evolve/ga.hpp"

using namespace flockplan;
using namespace flockplan::evolve;

TEST_CASE("initial population") {
    Restrictions r({0.0, 5.0, -1.0}, {1.0, 5.0, 1.0});
    auto pop = init_population(r, 500, 42);
    REQUIRE(pop.size() == 500);
    double mean0 = 0.0;
    for (std::size_t i = 0; i < pop.size(); ++i) {
        CHECK(check_restrictions(pop.genes.row(i), r));
        CHECK(pop.genes(i, 1) == 5.0);
        mean0 += pop.genes(i, 0) / 500.0;
    }
    CHECK(mean0 >= 0.4);
    CHECK(mean0 <= 0.6);
    CHECK(init_population(r, 500, 42).genes == pop.genes);
    CHECK_FALSE(init_population(r, 500, 43).genes == pop.genes);
}

TEST_CASE("restrictions as inequalities") {
    // two genes: temperature in [28, 34] and humidity in [60, 80]
    Restrictions r({28.0, 60.0}, {34.0, 80.0});
    auto form = r.to_inequality();
    CHECK(form.a.rows() == 4);
    CHECK(form.b == std::vector<double>{34.0, -28.0, 80.0, -60.0});
    CHECK(Restrictions::from_inequality(form).lower == r.lower);
    CHECK(Restrictions::from_inequality(form).upper == r.upper);

    const std::vector<double> ok{32.0, 72.0}, hot{36.0, 72.0}, dry{30.0, 55.0};
    CHECK_FALSE(first_violation(ok, r).has_value());
    auto v = first_violation(hot, r);
    REQUIRE(v.has_value());
    CHECK(v->gene == 0);
    CHECK(v->row == 0);
    CHECK(v->upper);
    CHECK(v->value == 36.0);
    CHECK(v->bound == 34.0);
    auto d = first_violation(dry, r);
    REQUIRE(d.has_value());
    CHECK(d->row == 3);
    CHECK_FALSE(d->upper);

    CHECK_THROWS_AS(Restrictions({1.0}, {0.0}).validate(), ConfigDomain);
    CHECK_THROWS_AS(Restrictions({1.0}, {2.0, 3.0}).validate(), ConfigDomain);
}

TEST_CASE("rank weights") {
    const std::vector<double> f{3.0, 1.0, 2.0};
    CHECK(rank_weights(f) == std::vector<double>{1.0, 3.0, 2.0});
    const std::vector<double> tie{1.0, 1.0, 5.0};
    CHECK(rank_weights(tie) == std::vector<double>{2.5, 2.5, 1.0});
}

TEST_CASE("stochastic uniform selection") {
    std::mt19937_64 rng(5);

    SUBCASE("equal fitness selects uniformly") {
        const std::vector<double> f(10, 1.0);
        std::vector<int> count(10, 0);
        const int draws = 50000;
        for (int k = 0; k < draws; ++k) {
            auto [a, b] = select_parents_su(f, rng);
            ++count[a];
            ++count[b];
        }
        const double expected = 2.0 * draws / 10.0;
        double chi2 = 0.0;
        for (int c : count) chi2 += (c - expected) * (c - expected) / expected;
        // 9 degrees of freedom, 0.999 quantile
        CHECK(chi2 < 27.88);
    }
    SUBCASE("two ranks select in proportion 2:1") {
        const std::vector<double> f{1.0, 2.0};
        int first = 0;
        const int draws = 60000;
        for (int k = 0; k < draws; ++k) {
            auto [a, b] = select_parents_su(f, rng);
            first += (a == 0) + (b == 0);
        }
        CHECK(static_cast<double>(first) / (2.0 * draws) == doctest::Approx(2.0 / 3.0).epsilon(0.01));
    }
    SUBCASE("the second parent is the fitter one") {
        const std::vector<double> f{4.0, 1.0, 3.0, 2.0};
        for (int k = 0; k < 1000; ++k) {
            auto [a, b] = select_parents_su(f, rng);
            CHECK(f[b] <= f[a]);
        }
    }
}

TEST_CASE("heuristic crossover") {
    const std::vector<double> p1{10.0}, p2{20.0};
    CHECK(crossover_heuristic(p1, p2, 0.6)[0] == doctest::Approx(14.0).epsilon(1e-15));
    CHECK(crossover_heuristic(p1, p2, 0.0)[0] == 20.0);
    CHECK(crossover_heuristic(p1, p2, 1.0)[0] == 10.0);
    // beyond the parents the child is clamped
    Restrictions r({12.0}, {30.0});
    CHECK(crossover_heuristic(p1, p2, 1.5, r)[0] == 12.0);
    const std::vector<double> a{1.0, 2.0}, b{1.0};
    CHECK_THROWS_AS(crossover_heuristic(a, b, 0.5), DimensionMismatch);
}

TEST_CASE("adaptive mutation") {
    Restrictions r(std::vector<double>(8, 0.0), std::vector<double>(8, 1.0));
    std::mt19937_64 rng(9);
    GaConfig cfg;

    SUBCASE("zero probability changes nothing") {
        cfg.mutation_probability = 0.0;
        std::vector<double> g{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8};
        auto before = g;
        for (int k = 0; k < 100; ++k) mutate_adaptive(g, r, cfg, rng);
        CHECK(g == before);
    }
    SUBCASE("a gene on the bound stays inside") {
        cfg.mutation_probability = 1.0;
        cfg.mutation_scale = 0.5;
        std::vector<double> g(8, 1.0);
        mutate_adaptive(g, r, cfg, rng);
        for (double x : g) CHECK(x <= 1.0);
    }
    SUBCASE("no mutation leaves the box") {
        cfg.mutation_probability = 0.5;
        cfg.mutation_scale = 0.3;
        std::uniform_real_distribution<double> u(0.0, 1.0);
        int violations = 0;
        for (int k = 0; k < 100000; ++k) {
            std::vector<double> g(8);
            for (auto& x : g) x = u(rng);
            mutate_adaptive(g, r, cfg, rng);
            violations += !check_restrictions(g, r);
        }
        CHECK(violations == 0);
    }
}

TEST_CASE("genetic algorithm") {
    GaConfig cfg;
    cfg.pop_size = 60;
    cfg.seed = 3;

    SUBCASE("sphere") {
        Restrictions r(std::vector<double>(4, -5.0), std::vector<double>(4, 5.0));
        cfg.max_generations = 200;
        cfg.mutation_probability = 0.2;
        cfg.mutation_scale = 0.2;
        auto res = run_ga(
            [](std::span<const double> x) { return std::inner_product(x.begin(), x.end(), x.begin(), 0.0); }, r, cfg);
        CHECK(res.best_fitness < 1e-2);
        CHECK(res.history.front().generation == 0);
        for (std::size_t k = 1; k < res.history.size(); ++k) CHECK(res.history[k].best <= res.history[k - 1].best);
    }
    SUBCASE("constant fitness stalls after exactly the stall window") {
        Restrictions r({0.0, 0.0}, {1.0, 1.0});
        cfg.stall_generations = 20;
        auto res = run_ga([](std::span<const double>) { return 1.0; }, r, cfg);
        CHECK(res.reason == StopReason::Stall);
        CHECK(res.history.size() == 21);
        CHECK(res.history.back().generation == 20);
        CHECK(res.evaluations == 60 + 20 * 59);
    }
    SUBCASE("an optimum in the corner of the box") {
        // Heuristic crossover only interpolates between parents, so the bound
        // is reached through mutation plus the clamp.
        Restrictions r({1.0, 2.0, 3.0}, {4.0, 5.0, 6.0});
        cfg.max_generations = 150;
        cfg.mutation_probability = 0.2;
        cfg.mutation_scale = 0.2;
        auto res = run_ga([](std::span<const double> x) { return x[0] + x[1] + x[2]; }, r, cfg);
        CHECK(res.best_fitness == doctest::Approx(6.0).epsilon(1e-3));
        for (double g : res.best) CHECK(std::isfinite(g));
    }
    SUBCASE("same seed, same run; threads do not change it") {
        Restrictions r(std::vector<double>(3, -1.0), std::vector<double>(3, 1.0));
        cfg.max_generations = 30;
        auto f = [](std::span<const double> x) { return std::abs(x[0] - 0.3) + x[1] * x[1] + std::cos(x[2]); };
        auto a = run_ga(f, r, cfg);
        cfg.threads = 3;
        auto b = run_ga(f, r, cfg);
        CHECK(a.best == b.best);
        CHECK(a.best_fitness == b.best_fitness);
    }
    SUBCASE("target and non-finite fitness") {
        Restrictions r({0.0}, {1.0});
        cfg.target_fitness = 0.5;
        auto res = run_ga([](std::span<const double> x) { return x[0]; }, r, cfg);
        CHECK(res.reason == StopReason::TargetReached);
        CHECK_THROWS_AS(run_ga([](std::span<const double>) { return std::nan(""); }, r, GaConfig{}), FitnessNonFinite);
    }
    SUBCASE("history csv") {
        Restrictions r({0.0}, {1.0});
        cfg.max_generations = 3;
        auto res = run_ga([](std::span<const double> x) { return x[0]; }, r, cfg);
        std::ostringstream out;
        write_history_csv(res.history, out);
        CHECK(out.str().rfind("generation,best,mean,evaluations\n0,", 0) == 0);
    }
}

TEST_CASE("GA configuration is checked") {
    GaConfig c;
    CHECK_NOTHROW(c.validate());
    c.pop_size = 1;
    CHECK_THROWS_AS(c.validate(), ConfigDomain);
    c = GaConfig{};
    c.elite = c.pop_size;
    CHECK_THROWS_AS(c.validate(), ConfigDomain);
    c = GaConfig{};
    c.mutation_probability = 1.5;
    CHECK_THROWS_AS(c.validate(), ConfigDomain);
}

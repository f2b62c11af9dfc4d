#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "flockplan/dataset/generator.hpp"
#include "flockplan/surrogate/week_model.hpp"

using namespace flockplan;
using namespace flockplan::surrogate;

namespace {

// Same deterministic fill as tests/oracles/lstm_oracle.py: tensor ti, element e
// gets 0.3 * sin(1.7 ti + 0.37 e + 0.5); the output bias is shifted by 0.5.
void formula_fill(LstmNetwork& net) {
    auto ts = tensors(net);
    for (std::size_t ti = 0; ti < ts.size(); ++ti) {
        const double shift = ti + 1 == ts.size() ? 0.5 : 0.0;
        for (std::size_t e = 0; e < ts[ti].values.size(); ++e)
            ts[ti].values[e] = 0.3 * std::sin(1.7 * static_cast<double>(ti) + 0.37 * static_cast<double>(e) + 0.5) + shift;
    }
}

std::vector<double> cosine_input(std::size_t n) {
    std::vector<double> v(n);
    for (std::size_t k = 0; k < n; ++k) v[k] = 0.5 + 0.4 * std::cos(0.9 * static_cast<double>(k));
    return v;
}

} // namespace

TEST_CASE("cell with zero parameters stays at rest") {
    LstmLayerParams p(4, 3);
    const std::vector<double> x{0.3, -1.0, 2.0, 0.1}, zero(3, 0.0);
    auto out = cell_step(p, x, zero, zero);
    for (int k = 0; k < 3; ++k) {
        CHECK(out.h[k] == 0.0);
        CHECK(out.c[k] == 0.0);
    }
}

TEST_CASE("a saturated forget gate with no candidate keeps the cell state") {
    LstmLayerParams p(2, 2);
    p.b_f = {50.0, 50.0};
    const std::vector<double> x{0.4, 0.7}, h{0.0, 0.0}, c{0.8, -0.3};
    auto out = cell_step(p, x, h, c);
    CHECK(out.c[0] == doctest::Approx(0.8).epsilon(1e-12));
    CHECK(out.c[1] == doctest::Approx(-0.3).epsilon(1e-12));
    CHECK(out.h[0] == doctest::Approx(0.5 * 0.8 / 1.8).epsilon(1e-12));
}

TEST_CASE("cell step matches the numpy oracle") {
    LstmNetwork net(4, 3, 1, 3);
    formula_fill(net);
    auto x = cosine_input(4);
    const std::vector<double> h{0.1, 0.2, 0.3}, c{-0.2, -0.4, -0.6};
    auto out = cell_step(net.layers[0], x, h, c);
    const double h_ref[] = {-0.03568862196581729, -0.21546647759599807, -0.23107804858217826};
    const double c_ref[] = {-0.07927374339331952, -0.42935711672959465, -0.5340643936935177};
    for (int k = 0; k < 3; ++k) {
        CHECK(std::abs(out.h[k] - h_ref[k]) <= 1e-12);
        CHECK(std::abs(out.c[k] - c_ref[k]) <= 1e-12);
    }
}

TEST_CASE("stacked sequence with fed back outputs matches the numpy oracle") {
    LstmNetwork net(10, 2, 3, 3);
    formula_fill(net);
    const double ref[] = {0.653196431185661,  0.7406019383169046, 0.795961557816406,
                          0.6493627496178852, 0.7399153565045552, 0.7987812012213505,
                          0.6475875021780858, 0.7395911443765182, 0.8000776077353215};
    auto y2 = run_sequence(net, cosine_input(17), 2);
    REQUIRE(y2.size() == 6);
    for (int k = 0; k < 6; ++k) CHECK(std::abs(y2[k] - ref[k]) <= 1e-12);
    auto y3 = run_sequence(net, cosine_input(24), 3);
    REQUIRE(y3.size() == 9);
    for (int k = 0; k < 9; ++k) CHECK(std::abs(y3[k] - ref[k]) <= 1e-12);
    CHECK(run_sequence(net, cosine_input(24), 3) == y3);
}

TEST_CASE("backpropagation through time agrees with central differences") {
    LstmNetwork net(10, 2, 3, 3);
    formula_fill(net);
    Matrix inputs, targets;
    auto v = cosine_input(17);
    inputs.append_row(v);
    for (auto& e : v) e = 1.0 - e;
    inputs.append_row(v);
    targets.append_row(std::vector<double>{0.2, 0.4, 0.6, 0.3, 0.5, 0.7});
    targets.append_row(std::vector<double>{0.9, 0.1, 0.5, 0.8, 0.2, 0.4});
    const double l2 = 0.01;

    LstmNetwork grad;
    const double loss = loss_and_gradient(net, inputs, targets, 2, l2, grad);
    CHECK(loss == doctest::Approx(sequence_loss(net, inputs, targets, 2, l2)).epsilon(1e-12));

    auto params = tensors(net);
    auto grads = tensors(grad);
    const double eps = 1e-5;
    double worst = 0.0;
    for (std::size_t t = 0; t < params.size(); ++t) {
        for (std::size_t e = 0; e < params[t].values.size(); ++e) {
            double& w = params[t].values[e];
            const double keep = w;
            w = keep + eps;
            const double up = sequence_loss(net, inputs, targets, 2, l2);
            w = keep - eps;
            const double down = sequence_loss(net, inputs, targets, 2, l2);
            w = keep;
            const double numeric = (up - down) / (2.0 * eps);
            const double analytic = grads[t].values[e];
            const double rel = std::abs(numeric - analytic) / std::max(1e-8, std::abs(numeric) + std::abs(analytic));
            worst = std::max(worst, rel);
        }
    }
    CHECK(worst < 1e-4);
}

TEST_CASE("a zero-weight model predicts the lower output bound") {
    WeekModel m;
    m.week = 2;
    m.week_len = 7;
    m.net = LstmNetwork(10, 4, 3, 3);
    const int n = m.genome_length();
    m.bounds.mini.assign(static_cast<std::size_t>(n), 0.0);
    m.bounds.maxi.assign(static_cast<std::size_t>(n), 100.0);
    m.bounds.mini[kPrevOutputOffset] = 300.0;
    m.bounds.maxi[kPrevOutputOffset] = 900.0;
    std::vector<double> x(static_cast<std::size_t>(n), 50.0);
    x[kPrevOutputOffset] = 400.0;
    auto f = forward_week(m, x);
    REQUIRE(f.days.size() == 7);
    for (const auto& d : f.days) {
        CHECK(d[0] == 300.0);
        CHECK(d[1] == 0.0);
        CHECK(d[2] == 0.0);
    }
}

TEST_CASE("r2 score") {
    const std::vector<double> a{1, 2, 3, 4, 5, 6}, b{2, 4, 6, 8, 10, 12};
    // two samples of one day each: [mdw, dfcpb, nlbpa] rows
    auto r = r2_score(a, a);
    CHECK(r.mdw == 1.0);
    CHECK(r.dfcpb == 1.0);
    CHECK(r.nlbpa == 1.0);
    const std::vector<double> mean{2.5, 3.5, 4.5, 2.5, 3.5, 4.5};
    auto z = r2_score(mean, a);
    CHECK(z.mdw == doctest::Approx(0.0));
    CHECK(z.nlbpa == doctest::Approx(0.0));
    const std::vector<double> flat{1, 2, 3, 1, 5, 6};
    CHECK_THROWS_AS(r2_score(b, flat), ZeroVariance);
}

TEST_CASE("training") {
    auto corpus = dataset::generate_corpus(dataset::GeneratorConfig{}, 4);
    auto weeks = dataset::partition_weeks(corpus);
    auto data = weeks[5];
    auto bounds = fit_week_bounds(data);

    Hyperparams hp;
    hp.epochs = 120;
    hp.hidden_size = 4;
    hp.restarts = 1;

    SUBCASE("a constant target is learnt") {
        auto flat = data;
        for (std::size_t r = 0; r < flat.targets.rows(); ++r)
            for (std::size_t c = 0; c < flat.targets.cols(); ++c) {
                const auto k = static_cast<std::size_t>(kPrevOutputOffset) + c % kOutputWidth;
                flat.targets(r, c) = 0.5 * (bounds.mini[k] + bounds.maxi[k]);
            }
        hp.epochs = 400;
        hp.l2_rate = 0.0; // final_loss is then the plain MSE
        auto m = train_week_model(flat, bounds, hp);
        CHECK(m.meta.final_loss < 1e-4);
    }
    SUBCASE("same seed, same model; different seed, different model") {
        auto a = train_week_model(data, bounds, hp);
        auto b = train_week_model(data, bounds, hp);
        CHECK(a.net == b.net);
        CHECK(a.meta.final_loss == b.meta.final_loss);
        hp.seed = 8;
        auto c = train_week_model(data, bounds, hp);
        CHECK_FALSE(a.net == c.net);
    }
    SUBCASE("loss falls") {
        std::vector<double> losses;
        auto m = train_week_model(data, bounds, hp, [&](int, double l) { losses.push_back(l); });
        REQUIRE(losses.size() == 120);
        CHECK(losses.back() < losses.front());
        CHECK(std::isfinite(m.meta.final_loss));
    }
    SUBCASE("models survive a save and load") {
        auto m = train_week_model(data, bounds, hp);
        auto dir = std::filesystem::temp_directory_path() / "flockplan_test_surrogate";
        std::filesystem::create_directories(dir);
        save_model(m, dir / "w6.json");
        auto back = load_model(dir / "w6.json");
        CHECK(back.net == m.net);
        CHECK(back.bounds == m.bounds);
        CHECK(back.week == 6);
        CHECK(back.week_len == 5);
        auto x = dataset::week_vector(corpus[0], 6);
        CHECK(forward_week(back, x).last() == forward_week(m, x).last());
        std::filesystem::remove_all(dir);
    }
}

TEST_CASE("hyperparameters are checked") {
    Hyperparams hp;
    CHECK_NOTHROW(hp.validate());
    hp.epochs = 0;
    CHECK_THROWS_AS(hp.validate(), ConfigDomain);
    hp = Hyperparams{};
    hp.lr0 = -1.0;
    CHECK_THROWS_AS(hp.validate(), ConfigDomain);
}

#include <doctest.h>

#include <algorithm>
#include <sstream>

#include "flockplan/dataset/generator.hpp"
#include "flockplan/dataset/io.hpp"
#include "flockplan/dataset/partition.hpp"
#include "flockplan/dataset/stats.hpp"

using namespace flockplan;
using namespace flockplan::dataset;

namespace {

const std::vector<FlockSample>& corpus() {
    static const auto c = generate_corpus(GeneratorConfig{}, 12);
    return c;
}

// Multiplies the recorded deaths of days [first, last] and carries the extra
// losses through living birds and the per-bird feed.
FlockSample with_mortality_burst(FlockSample s, int first, int last, int factor) {
    std::int64_t lost = 0;
    for (auto& o : s.outcomes) {
        if (o.day >= first && o.day <= last) {
            const auto extra = o.dm * (factor - 1);
            o.dm += extra;
            lost += extra;
        }
        o.nlb -= lost;
        auto an = normalize_by_area(static_cast<double>(o.dm), static_cast<double>(o.nlb), o.dfc, s.geometry,
                                    static_cast<double>(o.nlb));
        o.dmpa = an.dmpa;
        o.nlbpa = an.nlbpa;
        o.dfcpb = an.dfcpb;
    }
    return s;
}

} // namespace

TEST_CASE("comfort plan without noise follows the reference growth curve") {
    auto cfg = GeneratorConfig{}.noiseless();
    auto houses = default_houses();
    auto s = generate_flock(cfg, comfort_plans(cfg), houses[0].geometry, houses[0].initial_birds, 1);
    for (int t : {1, 10, 25, 40})
        CHECK(s.outcomes[static_cast<std::size_t>(t - 1)].mdw == doctest::Approx(cfg.reference_weight(t)).epsilon(1e-12));
}

TEST_CASE("a hot plan grows less and kills more") {
    auto cfg = GeneratorConfig{}.noiseless();
    auto house = default_houses()[0];
    auto comfort = comfort_plans(cfg);
    auto hot = comfort;
    for (auto& p : hot) {
        p.t_min += 6.0;
        p.t_avg += 6.0;
        p.t_max += 6.0;
    }
    auto a = generate_flock(cfg, comfort, house.geometry, house.initial_birds, 1);
    auto b = generate_flock(cfg, hot, house.geometry, house.initial_birds, 1);
    CHECK(b.outcomes.back().mdw < a.outcomes.back().mdw);
    std::int64_t dead_a = 0, dead_b = 0;
    for (int t = 0; t < kFlockDays; ++t) {
        dead_a += a.outcomes[static_cast<std::size_t>(t)].dm;
        dead_b += b.outcomes[static_cast<std::size_t>(t)].dm;
    }
    CHECK(dead_b > dead_a);
}

TEST_CASE("generated corpora are valid, reproducible and extendable") {
    const auto& c = corpus();
    REQUIRE(c.size() == 12);
    for (const auto& s : c) CHECK_NOTHROW(validate(s));
    auto again = generate_corpus(GeneratorConfig{}, 12);
    CHECK(again == c);
    auto longer = generate_corpus(GeneratorConfig{}, 14);
    CHECK(std::equal(c.begin(), c.end(), longer.begin()));
    auto tail = generate_corpus(GeneratorConfig{}, 2, default_houses(), 13);
    (void)tail;
}

TEST_CASE("weight and per-bird feed rise together") {
    auto mdw = daily_mean(corpus(), &DayOutcome::mdw);
    auto feed = daily_mean(corpus(), &DayOutcome::dfcpb);
    CHECK(pearson(mdw, feed) >= 0.99);
}

TEST_CASE("week partition shapes and stitching") {
    auto weeks = partition_weeks(corpus());
    CHECK(weeks[2].inputs.rows() == 12);
    CHECK(weeks[2].inputs.cols() == 52);
    CHECK(weeks[2].targets.cols() == 21);
    CHECK(weeks[5].inputs.cols() == 38);
    CHECK(weeks[5].targets.cols() == 15);
    CHECK(week_span(6).first_day == 36);
    CHECK(week_span(6).length == 5);

    auto one = partition_weeks({corpus().front()});
    for (int w = 1; w < kWeeks; ++w) {
        const auto& prev = one[static_cast<std::size_t>(w - 1)];
        const auto& next = one[static_cast<std::size_t>(w)];
        for (int k = 0; k < kOutputWidth; ++k)
            CHECK(next.inputs(0, static_cast<std::size_t>(kPrevOutputOffset + k)) ==
                  prev.targets(0, prev.targets.cols() - kOutputWidth + static_cast<std::size_t>(k)));
    }
    auto back = week_plans(week_vector(corpus().front(), 3), 7);
    CHECK(back.front() == corpus().front().plans[14]);
    CHECK(back.back() == corpus().front().plans[20]);
}

TEST_CASE("confidence intervals") {
    const std::vector<double> flat{5.0, 5.0, 5.0, 5.0};
    auto i = confidence_interval(flat);
    CHECK(i.lo == 5.0);
    CHECK(i.hi == 5.0);
    const std::vector<double> one{1.0};
    CHECK_THROWS_AS(confidence_interval(one), InsufficientData);

    // mean 2, s = 1, n = 3: t(0.975, 2) = 4.302652729911275
    const std::vector<double> v{1.0, 2.0, 3.0};
    auto k = confidence_interval(v);
    CHECK(k.hi - k.mean == doctest::Approx(4.302652729911275 / std::sqrt(3.0)).epsilon(1e-10));

    auto weekly = weekly_confidence_interval(corpus());
    REQUIRE(weekly.size() == 6);
    // The week-1 interval of applied Tavg sits around the first comfort anchor.
    const double mid = GeneratorConfig{}.comfort_temperature(4);
    CHECK(weekly[0].t_avg.lo <= mid + 1.0);
    CHECK(weekly[0].t_avg.hi >= mid - 1.5);
    for (std::size_t w = 1; w < weekly.size(); ++w) CHECK(weekly[w].t_avg.mean < weekly[w - 1].t_avg.mean);
}

TEST_CASE("sample files round-trip and reject broken days") {
    std::stringstream ss;
    write_samples(ss, corpus());
    CHECK(read_samples(ss) == corpus());

    std::stringstream empty("");
    CHECK(read_samples(empty).empty());

    std::stringstream text;
    write_samples(text, {corpus().front()});
    std::string body = text.str();
    // swap t_min and t_max of day 3
    const auto& p = corpus().front().plans[2];
    std::ostringstream row;
    row.precision(17);
    auto pos = body.find("\n1,3,");
    REQUIRE(pos != std::string::npos);
    auto end = body.find('\n', pos + 1);
    std::string line = body.substr(pos + 1, end - pos - 1);
    std::vector<std::string> cells;
    std::stringstream ls(line);
    for (std::string c; std::getline(ls, c, ',');) cells.push_back(c);
    std::swap(cells[2], cells[4]);
    std::string fixed;
    for (std::size_t k = 0; k < cells.size(); ++k) fixed += (k ? "," : "") + cells[k];
    body.replace(pos + 1, end - pos - 1, fixed);
    (void)p;
    std::stringstream broken(body);
    try {
        read_samples(broken);
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("day 3") != std::string::npos);
        CHECK(e.field() == "t_min");
    }
}

TEST_CASE("outlier flocks") {
    const auto& c = corpus();
    std::vector<FlockSample> history(c.begin(), c.begin() + 10);

    SUBCASE("the history mean itself is accepted") {
        FlockSample mean = history.front();
        for (std::size_t t = 0; t < kFlockDays; ++t) {
            auto& o = mean.outcomes[t];
            o.mdw = o.dfcpb = o.nlbpa = o.dmpa = 0.0;
            for (const auto& h : history) {
                o.mdw += h.outcomes[t].mdw / 10.0;
                o.dfcpb += h.outcomes[t].dfcpb / 10.0;
                o.nlbpa += h.outcomes[t].nlbpa / 10.0;
                o.dmpa += h.outcomes[t].dmpa / 10.0;
            }
        }
        auto d = detect_outlier_flock(mean, history);
        CHECK_FALSE(d.reject);
        CHECK(d.flagged_days.empty());
    }
    SUBCASE("a fresh flock from the same generator is accepted") {
        CHECK_FALSE(detect_outlier_flock(c[10], history).reject);
        CHECK_FALSE(detect_outlier_flock(c[11], history).reject);
    }
    SUBCASE("a twentyfold mortality burst on days 12-20 is rejected on those days") {
        auto sick = with_mortality_burst(c[10], 12, 20, 20);
        auto d = detect_outlier_flock(sick, history);
        CHECK(d.reject);
        for (int day = 12; day <= 20; ++day)
            CHECK(std::find(d.flagged_days.begin(), d.flagged_days.end(), day) != d.flagged_days.end());
        CHECK(std::none_of(d.flagged_days.begin(), d.flagged_days.end(), [](int day) { return day < 12; }));
    }
    SUBCASE("too little history") {
        std::vector<FlockSample> two(c.begin(), c.begin() + 2);
        CHECK_THROWS_AS(detect_outlier_flock(c[10], two), InsufficientHistory);
    }
}

#include "flockplan/dataset/stats.hpp"

#include <cmath>
#include <numeric>

#include <boost/math/distributions/students_t.hpp>

#include "flockplan/dataset/partition.hpp"

namespace flockplan::dataset {

namespace {

double mean_of(std::span<const double> v) { return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size()); }

double sample_sd(std::span<const double> v, double mean) {
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

} // namespace

Interval confidence_interval(std::span<const double> values, double level) {
    if (values.size() < 2) throw InsufficientData("a confidence interval needs at least two values");
    if (!(level > 0.0 && level < 1.0)) throw ConfigDomain("confidence level must lie in (0, 1)");
    const double n = static_cast<double>(values.size());
    const double m = mean_of(values);
    const double s = sample_sd(values, m);
    boost::math::students_t dist(n - 1.0);
    const double t = boost::math::quantile(boost::math::complement(dist, (1.0 - level) / 2.0));
    const double half = t * s / std::sqrt(n);
    return {m, m - half, m + half};
}

std::vector<WeekInterval> weekly_confidence_interval(const std::vector<FlockSample>& samples, double level) {
    if (samples.size() < 2) throw InsufficientData("weekly intervals need at least two flocks");
    std::vector<WeekInterval> out;
    for (int w = 1; w <= kWeeks; ++w) {
        auto span = week_span(w);
        std::vector<double> t, h;
        for (const auto& s : samples) {
            for (int d = 0; d < span.length; ++d) {
                const auto& p = s.plans.at(static_cast<std::size_t>(span.first_day - 1 + d));
                t.push_back(p.t_avg);
                h.push_back(p.h_avg);
            }
        }
        out.push_back({w, confidence_interval(t, level), confidence_interval(h, level)});
    }
    return out;
}

double pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw DimensionMismatch("pearson needs equal-length series");
    if (x.size() < 2) throw InsufficientData("pearson needs at least two points");
    const double mx = mean_of(x);
    const double my = mean_of(y);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        sxy += (x[k] - mx) * (y[k] - my);
        sxx += (x[k] - mx) * (x[k] - mx);
        syy += (y[k] - my) * (y[k] - my);
    }
    if (sxx == 0.0 || syy == 0.0) throw ZeroVariance("pearson correlation of a constant series");
    return sxy / std::sqrt(sxx * syy);
}

std::vector<double> zscore(std::span<const double> v) {
    if (v.size() < 2) throw InsufficientData("z-score needs at least two values");
    const double m = mean_of(v);
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    const double sd = std::sqrt(ss / static_cast<double>(v.size()));
    if (sd == 0.0) throw ZeroVariance("z-score of a constant series");
    std::vector<double> out;
    out.reserve(v.size());
    for (double x : v) out.push_back((x - m) / sd);
    return out;
}

std::vector<double> daily_mean(const std::vector<FlockSample>& samples, double DayOutcome::*field) {
    if (samples.empty()) throw InsufficientData("no samples");
    std::vector<double> out(kFlockDays, 0.0);
    for (const auto& s : samples) {
        for (int t = 0; t < kFlockDays; ++t) out[static_cast<std::size_t>(t)] += s.outcomes.at(static_cast<std::size_t>(t)).*field;
    }
    for (double& x : out) x /= static_cast<double>(samples.size());
    return out;
}

OutlierDecision detect_outlier_flock(const FlockSample& candidate, const std::vector<FlockSample>& history,
                                     const OutlierConfig& config) {
    if (history.size() < 3) throw InsufficientHistory("outlier detection needs at least three historical flocks");
    validate(candidate);
    struct Series {
        const char* name;
        double DayOutcome::*field;
    };
    static constexpr Series series[] = {
        {"mdw", &DayOutcome::mdw},
        {"dfcpb", &DayOutcome::dfcpb},
        {"nlbpa", &DayOutcome::nlbpa},
        {"dmpa", &DayOutcome::dmpa},
    };
    OutlierDecision d;
    const double n = static_cast<double>(history.size());
    for (int t = 0; t < kFlockDays; ++t) {
        bool flagged = false;
        for (const auto& s : series) {
            double sum = 0.0;
            for (const auto& h : history) sum += h.outcomes.at(static_cast<std::size_t>(t)).*(s.field);
            const double m = sum / n;
            double ss = 0.0;
            for (const auto& h : history) {
                double e = h.outcomes.at(static_cast<std::size_t>(t)).*(s.field) - m;
                ss += e * e;
            }
            const double sd = std::max(std::sqrt(ss / (n - 1.0)), config.relative_floor * std::abs(m) + 1e-9);
            const double z = std::abs(candidate.outcomes[static_cast<std::size_t>(t)].*(s.field) - m) / sd;
            if (z > config.z_threshold) {
                d.flags.push_back({t + 1, s.name, z});
                flagged = true;
            }
        }
        if (flagged) d.flagged_days.push_back(t + 1);
    }
    d.reject = static_cast<int>(d.flagged_days.size()) >= config.min_days;
    return d;
}

} // namespace flockplan::dataset

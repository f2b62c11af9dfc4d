#pragma once

#include <span>
#include <vector>

#include "flockplan/domain.hpp"

namespace flockplan::dataset {

struct Interval {
    double mean = 0.0;
    double lo = 0.0;
    double hi = 0.0;
    bool contains(double x) const noexcept { return lo <= x && x <= hi; }
};

/// Student-t interval mean +- t(level, n-1) * s / sqrt(n). Throws
/// InsufficientData with fewer than two values.
Interval confidence_interval(std::span<const double> values, double level = 0.95);

struct WeekInterval {
    int week;
    Interval t_avg;
    Interval h_avg;
};

/// Per-week intervals of Tavg and Havg, pooling every day of every sample.
std::vector<WeekInterval> weekly_confidence_interval(const std::vector<FlockSample>& samples,
                                                     double level = 0.95);

double pearson(std::span<const double> x, std::span<const double> y);
std::vector<double> zscore(std::span<const double> v);

/// Per-day mean across samples of one output series.
std::vector<double> daily_mean(const std::vector<FlockSample>& samples, double DayOutcome::*field);

struct OutlierConfig {
    double z_threshold = 4.0;
    int min_days = 5;
    /// Lower limit on the per-day deviation, as a fraction of the history
    /// mean. Synthetic histories vary by well under a percent, so without it
    /// any drift of the whole farm would read as an atypical flock.
    double relative_floor = 0.05;
};

struct OutlierFlag {
    int day;
    const char* series;
    double z;
};

struct OutlierDecision {
    bool reject = false;
    std::vector<int> flagged_days;
    std::vector<OutlierFlag> flags;
};

/// Compares the candidate's daily mdw, dfcpb, nlbpa and dmpa with the
/// per-day mean and deviation of the history. A day is flagged when any
/// series leaves the z threshold; enough flagged days reject the flock.
OutlierDecision detect_outlier_flock(const FlockSample& candidate, const std::vector<FlockSample>& history,
                                     const OutlierConfig& config = {});

} // namespace flockplan::dataset

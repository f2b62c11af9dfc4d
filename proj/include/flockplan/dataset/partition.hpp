#pragma once

#include <array>
#include <span>
#include <vector>

#include "flockplan/domain.hpp"
#include "flockplan/matrix.hpp"

namespace flockplan::dataset {

/// Days covered by a week: weeks 1-5 are 7 days long, week 6 covers 36..40.
struct WeekSpan {
    int first_day;
    int length;
};
WeekSpan week_span(int week);

/// Length of the flattened week input [x<1> | y<0> | x<2> | ... | x<wS>].
constexpr int week_vector_length(int week_len) { return kPlanWidth * week_len + kOutputWidth; }

/// Offset (0-based) of day `d` (1-based within the week) inside the week vector.
constexpr int day_offset(int d) { return d == 1 ? 0 : kPlanWidth * d - 4; }
/// Offset (0-based) of the previous-output slots inside the week vector.
inline constexpr int kPrevOutputOffset = kPlanWidth;

struct WeeklyDataset {
    int week = 1;
    int week_len = 7;
    Matrix inputs;  // samples x (7*wS + 3)
    Matrix targets; // samples x (3*wS), day-major [mdw, dfcpb, nlbpa]
    std::vector<int> flock_ids;
};

/// Week vector of one flock: plans of the week's days plus the previous
/// week's last outcome (initial conditions for week 1).
std::vector<double> week_vector(const FlockSample& sample, int week);
std::vector<double> week_targets(const FlockSample& sample, int week);

std::array<WeeklyDataset, kWeeks> partition_weeks(const std::vector<FlockSample>& samples);

/// Expands a week vector back into its day plans.
std::vector<DayPlan> week_plans(std::span<const double> week_vector, int week_len);

} // namespace flockplan::dataset

#include "flockplan/dataset/partition.hpp"

namespace flockplan::dataset {

WeekSpan week_span(int week) {
    if (week < 1 || week > kWeeks) throw ShapeError("week must be in 1..6, got " + std::to_string(week));
    return week < kWeeks ? WeekSpan{7 * (week - 1) + 1, 7} : WeekSpan{36, 5};
}

std::vector<double> week_vector(const FlockSample& sample, int week) {
    const auto span = week_span(week);
    if (sample.plans.size() != kFlockDays || sample.outcomes.size() != kFlockDays) {
        throw ShapeError("flock " + std::to_string(sample.flock_id) + " does not have 40 days");
    }
    std::vector<double> v;
    v.reserve(static_cast<std::size_t>(week_vector_length(span.length)));
    for (int d = 1; d <= span.length; ++d) {
        const auto& p = sample.plans[static_cast<std::size_t>(span.first_day + d - 2)];
        if (p.day != span.first_day + d - 1) throw ShapeError("flock " + std::to_string(sample.flock_id) + " has out-of-order days");
        auto x = p.as_vector();
        v.insert(v.end(), x.begin(), x.end());
        if (d == 1) {
            auto y0 = sample.outputs_at(span.first_day - 1);
            v.insert(v.end(), y0.begin(), y0.end());
        }
    }
    return v;
}

std::vector<double> week_targets(const FlockSample& sample, int week) {
    const auto span = week_span(week);
    std::vector<double> y;
    y.reserve(static_cast<std::size_t>(kOutputWidth * span.length));
    for (int d = 0; d < span.length; ++d) {
        auto o = sample.outputs_at(span.first_day + d);
        y.insert(y.end(), o.begin(), o.end());
    }
    return y;
}

std::array<WeeklyDataset, kWeeks> partition_weeks(const std::vector<FlockSample>& samples) {
    std::array<WeeklyDataset, kWeeks> out;
    for (int w = 1; w <= kWeeks; ++w) {
        auto& ds = out[static_cast<std::size_t>(w - 1)];
        ds.week = w;
        ds.week_len = week_span(w).length;
        ds.inputs = Matrix(0, static_cast<std::size_t>(week_vector_length(ds.week_len)));
        ds.targets = Matrix(0, static_cast<std::size_t>(kOutputWidth * ds.week_len));
    }
    for (const auto& s : samples) {
        for (int w = 1; w <= kWeeks; ++w) {
            auto& ds = out[static_cast<std::size_t>(w - 1)];
            ds.inputs.append_row(week_vector(s, w));
            ds.targets.append_row(week_targets(s, w));
            ds.flock_ids.push_back(s.flock_id);
        }
    }
    return out;
}

std::vector<DayPlan> week_plans(std::span<const double> v, int week_len) {
    if (static_cast<int>(v.size()) != week_vector_length(week_len)) {
        throw DimensionMismatch("week vector of length " + std::to_string(v.size()) + " does not match week length " +
                                std::to_string(week_len));
    }
    std::vector<DayPlan> plans;
    for (int d = 1; d <= week_len; ++d) {
        plans.push_back(DayPlan::from_vector(v.subspan(static_cast<std::size_t>(day_offset(d)), kPlanWidth)));
    }
    return plans;
}

} // namespace flockplan::dataset

#include "flockplan/planner/fitness.hpp"

#include <algorithm>
#include <cmath>

namespace flockplan::planner {

using surrogate::kPrevOutputOffset;

WeekKernel::WeekKernel(const surrogate::WeekModel& model) : model_(&model) {
    model.check();
    const auto& b = model.bounds;
    mini_ = b.mini;
    inv_span_.resize(b.size());
    for (std::size_t k = 0; k < b.size(); ++k) inv_span_[k] = 1.0 / (b.maxi[k] - b.mini[k]);
}

std::vector<double> WeekKernel::normalize(std::span<const double> g, int* clamped) const {
    if (static_cast<int>(g.size()) != genome_length()) {
        throw DimensionMismatch("genome has " + std::to_string(g.size()) + " genes, week " +
                                std::to_string(model_->week) + " expects " + std::to_string(genome_length()));
    }
    std::vector<double> v(g.size());
    for (std::size_t k = 0; k < g.size(); ++k) {
        double x = (g[k] - mini_[k]) * inv_span_[k];
        if (x < 0.0 || x > 1.0) {
            if (clamped) ++*clamped;
            x = std::clamp(x, 0.0, 1.0);
        }
        v[k] = x;
    }
    return v;
}

std::vector<double> WeekKernel::forward_normalized(std::span<const double> g, int* clamped) const {
    return surrogate::forward_week_normalized(*model_, normalize(g, clamped));
}

Outputs WeekKernel::last_normalized(std::span<const double> g) const {
    auto y = forward_normalized(g);
    const std::size_t k = y.size() - kOutputWidth;
    return {y[k], y[k + 1], y[k + 2]};
}

Outputs WeekKernel::output_to_raw(const Outputs& n) const {
    Outputs r{};
    for (int v = 0; v < kOutputWidth; ++v) {
        const auto k = static_cast<std::size_t>(kPrevOutputOffset + v);
        r[static_cast<std::size_t>(v)] = n[static_cast<std::size_t>(v)] / inv_span_[k] + mini_[k];
    }
    return r;
}

Outputs WeekKernel::output_to_normalized(const Outputs& raw) const {
    Outputs n{};
    for (int v = 0; v < kOutputWidth; ++v) {
        const auto k = static_cast<std::size_t>(kPrevOutputOffset + v);
        n[static_cast<std::size_t>(v)] = (raw[static_cast<std::size_t>(v)] - mini_[k]) * inv_span_[k];
    }
    return n;
}

Outputs WeekKernel::last_raw(std::span<const double> g, int* clamped) const {
    auto y = forward_normalized(g, clamped);
    const std::size_t k = y.size() - kOutputWidth;
    return output_to_raw({y[k], y[k + 1], y[k + 2]});
}

std::vector<Outputs> WeekKernel::days_raw(std::span<const double> g, int* clamped) const {
    auto y = forward_normalized(g, clamped);
    std::vector<Outputs> out;
    for (std::size_t k = 0; k < y.size(); k += kOutputWidth) out.push_back(output_to_raw({y[k], y[k + 1], y[k + 2]}));
    return out;
}

double fitness_week6(std::span<const double> genome, const WeekKernel& week6) {
    if (week6.model().week != kWeeks) throw DimensionMismatch("FCR fitness needs the week-6 model");
    const auto y = week6.last_raw(genome);
    return fcr_normalized(y[1], y[2], y[0]);
}

double fitness_week6(std::span<const double> genome, const surrogate::WeekModel& week6) {
    return fitness_week6(genome, WeekKernel(week6));
}

double fitness_boundary(std::span<const double> genome, const WeekKernel& week, std::span<const double> target) {
    if (target.size() != kOutputWidth) throw DimensionMismatch("boundary target must have 3 outputs");
    const auto y = week.last_normalized(genome);
    double sum = 0.0;
    for (std::size_t v = 0; v < kOutputWidth; ++v) sum += std::abs(y[v] - target[v]);
    return sum / kOutputWidth;
}

double fitness_boundary(std::span<const double> genome, const surrogate::WeekModel& week, std::span<const double> target) {
    return fitness_boundary(genome, WeekKernel(week), target);
}

void repair_week_genome(std::span<double> g, int week_len) {
    if (static_cast<int>(g.size()) != dataset::week_vector_length(week_len)) throw DimensionMismatch("genome length does not match week");
    for (int d = 1; d <= week_len; ++d) {
        const auto o = static_cast<std::size_t>(dataset::day_offset(d));
        std::sort(g.begin() + static_cast<std::ptrdiff_t>(o + 1), g.begin() + static_cast<std::ptrdiff_t>(o + 4));
        std::sort(g.begin() + static_cast<std::ptrdiff_t>(o + 4), g.begin() + static_cast<std::ptrdiff_t>(o + 7));
    }
}

} // namespace flockplan::planner

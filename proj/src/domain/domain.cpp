#include "flockplan/domain.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <spdlog/spdlog.h>

namespace flockplan {

DayPlan DayPlan::from_vector(std::span<const double> v) {
    if (v.size() != kPlanWidth) {
        throw DimensionMismatch("day plan vector must have 7 entries, got " + std::to_string(v.size()));
    }
    DayPlan p;
    p.day = static_cast<int>(std::lround(v[0]));
    p.t_min = v[1];
    p.t_avg = v[2];
    p.t_max = v[3];
    p.h_min = v[4];
    p.h_avg = v[5];
    p.h_max = v[6];
    return p;
}

namespace {

std::string plan_problem(const DayPlan& p) {
    if (p.day < 1 || p.day > kFlockDays) return "day outside 1..40";
    const std::array<double, 6> vals{p.t_min, p.t_avg, p.t_max, p.h_min, p.h_avg, p.h_max};
    if (std::ranges::any_of(vals, [](double x) { return !std::isfinite(x); })) return "non-finite value";
    if (!(p.t_min <= p.t_avg && p.t_avg <= p.t_max)) return "t_min <= t_avg <= t_max violated";
    if (!(p.h_min <= p.h_avg && p.h_avg <= p.h_max)) return "h_min <= h_avg <= h_max violated";
    if (p.h_min < 0.0 || p.h_max > 100.0) return "humidity outside [0, 100]";
    return {};
}

} // namespace

bool is_valid(const DayPlan& plan) noexcept { return plan_problem(plan).empty(); }

void validate(const DayPlan& plan) {
    if (auto problem = plan_problem(plan); !problem.empty()) {
        throw InvalidPlan("day " + std::to_string(plan.day) + ": " + problem);
    }
}

std::array<double, kOutputWidth> FlockSample::outputs_at(int day) const {
    if (day == 0) return initial.as_vector();
    if (day < 1 || day > static_cast<int>(outcomes.size())) {
        throw ShapeError("flock " + std::to_string(flock_id) + " has no day " + std::to_string(day));
    }
    return outcomes[static_cast<std::size_t>(day - 1)].outputs();
}

void validate(const FlockSample& s) {
    const auto id = std::to_string(s.flock_id);
    if (s.plans.size() != kFlockDays || s.outcomes.size() != kFlockDays) {
        throw ShapeError("flock " + id + ": expected 40 plans and 40 outcomes");
    }
    if (s.geometry.area_m2() <= 0.0 || s.geometry.capacity <= 0) {
        throw ShapeError("flock " + id + ": house geometry must be positive");
    }
    std::int64_t prev_nlb = s.initial_birds;
    double prev_dfc = 0.0;
    for (int t = 0; t < kFlockDays; ++t) {
        const auto& p = s.plans[static_cast<std::size_t>(t)];
        const auto& o = s.outcomes[static_cast<std::size_t>(t)];
        if (p.day != t + 1 || o.day != t + 1) {
            throw ShapeError("flock " + id + ": days must run 1..40 in order");
        }
        validate(p);
        if (o.nlb > prev_nlb) throw ShapeError("flock " + id + ": living birds increased on day " + std::to_string(t + 1));
        if (o.dfc < prev_dfc) throw ShapeError("flock " + id + ": cumulative feed decreased on day " + std::to_string(t + 1));
        prev_nlb = o.nlb;
        prev_dfc = o.dfc;
    }
}

std::int64_t living_birds(std::int64_t initial_birds, std::span<const std::int64_t> mortality,
                          std::size_t day) {
    if (day > mortality.size()) {
        throw DimensionMismatch("mortality series shorter than requested day");
    }
    std::int64_t dead = 0;
    for (std::size_t t = 0; t < day; ++t) {
        if (mortality[t] < 0) throw NegativeFlock("negative daily mortality");
        dead += mortality[t];
    }
    if (dead > initial_birds) {
        throw NegativeFlock("accumulated mortality " + std::to_string(dead) + " exceeds initial flock of " +
                            std::to_string(initial_birds));
    }
    return initial_birds - dead;
}

AreaNormalized normalize_by_area(double dm, double nlb, double dfc, const HouseGeometry& geometry,
                                 double nlb_for_feed) {
    const double area = geometry.area_m2();
    if (area == 0.0) throw DivisionDomain("house area is zero");
    if (nlb_for_feed == 0.0) throw DivisionDomain("no living birds to divide feed by");
    return {dm / area, nlb / area, dfc / nlb_for_feed};
}

double fcr_basic(double dfc_cum_kg, double nlb, double mdw_g) {
    if (nlb == 0.0 || mdw_g == 0.0) throw DivisionDomain("FCR needs living birds and non-zero weight");
    return 1000.0 * dfc_cum_kg / (nlb * mdw_g);
}

double fcr_normalized(double dfcpb, double nlbpa, double mdw_g) {
    if (nlbpa == 0.0 || mdw_g == 0.0) throw DivisionDomain("FCR needs living birds and non-zero weight");
    return 1000.0 * (dfcpb / (nlbpa * mdw_g)) * nlbpa;
}

namespace {

void check_bound_shapes(std::size_t n, std::span<const double> maxi, std::span<const double> mini) {
    if (maxi.size() != n || mini.size() != n) {
        throw DimensionMismatch("bounds have " + std::to_string(maxi.size()) + "/" + std::to_string(mini.size()) +
                                " entries for a vector of " + std::to_string(n));
    }
    for (std::size_t k = 0; k < n; ++k) {
        if (!(maxi[k] > mini[k])) {
            throw DegenerateBound("bound at position " + std::to_string(k) + " has maxi <= mini");
        }
    }
}

} // namespace

std::vector<double> minmax_norm(std::span<const double> v, std::span<const double> maxi,
                                std::span<const double> mini, NormMode mode) {
    check_bound_shapes(v.size(), maxi, mini);
    std::vector<double> out(v.size());
    for (std::size_t k = 0; k < v.size(); ++k) {
        double x = v[k];
        if (x < mini[k] || x > maxi[k] || !std::isfinite(x)) {
            if (mode == NormMode::Strict) {
                std::ostringstream msg;
                msg << "value " << x << " at position " << k << " outside [" << mini[k] << ", " << maxi[k] << "]";
                throw OutOfRange(msg.str());
            }
            spdlog::warn("clamping value {} at position {} into [{}, {}]", x, k, mini[k], maxi[k]);
            x = std::isfinite(x) ? std::clamp(x, mini[k], maxi[k]) : mini[k];
        }
        out[k] = (x - mini[k]) / (maxi[k] - mini[k]);
    }
    return out;
}

std::vector<double> minmax_norm(std::span<const double> v, const Bounds& bounds, NormMode mode) {
    return minmax_norm(v, bounds.maxi, bounds.mini, mode);
}

std::vector<double> minmax_denorm(std::span<const double> v_norm, std::span<const double> maxi,
                                  std::span<const double> mini) {
    check_bound_shapes(v_norm.size(), maxi, mini);
    std::vector<double> out(v_norm.size());
    for (std::size_t k = 0; k < v_norm.size(); ++k) {
        out[k] = v_norm[k] * (maxi[k] - mini[k]) + mini[k];
    }
    return out;
}

std::vector<double> minmax_denorm(std::span<const double> v_norm, const Bounds& bounds) {
    return minmax_denorm(v_norm, bounds.maxi, bounds.mini);
}

} // namespace flockplan

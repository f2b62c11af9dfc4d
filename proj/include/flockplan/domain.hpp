#pragma once

// Core domain vocabulary: action plans, flock outcomes, house geometry and the
// formulas tying them together (living birds, per-area normalisation, feed
// conversion rate, min-max scaling).
//
// Units are fixed across the code base: temperature in degrees Celsius,
// relative humidity in percent, bird weight in grams, feed in kilograms.

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "flockplan/errors.hpp"

namespace flockplan {

inline constexpr int kFlockDays = 40;
inline constexpr int kWeeks = 6;
/// Width of one day's plan vector: [day, Tmin, Tavg, Tmax, Hmin, Havg, Hmax].
inline constexpr int kPlanWidth = 7;
/// Width of one day's response vector: [MdW, dFCpB, NlBpA].
inline constexpr int kOutputWidth = 3;

/// One day of an action plan.
struct DayPlan {
    int day = 1;
    double t_min = 0.0;
    double t_avg = 0.0;
    double t_max = 0.0;
    double h_min = 0.0;
    double h_avg = 0.0;
    double h_max = 0.0;

    std::array<double, kPlanWidth> as_vector() const {
        return {static_cast<double>(day), t_min, t_avg, t_max, h_min, h_avg, h_max};
    }
    static DayPlan from_vector(std::span<const double> v);

    bool operator==(const DayPlan&) const = default;
};

/// Throws InvalidPlan naming the first broken invariant.
void validate(const DayPlan& plan);
bool is_valid(const DayPlan& plan) noexcept;

struct HouseGeometry {
    double length_m = 150.0;
    double width_m = 16.0;
    std::int64_t capacity = 34800;

    double area_m2() const noexcept { return length_m * width_m; }
    bool operator==(const HouseGeometry&) const = default;
};

/// One day's measured (or predicted) response of a flock.
///
/// `dfc` is cumulative feed up to and including the day, for the whole house.
struct DayOutcome {
    int day = 0;
    double mdw = 0.0;    // g
    double dfcpb = 0.0;  // kg/bird
    double nlbpa = 0.0;  // bird/m2
    std::int64_t dm = 0; // birds died that day
    std::int64_t nlb = 0;
    double dfc = 0.0;  // kg
    double dmpa = 0.0; // bird/m2

    std::array<double, kOutputWidth> outputs() const { return {mdw, dfcpb, nlbpa}; }
    bool operator==(const DayOutcome&) const = default;
};

/// Flock state on arrival (day 0).
struct InitialConditions {
    double mdw0 = 42.0;   // g
    double dfcpb0 = 0.0;  // kg/bird
    double nlbpa0 = 14.5; // bird/m2

    std::array<double, kOutputWidth> as_vector() const { return {mdw0, dfcpb0, nlbpa0}; }
    bool operator==(const InitialConditions&) const = default;
};

/// A complete 40-day flock record.
struct FlockSample {
    int flock_id = 0;
    int house = 0;
    HouseGeometry geometry;
    std::int64_t initial_birds = 0;
    InitialConditions initial;
    std::vector<DayPlan> plans;       // days 1..40
    std::vector<DayOutcome> outcomes; // days 1..40

    /// Outcome of day `day` in 0..40, where day 0 is synthesised from the
    /// initial conditions.
    std::array<double, kOutputWidth> outputs_at(int day) const;

    bool operator==(const FlockSample&) const = default;
};

/// Throws ShapeError / InvalidPlan when the sample breaks its invariants.
void validate(const FlockSample& sample);

/// Per-position lower and upper bounds used by min-max scaling.
struct Bounds {
    std::vector<double> maxi;
    std::vector<double> mini;

    std::size_t size() const noexcept { return maxi.size(); }
    bool operator==(const Bounds&) const = default;
};

/// Strict rejects inputs outside [mini, maxi]; Clamp pins them to the bound
/// and logs a warning (live telemetry can briefly leave historical ranges).
enum class NormMode { Strict, Clamp };

/// Living birds after `day` days: initial_birds minus accumulated mortality.
std::int64_t living_birds(std::int64_t initial_birds, std::span<const std::int64_t> mortality,
                          std::size_t day);

struct AreaNormalized {
    double dmpa;
    double nlbpa;
    double dfcpb;
};

AreaNormalized normalize_by_area(double dm, double nlb, double dfc, const HouseGeometry& geometry,
                                 double nlb_for_feed);

/// Feed conversion rate from raw house totals: kg feed per kg of live weight.
double fcr_basic(double dfc_cum_kg, double nlb, double mdw_g);

/// Feed conversion rate from the per-bird/per-area outputs of the surrogate.
/// Evaluated literally as 1000 * (dfcpb / (nlbpa * mdw)) * nlbpa.
double fcr_normalized(double dfcpb, double nlbpa, double mdw_g);

std::vector<double> minmax_norm(std::span<const double> v, std::span<const double> maxi,
                                std::span<const double> mini, NormMode mode = NormMode::Strict);
std::vector<double> minmax_norm(std::span<const double> v, const Bounds& bounds,
                                NormMode mode = NormMode::Strict);

std::vector<double> minmax_denorm(std::span<const double> v_norm, std::span<const double> maxi,
                                  std::span<const double> mini);
std::vector<double> minmax_denorm(std::span<const double> v_norm, const Bounds& bounds);

} // namespace flockplan

#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "flockplan/dataset/generator.hpp"
#include "flockplan/planner/integration.hpp"

namespace flockplan::planner {

/// One searched variable: values lo, lo + step, ... up to hi (inclusive
/// within a 1e-9 step tolerance).
struct GridAxis {
    double lo = 0.0;
    double hi = 0.0;
    double step = 1.0;

    std::size_t points() const;
};

/// Number of grid points, as a double so astronomically large grids can be
/// reported.
double grid_cardinality(const std::vector<GridAxis>& axes);

struct OracleResult {
    std::vector<double> point;
    double value = 0.0;
    std::size_t evaluations = 0;
};

using Objective = std::function<double(std::span<const double>)>;

/// Full enumeration of the grid; ties keep the first point in lexicographic
/// order. Throws BudgetExceeded when the grid has more than `budget` points.
OracleResult exhaustive_oracle(const std::vector<GridAxis>& axes, const Objective& f, double budget = 1e7);

/// The grid a full 40-day search would need: every plan variable on every
/// day stepped at 0.5 degC / 1 % across `restrictions`.
std::vector<GridAxis> full_plan_grid(const WeekRestrictions& restrictions, double t_step = 0.5, double h_step = 1.0);

/// A small planning problem that both the GA and the exhaustive oracle can
/// solve: a box of searched variables, its grid and the objective.
struct TinyInstance {
    std::string name;
    std::vector<GridAxis> axes;
    Objective objective;

    evolve::Restrictions box() const;
};

/// FCR after `days` days of a noise-free flock where day d's Tavg (and Havg
/// when `with_humidity`) are searched and everything else follows comfort.
TinyInstance generator_instance(const dataset::GeneratorConfig& config, const dataset::HouseSpec& house, int days,
                                bool with_humidity, double t_halfwidth = 2.0, double h_halfwidth = 4.0);

/// Predicted FCR at the end of week 1 with the Tavg of the first `days` days
/// searched inside the week-1 restrictions; the other genes come from `base`.
TinyInstance surrogate_instance(const surrogate::WeekModel& week1, const evolve::Restrictions& r,
                                const std::vector<double>& base, int days);

enum class RandomPlanKind { Specialist, Uniform };

struct BenchmarkResult {
    std::vector<double> fcr; // one per plan, in draw order
    double best = 0.0;
    double mean = 0.0;
    double sd = 0.0;
    std::size_t best_index = 0;
    std::vector<DayPlan> best_plan;
};

/// Random feasible 40-day plan. Specialist plans follow the generator's
/// comfort-plus-noise recipe; both kinds are projected into the restrictions.
std::vector<DayPlan> random_plan(const WeekRestrictions& r, RandomPlanKind kind, const dataset::GeneratorConfig& config,
                                 std::mt19937_64& rng);

/// Rolls out `n` random plans from `ic` and summarises their predicted FCR.
BenchmarkResult benchmark_random_specialists(const surrogate::ModelSet& models, int n, const WeekRestrictions& r,
                                             std::uint64_t seed, const InitialConditions& ic,
                                             RandomPlanKind kind = RandomPlanKind::Specialist,
                                             const dataset::GeneratorConfig& config = {});

} // namespace flockplan::planner

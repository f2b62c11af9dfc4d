#pragma once

#include <array>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include "flockplan/evolve/ga.hpp"
#include "flockplan/planner/fitness.hpp"

namespace flockplan::planner {

using WeekRestrictions = std::array<evolve::Restrictions, kWeeks>;

/// Allowed range of the week-start feed conversion 1000 * dFCpB / MdW read
/// from the previous-output genes. As rows of A*x <= b:
///   -hi * MdW + 1000 * dFCpB <= 0  and  lo * MdW - 1000 * dFCpB <= 0.
struct FcrBand {
    double lo = 0.0;
    double hi = std::numeric_limits<double>::infinity();
    bool active() const { return lo > 0.0 || hi < std::numeric_limits<double>::infinity(); }
};

/// Everything the reverse search may choose from, per week.
struct SearchSpace {
    WeekRestrictions boxes;
    std::array<FcrBand, kWeeks> start_fcr; // week 1 stays inactive (no feed yet)

    /// Box rows followed by the two band rows when the band is active.
    evolve::InequalityForm inequality(int week) const;
    bool feasible(int week, std::span<const double> genome) const;
    /// Moves the start feed genes into the band, then clamps into the box.
    void project_start(int week, std::span<double> genome) const;
};

/// Search space from the per-position range of the corpus (no padding).
/// Day-index genes are pinned to their day; the previous-output genes span
/// the range seen at that week boundary, and the start band spans the
/// boundary feed conversions seen in the corpus.
SearchSpace derive_search_space(const std::vector<FlockSample>& corpus);

/// Narrows the previous-output genes and start band of weeks 2..6 to the
/// central `coverage` fraction of what the preceding week model predicts
/// over `samples` random genomes of its own space, intersected with the
/// corpus range. Without it the reverse search can fix a week-start state no
/// plan of the week before reaches. Weeks are narrowed forward from week 1,
/// so each sample set already respects its own narrowed space.
SearchSpace tighten_to_reachable(const surrogate::ModelSet& models, SearchSpace space, double coverage = 0.8,
                                 int samples = 2000, std::uint64_t seed = 1);

/// Pins the week-1 previous-output genes to a known arrival state.
void pin_initial_conditions(SearchSpace& space, const InitialConditions& ic);

/// The optimised plan: one genome per week (week 6 is 38 genes, the rest 52)
/// and the initial conditions read off week 1.
struct FinalActionPlan {
    std::array<std::vector<double>, kWeeks> genomes;
    InitialConditions i_c;

    /// 40 day plans; throws InvalidPlan if a genome breaks a plan invariant.
    std::vector<DayPlan> expand() const;
    /// Builds genomes from 40 day plans; the previous-output genes of weeks
    /// 2..6 are left at zero since a progressive rollout never reads them.
    static FinalActionPlan from_plans(const std::vector<DayPlan>& plans, const InitialConditions& ic);
};

struct BoundaryError {
    int week = 0;              // boundary between `week` and `week + 1`
    Outputs predicted{};       // last day of `week`
    Outputs target{};          // previous-output genes of `week + 1`
    Outputs absolute{};
    Outputs relative_pct{};
};

struct WeekRun {
    int week = 0;
    double best_fitness = 0.0;
    evolve::StopReason reason = evolve::StopReason::MaxGenerations;
    int generations = 0;
    long evaluations = 0;
    double seconds = 0.0;
    std::vector<evolve::GenerationStats> history;
    evolve::Restrictions restrictions;
    FcrBand start_fcr;
};

struct PlannerReport {
    double fcr_est = 0.0;
    double fcr_res = 0.0;
    std::vector<BoundaryError> boundary; // weeks 5..1
    std::vector<WeekRun> runs;           // weeks 6..1
    std::vector<Outputs> trajectory;     // progressive rollout, days 1..40
    double seconds = 0.0;

    double worst_relative_pct() const;
    double gap_relative() const { return (fcr_res - fcr_est) / fcr_est; }
};

struct PlanResult {
    FinalActionPlan plan;
    PlannerReport report;
};

using WeekProgress = std::function<void(int week, const evolve::GenerationStats&)>;

/// Reverse-week search: week 6 minimises predicted FCR; weeks 5..1 minimise
/// the gap between their last-day outputs and the previous-output genes
/// already fixed for the following week. Each week gets its own seed derived
/// from `ga.seed`.
PlanResult optimize_flock(const surrogate::ModelSet& models, const SearchSpace& space,
                          const evolve::GaConfig& ga, const WeekProgress& progress = {});

struct Rollout {
    std::vector<Outputs> days; // 1..40
    double fcr = 0.0;
    int clamped = 0; // genes pulled back into model bounds along the way
};

/// Chains the six week models forward from the plan's initial conditions,
/// feeding each week's last predicted day into the next week.
Rollout rollout_progressive(const surrogate::ModelSet& models, const FinalActionPlan& plan);
Rollout rollout_progressive(const surrogate::ModelSet& models, const std::vector<DayPlan>& plans,
                            const InitialConditions& ic);

} // namespace flockplan::planner

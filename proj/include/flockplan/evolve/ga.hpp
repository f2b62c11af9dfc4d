#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "flockplan/evolve/config.hpp"
#include "flockplan/evolve/operators.hpp"
#include "flockplan/evolve/restrictions.hpp"

namespace flockplan::evolve {

using FitnessFn = std::function<double(std::span<const double>)>;
/// Applied to every new child after mutation, before the final clamp. Used
/// to restore structural invariants the box alone cannot express.
using RepairFn = std::function<void(std::span<double>)>;

enum class StopReason { MaxGenerations, Stall, TargetReached, TimeBudget, RestrictionViolation };
const char* to_string(StopReason r);

struct GenerationStats {
    int generation = 0;
    double best = 0.0;
    double mean = 0.0;
    long evaluations = 0; // cumulative
};

struct GaResult {
    std::vector<double> best;
    double best_fitness = 0.0;
    std::vector<GenerationStats> history; // generation 0 is the initial population
    StopReason reason = StopReason::MaxGenerations;
    long evaluations = 0;
    double seconds = 0.0;
};

using ProgressFn = std::function<void(const GenerationStats&)>;

/// Generational GA minimising `fitness` inside `r`. The best individual is
/// carried over unchanged each generation, so history.best never increases.
/// Throws FitnessNonFinite on NaN/inf fitness.
GaResult run_ga(const FitnessFn& fitness, const Restrictions& r, const GaConfig& config,
                const RepairFn& repair = {}, const ProgressFn& progress = {});

/// CSV with header generation,best,mean,evaluations.
void write_history_csv(const std::vector<GenerationStats>& history, std::ostream& out);
void write_history_csv(const std::vector<GenerationStats>& history, const std::filesystem::path& path);

} // namespace flockplan::evolve

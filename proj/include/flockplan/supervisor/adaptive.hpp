#pragma once

#include <array>
#include <string>
#include <vector>

#include <json.hpp>

#include "flockplan/dataset/stats.hpp"
#include "flockplan/planner/integration.hpp"

namespace flockplan::supervisor {

struct AdaptiveConfig {
    /// New accepted flocks needed, as a fraction of the base dataset, before
    /// the models are checked at all.
    double min_fraction = 0.25;
    /// Retrain when the mean absolute relative error of any output over the
    /// new flocks exceeds this.
    double mare_threshold = 0.05;
    dataset::OutlierConfig outlier;
};

struct AdaptiveDecision {
    enum class Kind { Keep, Retrain } kind = Kind::Keep;
    int required = 0;
    std::vector<int> accepted;      // flock ids
    std::vector<int> rejected;      // outliers
    std::array<double, kOutputWidth> mare{}; // zero when not evaluated
    bool evaluated = false;
    std::string reason;
    std::vector<FlockSample> dataset; // base plus accepted, on retrain

    bool retrain() const { return kind == Kind::Retrain; }
};

nlohmann::json to_json(const AdaptiveDecision& d);

/// Smallest number of accepted new flocks that opens the model check.
int required_new_flocks(std::size_t base_size, double fraction);

/// Per-output mean absolute relative error of the chained six-week rollout
/// of each flock's own plans against its recorded days.
std::array<double, kOutputWidth> rollout_mare(const surrogate::ModelSet& models,
                                              const std::vector<FlockSample>& flocks);

/// Filters outliers out of `history` (completed flocks only), then once
/// enough remain compares the models against them.
AdaptiveDecision adaptive_cycle(const std::vector<FlockSample>& history, const std::vector<FlockSample>& base,
                                const surrogate::ModelSet& models, const AdaptiveConfig& config = {});

} // namespace flockplan::supervisor

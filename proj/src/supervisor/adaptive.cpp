#include "flockplan/supervisor/adaptive.hpp"

#include <cmath>

#include <fmt/format.h>

namespace flockplan::supervisor {

nlohmann::json to_json(const AdaptiveDecision& d) {
    return {{"decision", d.retrain() ? "retrain" : "keep"},
            {"required", d.required},
            {"accepted", d.accepted},
            {"rejected", d.rejected},
            {"evaluated", d.evaluated},
            {"mare", {{"mdw", d.mare[0]}, {"dfcpb", d.mare[1]}, {"nlbpa", d.mare[2]}}},
            {"reason", d.reason},
            {"dataset_size", d.dataset.size()}};
}

int required_new_flocks(std::size_t base_size, double fraction) {
    // The small epsilon keeps 0.25 * 12 at exactly 3 despite rounding.
    return std::max(1, static_cast<int>(std::ceil(fraction * static_cast<double>(base_size) - 1e-9)));
}

std::array<double, kOutputWidth> rollout_mare(const surrogate::ModelSet& models,
                                              const std::vector<FlockSample>& flocks) {
    std::array<double, kOutputWidth> sum{};
    long n = 0;
    for (const auto& f : flocks) {
        auto roll = planner::rollout_progressive(models, f.plans, f.initial);
        for (std::size_t d = 0; d < f.outcomes.size(); ++d) {
            const auto actual = f.outcomes[d].outputs();
            for (int k = 0; k < kOutputWidth; ++k)
                sum[k] += std::abs(roll.days[d][k] - actual[k]) / std::abs(actual[k]);
            ++n;
        }
    }
    if (n == 0) return sum;
    for (auto& s : sum) s /= static_cast<double>(n);
    return sum;
}

AdaptiveDecision adaptive_cycle(const std::vector<FlockSample>& history, const std::vector<FlockSample>& base,
                                const surrogate::ModelSet& models, const AdaptiveConfig& config) {
    if (base.empty()) throw InsufficientHistory("the base dataset is empty");
    AdaptiveDecision d;
    d.required = required_new_flocks(base.size(), config.min_fraction);

    std::vector<FlockSample> accepted;
    for (const auto& f : history) {
        validate(f);
        if (dataset::detect_outlier_flock(f, base, config.outlier).reject) {
            d.rejected.push_back(f.flock_id);
        } else {
            d.accepted.push_back(f.flock_id);
            accepted.push_back(f);
        }
    }
    if (static_cast<int>(accepted.size()) < d.required) {
        d.reason = fmt::format("{} accepted new flocks, {} needed", accepted.size(), d.required);
        return d;
    }

    d.mare = rollout_mare(models, accepted);
    d.evaluated = true;
    const char* names[] = {"MdW", "dFCpB", "NlBpA"};
    for (int k = 0; k < kOutputWidth; ++k) {
        if (d.mare[k] > config.mare_threshold) {
            d.kind = AdaptiveDecision::Kind::Retrain;
            d.reason = fmt::format("{} rollout error {:.2f}% exceeds {:.2f}%", names[k], 100.0 * d.mare[k],
                                   100.0 * config.mare_threshold);
            d.dataset = base;
            d.dataset.insert(d.dataset.end(), accepted.begin(), accepted.end());
            return d;
        }
    }
    d.reason = fmt::format("rollout errors {:.2f}% / {:.2f}% / {:.2f}% within {:.2f}%", 100.0 * d.mare[0],
                           100.0 * d.mare[1], 100.0 * d.mare[2], 100.0 * config.mare_threshold);
    return d;
}

} // namespace flockplan::supervisor

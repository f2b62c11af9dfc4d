#pragma once

// Synthetic flock generator. It stands in for farm records and doubles as the
// ground-truth response oracle: the same daily transition drives corpus
// generation, the condominium simulator and the ground-truth optimum search.

#include <array>
#include <cstdint>
#include <random>
#include <vector>

#include <json.hpp>

#include "flockplan/domain.hpp"

namespace flockplan::dataset {

struct GeneratorConfig {
    int schema_version = 1;

    // Comfort curves are piecewise linear through (anchor_day, value) points
    // and held flat outside the anchors.
    std::vector<double> anchor_days{4, 11, 18, 25, 32, 38};
    std::vector<double> comfort_t{31.415, 28.13, 26.615, 25.435, 24.21, 24.175};
    std::vector<double> comfort_h{54.82, 65.38, 67.35, 73.815, 77.205, 77.395};
    /// Added to the true comfort temperature the birds respond to. Plans keep
    /// following the unshifted curve, which is how a drifting flock looks.
    double comfort_shift_c = 0.0;

    double arrival_weight_g = 42.0;
    double asymptote_g = 5005.0;
    double growth_rate = 0.09;
    double midpoint_day = 36.0;

    double temp_sensitivity = 0.03;      // per degC^2 of Tavg deviation
    double humidity_sensitivity = 0.0006; // per %^2 of Havg deviation

    double feed_per_gain = 1.25;     // g feed per g gained
    double maintenance = 0.135;      // g feed per g^0.75 of body weight per day
    double cold_intake_factor = 0.06; // extra maintenance per degC below comfort

    double base_mortality = 0.0003;
    double early_cull = 0.0015;
    int early_cull_days = 10;
    double heat_mortality = 0.002; // per degC of Tmax above comfort + margin
    double heat_margin_c = 3.0;
    int heat_after_day = 25;

    double gain_noise = 0.01;        // daily multiplicative sd
    double flock_gain_noise = 0.004; // per-flock multiplicative sd
    double arrival_noise_g = 0.3;
    double stocking_noise = 0.01; // relative sd of birds placed per flock
    bool mortality_noise = true;

    // Specialist plans: comfort + per-flock offset + daily jitter.
    double plan_offset_t = 0.15;
    double plan_offset_h = 1.0;
    double plan_jitter_t = 0.6;
    double plan_jitter_h = 2.0;
    double plan_spread_t_lo = 1.5;
    double plan_spread_t_hi = 2.5;
    double plan_spread_h_lo = 4.0;
    double plan_spread_h_hi = 8.0;

    std::uint64_t seed = 2024;

    /// Same curves with every noise source switched off.
    GeneratorConfig noiseless() const;

    double comfort_temperature(double day) const;
    double comfort_humidity(double day) const;
    /// Noise-free reference weight on day t (t = 0 is arrival).
    double reference_weight(double day) const;

    /// Throws ConfigDomain on malformed curves or negative scales.
    void validate() const;
};

void to_json(nlohmann::json& j, const GeneratorConfig& c);
void from_json(const nlohmann::json& j, GeneratorConfig& c);

/// Mutable state of one flock between days.
struct FlockState {
    int day = 0;
    double mdw = 0.0;
    double dfc = 0.0;
    std::int64_t nlb = 0;
    double flock_factor = 1.0;
    HouseGeometry geometry;
};

/// Draws the per-flock random effects (arrival weight, growth factor).
FlockState start_flock(const GeneratorConfig& config, const HouseGeometry& geometry,
                       std::int64_t initial_birds, std::mt19937_64& rng);

/// One-day transition. `extra_deaths` are operator-reported deaths added to
/// the day's mortality before living birds are updated.
DayOutcome step_flock(const GeneratorConfig& config, FlockState& state, const DayPlan& plan,
                      std::mt19937_64& rng, std::int64_t extra_deaths = 0);

/// The generator stream generate_flock uses for `seed`.
std::mt19937_64 flock_rng(std::uint64_t seed);

/// Whole-flock generation; equal to start_flock then 40 calls of step_flock
/// on flock_rng(seed).
FlockSample generate_flock(const GeneratorConfig& config, const std::vector<DayPlan>& plans,
                           const HouseGeometry& house, std::int64_t initial_birds,
                           std::uint64_t seed);

std::vector<DayPlan> comfort_plans(const GeneratorConfig& config, double t_spread = 2.0,
                                   double h_spread = 6.0);
std::vector<DayPlan> specialist_plans(const GeneratorConfig& config, std::mt19937_64& rng);

struct HouseSpec {
    int house = 0;
    HouseGeometry geometry;
    std::int64_t initial_birds = 0;
};

/// The three-house condominium used for the default corpus.
std::vector<HouseSpec> default_houses();

/// Flock k (0-based) is housed in houses[k % houses.size()] and seeded from
/// (config.seed, k) so corpora are reproducible and extendable.
std::vector<FlockSample> generate_corpus(const GeneratorConfig& config, int n_flocks,
                                         const std::vector<HouseSpec>& houses = default_houses(),
                                         int first_flock_id = 1);

/// Day-40 FCR of a plan under the noise-free generator.
double noiseless_fcr(const GeneratorConfig& config, const std::vector<DayPlan>& plans,
                     const HouseSpec& house);

struct GroundTruthOptimum {
    std::vector<DayPlan> plans;
    double fcr = 0.0;
};

/// Coordinate search over each day's Tavg/Havg (Tmax held at Tavg + 2) on the
/// noise-free generator. The response is nearly separable per day so a few
/// sweeps converge.
GroundTruthOptimum ground_truth_optimum(const GeneratorConfig& config, const HouseSpec& house,
                                        int sweeps = 2);

} // namespace flockplan::dataset

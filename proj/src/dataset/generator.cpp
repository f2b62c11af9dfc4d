#include "flockplan/dataset/generator.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

namespace flockplan::dataset {

namespace {

double interp(const std::vector<double>& xs, const std::vector<double>& ys, double x) {
    if (x <= xs.front()) return ys.front();
    if (x >= xs.back()) return ys.back();
    auto hi = std::upper_bound(xs.begin(), xs.end(), x);
    auto k = static_cast<std::size_t>(hi - xs.begin());
    double w = (x - xs[k - 1]) / (xs[k] - xs[k - 1]);
    return ys[k - 1] + w * (ys[k] - ys[k - 1]);
}

double logistic(const GeneratorConfig& c, double t) {
    return 1.0 / (1.0 + std::exp(-c.growth_rate * (t - c.midpoint_day)));
}

std::mt19937_64 seeded(std::uint64_t a, std::uint64_t b, std::uint64_t c = 0) {
    std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                      static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(c)};
    return std::mt19937_64(seq);
}

} // namespace

std::mt19937_64 flock_rng(std::uint64_t seed) { return seeded(seed, 0); }

GeneratorConfig GeneratorConfig::noiseless() const {
    GeneratorConfig c = *this;
    c.gain_noise = 0.0;
    c.flock_gain_noise = 0.0;
    c.arrival_noise_g = 0.0;
    c.mortality_noise = false;
    return c;
}

double GeneratorConfig::comfort_temperature(double day) const { return interp(anchor_days, comfort_t, day); }
double GeneratorConfig::comfort_humidity(double day) const { return interp(anchor_days, comfort_h, day); }

double GeneratorConfig::reference_weight(double day) const {
    return arrival_weight_g + asymptote_g * (logistic(*this, day) - logistic(*this, 0.0));
}

void GeneratorConfig::validate() const {
    if (schema_version != 1) throw SchemaVersionError("unsupported generator schema_version " + std::to_string(schema_version));
    if (anchor_days.size() < 2 || comfort_t.size() != anchor_days.size() || comfort_h.size() != anchor_days.size()) {
        throw ConfigDomain("comfort curves need at least two anchors and matching lengths");
    }
    if (!std::is_sorted(anchor_days.begin(), anchor_days.end()) ||
        std::adjacent_find(anchor_days.begin(), anchor_days.end()) != anchor_days.end()) {
        throw ConfigDomain("anchor days must be strictly increasing");
    }
    for (double h : comfort_h) {
        if (h < 0.0 || h > 100.0) throw ConfigDomain("comfort humidity outside [0, 100]");
    }
    if (!(asymptote_g > 0.0) || !(growth_rate > 0.0) || !(arrival_weight_g > 0.0)) {
        throw ConfigDomain("growth parameters must be positive");
    }
    for (double s : {temp_sensitivity, humidity_sensitivity, feed_per_gain, maintenance, cold_intake_factor,
                     base_mortality, early_cull, heat_mortality, gain_noise, flock_gain_noise, arrival_noise_g,
                     plan_offset_t, plan_offset_h, plan_jitter_t, plan_jitter_h, stocking_noise}) {
        if (!(s >= 0.0)) throw ConfigDomain("sensitivities, rates and noise scales must be non-negative");
    }
    if (plan_spread_t_lo > plan_spread_t_hi || plan_spread_h_lo > plan_spread_h_hi || plan_spread_t_lo < 0.0 ||
        plan_spread_h_lo < 0.0) {
        throw ConfigDomain("plan spread ranges must be ordered and non-negative");
    }
}

void to_json(nlohmann::json& j, const GeneratorConfig& c) {
    j = nlohmann::json{
        {"schema_version", c.schema_version},
        {"anchor_days", c.anchor_days},
        {"comfort_t", c.comfort_t},
        {"comfort_h", c.comfort_h},
        {"comfort_shift_c", c.comfort_shift_c},
        {"arrival_weight_g", c.arrival_weight_g},
        {"asymptote_g", c.asymptote_g},
        {"growth_rate", c.growth_rate},
        {"midpoint_day", c.midpoint_day},
        {"temp_sensitivity", c.temp_sensitivity},
        {"humidity_sensitivity", c.humidity_sensitivity},
        {"feed_per_gain", c.feed_per_gain},
        {"maintenance", c.maintenance},
        {"cold_intake_factor", c.cold_intake_factor},
        {"base_mortality", c.base_mortality},
        {"early_cull", c.early_cull},
        {"early_cull_days", c.early_cull_days},
        {"heat_mortality", c.heat_mortality},
        {"heat_margin_c", c.heat_margin_c},
        {"heat_after_day", c.heat_after_day},
        {"gain_noise", c.gain_noise},
        {"flock_gain_noise", c.flock_gain_noise},
        {"arrival_noise_g", c.arrival_noise_g},
        {"stocking_noise", c.stocking_noise},
        {"mortality_noise", c.mortality_noise},
        {"plan_offset_t", c.plan_offset_t},
        {"plan_offset_h", c.plan_offset_h},
        {"plan_jitter_t", c.plan_jitter_t},
        {"plan_jitter_h", c.plan_jitter_h},
        {"plan_spread_t", {c.plan_spread_t_lo, c.plan_spread_t_hi}},
        {"plan_spread_h", {c.plan_spread_h_lo, c.plan_spread_h_hi}},
        {"seed", c.seed},
    };
}

void from_json(const nlohmann::json& j, GeneratorConfig& c) {
    GeneratorConfig d;
    c.schema_version = j.value("schema_version", 0);
    if (c.schema_version != 1) throw SchemaVersionError("generator config needs schema_version 1");
    auto get = [&](const char* key, auto& field) {
        if (j.contains(key)) j.at(key).get_to(field);
    };
    c = d;
    get("anchor_days", c.anchor_days);
    get("comfort_t", c.comfort_t);
    get("comfort_h", c.comfort_h);
    get("comfort_shift_c", c.comfort_shift_c);
    get("arrival_weight_g", c.arrival_weight_g);
    get("asymptote_g", c.asymptote_g);
    get("growth_rate", c.growth_rate);
    get("midpoint_day", c.midpoint_day);
    get("temp_sensitivity", c.temp_sensitivity);
    get("humidity_sensitivity", c.humidity_sensitivity);
    get("feed_per_gain", c.feed_per_gain);
    get("maintenance", c.maintenance);
    get("cold_intake_factor", c.cold_intake_factor);
    get("base_mortality", c.base_mortality);
    get("early_cull", c.early_cull);
    get("early_cull_days", c.early_cull_days);
    get("heat_mortality", c.heat_mortality);
    get("heat_margin_c", c.heat_margin_c);
    get("heat_after_day", c.heat_after_day);
    get("gain_noise", c.gain_noise);
    get("flock_gain_noise", c.flock_gain_noise);
    get("arrival_noise_g", c.arrival_noise_g);
    get("stocking_noise", c.stocking_noise);
    get("mortality_noise", c.mortality_noise);
    get("plan_offset_t", c.plan_offset_t);
    get("plan_offset_h", c.plan_offset_h);
    get("plan_jitter_t", c.plan_jitter_t);
    get("plan_jitter_h", c.plan_jitter_h);
    if (j.contains("plan_spread_t")) {
        c.plan_spread_t_lo = j.at("plan_spread_t").at(0).get<double>();
        c.plan_spread_t_hi = j.at("plan_spread_t").at(1).get<double>();
    }
    if (j.contains("plan_spread_h")) {
        c.plan_spread_h_lo = j.at("plan_spread_h").at(0).get<double>();
        c.plan_spread_h_hi = j.at("plan_spread_h").at(1).get<double>();
    }
    get("seed", c.seed);
    c.validate();
}

FlockState start_flock(const GeneratorConfig& c, const HouseGeometry& geometry, std::int64_t initial_birds,
                       std::mt19937_64& rng) {
    if (initial_birds <= 0) throw ConfigDomain("a flock needs at least one bird");
    if (geometry.area_m2() <= 0.0) throw ConfigDomain("house area must be positive");
    std::normal_distribution<double> unit(0.0, 1.0);
    FlockState s;
    s.geometry = geometry;
    s.nlb = initial_birds;
    // Draw both effects unconditionally so noise settings never shift the stream.
    double z_arrival = unit(rng);
    double z_flock = unit(rng);
    s.mdw = c.arrival_weight_g + c.arrival_noise_g * z_arrival;
    s.flock_factor = std::max(0.5, 1.0 + c.flock_gain_noise * z_flock);
    return s;
}

DayOutcome step_flock(const GeneratorConfig& c, FlockState& s, const DayPlan& plan, std::mt19937_64& rng,
                      std::int64_t extra_deaths) {
    validate(plan);
    if (s.day >= kFlockDays) throw FlockComplete("flock already reached day 40");
    const int t = s.day + 1;
    if (plan.day != t) throw InvalidPlan("plan for day " + std::to_string(plan.day) + " applied on day " + std::to_string(t));

    const double tc = c.comfort_temperature(t) + c.comfort_shift_c;
    const double hc = c.comfort_humidity(t);
    const double dt = plan.t_avg - tc;
    const double dh = plan.h_avg - hc;

    std::normal_distribution<double> unit(0.0, 1.0);
    const double z_gain = unit(rng);

    const double potential = c.asymptote_g * (logistic(c, t) - logistic(c, t - 1));
    const double stress = std::exp(-c.temp_sensitivity * dt * dt) * std::exp(-c.humidity_sensitivity * dh * dh);
    const double gain = potential * stress * s.flock_factor * std::max(0.0, 1.0 + c.gain_noise * z_gain);

    const double cold = std::max(0.0, -dt);
    const double intake_g = c.feed_per_gain * gain +
                            c.maintenance * std::pow(s.mdw, 0.75) * (1.0 + c.cold_intake_factor * cold);

    double rate = c.base_mortality;
    if (t <= c.early_cull_days) rate += c.early_cull;
    if (t > c.heat_after_day) rate += c.heat_mortality * std::max(0.0, plan.t_max - (tc + c.heat_margin_c));
    rate = std::clamp(rate, 0.0, 1.0);

    std::int64_t dm = 0;
    if (c.mortality_noise) {
        std::binomial_distribution<std::int64_t> deaths(s.nlb, rate);
        dm = deaths(rng);
    } else {
        dm = std::llround(static_cast<double>(s.nlb) * rate);
    }
    dm = std::min(s.nlb, dm + std::max<std::int64_t>(0, extra_deaths));
    if (dm >= s.nlb) throw NegativeFlock("every bird in the house died on day " + std::to_string(t));

    s.nlb -= dm;
    s.mdw += gain;
    s.dfc += intake_g / 1000.0 * static_cast<double>(s.nlb);
    s.day = t;

    DayOutcome o;
    o.day = t;
    o.mdw = s.mdw;
    o.dm = dm;
    o.nlb = s.nlb;
    o.dfc = s.dfc;
    auto an = normalize_by_area(static_cast<double>(dm), static_cast<double>(s.nlb), s.dfc, s.geometry,
                                static_cast<double>(s.nlb));
    o.dmpa = an.dmpa;
    o.nlbpa = an.nlbpa;
    o.dfcpb = an.dfcpb;
    return o;
}

FlockSample generate_flock(const GeneratorConfig& config, const std::vector<DayPlan>& plans, const HouseGeometry& house,
                           std::int64_t initial_birds, std::uint64_t seed) {
    config.validate();
    if (plans.size() != kFlockDays) throw ShapeError("generate_flock needs 40 day plans");
    auto rng = flock_rng(seed);
    FlockState state = start_flock(config, house, initial_birds, rng);

    FlockSample s;
    s.geometry = house;
    s.initial_birds = initial_birds;
    s.initial = {state.mdw, 0.0, static_cast<double>(initial_birds) / house.area_m2()};
    s.plans = plans;
    s.outcomes.reserve(kFlockDays);
    for (const auto& p : plans) s.outcomes.push_back(step_flock(config, state, p, rng));
    return s;
}

namespace {

DayPlan make_plan(int day, double t_avg, double h_avg, double t_lo, double t_hi, double h_lo, double h_hi) {
    DayPlan p;
    p.day = day;
    p.t_avg = t_avg;
    p.t_min = t_avg - t_lo;
    p.t_max = t_avg + t_hi;
    p.h_avg = std::clamp(h_avg, 0.0, 100.0);
    p.h_min = std::clamp(p.h_avg - h_lo, 0.0, 100.0);
    p.h_max = std::clamp(p.h_avg + h_hi, 0.0, 100.0);
    return p;
}

} // namespace

std::vector<DayPlan> comfort_plans(const GeneratorConfig& c, double t_spread, double h_spread) {
    std::vector<DayPlan> plans;
    for (int t = 1; t <= kFlockDays; ++t) {
        plans.push_back(make_plan(t, c.comfort_temperature(t), c.comfort_humidity(t), t_spread, t_spread, h_spread,
                                  h_spread));
    }
    return plans;
}

std::vector<DayPlan> specialist_plans(const GeneratorConfig& c, std::mt19937_64& rng) {
    std::normal_distribution<double> unit(0.0, 1.0);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    const double off_t = c.plan_offset_t * unit(rng);
    const double off_h = c.plan_offset_h * unit(rng);
    auto lerp = [&](double lo, double hi) { return lo + (hi - lo) * uni(rng); };
    std::vector<DayPlan> plans;
    for (int t = 1; t <= kFlockDays; ++t) {
        double t_avg = c.comfort_temperature(t) + off_t + c.plan_jitter_t * unit(rng);
        double h_avg = c.comfort_humidity(t) + off_h + c.plan_jitter_h * unit(rng);
        double t_lo = lerp(c.plan_spread_t_lo, c.plan_spread_t_hi);
        double t_hi = lerp(c.plan_spread_t_lo, c.plan_spread_t_hi);
        double h_lo = lerp(c.plan_spread_h_lo, c.plan_spread_h_hi);
        double h_hi = lerp(c.plan_spread_h_lo, c.plan_spread_h_hi);
        plans.push_back(make_plan(t, t_avg, h_avg, t_lo, t_hi, h_lo, h_hi));
    }
    return plans;
}

std::vector<HouseSpec> default_houses() {
    return {
        {1, {150.0, 16.0, 36500}, 34800},
        {2, {150.0, 12.0, 27800}, 26500},
        {3, {150.0, 15.0, 32000}, 29000},
    };
}

std::vector<FlockSample> generate_corpus(const GeneratorConfig& config, int n_flocks,
                                         const std::vector<HouseSpec>& houses, int first_flock_id) {
    config.validate();
    if (n_flocks < 0) throw ConfigDomain("flock count must be non-negative");
    if (houses.empty()) throw ConfigDomain("corpus needs at least one house");
    std::vector<FlockSample> out;
    for (int k = 0; k < n_flocks; ++k) {
        const int id = first_flock_id + k;
        const auto& h = houses[static_cast<std::size_t>(id - 1) % houses.size()];
        auto plan_rng = seeded(config.seed, static_cast<std::uint64_t>(id), 1);
        auto plans = specialist_plans(config, plan_rng);
        std::normal_distribution<double> unit(0.0, 1.0);
        const double placed = static_cast<double>(h.initial_birds) * (1.0 + config.stocking_noise * unit(plan_rng));
        const auto birds = std::clamp<std::int64_t>(std::llround(placed), 1, h.geometry.capacity);
        std::uint64_t flock_seed = config.seed * 1000003ULL + static_cast<std::uint64_t>(id);
        auto s = generate_flock(config, plans, h.geometry, birds, flock_seed);
        s.flock_id = id;
        s.house = h.house;
        out.push_back(std::move(s));
    }
    return out;
}

double noiseless_fcr(const GeneratorConfig& config, const std::vector<DayPlan>& plans, const HouseSpec& house) {
    auto s = generate_flock(config.noiseless(), plans, house.geometry, house.initial_birds, 0);
    const auto& last = s.outcomes.back();
    return fcr_normalized(last.dfcpb, last.nlbpa, last.mdw);
}

GroundTruthOptimum ground_truth_optimum(const GeneratorConfig& config, const HouseSpec& house, int sweeps) {
    auto plans = comfort_plans(config);
    double best = noiseless_fcr(config, plans, house);
    auto set_day = [](DayPlan& p, double t_avg, double h_avg) {
        p.t_min = t_avg - 2.0;
        p.t_avg = t_avg;
        p.t_max = t_avg + 2.0;
        p.h_avg = h_avg;
        p.h_min = std::max(0.0, h_avg - 6.0);
        p.h_max = std::min(100.0, h_avg + 6.0);
    };
    for (int sweep = 0; sweep < sweeps; ++sweep) {
        for (auto& p : plans) {
            const double tc = p.t_avg;
            const double hc = p.h_avg;
            double best_t = tc;
            double best_h = hc;
            for (int a = -20; a <= 20; ++a) {
                for (int b = -5; b <= 5; ++b) {
                    set_day(p, tc + 0.05 * a, hc + 0.5 * b);
                    if (!is_valid(p)) continue;
                    double f = noiseless_fcr(config, plans, house);
                    if (f < best) {
                        best = f;
                        best_t = p.t_avg;
                        best_h = p.h_avg;
                    }
                }
            }
            set_day(p, best_t, best_h);
        }
    }
    return {plans, best};
}

} // namespace flockplan::dataset

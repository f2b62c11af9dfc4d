#include "flockplan/planner/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <sstream>

#include "flockplan/dataset/partition.hpp"

namespace flockplan::planner {

using dataset::day_offset;

std::size_t GridAxis::points() const {
    if (!(step > 0.0) || !(hi >= lo)) throw ConfigDomain("grid axis needs step > 0 and hi >= lo");
    return static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
}

double grid_cardinality(const std::vector<GridAxis>& axes) {
    double n = 1.0;
    for (const auto& a : axes) n *= static_cast<double>(a.points());
    return n;
}

OracleResult exhaustive_oracle(const std::vector<GridAxis>& axes, const Objective& f, double budget) {
    if (axes.empty()) throw ConfigDomain("grid needs at least one axis");
    const double card = grid_cardinality(axes);
    if (card > budget) {
        std::ostringstream msg;
        msg.precision(3);
        msg << "grid has " << card << " points, budget is " << budget;
        throw BudgetExceeded(msg.str());
    }
    std::vector<std::size_t> idx(axes.size(), 0), size(axes.size());
    for (std::size_t a = 0; a < axes.size(); ++a) size[a] = axes[a].points();
    std::vector<double> point(axes.size());
    OracleResult best;
    best.value = std::numeric_limits<double>::infinity();
    for (;;) {
        for (std::size_t a = 0; a < axes.size(); ++a) point[a] = axes[a].lo + static_cast<double>(idx[a]) * axes[a].step;
        const double v = f(point);
        ++best.evaluations;
        if (v < best.value) {
            best.value = v;
            best.point = point;
        }
        std::size_t a = axes.size();
        while (a > 0) {
            --a;
            if (++idx[a] < size[a]) break;
            idx[a] = 0;
            if (a == 0) return best;
        }
    }
}

std::vector<GridAxis> full_plan_grid(const WeekRestrictions& restrictions, double t_step, double h_step) {
    std::vector<GridAxis> axes;
    for (int w = 1; w <= kWeeks; ++w) {
        const auto& r = restrictions[static_cast<std::size_t>(w - 1)];
        const int len = dataset::week_span(w).length;
        for (int d = 1; d <= len; ++d) {
            const auto o = static_cast<std::size_t>(day_offset(d));
            for (std::size_t k = 1; k < kPlanWidth; ++k) {
                axes.push_back({r.lower[o + k], r.upper[o + k], k <= 3 ? t_step : h_step});
            }
        }
    }
    return axes;
}

evolve::Restrictions TinyInstance::box() const {
    std::vector<double> lo, hi;
    for (const auto& a : axes) {
        lo.push_back(a.lo);
        hi.push_back(a.lo + static_cast<double>(a.points() - 1) * a.step);
    }
    return {lo, hi};
}

TinyInstance generator_instance(const dataset::GeneratorConfig& config, const dataset::HouseSpec& house, int days,
                                bool with_humidity, double t_halfwidth, double h_halfwidth) {
    if (days < 1 || days > kFlockDays) throw ConfigDomain("tiny instance needs 1..40 days");
    TinyInstance inst;
    inst.name = "generator " + std::to_string(days) + "d " + (with_humidity ? "T+H" : "T");
    const auto base = dataset::comfort_plans(config);
    for (int d = 1; d <= days; ++d) {
        const double t = config.comfort_temperature(d);
        inst.axes.push_back({t - t_halfwidth, t + t_halfwidth, 0.5});
        if (with_humidity) {
            const double h = config.comfort_humidity(d);
            inst.axes.push_back({h - h_halfwidth, h + h_halfwidth, 1.0});
        }
    }
    const auto quiet = config.noiseless();
    inst.objective = [quiet, house, base, days, with_humidity](std::span<const double> x) {
        std::mt19937_64 rng(0);
        auto state = dataset::start_flock(quiet, house.geometry, house.initial_birds, rng);
        DayOutcome o;
        std::size_t k = 0;
        for (int d = 1; d <= days; ++d) {
            DayPlan p = base[static_cast<std::size_t>(d - 1)];
            const double dt = x[k++] - p.t_avg;
            p.t_min += dt;
            p.t_avg += dt;
            p.t_max += dt;
            if (with_humidity) {
                const double dh = x[k++] - p.h_avg;
                p.h_min = std::clamp(p.h_min + dh, 0.0, 100.0);
                p.h_avg += dh;
                p.h_max = std::clamp(p.h_max + dh, 0.0, 100.0);
            }
            o = dataset::step_flock(quiet, state, p, rng);
        }
        return fcr_normalized(o.dfcpb, o.nlbpa, o.mdw);
    };
    return inst;
}

TinyInstance surrogate_instance(const surrogate::WeekModel& week1, const evolve::Restrictions& r,
                                const std::vector<double>& base, int days) {
    if (week1.week != 1) throw DimensionMismatch("surrogate instance uses the week-1 model");
    if (days < 1 || days > week1.week_len) throw ConfigDomain("surrogate instance needs 1..7 days");
    if (static_cast<int>(base.size()) != week1.genome_length()) throw DimensionMismatch("base genome does not match week 1");
    TinyInstance inst;
    inst.name = "surrogate week1 " + std::to_string(days) + "d T";
    for (int d = 1; d <= days; ++d) {
        const auto o = static_cast<std::size_t>(day_offset(d)) + 2;
        inst.axes.push_back({r.lower[o], r.upper[o], 0.5});
    }
    auto kernel = std::make_shared<WeekKernel>(week1);
    inst.objective = [kernel, base, days](std::span<const double> x) {
        auto g = base;
        for (int d = 1; d <= days; ++d) {
            const auto o = static_cast<std::size_t>(day_offset(d));
            const double dt = x[static_cast<std::size_t>(d - 1)] - g[o + 2];
            g[o + 1] += dt;
            g[o + 2] += dt;
            g[o + 3] += dt;
        }
        const auto y = kernel->last_raw(g);
        return fcr_normalized(y[1], y[2], y[0]);
    };
    return inst;
}

std::vector<DayPlan> random_plan(const WeekRestrictions& r, RandomPlanKind kind, const dataset::GeneratorConfig& config,
                                 std::mt19937_64& rng) {
    std::vector<DayPlan> plans;
    if (kind == RandomPlanKind::Specialist) {
        plans = dataset::specialist_plans(config, rng);
    } else {
        plans.resize(kFlockDays);
        for (int d = 1; d <= kFlockDays; ++d) plans[static_cast<std::size_t>(d - 1)].day = d;
    }
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int w = 1; w <= kWeeks; ++w) {
        const auto span = dataset::week_span(w);
        const auto& box = r[static_cast<std::size_t>(w - 1)];
        for (int d = 1; d <= span.length; ++d) {
            auto& p = plans[static_cast<std::size_t>(span.first_day + d - 2)];
            auto v = p.as_vector();
            const auto o = static_cast<std::size_t>(day_offset(d));
            for (std::size_t k = 1; k < kPlanWidth; ++k) {
                if (kind == RandomPlanKind::Uniform) v[k] = box.lower[o + k] + u(rng) * (box.upper[o + k] - box.lower[o + k]);
                v[k] = std::clamp(v[k], box.lower[o + k], box.upper[o + k]);
            }
            std::sort(v.begin() + 1, v.begin() + 4);
            std::sort(v.begin() + 4, v.begin() + 7);
            p = DayPlan::from_vector(v);
        }
    }
    return plans;
}

BenchmarkResult benchmark_random_specialists(const surrogate::ModelSet& models, int n, const WeekRestrictions& r,
                                             std::uint64_t seed, const InitialConditions& ic, RandomPlanKind kind,
                                             const dataset::GeneratorConfig& config) {
    if (n < 1) throw ConfigDomain("benchmark needs at least one plan");
    std::mt19937_64 rng(seed);
    BenchmarkResult out;
    out.best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
        auto plans = random_plan(r, kind, config, rng);
        const double f = rollout_progressive(models, plans, ic).fcr;
        out.fcr.push_back(f);
        if (f < out.best) {
            out.best = f;
            out.best_index = static_cast<std::size_t>(i);
            out.best_plan = std::move(plans);
        }
    }
    double sum = 0.0, sq = 0.0;
    for (double f : out.fcr) sum += f;
    out.mean = sum / n;
    for (double f : out.fcr) sq += (f - out.mean) * (f - out.mean);
    out.sd = n > 1 ? std::sqrt(sq / (n - 1)) : 0.0;
    return out;
}

} // namespace flockplan::planner

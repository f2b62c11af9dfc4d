#include "flockplan/planner/integration.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "flockplan/dataset/partition.hpp"

namespace flockplan::planner {

using dataset::day_offset;
using dataset::week_span;
using surrogate::kPrevOutputOffset;

namespace {

constexpr std::size_t kMdw0 = kPrevOutputOffset;
constexpr std::size_t kDfcpb0 = kPrevOutputOffset + 1;

double start_ratio(std::span<const double> g) { return 1000.0 * g[kDfcpb0] / g[kMdw0]; }

} // namespace

evolve::InequalityForm SearchSpace::inequality(int week) const {
    const auto& box = boxes.at(static_cast<std::size_t>(week - 1));
    auto form = box.to_inequality();
    const auto& band = start_fcr[static_cast<std::size_t>(week - 1)];
    if (!band.active()) return form;
    const std::size_t n = box.size();
    Matrix a(form.a.rows() + 2, n);
    std::copy(form.a.data().begin(), form.a.data().end(), a.data().begin());
    const std::size_t r = form.a.rows();
    a(r, kMdw0) = -band.hi;
    a(r, kDfcpb0) = 1000.0;
    a(r + 1, kMdw0) = band.lo;
    a(r + 1, kDfcpb0) = -1000.0;
    form.a = std::move(a);
    form.b.push_back(0.0);
    form.b.push_back(0.0);
    return form;
}

bool SearchSpace::feasible(int week, std::span<const double> g) const {
    if (!evolve::check_restrictions(g, boxes.at(static_cast<std::size_t>(week - 1)))) return false;
    const auto& band = start_fcr[static_cast<std::size_t>(week - 1)];
    if (!band.active()) return true;
    const double f = start_ratio(g);
    // relative slack for the rounding of the projection below
    return f >= band.lo * (1.0 - 1e-12) && f <= band.hi * (1.0 + 1e-12);
}

void SearchSpace::project_start(int week, std::span<double> g) const {
    const auto& box = boxes.at(static_cast<std::size_t>(week - 1));
    const auto& band = start_fcr[static_cast<std::size_t>(week - 1)];
    if (band.active()) {
        const double f = start_ratio(g);
        const double target = std::clamp(f, band.lo, band.hi);
        if (target != f) {
            g[kDfcpb0] = target * g[kMdw0] / 1000.0;
            if (g[kDfcpb0] < box.lower[kDfcpb0] || g[kDfcpb0] > box.upper[kDfcpb0]) {
                g[kDfcpb0] = std::clamp(g[kDfcpb0], box.lower[kDfcpb0], box.upper[kDfcpb0]);
                g[kMdw0] = 1000.0 * g[kDfcpb0] / target;
            }
        }
    }
    box.clamp(g);
}

SearchSpace derive_search_space(const std::vector<FlockSample>& corpus) {
    if (corpus.empty()) throw InsufficientData("restrictions need at least one flock");
    const auto weeks = dataset::partition_weeks(corpus);
    SearchSpace out;
    for (int w = 1; w <= kWeeks; ++w) {
        const auto& ds = weeks[static_cast<std::size_t>(w - 1)];
        const std::size_t n = ds.inputs.cols();
        std::vector<double> lo(n), hi(n);
        for (std::size_t k = 0; k < n; ++k) {
            lo[k] = hi[k] = ds.inputs(0, k);
            for (std::size_t r = 1; r < ds.inputs.rows(); ++r) {
                lo[k] = std::min(lo[k], ds.inputs(r, k));
                hi[k] = std::max(hi[k], ds.inputs(r, k));
            }
        }
        const auto span = week_span(w);
        for (int d = 1; d <= span.length; ++d) {
            const auto o = static_cast<std::size_t>(day_offset(d));
            lo[o] = hi[o] = span.first_day + d - 1;
        }
        out.boxes[static_cast<std::size_t>(w - 1)] = evolve::Restrictions(std::move(lo), std::move(hi));
        if (w > 1) {
            auto& band = out.start_fcr[static_cast<std::size_t>(w - 1)];
            band.lo = std::numeric_limits<double>::infinity();
            band.hi = 0.0;
            for (std::size_t r = 0; r < ds.inputs.rows(); ++r) {
                const double f = start_ratio(ds.inputs.row(r));
                band.lo = std::min(band.lo, f);
                band.hi = std::max(band.hi, f);
            }
        }
    }
    return out;
}

SearchSpace tighten_to_reachable(const surrogate::ModelSet& models, SearchSpace space, double coverage, int samples,
                                 std::uint64_t seed) {
    if (samples < 1) throw ConfigDomain("reachability needs at least one sample");
    if (!(coverage > 0.0 && coverage <= 1.0)) throw ConfigDomain("coverage must lie in (0, 1]");
    std::mt19937_64 rng(seed);
    auto central = [coverage](std::vector<double>& s) {
        std::sort(s.begin(), s.end());
        const double tail = 0.5 * (1.0 - coverage) * static_cast<double>(s.size() - 1);
        return std::pair{s[static_cast<std::size_t>(std::ceil(tail))],
                         s[static_cast<std::size_t>(std::floor(static_cast<double>(s.size() - 1) - tail))]};
    };
    for (int w = 1; w < kWeeks; ++w) {
        const auto& m = models[static_cast<std::size_t>(w - 1)];
        const auto& box = space.boxes[static_cast<std::size_t>(w - 1)];
        if (static_cast<int>(box.size()) != m.genome_length()) throw DimensionMismatch("restrictions do not match week " + std::to_string(w));
        WeekKernel k(m);
        auto pop = evolve::init_population(box, samples, rng);
        std::array<std::vector<double>, kOutputWidth> seen;
        std::vector<double> fcr;
        for (std::size_t i = 0; i < pop.size(); ++i) {
            auto g = pop.genes.row(i);
            repair_week_genome(g, m.week_len);
            space.project_start(w, g);
            const auto y = k.last_raw(g);
            for (std::size_t v = 0; v < kOutputWidth; ++v) seen[v].push_back(y[v]);
            fcr.push_back(1000.0 * y[1] / y[0]);
        }
        auto& next = space.boxes[static_cast<std::size_t>(w)];
        const auto& nb = models[static_cast<std::size_t>(w)].bounds;
        for (std::size_t v = 0; v < kOutputWidth; ++v) {
            const auto [lo, hi] = central(seen[v]);
            const auto pos = static_cast<std::size_t>(kPrevOutputOffset) + v;
            double a = std::max(next.lower[pos], lo);
            double b = std::min(next.upper[pos], hi);
            if (a > b) {
                // The model never reaches the corpus range; trust the model,
                // within what the next model can normalise.
                a = std::clamp(lo, nb.mini[pos], nb.maxi[pos]);
                b = std::clamp(hi, nb.mini[pos], nb.maxi[pos]);
            }
            next.lower[pos] = a;
            next.upper[pos] = b;
        }
        auto& band = space.start_fcr[static_cast<std::size_t>(w)];
        const auto [flo, fhi] = central(fcr);
        if (std::max(band.lo, flo) <= std::min(band.hi, fhi)) {
            band = {std::max(band.lo, flo), std::min(band.hi, fhi)};
        } else {
            band = {flo, fhi};
        }
    }
    return space;
}

void pin_initial_conditions(SearchSpace& space, const InitialConditions& ic) {
    const auto v = ic.as_vector();
    for (int k = 0; k < kOutputWidth; ++k) {
        const auto pos = static_cast<std::size_t>(kPrevOutputOffset + k);
        space.boxes[0].lower[pos] = space.boxes[0].upper[pos] = v[static_cast<std::size_t>(k)];
    }
}

std::vector<DayPlan> FinalActionPlan::expand() const {
    std::vector<DayPlan> plans;
    for (int w = 1; w <= kWeeks; ++w) {
        const auto& g = genomes[static_cast<std::size_t>(w - 1)];
        const auto span = week_span(w);
        if (static_cast<int>(g.size()) != dataset::week_vector_length(span.length)) {
            throw ShapeError("week " + std::to_string(w) + " genome has " + std::to_string(g.size()) + " genes");
        }
        for (auto& p : dataset::week_plans(g, span.length)) {
            if (p.day != static_cast<int>(plans.size()) + 1) {
                throw ShapeError("week " + std::to_string(w) + " genome carries day " + std::to_string(p.day));
            }
            validate(p);
            plans.push_back(p);
        }
    }
    return plans;
}

FinalActionPlan FinalActionPlan::from_plans(const std::vector<DayPlan>& plans, const InitialConditions& ic) {
    if (plans.size() != kFlockDays) throw ShapeError("a flock plan has 40 days");
    FinalActionPlan fap;
    fap.i_c = ic;
    for (int w = 1; w <= kWeeks; ++w) {
        const auto span = week_span(w);
        auto& g = fap.genomes[static_cast<std::size_t>(w - 1)];
        g.assign(static_cast<std::size_t>(dataset::week_vector_length(span.length)), 0.0);
        for (int d = 1; d <= span.length; ++d) {
            const auto& p = plans[static_cast<std::size_t>(span.first_day + d - 2)];
            if (p.day != span.first_day + d - 1) throw ShapeError("plans must be ordered days 1..40");
            const auto x = p.as_vector();
            std::copy(x.begin(), x.end(), g.begin() + day_offset(d));
        }
        if (w == 1) {
            const auto y0 = ic.as_vector();
            std::copy(y0.begin(), y0.end(), g.begin() + kPrevOutputOffset);
        }
    }
    return fap;
}

double PlannerReport::worst_relative_pct() const {
    double worst = 0.0;
    for (const auto& b : boundary) {
        for (double e : b.relative_pct) worst = std::max(worst, e);
    }
    return worst;
}

namespace {

Outputs prev_output_genes(const std::vector<double>& g) {
    return {g[kPrevOutputOffset], g[kPrevOutputOffset + 1], g[kPrevOutputOffset + 2]};
}

std::uint64_t week_seed(std::uint64_t seed, int week) {
    // splitmix64 step so neighbouring base seeds give unrelated week streams
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(week);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

} // namespace

PlanResult optimize_flock(const surrogate::ModelSet& models, const SearchSpace& space,
                          const evolve::GaConfig& ga, const WeekProgress& progress) {
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<WeekKernel> kernels;
    for (int w = 1; w <= kWeeks; ++w) {
        const auto& m = models[static_cast<std::size_t>(w - 1)];
        if (m.week != w) throw ModelFormatError("model slot " + std::to_string(w) + " holds week " + std::to_string(m.week));
        if (static_cast<int>(space.boxes[static_cast<std::size_t>(w - 1)].size()) != m.genome_length()) {
            throw DimensionMismatch("week " + std::to_string(w) + " restrictions do not match the genome length");
        }
        kernels.emplace_back(m);
    }

    PlanResult out;
    Outputs next_prev{};
    for (int w = kWeeks; w >= 1; --w) {
        const auto& k = kernels[static_cast<std::size_t>(w - 1)];
        const auto& r = space.boxes[static_cast<std::size_t>(w - 1)];
        const int len = k.model().week_len;
        evolve::GaConfig cfg = ga;
        cfg.seed = week_seed(ga.seed, w);

        evolve::FitnessFn fitness;
        Outputs target_norm{};
        if (w == kWeeks) {
            fitness = [&k](std::span<const double> g) { return fitness_week6(g, k); };
        } else {
            target_norm = k.output_to_normalized(next_prev);
            fitness = [&k, &target_norm](std::span<const double> g) { return fitness_boundary(g, k, target_norm); };
        }
        evolve::ProgressFn on_gen;
        if (progress) on_gen = [&progress, w](const evolve::GenerationStats& s) { progress(w, s); };
        auto repair = [len, w, &space](std::span<double> g) {
            repair_week_genome(g, len);
            space.project_start(w, g);
        };
        auto res = evolve::run_ga(fitness, r, cfg, repair, on_gen);

        WeekRun run;
        run.week = w;
        run.best_fitness = res.best_fitness;
        run.reason = res.reason;
        run.generations = res.history.back().generation;
        run.evaluations = res.evaluations;
        run.seconds = res.seconds;
        run.history = std::move(res.history);
        run.restrictions = r;
        run.start_fcr = space.start_fcr[static_cast<std::size_t>(w - 1)];
        out.report.runs.push_back(std::move(run));

        if (w == kWeeks) {
            out.report.fcr_est = res.best_fitness;
        } else {
            BoundaryError b;
            b.week = w;
            b.predicted = k.last_raw(res.best);
            b.target = next_prev;
            for (std::size_t v = 0; v < kOutputWidth; ++v) {
                b.absolute[v] = std::abs(b.predicted[v] - b.target[v]);
                b.relative_pct[v] = b.target[v] != 0.0 ? 100.0 * b.absolute[v] / std::abs(b.target[v]) : 0.0;
            }
            out.report.boundary.push_back(b);
        }
        next_prev = prev_output_genes(res.best);
        out.plan.genomes[static_cast<std::size_t>(w - 1)] = std::move(res.best);
    }
    out.plan.i_c = InitialConditions{next_prev[0], next_prev[1], next_prev[2]};

    auto roll = rollout_progressive(models, out.plan);
    out.report.fcr_res = roll.fcr;
    out.report.trajectory = std::move(roll.days);
    out.report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

Rollout rollout_progressive(const surrogate::ModelSet& models, const FinalActionPlan& plan) {
    Rollout out;
    Outputs prev = plan.i_c.as_vector();
    for (int w = 1; w <= kWeeks; ++w) {
        const auto& m = models[static_cast<std::size_t>(w - 1)];
        if (m.week != w) throw ModelFormatError("model slot " + std::to_string(w) + " holds week " + std::to_string(m.week));
        WeekKernel k(m);
        auto g = plan.genomes[static_cast<std::size_t>(w - 1)];
        if (static_cast<int>(g.size()) != m.genome_length()) {
            throw DimensionMismatch("week " + std::to_string(w) + " genome does not match its model");
        }
        std::copy(prev.begin(), prev.end(), g.begin() + kPrevOutputOffset);
        auto days = k.days_raw(g, &out.clamped);
        out.days.insert(out.days.end(), days.begin(), days.end());
        prev = days.back();
    }
    out.fcr = fcr_normalized(prev[1], prev[2], prev[0]);
    return out;
}

Rollout rollout_progressive(const surrogate::ModelSet& models, const std::vector<DayPlan>& plans,
                            const InitialConditions& ic) {
    return rollout_progressive(models, FinalActionPlan::from_plans(plans, ic));
}

} // namespace flockplan::planner

#include "flockplan/evolve/ga.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <future>
#include <numeric>
#include <ostream>

namespace flockplan::evolve {

const char* to_string(StopReason r) {
    switch (r) {
    case StopReason::MaxGenerations: return "max_generations";
    case StopReason::Stall: return "stall";
    case StopReason::TargetReached: return "target_reached";
    case StopReason::TimeBudget: return "time_budget";
    case StopReason::RestrictionViolation: return "restriction_violation";
    }
    return "unknown";
}

namespace {

// Evaluates rows [from, n) of the population; spreads them over threads when
// asked. Each row's fitness depends only on its genes, so the split does not
// change results.
void evaluate(const FitnessFn& fitness, Population& pop, std::size_t from, int threads) {
    const std::size_t n = pop.size();
    auto run = [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) pop.fitness[i] = fitness(pop.genes.row(i));
    };
    if (threads <= 1 || n - from < 2) {
        run(from, n);
    } else {
        const std::size_t t = std::min<std::size_t>(static_cast<std::size_t>(threads), n - from);
        const std::size_t chunk = (n - from + t - 1) / t;
        std::vector<std::future<void>> jobs;
        for (std::size_t lo = from; lo < n; lo += chunk) jobs.push_back(std::async(std::launch::async, run, lo, std::min(n, lo + chunk)));
        for (auto& j : jobs) j.get();
    }
    for (std::size_t i = from; i < n; ++i) {
        if (!std::isfinite(pop.fitness[i])) {
            auto g = pop.genes.row(i);
            throw FitnessNonFinite("fitness of individual " + std::to_string(i) + " is not finite",
                                   std::vector<double>(g.begin(), g.end()));
        }
    }
}

GenerationStats stats_of(const Population& pop, long evaluations) {
    GenerationStats s;
    s.generation = pop.generation;
    s.best = *std::min_element(pop.fitness.begin(), pop.fitness.end());
    s.mean = std::accumulate(pop.fitness.begin(), pop.fitness.end(), 0.0) / static_cast<double>(pop.size());
    s.evaluations = evaluations;
    return s;
}

} // namespace

GaResult run_ga(const FitnessFn& fitness, const Restrictions& r, const GaConfig& config, const RepairFn& repair,
                const ProgressFn& progress) {
    config.validate();
    r.validate();
    if (r.size() == 0) throw DimensionMismatch("genome must have at least one gene");
    const auto t0 = std::chrono::steady_clock::now();
    auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(); };

    std::mt19937_64 rng(config.seed);
    Population pop = init_population(r, config.pop_size, rng);
    if (repair) {
        for (std::size_t i = 0; i < pop.size(); ++i) {
            repair(pop.genes.row(i));
            r.clamp(pop.genes.row(i));
        }
    }
    evaluate(fitness, pop, 0, config.threads);

    GaResult result;
    long evaluations = static_cast<long>(pop.size());
    result.history.push_back(stats_of(pop, evaluations));
    if (progress) progress(result.history.back());

    auto best_index = [&](const Population& p) {
        return static_cast<std::size_t>(std::min_element(p.fitness.begin(), p.fitness.end()) - p.fitness.begin());
    };
    std::size_t bi = best_index(pop);
    result.best.assign(pop.genes.row(bi).begin(), pop.genes.row(bi).end());
    result.best_fitness = pop.fitness[bi];

    const std::size_t n = pop.size();
    const std::size_t elite = static_cast<std::size_t>(config.elite);
    int stall = 0;
    Population next;
    next.genes = Matrix(n, r.size());
    next.fitness.assign(n, 0.0);
    std::vector<std::size_t> order(n);

    for (;;) {
        if (result.best_fitness <= config.target_fitness) { result.reason = StopReason::TargetReached; break; }
        if (config.max_generations > 0 && pop.generation >= config.max_generations) { result.reason = StopReason::MaxGenerations; break; }
        if (config.stall_generations > 0 && stall >= config.stall_generations) { result.reason = StopReason::Stall; break; }
        if (config.max_seconds > 0.0 && elapsed() >= config.max_seconds) { result.reason = StopReason::TimeBudget; break; }

        std::iota(order.begin(), order.end(), 0);
        std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(elite), order.end(),
                          [&](std::size_t a, std::size_t b) { return pop.fitness[a] < pop.fitness[b]; });
        for (std::size_t e = 0; e < elite; ++e) {
            std::copy_n(pop.genes.row(order[e]).begin(), r.size(), next.genes.row(e).begin());
            next.fitness[e] = pop.fitness[order[e]];
        }
        const auto weights = rank_weights(pop.fitness);
        const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
        for (std::size_t j = elite; j < n; ++j) {
            auto [p1, p2] = select_parents_su(pop.fitness, weights, total, rng);
            auto child = crossover_heuristic(pop.genes.row(p1), pop.genes.row(p2), config.beta, r);
            mutate_adaptive(child, r, config, rng);
            if (repair) {
                repair(child);
                r.clamp(child);
            }
            std::copy(child.begin(), child.end(), next.genes.row(j).begin());
        }
        next.generation = pop.generation + 1;
        evaluate(fitness, next, elite, config.threads);
        evaluations += static_cast<long>(n - elite);
        std::swap(pop, next);

        bool violated = false;
        for (std::size_t i = 0; i < n && !violated; ++i) violated = !check_restrictions(pop.genes.row(i), r);

        bi = best_index(pop);
        if (pop.fitness[bi] < result.best_fitness - config.stall_tolerance) {
            stall = 0;
        } else {
            ++stall;
        }
        if (pop.fitness[bi] < result.best_fitness) {
            result.best.assign(pop.genes.row(bi).begin(), pop.genes.row(bi).end());
            result.best_fitness = pop.fitness[bi];
        }
        result.history.push_back(stats_of(pop, evaluations));
        if (progress) progress(result.history.back());
        if (violated) { result.reason = StopReason::RestrictionViolation; break; }
    }
    result.evaluations = evaluations;
    result.seconds = elapsed();
    return result;
}

void write_history_csv(const std::vector<GenerationStats>& history, std::ostream& out) {
    out << "generation,best,mean,evaluations\n";
    out.precision(17);
    for (const auto& h : history) out << h.generation << ',' << h.best << ',' << h.mean << ',' << h.evaluations << '\n';
}

void write_history_csv(const std::vector<GenerationStats>& history, const std::filesystem::path& path) {
    std::ofstream f(path);
    if (!f) throw StorageError("cannot write " + path.string());
    write_history_csv(history, f);
}

} // namespace flockplan::evolve

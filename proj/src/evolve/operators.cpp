#include "flockplan/evolve/operators.hpp"

#include <algorithm>
#include <numeric>

namespace flockplan::evolve {

Population init_population(const Restrictions& r, int pop_size, std::mt19937_64& rng) {
    r.validate();
    if (pop_size < 1) throw EmptyPopulation("population size must be positive");
    Population p;
    p.genes = Matrix(static_cast<std::size_t>(pop_size), r.size());
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (std::size_t i = 0; i < p.genes.rows(); ++i) {
        for (std::size_t k = 0; k < r.size(); ++k) {
            // lower + u*(upper-lower) can round past upper; clamp keeps it closed.
            p.genes(i, k) = std::min(r.upper[k], r.lower[k] + u(rng) * (r.upper[k] - r.lower[k]));
        }
    }
    p.fitness.assign(p.genes.rows(), 0.0);
    return p;
}

Population init_population(const Restrictions& r, int pop_size, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    return init_population(r, pop_size, rng);
}

std::vector<double> rank_weights(std::span<const double> fitness) {
    const std::size_t n = fitness.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fitness[a] < fitness[b]; });
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j + 1 < n && fitness[order[j + 1]] == fitness[order[i]]) ++j;
        // positions i..j (0 = best) share weight n - mean position
        const double weight = static_cast<double>(n) - 0.5 * static_cast<double>(i + j);
        for (std::size_t k = i; k <= j; ++k) w[order[k]] = weight;
        i = j + 1;
    }
    return w;
}

std::pair<std::size_t, std::size_t> select_parents_su(std::span<const double> fitness, std::span<const double> weights,
                                                      double total, std::mt19937_64& rng) {
    const std::size_t n = fitness.size();
    if (n == 0) throw EmptyPopulation("cannot select from an empty population");
    if (n == 1) return {0, 0};
    const double step = total / 2.0;
    const double offset = std::uniform_real_distribution<double>(0.0, step)(rng);
    std::size_t picks[2];
    double acc = 0.0;
    std::size_t idx = 0;
    for (int k = 0; k < 2; ++k) {
        const double pointer = offset + k * step;
        while (idx + 1 < n && acc + weights[idx] <= pointer) acc += weights[idx++];
        picks[k] = idx;
    }
    if (fitness[picks[1]] > fitness[picks[0]]) std::swap(picks[0], picks[1]);
    return {picks[0], picks[1]};
}

std::pair<std::size_t, std::size_t> select_parents_su(std::span<const double> fitness, std::mt19937_64& rng) {
    if (fitness.empty()) throw EmptyPopulation("cannot select from an empty population");
    auto w = rank_weights(fitness);
    const double total = std::accumulate(w.begin(), w.end(), 0.0);
    return select_parents_su(fitness, w, total, rng);
}

std::vector<double> crossover_heuristic(std::span<const double> p1, std::span<const double> p2, double beta) {
    if (p1.size() != p2.size()) throw DimensionMismatch("parents differ in length");
    std::vector<double> child(p1.size());
    for (std::size_t k = 0; k < child.size(); ++k) child[k] = p2[k] + beta * (p1[k] - p2[k]);
    return child;
}

std::vector<double> crossover_heuristic(std::span<const double> p1, std::span<const double> p2, double beta,
                                        const Restrictions& r) {
    auto child = crossover_heuristic(p1, p2, beta);
    r.clamp(child);
    return child;
}

void mutate_adaptive(std::span<double> genome, const Restrictions& r, const GaConfig& config, std::mt19937_64& rng) {
    if (genome.size() != r.size()) throw DimensionMismatch("genome length does not match restrictions");
    if (config.mutation_probability <= 0.0) return;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_real_distribution<double> delta(-config.mutation_scale, config.mutation_scale);
    for (std::size_t k = 0; k < genome.size(); ++k) {
        if (u(rng) < config.mutation_probability) genome[k] *= 1.0 + delta(rng);
    }
    r.clamp(genome);
}

} // namespace flockplan::evolve

#pragma once

#include <random>
#include <span>
#include <utility>
#include <vector>

#include "flockplan/evolve/config.hpp"
#include "flockplan/evolve/restrictions.hpp"

namespace flockplan::evolve {

/// Row-per-individual population with its fitness column.
struct Population {
    Matrix genes; // pop_size x genome length
    std::vector<double> fitness;
    int generation = 0;

    std::size_t size() const noexcept { return genes.rows(); }
};

/// Uniform i.i.d. genes inside the restrictions.
Population init_population(const Restrictions& r, int pop_size, std::mt19937_64& rng);
Population init_population(const Restrictions& r, int pop_size, std::uint64_t seed);

/// Linear rank weights for minimisation: the best individual weighs n, the
/// worst 1, tied fitness values share the mean of their ranks.
std::vector<double> rank_weights(std::span<const double> fitness);

/// Stochastic uniform selection of two parents: individuals laid along a line
/// proportional to their rank weight, two pointers half the line apart with
/// a single random offset. Returns (p1, p2) with p2 the fitter one.
std::pair<std::size_t, std::size_t> select_parents_su(std::span<const double> fitness, std::mt19937_64& rng);
/// Same, with weights precomputed once per generation.
std::pair<std::size_t, std::size_t> select_parents_su(std::span<const double> fitness, std::span<const double> weights,
                                                      double total_weight, std::mt19937_64& rng);

/// child = p2 + beta * (p1 - p2), without clamping.
std::vector<double> crossover_heuristic(std::span<const double> p1, std::span<const double> p2, double beta);
/// Same, then clamped into the restrictions.
std::vector<double> crossover_heuristic(std::span<const double> p1, std::span<const double> p2, double beta,
                                        const Restrictions& r);

/// Each gene, with probability mutation_probability, is multiplied by
/// 1 + U(-mutation_scale, mutation_scale); the result is clamped.
void mutate_adaptive(std::span<double> genome, const Restrictions& r, const GaConfig& config, std::mt19937_64& rng);

} // namespace flockplan::evolve

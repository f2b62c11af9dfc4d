#pragma once

#include <cstdint>
#include <limits>

#include <json.hpp>

namespace flockplan::evolve {

struct GaConfig {
    int schema_version = 1;
    int pop_size = 200;
    double beta = 0.6;
    double mutation_probability = 0.02; // per gene
    double mutation_scale = 0.01;       // gene *= 1 + U(-scale, scale)
    int elite = 1;

    // Stopping criteria; a zero or infinite value disables the criterion.
    int max_generations = 2000;
    int stall_generations = 200;
    double stall_tolerance = 0.0; // improvements at or below this count as none
    double max_seconds = 0.0;
    double target_fitness = -std::numeric_limits<double>::infinity();

    /// Fitness evaluations run on this many threads. Results do not depend on
    /// it.
    int threads = 1;
    std::uint64_t seed = 1;

    /// Throws ConfigDomain.
    void validate() const;
};

void to_json(nlohmann::json& j, const GaConfig& c);
void from_json(const nlohmann::json& j, GaConfig& c);

} // namespace flockplan::evolve

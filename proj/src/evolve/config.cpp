#include "flockplan/evolve/config.hpp"

#include <cmath>

#include "flockplan/errors.hpp"

namespace flockplan::evolve {

using nlohmann::json;

void GaConfig::validate() const {
    if (schema_version != 1) throw SchemaVersionError("GA config schema_version must be 1");
    if (pop_size < 2) throw ConfigDomain("population needs at least 2 individuals");
    if (!(beta >= 0.0 && beta <= 2.0)) throw ConfigDomain("beta must lie in [0, 2]");
    if (!(mutation_probability >= 0.0 && mutation_probability <= 1.0)) throw ConfigDomain("mutation probability must lie in [0, 1]");
    if (!(mutation_scale >= 0.0)) throw ConfigDomain("mutation scale must be non-negative");
    if (elite < 0 || elite >= pop_size) throw ConfigDomain("elite count must be below the population size");
    if (max_generations < 0 || stall_generations < 0) throw ConfigDomain("generation limits must be non-negative");
    if (max_generations == 0 && stall_generations == 0 && !(max_seconds > 0.0) && std::isinf(target_fitness)) {
        throw ConfigDomain("at least one stopping criterion must be enabled");
    }
    if (!(stall_tolerance >= 0.0) || !(max_seconds >= 0.0)) throw ConfigDomain("tolerances must be non-negative");
    if (threads < 1) throw ConfigDomain("threads must be at least 1");
}

void to_json(json& j, const GaConfig& c) {
    j = json{{"schema_version", c.schema_version},
             {"pop_size", c.pop_size},
             {"beta", c.beta},
             {"mutation_probability", c.mutation_probability},
             {"mutation_scale", c.mutation_scale},
             {"elite", c.elite},
             {"max_generations", c.max_generations},
             {"stall_generations", c.stall_generations},
             {"stall_tolerance", c.stall_tolerance},
             {"max_seconds", c.max_seconds},
             {"target_fitness", std::isfinite(c.target_fitness) ? json(c.target_fitness) : json(nullptr)},
             {"threads", c.threads},
             {"seed", c.seed}};
}

void from_json(const json& j, GaConfig& c) {
    c = GaConfig{};
    auto get = [&](const char* key, auto& field) {
        if (j.contains(key)) j.at(key).get_to(field);
    };
    get("schema_version", c.schema_version);
    get("pop_size", c.pop_size);
    get("beta", c.beta);
    get("mutation_probability", c.mutation_probability);
    get("mutation_scale", c.mutation_scale);
    get("elite", c.elite);
    get("max_generations", c.max_generations);
    get("stall_generations", c.stall_generations);
    get("stall_tolerance", c.stall_tolerance);
    get("max_seconds", c.max_seconds);
    if (j.contains("target_fitness") && !j.at("target_fitness").is_null()) j.at("target_fitness").get_to(c.target_fitness);
    get("threads", c.threads);
    get("seed", c.seed);
    c.validate();
}

} // namespace flockplan::evolve

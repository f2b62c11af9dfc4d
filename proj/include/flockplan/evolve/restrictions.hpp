#pragma once

#include <optional>
#include <span>
#include <vector>

#include "flockplan/matrix.hpp"

namespace flockplan::evolve {

/// Inequality form A*x <= b of a box: for gene k, row 2k is +e_k <= upper[k]
/// and row 2k+1 is -e_k <= -lower[k].
struct InequalityForm {
    Matrix a;
    std::vector<double> b;
};

struct Violation {
    std::size_t gene = 0;
    std::size_t row = 0; // row of A that fails
    double value = 0.0;
    double bound = 0.0;
    bool upper = false;
};

/// Closed box restrictions on a genome.
struct Restrictions {
    std::vector<double> lower;
    std::vector<double> upper;

    Restrictions() = default;
    Restrictions(std::vector<double> lo, std::vector<double> hi);

    std::size_t size() const noexcept { return lower.size(); }
    bool frozen(std::size_t k) const { return lower[k] == upper[k]; }

    /// Throws ConfigDomain if lower > upper anywhere or lengths differ.
    void validate() const;

    InequalityForm to_inequality() const;
    static Restrictions from_inequality(const InequalityForm& form);

    void clamp(std::span<double> genome) const;
};

/// First violated row of A*g <= b, or nothing when g is feasible.
std::optional<Violation> first_violation(std::span<const double> genome, const Restrictions& r);
bool check_restrictions(std::span<const double> genome, const Restrictions& r);

} // namespace flockplan::evolve

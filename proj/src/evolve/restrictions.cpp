#include "flockplan/evolve/restrictions.hpp"

#include <algorithm>
#include <string>

namespace flockplan::evolve {

Restrictions::Restrictions(std::vector<double> lo, std::vector<double> hi) : lower(std::move(lo)), upper(std::move(hi)) {
    validate();
}

void Restrictions::validate() const {
    if (lower.size() != upper.size()) throw ConfigDomain("restriction bounds differ in length");
    for (std::size_t k = 0; k < lower.size(); ++k) {
        if (!(lower[k] <= upper[k])) {
            throw ConfigDomain("restriction on gene " + std::to_string(k) + " has lower > upper");
        }
    }
}

InequalityForm Restrictions::to_inequality() const {
    const std::size_t n = size();
    InequalityForm f{Matrix(2 * n, n), std::vector<double>(2 * n)};
    for (std::size_t k = 0; k < n; ++k) {
        f.a(2 * k, k) = 1.0;
        f.a(2 * k + 1, k) = -1.0;
        f.b[2 * k] = upper[k];
        f.b[2 * k + 1] = -lower[k];
    }
    return f;
}

Restrictions Restrictions::from_inequality(const InequalityForm& form) {
    const std::size_t n = form.a.cols();
    if (form.a.rows() != 2 * n || form.b.size() != 2 * n) throw DimensionMismatch("inequality form must be 2n x n");
    Restrictions r;
    r.lower.resize(n);
    r.upper.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t c = 0; c < n; ++c) {
            const double up = c == k ? 1.0 : 0.0;
            if (form.a(2 * k, c) != up || form.a(2 * k + 1, c) != -up) {
                throw ConfigDomain("only box restrictions are supported (row " + std::to_string(2 * k) + ")");
            }
        }
        r.upper[k] = form.b[2 * k];
        r.lower[k] = -form.b[2 * k + 1];
    }
    r.validate();
    return r;
}

void Restrictions::clamp(std::span<double> genome) const {
    if (genome.size() != size()) throw DimensionMismatch("genome length does not match restrictions");
    for (std::size_t k = 0; k < genome.size(); ++k) genome[k] = std::clamp(genome[k], lower[k], upper[k]);
}

std::optional<Violation> first_violation(std::span<const double> genome, const Restrictions& r) {
    if (genome.size() != r.size()) throw DimensionMismatch("genome length does not match restrictions");
    for (std::size_t k = 0; k < genome.size(); ++k) {
        // NaN fails both comparisons and is reported against the upper row.
        if (!(genome[k] <= r.upper[k])) return Violation{k, 2 * k, genome[k], r.upper[k], true};
        if (!(genome[k] >= r.lower[k])) return Violation{k, 2 * k + 1, genome[k], r.lower[k], false};
    }
    return std::nullopt;
}

bool check_restrictions(std::span<const double> genome, const Restrictions& r) {
    return !first_violation(genome, r).has_value();
}

} // namespace flockplan::evolve

#pragma once

#include <array>
#include <span>
#include <vector>

#include "flockplan/surrogate/week_model.hpp"

namespace flockplan::planner {

using Outputs = std::array<double, kOutputWidth>;

/// Raw-genome view of a week model with its scaling factors cached. Genes
/// outside the model bounds are clamped silently; the GA never produces them
/// and rollouts of foreign plans count them in `clamped()`.
class WeekKernel {
public:
    explicit WeekKernel(const surrogate::WeekModel& model);

    const surrogate::WeekModel& model() const noexcept { return *model_; }
    int genome_length() const noexcept { return model_->genome_length(); }

    std::vector<double> normalize(std::span<const double> genome, int* clamped = nullptr) const;
    /// Per-day normalised outputs, day-major.
    std::vector<double> forward_normalized(std::span<const double> genome, int* clamped = nullptr) const;
    Outputs last_normalized(std::span<const double> genome) const;
    Outputs last_raw(std::span<const double> genome, int* clamped = nullptr) const;
    std::vector<Outputs> days_raw(std::span<const double> genome, int* clamped = nullptr) const;

    Outputs output_to_normalized(const Outputs& raw) const;
    Outputs output_to_raw(const Outputs& norm) const;

private:
    const surrogate::WeekModel* model_;
    std::vector<double> mini_;
    std::vector<double> inv_span_;
};

/// Day-40 FCR predicted by the week-6 model for a 38-gene genome.
double fitness_week6(std::span<const double> genome, const WeekKernel& week6);
double fitness_week6(std::span<const double> genome, const surrogate::WeekModel& week6);

/// Mean absolute gap between the genome's last-day outputs and `target`, both
/// in the output scaling of `week` (so 0.01 is 1% of that week's range).
double fitness_boundary(std::span<const double> genome, const WeekKernel& week, std::span<const double> target_norm);
double fitness_boundary(std::span<const double> genome, const surrogate::WeekModel& week,
                        std::span<const double> target_norm);

/// Restores t_min <= t_avg <= t_max and h_min <= h_avg <= h_max for every
/// day of a week genome by sorting each triplet.
void repair_week_genome(std::span<double> genome, int week_len);

} // namespace flockplan::planner

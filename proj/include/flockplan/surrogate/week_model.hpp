#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "flockplan/dataset/partition.hpp"
#include "flockplan/domain.hpp"
#include "flockplan/surrogate/lstm.hpp"

namespace flockplan::surrogate {

inline constexpr int kPrevOutputOffset = dataset::kPrevOutputOffset;

enum class Optimizer { Adam, Sgd };

struct Hyperparams {
    int epochs = 1000;
    double lr0 = 0.005;
    double lr_decay = 0.95;
    int decay_every = 300;
    double l2_rate = 0.001;
    int hidden_layers = 3;
    int hidden_size = 10;
    Optimizer optimizer = Optimizer::Adam;
    /// Samples per update; 0 trains full batch. Batches are reshuffled every
    /// epoch from the seeded generator.
    int batch_size = 2;
    /// Independent initialisations per week; the lowest final loss is kept.
    int restarts = 3;
    /// Initial output-layer bias. A zero bias leaves ReLU outputs that start
    /// negative for every sample with no gradient to recover from.
    double output_bias_init = 0.5;
    /// Headroom added to each output range when bounds are fit by
    /// train_models, as a fraction of the range.
    double output_pad = 0.05;
    std::uint64_t seed = 7;

    void validate() const;
};

void to_json(nlohmann::json& j, const Hyperparams& hp);
void from_json(const nlohmann::json& j, Hyperparams& hp);

struct TrainingMeta {
    std::uint64_t seed = 0;
    int epochs = 0;
    double final_loss = 0.0;
    std::vector<double> loss_history; // every 10th epoch
};

struct WeekModel {
    int week = 1;
    int week_len = 7;
    LstmNetwork net;
    Bounds bounds; // over the week vector layout
    Hyperparams hp;
    TrainingMeta meta;

    int genome_length() const { return dataset::week_vector_length(week_len); }
    std::span<const double> output_maxi() const { return {bounds.maxi.data() + kPrevOutputOffset, kOutputWidth}; }
    std::span<const double> output_mini() const { return {bounds.mini.data() + kPrevOutputOffset, kOutputWidth}; }

    /// Re-verifies every shape invariant; throws ModelFormatError.
    void check() const;
};

/// Normalisation bounds for one week. Day-index positions use the fixed range
/// [0, 40]; plan positions use the column range; the three previous-output
/// positions share the per-variable range of every output of the week so a
/// fed-back prediction needs no rescaling. Ranges are widened by `pad` of
/// their width, output ranges by `output_pad`: the ReLU output cannot go
/// below zero, so the smallest target needs headroom above the lower bound.
Bounds fit_week_bounds(const dataset::WeeklyDataset& data, double pad = 0.05, double output_pad = 0.05);

/// Per-day denormalised predictions of a week.
struct WeekForward {
    std::vector<std::array<double, kOutputWidth>> days;
    const std::array<double, kOutputWidth>& last() const { return days.back(); }
};

WeekForward forward_week(const WeekModel& model, std::span<const double> week_vector,
                         NormMode mode = NormMode::Strict);

/// Normalised in, normalised out; the fast path used inside fitness functions.
std::vector<double> forward_week_normalized(const WeekModel& model, std::span<const double> week_vector_norm);

std::vector<double> normalize_outputs(const WeekModel& model, std::span<const double> raw_outputs,
                                      NormMode mode = NormMode::Strict);
std::vector<double> denormalize_outputs(const WeekModel& model, std::span<const double> norm_outputs);

using EpochCallback = std::function<void(int epoch, double loss)>;

/// Trains one week model on raw (unnormalised) data.
WeekModel train_week_model(const dataset::WeeklyDataset& data, const Bounds& bounds, const Hyperparams& hp,
                           const EpochCallback& on_epoch = {});

struct R2 {
    double mdw = 0.0;
    double dfcpb = 0.0;
    double nlbpa = 0.0;
    double operator[](int k) const { return k == 0 ? mdw : (k == 1 ? dfcpb : nlbpa); }
};

/// Coefficient of determination per output, pooled over samples and days, on
/// normalised outputs. Throws ZeroVariance when a target column is constant.
R2 evaluate_r2(const WeekModel& model, const dataset::WeeklyDataset& test);
R2 r2_score(std::span<const double> predicted, std::span<const double> actual);

void to_json(nlohmann::json& j, const WeekModel& m);
void from_json(const nlohmann::json& j, WeekModel& m);

void save_model(const WeekModel& m, const std::filesystem::path& path);
WeekModel load_model(const std::filesystem::path& path);

using ModelSet = std::array<WeekModel, kWeeks>;

/// Trains all six week models; bounds come from `bounds_source` (normally the
/// whole corpus), training rows from `train`.
ModelSet train_models(const std::vector<FlockSample>& train, const std::vector<FlockSample>& bounds_source,
                      const Hyperparams& hp, bool parallel = false);

void save_models(const ModelSet& models, const std::filesystem::path& dir);
ModelSet load_models(const std::filesystem::path& dir);

} // namespace flockplan::surrogate

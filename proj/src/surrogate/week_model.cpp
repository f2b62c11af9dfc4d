#include "flockplan/surrogate/week_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <future>
#include <numeric>
#include <random>

#include <json.hpp>

namespace flockplan::surrogate {

using nlohmann::json;

void Hyperparams::validate() const {
    if (epochs < 1 || hidden_layers < 1 || hidden_size < 1 || decay_every < 1) throw ConfigDomain("hyperparameter counts must be positive");
    if (!(lr0 > 0.0)) throw ConfigDomain("learning rate must be positive");
    if (!(lr_decay > 0.0 && lr_decay <= 1.0)) throw ConfigDomain("learning-rate decay must lie in (0, 1]");
    if (!(l2_rate >= 0.0)) throw ConfigDomain("L2 rate must be non-negative");
    if (batch_size < 0) throw ConfigDomain("batch size must be non-negative");
    if (restarts < 1) throw ConfigDomain("restarts must be at least 1");
    if (!(output_pad >= 0.0)) throw ConfigDomain("output padding must be non-negative");
}

void to_json(json& j, const Hyperparams& hp) {
    j = json{{"epochs", hp.epochs},
             {"lr0", hp.lr0},
             {"lr_decay", hp.lr_decay},
             {"decay_every", hp.decay_every},
             {"l2_rate", hp.l2_rate},
             {"hidden_layers", hp.hidden_layers},
             {"hidden_size", hp.hidden_size},
             {"optimizer", hp.optimizer == Optimizer::Adam ? "adam" : "sgd"},
             {"batch_size", hp.batch_size},
             {"restarts", hp.restarts},
             {"output_pad", hp.output_pad},
             {"output_bias_init", hp.output_bias_init},
             {"seed", hp.seed}};
}

void from_json(const json& j, Hyperparams& hp) {
    hp = Hyperparams{};
    auto get = [&](const char* key, auto& field) {
        if (j.contains(key)) j.at(key).get_to(field);
    };
    get("epochs", hp.epochs);
    get("lr0", hp.lr0);
    get("lr_decay", hp.lr_decay);
    get("decay_every", hp.decay_every);
    get("l2_rate", hp.l2_rate);
    get("hidden_layers", hp.hidden_layers);
    get("hidden_size", hp.hidden_size);
    get("output_bias_init", hp.output_bias_init);
    get("batch_size", hp.batch_size);
    get("restarts", hp.restarts);
    get("output_pad", hp.output_pad);
    get("seed", hp.seed);
    if (j.contains("optimizer")) {
        auto o = j.at("optimizer").get<std::string>();
        if (o == "adam") hp.optimizer = Optimizer::Adam;
        else if (o == "sgd") hp.optimizer = Optimizer::Sgd;
        else throw ConfigDomain("unknown optimizer '" + o + "'");
    }
    hp.validate();
}

void WeekModel::check() const {
    try {
        if (week < 1 || week > kWeeks) throw ModelFormatError("week index outside 1..6");
        if (week_len != dataset::week_span(week).length) throw ModelFormatError("week length does not match week index");
        net.check_shapes();
        if (net.input_size() != static_cast<std::size_t>(kPlanWidth + kOutputWidth) ||
            net.output_size() != static_cast<std::size_t>(kOutputWidth)) {
            throw ModelFormatError("week network must take 10 inputs and produce 3 outputs");
        }
        const auto n = static_cast<std::size_t>(genome_length());
        if (bounds.maxi.size() != n || bounds.mini.size() != n) throw ModelFormatError("bounds do not cover the week vector");
        for (std::size_t k = 0; k < n; ++k) {
            if (!(bounds.maxi[k] > bounds.mini[k])) throw ModelFormatError("degenerate bound at position " + std::to_string(k));
        }
    } catch (const DimensionMismatch& e) {
        throw ModelFormatError(e.what());
    }
}

Bounds fit_week_bounds(const dataset::WeeklyDataset& data, double pad, double output_pad) {
    const auto n = static_cast<std::size_t>(dataset::week_vector_length(data.week_len));
    if (data.inputs.rows() == 0) throw InsufficientData("cannot fit bounds without samples");
    if (data.inputs.cols() != n) throw DimensionMismatch("week dataset width does not match its week length");
    Bounds b{std::vector<double>(n), std::vector<double>(n)};

    auto widen = [](double lo, double hi, double pad, double& out_lo, double& out_hi) {
        double span = hi - lo;
        double margin = span > 0.0 ? pad * span : std::max(1e-6, 1e-3 * std::abs(lo));
        out_lo = lo - margin;
        out_hi = hi + margin;
    };

    for (std::size_t k = 0; k < n; ++k) {
        double lo = data.inputs(0, k), hi = lo;
        for (std::size_t r = 1; r < data.inputs.rows(); ++r) {
            lo = std::min(lo, data.inputs(r, k));
            hi = std::max(hi, data.inputs(r, k));
        }
        widen(lo, hi, pad, b.mini[k], b.maxi[k]);
    }
    for (int d = 1; d <= data.week_len; ++d) {
        auto k = static_cast<std::size_t>(dataset::day_offset(d));
        b.mini[k] = 0.0;
        b.maxi[k] = static_cast<double>(kFlockDays);
    }
    for (std::size_t v = 0; v < kOutputWidth; ++v) {
        const std::size_t k = kPrevOutputOffset + v;
        double lo = data.inputs(0, k), hi = lo;
        for (std::size_t r = 0; r < data.inputs.rows(); ++r) {
            lo = std::min(lo, data.inputs(r, k));
            hi = std::max(hi, data.inputs(r, k));
            for (int d = 0; d < data.week_len; ++d) {
                double y = data.targets(r, static_cast<std::size_t>(d) * kOutputWidth + v);
                lo = std::min(lo, y);
                hi = std::max(hi, y);
            }
        }
        widen(lo, hi, output_pad, b.mini[k], b.maxi[k]);
    }
    return b;
}

std::vector<double> normalize_outputs(const WeekModel& m, std::span<const double> raw, NormMode mode) {
    if (raw.size() % kOutputWidth != 0) throw DimensionMismatch("output vector must hold whole days");
    std::vector<double> out(raw.size());
    for (std::size_t d = 0; d < raw.size() / kOutputWidth; ++d) {
        auto n = minmax_norm(raw.subspan(d * kOutputWidth, kOutputWidth), m.output_maxi(), m.output_mini(), mode);
        std::copy(n.begin(), n.end(), out.begin() + static_cast<std::ptrdiff_t>(d * kOutputWidth));
    }
    return out;
}

std::vector<double> denormalize_outputs(const WeekModel& m, std::span<const double> norm) {
    if (norm.size() % kOutputWidth != 0) throw DimensionMismatch("output vector must hold whole days");
    std::vector<double> out(norm.size());
    for (std::size_t d = 0; d < norm.size() / kOutputWidth; ++d) {
        auto r = minmax_denorm(norm.subspan(d * kOutputWidth, kOutputWidth), m.output_maxi(), m.output_mini());
        std::copy(r.begin(), r.end(), out.begin() + static_cast<std::ptrdiff_t>(d * kOutputWidth));
    }
    return out;
}

std::vector<double> forward_week_normalized(const WeekModel& m, std::span<const double> v_norm) {
    if (static_cast<int>(v_norm.size()) != m.genome_length()) {
        throw DimensionMismatch("week vector has " + std::to_string(v_norm.size()) + " entries, week " +
                                std::to_string(m.week) + " expects " + std::to_string(m.genome_length()));
    }
    return run_sequence(m.net, v_norm, m.week_len);
}

WeekForward forward_week(const WeekModel& m, std::span<const double> v, NormMode mode) {
    if (static_cast<int>(v.size()) != m.genome_length()) {
        throw DimensionMismatch("week vector has " + std::to_string(v.size()) + " entries, week " +
                                std::to_string(m.week) + " expects " + std::to_string(m.genome_length()));
    }
    auto vn = minmax_norm(v, m.bounds, mode);
    auto y = denormalize_outputs(m, forward_week_normalized(m, vn));
    WeekForward out;
    for (int d = 0; d < m.week_len; ++d) {
        auto k = static_cast<std::size_t>(d) * kOutputWidth;
        out.days.push_back({y[k], y[k + 1], y[k + 2]});
    }
    return out;
}

namespace {

struct NormalizedData {
    Matrix inputs, targets;
};

NormalizedData normalize_dataset(const WeekModel& m, const dataset::WeeklyDataset& data, NormMode mode) {
    NormalizedData out{Matrix(0, data.inputs.cols()), Matrix(0, data.targets.cols())};
    for (std::size_t r = 0; r < data.inputs.rows(); ++r) {
        out.inputs.append_row(minmax_norm(data.inputs.row(r), m.bounds, mode));
        out.targets.append_row(normalize_outputs(m, data.targets.row(r), mode));
    }
    return out;
}

} // namespace

namespace {

WeekModel train_once(const dataset::WeeklyDataset& data, const Bounds& bounds, const Hyperparams& hp,
                     std::uint64_t stream, const EpochCallback& on_epoch) {
    WeekModel m;
    m.week = data.week;
    m.week_len = data.week_len;
    m.bounds = bounds;
    m.hp = hp;
    m.net = LstmNetwork(kPlanWidth + kOutputWidth, static_cast<std::size_t>(hp.hidden_size),
                        static_cast<std::size_t>(hp.hidden_layers), kOutputWidth);
    m.check();

    std::seed_seq sseq{hp.seed, static_cast<std::uint64_t>(data.week), stream};
    std::mt19937_64 rng(sseq);
    he_init(m.net, rng, hp.output_bias_init);
    auto nd = normalize_dataset(m, data, NormMode::Strict);

    LstmNetwork grad;
    const std::size_t n_params = parameter_count(m.net);
    std::vector<double> mom(n_params, 0.0), vel(n_params, 0.0);
    const double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    long step = 0;

    const std::size_t n = nd.inputs.rows();
    const std::size_t batch = hp.batch_size == 0 ? n : std::min<std::size_t>(n, static_cast<std::size_t>(hp.batch_size));
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);

    auto apply_update = [&](double lr) {
        ++step;
        const double c1 = 1.0 - std::pow(b1, static_cast<double>(step));
        const double c2 = 1.0 - std::pow(b2, static_cast<double>(step));
        auto params = tensors(m.net);
        auto grads = tensors(grad);
        std::size_t idx = 0;
        for (std::size_t t = 0; t < params.size(); ++t) {
            auto& pv = params[t].values;
            auto& gv = grads[t].values;
            for (std::size_t e = 0; e < pv.size(); ++e, ++idx) {
                const double g = gv[e];
                if (hp.optimizer == Optimizer::Sgd) {
                    pv[e] -= lr * g;
                    continue;
                }
                mom[idx] = b1 * mom[idx] + (1.0 - b1) * g;
                vel[idx] = b2 * vel[idx] + (1.0 - b2) * g * g;
                pv[e] -= lr * (mom[idx] / c1) / (std::sqrt(vel[idx] / c2) + eps);
            }
        }
    };

    m.meta.seed = hp.seed;
    m.meta.epochs = hp.epochs;
    Matrix bx, by;
    for (int epoch = 0; epoch < hp.epochs; ++epoch) {
        const double lr = hp.lr0 * std::pow(hp.lr_decay, epoch / hp.decay_every);
        double epoch_loss = 0.0;
        if (batch == n) {
            epoch_loss = loss_and_gradient(m.net, nd.inputs, nd.targets, m.week_len, hp.l2_rate, grad);
            if (std::isfinite(epoch_loss)) apply_update(lr);
        } else {
            std::shuffle(order.begin(), order.end(), rng);
            std::size_t batches = 0;
            for (std::size_t start = 0; start < n; start += batch, ++batches) {
                bx = Matrix(0, nd.inputs.cols());
                by = Matrix(0, nd.targets.cols());
                for (std::size_t k = start; k < std::min(n, start + batch); ++k) {
                    bx.append_row(nd.inputs.row(order[k]));
                    by.append_row(nd.targets.row(order[k]));
                }
                double l = loss_and_gradient(m.net, bx, by, m.week_len, hp.l2_rate, grad);
                epoch_loss += l;
                if (!std::isfinite(l)) break;
                apply_update(lr);
            }
            epoch_loss /= static_cast<double>(batches);
        }
        if (!std::isfinite(epoch_loss)) {
            throw Diverged("week " + std::to_string(m.week) + " loss became non-finite at epoch " + std::to_string(epoch));
        }
        if (epoch % 10 == 0) m.meta.loss_history.push_back(epoch_loss);
        if (on_epoch) on_epoch(epoch, epoch_loss);
    }
    m.meta.final_loss = sequence_loss(m.net, nd.inputs, nd.targets, m.week_len, hp.l2_rate);
    if (!std::isfinite(m.meta.final_loss)) throw Diverged("week " + std::to_string(m.week) + " final loss is non-finite");
    return m;
}

} // namespace

WeekModel train_week_model(const dataset::WeeklyDataset& data, const Bounds& bounds, const Hyperparams& hp,
                           const EpochCallback& on_epoch) {
    hp.validate();
    if (data.inputs.rows() == 0) throw InsufficientData("week " + std::to_string(data.week) + " has no training samples");
    // Some initialisations settle where living birds are predicted flat; the
    // training loss gives those away, so keep the lowest one.
    WeekModel best = train_once(data, bounds, hp, 0, on_epoch);
    for (int r = 1; r < hp.restarts; ++r) {
        WeekModel cand = train_once(data, bounds, hp, static_cast<std::uint64_t>(r), on_epoch);
        if (cand.meta.final_loss < best.meta.final_loss) best = std::move(cand);
    }
    return best;
}

R2 r2_score(std::span<const double> pred, std::span<const double> actual) {
    if (pred.size() != actual.size() || actual.size() % kOutputWidth != 0 || actual.empty()) {
        throw DimensionMismatch("r2 needs matching whole-day output vectors");
    }
    double out[kOutputWidth];
    const std::size_t n = actual.size() / kOutputWidth;
    for (std::size_t v = 0; v < kOutputWidth; ++v) {
        double mean = 0.0;
        for (std::size_t k = 0; k < n; ++k) mean += actual[k * kOutputWidth + v];
        mean /= static_cast<double>(n);
        double ss_tot = 0.0, ss_res = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            const double a = actual[k * kOutputWidth + v];
            const double p = pred[k * kOutputWidth + v];
            ss_tot += (a - mean) * (a - mean);
            ss_res += (a - p) * (a - p);
        }
        if (ss_tot == 0.0) throw ZeroVariance("target output " + std::to_string(v) + " is constant");
        out[v] = 1.0 - ss_res / ss_tot;
    }
    return {out[0], out[1], out[2]};
}

R2 evaluate_r2(const WeekModel& m, const dataset::WeeklyDataset& test) {
    if (test.inputs.rows() == 0) throw InsufficientData("empty test set");
    if (test.week_len != m.week_len) throw DimensionMismatch("test set belongs to a different week length");
    std::vector<double> pred, actual;
    for (std::size_t r = 0; r < test.inputs.rows(); ++r) {
        auto vn = minmax_norm(test.inputs.row(r), m.bounds, NormMode::Clamp);
        auto y = forward_week_normalized(m, vn);
        pred.insert(pred.end(), y.begin(), y.end());
        // Outputs are mapped affinely (not clamped) so out-of-range targets
        // still count fully against the model.
        auto t = test.targets.row(r);
        for (std::size_t k = 0; k < t.size(); ++k) {
            const std::size_t v = kPrevOutputOffset + k % kOutputWidth;
            actual.push_back((t[k] - m.bounds.mini[v]) / (m.bounds.maxi[v] - m.bounds.mini[v]));
        }
    }
    return r2_score(pred, actual);
}

void to_json(json& j, const WeekModel& m) {
    json t = json::object();
    for (auto& ref : tensors(const_cast<LstmNetwork&>(m.net))) {
        t[ref.name] = std::vector<double>(ref.values.begin(), ref.values.end());
    }
    j = json{{"schema_version", 1},
             {"kind", "week_model"},
             {"week", m.week},
             {"week_len", m.week_len},
             {"input_size", m.net.input_size()},
             {"hidden_size", m.net.layers.front().hidden_size()},
             {"layers", m.net.layers.size()},
             {"outputs", m.net.output_size()},
             {"hyperparams", m.hp},
             {"training", {{"seed", m.meta.seed}, {"epochs", m.meta.epochs}, {"final_loss", m.meta.final_loss},
                           {"loss_history", m.meta.loss_history}}},
             {"bounds", {{"maxi", m.bounds.maxi}, {"mini", m.bounds.mini}}},
             {"tensors", t}};
}

void from_json(const json& j, WeekModel& m) {
    try {
        if (j.value("schema_version", 0) != 1) throw SchemaVersionError("week model needs schema_version 1");
        if (j.value("kind", std::string{}) != "week_model") throw ModelFormatError("document is not a week model");
        m.week = j.at("week").get<int>();
        m.week_len = j.at("week_len").get<int>();
        m.hp = j.at("hyperparams").get<Hyperparams>();
        const auto& tr = j.at("training");
        m.meta.seed = tr.at("seed").get<std::uint64_t>();
        m.meta.epochs = tr.at("epochs").get<int>();
        m.meta.final_loss = tr.at("final_loss").get<double>();
        m.meta.loss_history = tr.value("loss_history", std::vector<double>{});
        m.bounds.maxi = j.at("bounds").at("maxi").get<std::vector<double>>();
        m.bounds.mini = j.at("bounds").at("mini").get<std::vector<double>>();
        m.net = LstmNetwork(j.at("input_size").get<std::size_t>(), j.at("hidden_size").get<std::size_t>(),
                            j.at("layers").get<std::size_t>(), j.at("outputs").get<std::size_t>());
        const auto& t = j.at("tensors");
        for (auto& ref : tensors(m.net)) {
            auto values = t.at(ref.name).get<std::vector<double>>();
            if (values.size() != ref.values.size()) {
                throw ModelFormatError("tensor " + ref.name + " has " + std::to_string(values.size()) + " values, expected " +
                                       std::to_string(ref.values.size()));
            }
            std::copy(values.begin(), values.end(), ref.values.begin());
        }
    } catch (const json::exception& e) {
        throw ModelFormatError(std::string("malformed week model: ") + e.what());
    } catch (const DimensionMismatch& e) {
        throw ModelFormatError(e.what());
    }
    m.check();
}

void save_model(const WeekModel& m, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw ModelFormatError("cannot write " + path.string());
    out << json(m).dump(1) << '\n';
}

WeekModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ModelFormatError("cannot open " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ModelFormatError(path.string() + ": " + e.what());
    }
    return j.get<WeekModel>();
}

ModelSet train_models(const std::vector<FlockSample>& train, const std::vector<FlockSample>& bounds_source,
                      const Hyperparams& hp, bool parallel) {
    auto weeks = dataset::partition_weeks(train);
    auto all = dataset::partition_weeks(bounds_source);
    ModelSet models;
    if (parallel) {
        std::vector<std::future<WeekModel>> jobs;
        for (int w = 0; w < kWeeks; ++w) {
            jobs.push_back(std::async(std::launch::async, [&, w] {
                auto b = fit_week_bounds(all[static_cast<std::size_t>(w)], 0.05, hp.output_pad);
                return train_week_model(weeks[static_cast<std::size_t>(w)], b, hp);
            }));
        }
        for (int w = 0; w < kWeeks; ++w) models[static_cast<std::size_t>(w)] = jobs[static_cast<std::size_t>(w)].get();
    } else {
        for (int w = 0; w < kWeeks; ++w) {
            auto b = fit_week_bounds(all[static_cast<std::size_t>(w)], 0.05, hp.output_pad);
            models[static_cast<std::size_t>(w)] = train_week_model(weeks[static_cast<std::size_t>(w)], b, hp);
        }
    }
    return models;
}

void save_models(const ModelSet& models, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    for (const auto& m : models) save_model(m, dir / ("week" + std::to_string(m.week) + ".json"));
}

ModelSet load_models(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) throw ModelFormatError("model directory " + dir.string() + " does not exist");
    ModelSet models;
    for (int w = 1; w <= kWeeks; ++w) {
        auto m = load_model(dir / ("week" + std::to_string(w) + ".json"));
        if (m.week != w) throw ModelFormatError("file week" + std::to_string(w) + ".json holds week " + std::to_string(m.week));
        models[static_cast<std::size_t>(w - 1)] = std::move(m);
    }
    return models;
}

} // namespace flockplan::surrogate

#include "flockplan/surrogate/lstm.hpp"

#include <algorithm>

namespace flockplan::surrogate {

namespace {

// y += W x
void gemv_acc(const Matrix& w, std::span<const double> x, double* y) {
    const std::size_t rows = w.rows(), cols = w.cols();
    const double* a = w.data().data();
    for (std::size_t r = 0; r < rows; ++r) {
        double s = 0.0;
        const double* row = a + r * cols;
        for (std::size_t c = 0; c < cols; ++c) s += row[c] * x[c];
        y[r] += s;
    }
}

// y += W^T d
void gemv_t_acc(const Matrix& w, const double* d, double* y) {
    const std::size_t rows = w.rows(), cols = w.cols();
    const double* a = w.data().data();
    for (std::size_t r = 0; r < rows; ++r) {
        const double dr = d[r];
        if (dr == 0.0) continue;
        const double* row = a + r * cols;
        for (std::size_t c = 0; c < cols; ++c) y[c] += row[c] * dr;
    }
}

// G += d x^T
void outer_acc(Matrix& g, const double* d, std::span<const double> x) {
    const std::size_t rows = g.rows(), cols = g.cols();
    double* a = g.data().data();
    for (std::size_t r = 0; r < rows; ++r) {
        const double dr = d[r];
        if (dr == 0.0) continue;
        double* row = a + r * cols;
        for (std::size_t c = 0; c < cols; ++c) row[c] += dr * x[c];
    }
}

void require(bool ok, const std::string& what) {
    if (!ok) throw DimensionMismatch(what);
}

// Per-layer activations of one step, kept for the backward pass.
struct StepCache {
    std::vector<double> x, h_prev, c_prev;
    std::vector<double> f, zi, i, j, o, c, h;
};

struct LayerForward {
    void run(const LstmLayerParams& p, std::span<const double> x, std::span<const double> h_prev,
             std::span<const double> c_prev, StepCache* cache, double* h_out, double* c_out) {
        const std::size_t n = p.hidden_size();
        zf.assign(p.b_f.begin(), p.b_f.end());
        zi.assign(p.b_i.begin(), p.b_i.end());
        zj.assign(p.b_j.begin(), p.b_j.end());
        zo.assign(p.b_o.begin(), p.b_o.end());
        gemv_acc(p.w_xf, x, zf.data());
        gemv_acc(p.w_hf, h_prev, zf.data());
        gemv_acc(p.w_xi, x, zi.data());
        gemv_acc(p.w_hi, h_prev, zi.data());
        gemv_acc(p.w_xj, x, zj.data());
        gemv_acc(p.w_hj, h_prev, zj.data());
        gemv_acc(p.w_xo, x, zo.data());
        gemv_acc(p.w_ho, h_prev, zo.data());
        if (cache) {
            cache->x.assign(x.begin(), x.end());
            cache->h_prev.assign(h_prev.begin(), h_prev.end());
            cache->c_prev.assign(c_prev.begin(), c_prev.end());
            cache->f.resize(n);
            cache->zi.resize(n);
            cache->i.resize(n);
            cache->j.resize(n);
            cache->o.resize(n);
            cache->c.resize(n);
            cache->h.resize(n);
        }
        for (std::size_t k = 0; k < n; ++k) {
            const double f = sigmoid(zf[k]);
            const double i = softsign(zi[k]);
            const double j = sigmoid(zj[k]);
            const double o = sigmoid(zo[k]);
            const double c = c_prev[k] * f + i * j;
            const double h = softsign(c) * o;
            c_out[k] = c;
            h_out[k] = h;
            if (cache) {
                cache->f[k] = f;
                cache->zi[k] = zi[k];
                cache->i[k] = i;
                cache->j[k] = j;
                cache->o[k] = o;
                cache->c[k] = c;
                cache->h[k] = h;
            }
        }
    }
    std::vector<double> zf, zi, zj, zo;
};

std::size_t plan_width(const LstmNetwork& net) { return net.input_size() - net.output_size(); }

std::size_t step_offset(const LstmNetwork& net, int day) {
    return day == 0 ? 0 : net.input_size() + static_cast<std::size_t>(day - 1) * plan_width(net);
}

std::size_t expected_input_length(const LstmNetwork& net, int days) {
    return net.input_size() + static_cast<std::size_t>(days - 1) * plan_width(net);
}

// Forward pass over one sequence. When `caches` is non-null it receives
// days x layers step caches plus the output pre-activations.
void forward(const LstmNetwork& net, std::span<const double> input, int days, double* y_out,
             std::vector<std::vector<StepCache>>* caches, std::vector<double>* out_pre) {
    const std::size_t L = net.layers.size();
    const std::size_t H = net.layers.front().hidden_size();
    const std::size_t O = net.output_size();
    const std::size_t P = plan_width(net);
    std::vector<std::vector<double>> h(L, std::vector<double>(H, 0.0)), c(L, std::vector<double>(H, 0.0));
    std::vector<double> h_new(H), c_new(H), x(net.input_size());
    LayerForward lf;
    if (caches) caches->assign(static_cast<std::size_t>(days), std::vector<StepCache>(L));
    if (out_pre) out_pre->assign(static_cast<std::size_t>(days) * O, 0.0);

    for (int t = 0; t < days; ++t) {
        const std::size_t off = step_offset(net, t);
        if (t == 0) {
            std::copy_n(input.begin(), net.input_size(), x.begin());
        } else {
            std::copy_n(input.begin() + static_cast<std::ptrdiff_t>(off), P, x.begin());
            std::copy_n(y_out + static_cast<std::size_t>(t - 1) * O, O, x.begin() + static_cast<std::ptrdiff_t>(P));
        }
        std::span<const double> layer_in = x;
        for (std::size_t l = 0; l < L; ++l) {
            StepCache* sc = caches ? &(*caches)[static_cast<std::size_t>(t)][l] : nullptr;
            lf.run(net.layers[l], layer_in, h[l], c[l], sc, h_new.data(), c_new.data());
            h[l].swap(h_new);
            c[l].swap(c_new);
            layer_in = h[l];
        }
        double* y = y_out + static_cast<std::size_t>(t) * O;
        std::copy(net.b_out.begin(), net.b_out.end(), y);
        gemv_acc(net.w_out, h[L - 1], y);
        for (std::size_t k = 0; k < O; ++k) {
            if (out_pre) (*out_pre)[static_cast<std::size_t>(t) * O + k] = y[k];
            y[k] = std::max(0.0, y[k]);
        }
    }
}

double l2_penalty(const LstmNetwork& net, double l2) {
    if (l2 == 0.0) return 0.0;
    double s = 0.0;
    for (auto& t : tensors(const_cast<LstmNetwork&>(net))) {
        if (!t.is_weight) continue;
        for (double w : t.values) s += w * w;
    }
    return 0.5 * l2 * s;
}

void check_batch(const LstmNetwork& net, const Matrix& inputs, const Matrix& targets, int days) {
    require(days >= 1, "sequence needs at least one day");
    require(inputs.rows() == targets.rows(), "inputs and targets disagree on sample count");
    require(inputs.cols() == expected_input_length(net, days), "input width does not match the network and day count");
    require(targets.cols() == static_cast<std::size_t>(days) * net.output_size(), "target width must be days x outputs");
    require(inputs.rows() > 0, "empty training batch");
}

} // namespace

LstmLayerParams::LstmLayerParams(std::size_t in, std::size_t hid)
    : w_xf(hid, in), w_xi(hid, in), w_xj(hid, in), w_xo(hid, in), w_hf(hid, hid), w_hi(hid, hid), w_hj(hid, hid),
      w_ho(hid, hid), b_f(hid, 0.0), b_i(hid, 0.0), b_j(hid, 0.0), b_o(hid, 0.0) {}

void LstmLayerParams::check_shapes() const {
    const std::size_t n = hidden_size(), m = input_size();
    for (const Matrix* w : {&w_xf, &w_xi, &w_xj, &w_xo}) require(w->rows() == n && w->cols() == m, "input weight shape mismatch");
    for (const Matrix* w : {&w_hf, &w_hi, &w_hj, &w_ho}) require(w->rows() == n && w->cols() == n, "recurrent weight shape mismatch");
    for (const auto* b : {&b_f, &b_i, &b_j, &b_o}) require(b->size() == n, "bias length mismatch");
}

CellOutput cell_step(const LstmLayerParams& p, std::span<const double> x, std::span<const double> h_prev,
                     std::span<const double> c_prev) {
    p.check_shapes();
    require(x.size() == p.input_size(), "cell input has wrong length");
    require(h_prev.size() == p.hidden_size() && c_prev.size() == p.hidden_size(), "cell state has wrong length");
    CellOutput out{std::vector<double>(p.hidden_size()), std::vector<double>(p.hidden_size())};
    LayerForward lf;
    lf.run(p, x, h_prev, c_prev, nullptr, out.h.data(), out.c.data());
    return out;
}

LstmNetwork::LstmNetwork(std::size_t input_size, std::size_t hidden_size, std::size_t n_layers, std::size_t outputs)
    : w_out(outputs, hidden_size), b_out(outputs, 0.0) {
    require(n_layers >= 1 && hidden_size >= 1 && outputs >= 1 && input_size > outputs, "invalid network shape");
    layers.emplace_back(input_size, hidden_size);
    for (std::size_t l = 1; l < n_layers; ++l) layers.emplace_back(hidden_size, hidden_size);
}

void LstmNetwork::check_shapes() const {
    require(!layers.empty(), "network without layers");
    for (std::size_t l = 0; l < layers.size(); ++l) {
        layers[l].check_shapes();
        if (l > 0) require(layers[l].input_size() == layers[l - 1].hidden_size(), "stacked layer widths disagree");
    }
    require(w_out.cols() == layers.back().hidden_size(), "output layer width mismatch");
    require(b_out.size() == w_out.rows(), "output bias length mismatch");
    require(input_size() > output_size(), "first layer must take plan inputs plus fed-back outputs");
}

std::vector<TensorRef> tensors(LstmNetwork& net) {
    std::vector<TensorRef> out;
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        auto& p = net.layers[l];
        const std::string pre = "layer" + std::to_string(l) + ".";
        out.push_back({pre + "w_xf", p.w_xf.data(), true});
        out.push_back({pre + "w_xi", p.w_xi.data(), true});
        out.push_back({pre + "w_xj", p.w_xj.data(), true});
        out.push_back({pre + "w_xo", p.w_xo.data(), true});
        out.push_back({pre + "w_hf", p.w_hf.data(), true});
        out.push_back({pre + "w_hi", p.w_hi.data(), true});
        out.push_back({pre + "w_hj", p.w_hj.data(), true});
        out.push_back({pre + "w_ho", p.w_ho.data(), true});
        out.push_back({pre + "b_f", p.b_f, false});
        out.push_back({pre + "b_i", p.b_i, false});
        out.push_back({pre + "b_j", p.b_j, false});
        out.push_back({pre + "b_o", p.b_o, false});
    }
    out.push_back({"out.w", net.w_out.data(), true});
    out.push_back({"out.b", net.b_out, false});
    return out;
}

std::size_t parameter_count(const LstmNetwork& net) {
    std::size_t n = 0;
    for (auto& t : tensors(const_cast<LstmNetwork&>(net))) n += t.values.size();
    return n;
}

void he_init(LstmNetwork& net, std::mt19937_64& rng, double output_bias) {
    for (auto& l : net.layers) {
        const double sx = std::sqrt(2.0 / static_cast<double>(l.input_size()));
        const double sh = std::sqrt(2.0 / static_cast<double>(l.hidden_size()));
        for (Matrix* w : {&l.w_xf, &l.w_xi, &l.w_xj, &l.w_xo}) {
            std::normal_distribution<double> d(0.0, sx);
            for (double& v : w->data()) v = d(rng);
        }
        for (Matrix* w : {&l.w_hf, &l.w_hi, &l.w_hj, &l.w_ho}) {
            std::normal_distribution<double> d(0.0, sh);
            for (double& v : w->data()) v = d(rng);
        }
        for (auto* b : {&l.b_f, &l.b_i, &l.b_j, &l.b_o}) std::fill(b->begin(), b->end(), 0.0);
    }
    std::normal_distribution<double> d(0.0, std::sqrt(2.0 / static_cast<double>(net.w_out.cols())));
    for (double& v : net.w_out.data()) v = d(rng);
    std::fill(net.b_out.begin(), net.b_out.end(), output_bias);
}

std::vector<double> run_sequence(const LstmNetwork& net, std::span<const double> week_input, int days) {
    require(days >= 1, "sequence needs at least one day");
    require(week_input.size() == expected_input_length(net, days),
            "week vector length " + std::to_string(week_input.size()) + " does not match " + std::to_string(days) + " days");
    std::vector<double> y(static_cast<std::size_t>(days) * net.output_size());
    forward(net, week_input, days, y.data(), nullptr, nullptr);
    return y;
}

double sequence_loss(const LstmNetwork& net, const Matrix& inputs, const Matrix& targets, int days, double l2) {
    check_batch(net, inputs, targets, days);
    std::vector<double> y(targets.cols());
    double sse = 0.0;
    for (std::size_t s = 0; s < inputs.rows(); ++s) {
        forward(net, inputs.row(s), days, y.data(), nullptr, nullptr);
        auto tgt = targets.row(s);
        for (std::size_t k = 0; k < y.size(); ++k) sse += (y[k] - tgt[k]) * (y[k] - tgt[k]);
    }
    return sse / static_cast<double>(targets.size()) + l2_penalty(net, l2);
}

double loss_and_gradient(const LstmNetwork& net, const Matrix& inputs, const Matrix& targets, int days, double l2,
                         LstmNetwork& grad) {
    check_batch(net, inputs, targets, days);
    grad = net;
    for (auto& t : tensors(grad)) std::fill(t.values.begin(), t.values.end(), 0.0);

    const std::size_t L = net.layers.size();
    const std::size_t H = net.layers.front().hidden_size();
    const std::size_t O = net.output_size();
    const std::size_t P = plan_width(net);
    const double scale = 2.0 / static_cast<double>(targets.size());

    std::vector<std::vector<StepCache>> caches;
    std::vector<double> pre, y(targets.cols());
    std::vector<double> dy(O), dpre(O), dh_above(H), dx_in;
    std::vector<std::vector<double>> dh_next(L), dc_next(L);
    std::vector<double> dzf(H), dzi(H), dzj(H), dzo(H);
    std::vector<double> feedback(O);
    double sse = 0.0;

    for (std::size_t s = 0; s < inputs.rows(); ++s) {
        forward(net, inputs.row(s), days, y.data(), &caches, &pre);
        auto tgt = targets.row(s);
        for (std::size_t l = 0; l < L; ++l) {
            dh_next[l].assign(H, 0.0);
            dc_next[l].assign(H, 0.0);
        }
        std::fill(feedback.begin(), feedback.end(), 0.0);

        for (int t = days - 1; t >= 0; --t) {
            const std::size_t base = static_cast<std::size_t>(t) * O;
            for (std::size_t k = 0; k < O; ++k) {
                const double e = y[base + k] - tgt[base + k];
                sse += e * e;
                dy[k] = scale * e + feedback[k];
                dpre[k] = pre[base + k] > 0.0 ? dy[k] : 0.0;
            }
            const auto& top = caches[static_cast<std::size_t>(t)][L - 1];
            outer_acc(grad.w_out, dpre.data(), top.h);
            for (std::size_t k = 0; k < O; ++k) grad.b_out[k] += dpre[k];
            std::fill(dh_above.begin(), dh_above.end(), 0.0);
            gemv_t_acc(net.w_out, dpre.data(), dh_above.data());

            for (std::size_t li = L; li-- > 0;) {
                const auto& p = net.layers[li];
                auto& g = grad.layers[li];
                const auto& sc = caches[static_cast<std::size_t>(t)][li];
                auto& dhn = dh_next[li];
                auto& dcn = dc_next[li];
                for (std::size_t k = 0; k < H; ++k) {
                    const double dh = dh_above[k] + dhn[k];
                    const double sc_c = softsign(sc.c[k]);
                    const double d_o = dh * sc_c;
                    const double dc = dcn[k] + dh * sc.o[k] * softsign_grad(sc.c[k]);
                    const double d_f = dc * sc.c_prev[k];
                    const double d_i = dc * sc.j[k];
                    const double d_j = dc * sc.i[k];
                    dcn[k] = dc * sc.f[k];
                    dzf[k] = d_f * sc.f[k] * (1.0 - sc.f[k]);
                    dzi[k] = d_i * softsign_grad(sc.zi[k]);
                    dzj[k] = d_j * sc.j[k] * (1.0 - sc.j[k]);
                    dzo[k] = d_o * sc.o[k] * (1.0 - sc.o[k]);
                }
                outer_acc(g.w_xf, dzf.data(), sc.x);
                outer_acc(g.w_xi, dzi.data(), sc.x);
                outer_acc(g.w_xj, dzj.data(), sc.x);
                outer_acc(g.w_xo, dzo.data(), sc.x);
                outer_acc(g.w_hf, dzf.data(), sc.h_prev);
                outer_acc(g.w_hi, dzi.data(), sc.h_prev);
                outer_acc(g.w_hj, dzj.data(), sc.h_prev);
                outer_acc(g.w_ho, dzo.data(), sc.h_prev);
                for (std::size_t k = 0; k < H; ++k) {
                    g.b_f[k] += dzf[k];
                    g.b_i[k] += dzi[k];
                    g.b_j[k] += dzj[k];
                    g.b_o[k] += dzo[k];
                }
                std::fill(dhn.begin(), dhn.end(), 0.0);
                gemv_t_acc(p.w_hf, dzf.data(), dhn.data());
                gemv_t_acc(p.w_hi, dzi.data(), dhn.data());
                gemv_t_acc(p.w_hj, dzj.data(), dhn.data());
                gemv_t_acc(p.w_ho, dzo.data(), dhn.data());

                dx_in.assign(p.input_size(), 0.0);
                gemv_t_acc(p.w_xf, dzf.data(), dx_in.data());
                gemv_t_acc(p.w_xi, dzi.data(), dx_in.data());
                gemv_t_acc(p.w_xj, dzj.data(), dx_in.data());
                gemv_t_acc(p.w_xo, dzo.data(), dx_in.data());
                if (li > 0) {
                    dh_above.assign(dx_in.begin(), dx_in.end());
                } else if (t > 0) {
                    // The last O inputs of day t are the predictions of day t-1.
                    std::copy_n(dx_in.begin() + static_cast<std::ptrdiff_t>(P), O, feedback.begin());
                }
            }
        }
    }

    if (l2 != 0.0) {
        auto gt = tensors(grad);
        auto nt = tensors(const_cast<LstmNetwork&>(net));
        for (std::size_t k = 0; k < gt.size(); ++k) {
            if (!gt[k].is_weight) continue;
            for (std::size_t e = 0; e < gt[k].values.size(); ++e) gt[k].values[e] += l2 * nt[k].values[e];
        }
    }
    return sse / static_cast<double>(targets.size()) + l2_penalty(net, l2);
}

} // namespace flockplan::surrogate

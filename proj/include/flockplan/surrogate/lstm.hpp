#pragma once

// Stacked LSTM with an output feedback loop, written out by hand so the
// backward pass is inspectable.
//
// Gate naming follows the week model's convention: `i` carries the candidate
// values (softsign) and `j` is the input gate (sigmoid):
//
//   f = sig(Wxf x + Whf h + bf)     i = softsign(Wxi x + Whi h + bi)
//   j = sig(Wxj x + Whj h + bj)     o = sig(Wxo x + Who h + bo)
//   c = c_prev * f + i * j          h = softsign(c) * o

#include <cmath>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "flockplan/matrix.hpp"

namespace flockplan::surrogate {

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }
inline double softsign(double z) { return z / (1.0 + std::abs(z)); }
inline double softsign_grad(double z) {
    double d = 1.0 + std::abs(z);
    return 1.0 / (d * d);
}

struct LstmLayerParams {
    Matrix w_xf, w_xi, w_xj, w_xo; // hidden x input
    Matrix w_hf, w_hi, w_hj, w_ho; // hidden x hidden
    std::vector<double> b_f, b_i, b_j, b_o;

    LstmLayerParams() = default;
    LstmLayerParams(std::size_t input_size, std::size_t hidden_size);

    std::size_t input_size() const noexcept { return w_xf.cols(); }
    std::size_t hidden_size() const noexcept { return w_xf.rows(); }

    /// Throws DimensionMismatch when tensors disagree on shape.
    void check_shapes() const;

    bool operator==(const LstmLayerParams&) const = default;
};

struct CellOutput {
    std::vector<double> h;
    std::vector<double> c;
};

CellOutput cell_step(const LstmLayerParams& p, std::span<const double> x, std::span<const double> h_prev,
                     std::span<const double> c_prev);

/// Three recurrent layers plus a ReLU output layer whose outputs are fed back
/// as the last `feedback` inputs of the next step.
struct LstmNetwork {
    std::vector<LstmLayerParams> layers;
    Matrix w_out; // outputs x hidden
    std::vector<double> b_out;

    LstmNetwork() = default;
    LstmNetwork(std::size_t input_size, std::size_t hidden_size, std::size_t layers, std::size_t outputs);

    std::size_t input_size() const noexcept { return layers.front().input_size(); }
    std::size_t output_size() const noexcept { return w_out.rows(); }
    void check_shapes() const;

    bool operator==(const LstmNetwork&) const = default;
};

/// View over one parameter tensor, used by the optimizer and for persistence.
struct TensorRef {
    std::string name;
    std::span<double> values;
    bool is_weight; // L2 applies to weights only
};
std::vector<TensorRef> tensors(LstmNetwork& net);
std::size_t parameter_count(const LstmNetwork& net);

/// HE initialisation: weights ~ N(0, 2/fan_in), biases zero except the output
/// bias which starts at `output_bias`.
void he_init(LstmNetwork& net, std::mt19937_64& rng, double output_bias);

/// Runs the network over `days` steps in normalised space.
///
/// `week_input` uses the week vector layout: day 1 is [x1 | y0] (10 values),
/// later days contribute 7 plan values and receive the previous prediction as
/// their last 3 inputs. Returns the day-major predictions (days x outputs).
std::vector<double> run_sequence(const LstmNetwork& net, std::span<const double> week_input, int days);

/// Mean squared error over all days and outputs of every sample plus
/// 0.5 * l2 * sum(w^2). `inputs` rows are normalised week vectors, `targets`
/// rows normalised day-major outputs.
double sequence_loss(const LstmNetwork& net, const Matrix& inputs, const Matrix& targets, int days, double l2);

/// Loss and its gradient through time, including the path through the fed
/// back predictions. `grad` is resized to match `net`.
double loss_and_gradient(const LstmNetwork& net, const Matrix& inputs, const Matrix& targets, int days, double l2,
                         LstmNetwork& grad);

} // namespace flockplan::surrogate

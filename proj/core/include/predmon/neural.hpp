#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "predmon/rng.hpp"

namespace predmon::neural {

using Vec = std::vector<double>;

/// Dense row-major matrix, the only tensor shape the substrate needs.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    Vec data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

    double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
    double* row(std::size_t r) { return data.data() + r * cols; }
    const double* row(std::size_t r) const { return data.data() + r * cols; }
};

enum class Activation { Relu, Identity };

/// Fully connected layer: activation(W x + b).
struct DenseLayer {
    Matrix weights;  // out x in
    Vec biases;      // out
    Activation activation = Activation::Identity;

    static DenseLayer init(std::size_t input_dim, std::size_t output_dim,
                           Activation activation, Rng& rng);
    std::size_t input_dim() const { return weights.cols; }
    std::size_t output_dim() const { return weights.rows; }
    std::size_t parameter_count() const { return weights.data.size() + biases.size(); }
};

/// Forward cache for one dense evaluation.
struct DenseTrace {
    Vec input;
    Vec pre_activation;
};

Vec dense_forward(const DenseLayer& layer, const Vec& x, DenseTrace* trace = nullptr);

struct DenseGrads {
    Matrix weights;
    Vec biases;
    static DenseGrads zeros_like(const DenseLayer& layer);
};

/// Backpropagate dL/d(output) through the layer. Accumulates parameter
/// gradients into `grads` and returns dL/d(input).
Vec dense_backward(const DenseLayer& layer, const DenseTrace& trace, const Vec& dout,
                   DenseGrads& grads);

/// LSTM cell with the standard gate set (sigmoid input/forget/output gates,
/// tanh candidate and cell squash). Gate parameters are fused row-wise in
/// the order [input, forget, candidate, output].
struct LstmCell {
    std::size_t input_dim = 0;
    std::size_t hidden_dim = 0;
    Matrix w_input;   // 4h x d
    Matrix w_hidden;  // 4h x h
    Vec biases;       // 4h

    static LstmCell init(std::size_t input_dim, std::size_t hidden_dim, Rng& rng);
    std::size_t parameter_count() const {
        return w_input.data.size() + w_hidden.data.size() + biases.size();
    }
};

enum class Direction { Forward, Backward };

/// Forward cache for one sequence pass, stored in processing order.
struct LstmTrace {
    Direction direction = Direction::Forward;
    Matrix inputs;      // T x d, row s = input consumed at processing step s
    Matrix h_prev;      // T x h
    Matrix c_prev;      // T x h
    Matrix gate_i;      // T x h, post-sigmoid
    Matrix gate_f;      // T x h
    Matrix gate_g;      // T x h, post-tanh
    Matrix gate_o;      // T x h
    Matrix cell;        // T x h
    Matrix cell_tanh;   // T x h
};

/// Run the cell over a T x d sequence from zero initial state. The returned
/// T x h hidden states are aligned with input time order for both directions
/// (a Backward pass consumes the sequence reversed and re-reverses its
/// outputs).
Matrix lstm_forward(const LstmCell& cell, const Matrix& sequence, Direction direction,
                    LstmTrace* trace = nullptr);

struct LstmGrads {
    Matrix w_input;
    Matrix w_hidden;
    Vec biases;
    static LstmGrads zeros_like(const LstmCell& cell);
};

/// Backpropagate through time. `dhidden` is dL/d(hidden states), T x h,
/// aligned with input time order. Accumulates parameter gradients and
/// returns dL/d(inputs), T x d, also time-aligned.
Matrix lstm_backward(const LstmCell& cell, const LstmTrace& trace, const Matrix& dhidden,
                     LstmGrads& grads);

/// Mean squared error and its gradient w.r.t. the prediction.
double mse_loss(std::span<const double> pred, std::span<const double> target);
Vec mse_gradient(std::span<const double> pred, std::span<const double> target);

struct AdamConfig {
    double learning_rate = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// Per-parameter moment accumulators plus the shared step counter.
struct AdamState {
    AdamConfig config;
    Vec m;
    Vec v;
    std::uint64_t step = 0;

    static AdamState for_parameter_count(std::size_t n, AdamConfig config = {});
};

/// One Adam update with bias correction, in place. An all-zero gradient is a
/// no-op that leaves parameters and state untouched. Throws
/// NonFiniteGradient / DimensionMismatch.
void adam_step(AdamState& state, std::span<double> params, std::span<const double> grads);

/// Inverted dropout: training zeroes each element with probability `rate`
/// and scales survivors by 1/(1-rate); inference is the identity. The
/// survival mask is written to `mask` when given (needed for backward).
Vec dropout_forward(const Vec& x, double rate, Rng& rng, bool training,
                    std::vector<std::uint8_t>* mask = nullptr);
Vec dropout_backward(const Vec& dout, double rate, const std::vector<std::uint8_t>& mask);

}  // namespace predmon::neural

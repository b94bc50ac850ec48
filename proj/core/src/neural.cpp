#include "predmon/neural.hpp"

#include <cmath>
#include <string>

#include "predmon/errors.hpp"

namespace predmon::neural {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double init_range(std::size_t fan_in) {
    return 1.0 / std::sqrt(static_cast<double>(fan_in));
}

void fill_uniform(Vec& v, double range, Rng& rng) {
    for (double& x : v) x = rng.uniform(-range, range);
}

// y += M x
void matvec_add(const Matrix& m, const double* x, double* y) {
    for (std::size_t r = 0; r < m.rows; ++r) {
        const double* row = m.row(r);
        double sum = 0.0;
        for (std::size_t c = 0; c < m.cols; ++c) sum += row[c] * x[c];
        y[r] += sum;
    }
}

// y = M^T d  (overwrites y)
void matvec_transpose(const Matrix& m, const double* d, double* y) {
    for (std::size_t c = 0; c < m.cols; ++c) y[c] = 0.0;
    for (std::size_t r = 0; r < m.rows; ++r) {
        const double dr = d[r];
        if (dr == 0.0) continue;
        const double* row = m.row(r);
        for (std::size_t c = 0; c < m.cols; ++c) y[c] += dr * row[c];
    }
}

// M += d (x) x  (outer product accumulate)
void outer_add(Matrix& m, const double* d, const double* x) {
    for (std::size_t r = 0; r < m.rows; ++r) {
        const double dr = d[r];
        if (dr == 0.0) continue;
        double* row = m.row(r);
        for (std::size_t c = 0; c < m.cols; ++c) row[c] += dr * x[c];
    }
}

}  // namespace

DenseLayer DenseLayer::init(std::size_t input_dim, std::size_t output_dim,
                            Activation activation, Rng& rng) {
    DenseLayer layer;
    layer.weights = Matrix(output_dim, input_dim);
    layer.biases.assign(output_dim, 0.0);
    layer.activation = activation;
    fill_uniform(layer.weights.data, init_range(input_dim), rng);
    return layer;
}

Vec dense_forward(const DenseLayer& layer, const Vec& x, DenseTrace* trace) {
    if (x.size() != layer.input_dim())
        throw DimensionMismatch("dense input has " + std::to_string(x.size()) +
                                " elements, layer expects " +
                                std::to_string(layer.input_dim()));
    Vec pre = layer.biases;
    matvec_add(layer.weights, x.data(), pre.data());
    Vec out = pre;
    if (layer.activation == Activation::Relu) {
        for (double& v : out) v = v > 0.0 ? v : 0.0;
    }
    if (trace) {
        trace->input = x;
        trace->pre_activation = std::move(pre);
    }
    return out;
}

DenseGrads DenseGrads::zeros_like(const DenseLayer& layer) {
    DenseGrads g;
    g.weights = Matrix(layer.weights.rows, layer.weights.cols);
    g.biases.assign(layer.biases.size(), 0.0);
    return g;
}

Vec dense_backward(const DenseLayer& layer, const DenseTrace& trace, const Vec& dout,
                   DenseGrads& grads) {
    if (dout.size() != layer.output_dim())
        throw DimensionMismatch("dense gradient has wrong length");
    Vec dpre = dout;
    if (layer.activation == Activation::Relu) {
        for (std::size_t i = 0; i < dpre.size(); ++i)
            if (trace.pre_activation[i] <= 0.0) dpre[i] = 0.0;
    }
    outer_add(grads.weights, dpre.data(), trace.input.data());
    for (std::size_t i = 0; i < dpre.size(); ++i) grads.biases[i] += dpre[i];
    Vec dx(layer.input_dim(), 0.0);
    matvec_transpose(layer.weights, dpre.data(), dx.data());
    return dx;
}

LstmCell LstmCell::init(std::size_t input_dim, std::size_t hidden_dim, Rng& rng) {
    LstmCell cell;
    cell.input_dim = input_dim;
    cell.hidden_dim = hidden_dim;
    cell.w_input = Matrix(4 * hidden_dim, input_dim);
    cell.w_hidden = Matrix(4 * hidden_dim, hidden_dim);
    cell.biases.assign(4 * hidden_dim, 0.0);
    fill_uniform(cell.w_input.data, init_range(input_dim), rng);
    fill_uniform(cell.w_hidden.data, init_range(hidden_dim), rng);
    return cell;
}

Matrix lstm_forward(const LstmCell& cell, const Matrix& sequence, Direction direction,
                    LstmTrace* trace) {
    if (sequence.cols != cell.input_dim)
        throw DimensionMismatch("lstm input width " + std::to_string(sequence.cols) +
                                " does not match cell input dim " +
                                std::to_string(cell.input_dim));
    if (sequence.rows == 0) throw DimensionMismatch("lstm input sequence is empty");

    const std::size_t steps = sequence.rows;
    const std::size_t h = cell.hidden_dim;

    if (trace) {
        trace->direction = direction;
        trace->inputs = Matrix(steps, cell.input_dim);
        trace->h_prev = Matrix(steps, h);
        trace->c_prev = Matrix(steps, h);
        trace->gate_i = Matrix(steps, h);
        trace->gate_f = Matrix(steps, h);
        trace->gate_g = Matrix(steps, h);
        trace->gate_o = Matrix(steps, h);
        trace->cell = Matrix(steps, h);
        trace->cell_tanh = Matrix(steps, h);
    }

    Vec h_state(h, 0.0);
    Vec c_state(h, 0.0);
    Vec z(4 * h);
    Matrix hidden(steps, h);

    for (std::size_t s = 0; s < steps; ++s) {
        const std::size_t t = direction == Direction::Forward ? s : steps - 1 - s;
        const double* x = sequence.row(t);

        for (std::size_t j = 0; j < 4 * h; ++j) z[j] = cell.biases[j];
        matvec_add(cell.w_input, x, z.data());
        matvec_add(cell.w_hidden, h_state.data(), z.data());

        if (trace) {
            for (std::size_t c = 0; c < cell.input_dim; ++c) trace->inputs.at(s, c) = x[c];
            for (std::size_t k = 0; k < h; ++k) {
                trace->h_prev.at(s, k) = h_state[k];
                trace->c_prev.at(s, k) = c_state[k];
            }
        }

        for (std::size_t k = 0; k < h; ++k) {
            const double gi = sigmoid(z[k]);
            const double gf = sigmoid(z[h + k]);
            const double gg = std::tanh(z[2 * h + k]);
            const double go = sigmoid(z[3 * h + k]);
            const double c_new = gf * c_state[k] + gi * gg;
            const double ct = std::tanh(c_new);
            c_state[k] = c_new;
            h_state[k] = go * ct;
            if (trace) {
                trace->gate_i.at(s, k) = gi;
                trace->gate_f.at(s, k) = gf;
                trace->gate_g.at(s, k) = gg;
                trace->gate_o.at(s, k) = go;
                trace->cell.at(s, k) = c_new;
                trace->cell_tanh.at(s, k) = ct;
            }
        }
        for (std::size_t k = 0; k < h; ++k) hidden.at(t, k) = h_state[k];
    }
    return hidden;
}

LstmGrads LstmGrads::zeros_like(const LstmCell& cell) {
    LstmGrads g;
    g.w_input = Matrix(cell.w_input.rows, cell.w_input.cols);
    g.w_hidden = Matrix(cell.w_hidden.rows, cell.w_hidden.cols);
    g.biases.assign(cell.biases.size(), 0.0);
    return g;
}

Matrix lstm_backward(const LstmCell& cell, const LstmTrace& trace, const Matrix& dhidden,
                     LstmGrads& grads) {
    const std::size_t steps = trace.inputs.rows;
    const std::size_t h = cell.hidden_dim;
    if (dhidden.rows != steps || dhidden.cols != h)
        throw DimensionMismatch("lstm hidden gradient has wrong shape");

    Matrix dinputs(steps, cell.input_dim);
    Vec dh_rec(h, 0.0);
    Vec dc_rec(h, 0.0);
    Vec dz(4 * h);
    Vec dx(cell.input_dim);

    for (std::size_t sr = steps; sr-- > 0;) {
        const std::size_t t =
            trace.direction == Direction::Forward ? sr : steps - 1 - sr;
        for (std::size_t k = 0; k < h; ++k) {
            const double dh = dhidden.at(t, k) + dh_rec[k];
            const double go = trace.gate_o.at(sr, k);
            const double ct = trace.cell_tanh.at(sr, k);
            const double dgo = dh * ct;
            const double dc = dh * go * (1.0 - ct * ct) + dc_rec[k];
            const double gi = trace.gate_i.at(sr, k);
            const double gf = trace.gate_f.at(sr, k);
            const double gg = trace.gate_g.at(sr, k);
            const double cp = trace.c_prev.at(sr, k);
            dz[k] = dc * gg * gi * (1.0 - gi);
            dz[h + k] = dc * cp * gf * (1.0 - gf);
            dz[2 * h + k] = dc * gi * (1.0 - gg * gg);
            dz[3 * h + k] = dgo * go * (1.0 - go);
            dc_rec[k] = dc * gf;
        }
        outer_add(grads.w_input, dz.data(), trace.inputs.row(sr));
        outer_add(grads.w_hidden, dz.data(), trace.h_prev.row(sr));
        for (std::size_t j = 0; j < 4 * h; ++j) grads.biases[j] += dz[j];

        matvec_transpose(cell.w_input, dz.data(), dx.data());
        for (std::size_t c = 0; c < cell.input_dim; ++c) dinputs.at(t, c) = dx[c];
        matvec_transpose(cell.w_hidden, dz.data(), dh_rec.data());
    }
    return dinputs;
}

double mse_loss(std::span<const double> pred, std::span<const double> target) {
    if (pred.size() != target.size())
        throw DimensionMismatch("mse inputs differ in length: " +
                                std::to_string(pred.size()) + " vs " +
                                std::to_string(target.size()));
    if (pred.empty()) throw EmptyInput("mse inputs are empty");
    double sum = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = pred[i] - target[i];
        sum += d * d;
    }
    return sum / static_cast<double>(pred.size());
}

Vec mse_gradient(std::span<const double> pred, std::span<const double> target) {
    if (pred.size() != target.size())
        throw DimensionMismatch("mse inputs differ in length");
    Vec grad(pred.size());
    const double scale = 2.0 / static_cast<double>(pred.size());
    for (std::size_t i = 0; i < pred.size(); ++i)
        grad[i] = scale * (pred[i] - target[i]);
    return grad;
}

AdamState AdamState::for_parameter_count(std::size_t n, AdamConfig config) {
    AdamState state;
    state.config = config;
    state.m.assign(n, 0.0);
    state.v.assign(n, 0.0);
    return state;
}

void adam_step(AdamState& state, std::span<double> params, std::span<const double> grads) {
    if (params.size() != grads.size() || params.size() != state.m.size())
        throw DimensionMismatch("adam parameter/gradient/state sizes disagree");
    bool all_zero = true;
    for (double g : grads) {
        if (!std::isfinite(g)) throw NonFiniteGradient("gradient contains NaN or inf");
        if (g != 0.0) all_zero = false;
    }
    if (all_zero) return;

    const auto& c = state.config;
    state.step += 1;
    const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        state.m[i] = c.beta1 * state.m[i] + (1.0 - c.beta1) * grads[i];
        state.v[i] = c.beta2 * state.v[i] + (1.0 - c.beta2) * grads[i] * grads[i];
        const double m_hat = state.m[i] / bc1;
        const double v_hat = state.v[i] / bc2;
        params[i] -= c.learning_rate * m_hat / (std::sqrt(v_hat) + c.epsilon);
    }
}

Vec dropout_forward(const Vec& x, double rate, Rng& rng, bool training,
                    std::vector<std::uint8_t>* mask) {
    if (rate < 0.0 || rate >= 1.0)
        throw InvalidRate("dropout rate must be in [0, 1), got " + std::to_string(rate));
    if (!training || rate == 0.0) {
        if (mask) mask->assign(x.size(), 1);
        return x;
    }
    Vec out(x.size());
    if (mask) mask->assign(x.size(), 0);
    const double keep_scale = 1.0 / (1.0 - rate);
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (rng.uniform01() < rate) {
            out[i] = 0.0;
        } else {
            out[i] = x[i] * keep_scale;
            if (mask) (*mask)[i] = 1;
        }
    }
    return out;
}

Vec dropout_backward(const Vec& dout, double rate, const std::vector<std::uint8_t>& mask) {
    if (dout.size() != mask.size())
        throw DimensionMismatch("dropout gradient and mask sizes disagree");
    Vec dx(dout.size(), 0.0);
    const double keep_scale = rate == 0.0 ? 1.0 : 1.0 / (1.0 - rate);
    for (std::size_t i = 0; i < dout.size(); ++i)
        if (mask[i]) dx[i] = dout[i] * keep_scale;
    return dx;
}

}  // namespace predmon::neural

#include "predmon/forecaster.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>

#include "predmon/errors.hpp"

namespace predmon::forecaster {

using neural::Matrix;
using neural::Vec;

namespace {

struct Scratch {
    neural::LstmTrace fwd_trace;
    neural::LstmTrace bwd_trace;
    neural::DenseTrace head_trace;
    std::vector<std::uint8_t> dropout_mask;
    bool trained_with_dropout = false;
};

struct StructuredGrads {
    neural::LstmGrads fwd;
    neural::LstmGrads bwd;
    neural::DenseGrads head;

    static StructuredGrads zeros_like(const ForecastNetwork& net) {
        StructuredGrads g;
        g.fwd = neural::LstmGrads::zeros_like(net.forward_cell);
        g.bwd = neural::LstmGrads::zeros_like(net.backward_cell);
        g.head = neural::DenseGrads::zeros_like(net.head);
        return g;
    }

    void add_flat(std::span<double> out) const {
        std::size_t k = 0;
        auto push = [&](const Vec& v) {
            for (double x : v) out[k++] += x;
        };
        push(fwd.w_input.data);
        push(fwd.w_hidden.data);
        push(fwd.biases);
        push(bwd.w_input.data);
        push(bwd.w_hidden.data);
        push(bwd.biases);
        push(head.weights.data);
        push(head.biases);
    }
};

Vec forward_impl(const ForecastNetwork& net, const Matrix& window_norm, bool training,
                 Rng* dropout_rng, Scratch* scratch) {
    if (window_norm.rows != net.window || window_norm.cols != net.channels)
        throw DimensionMismatch("forecast window is " + std::to_string(window_norm.rows) +
                                "x" + std::to_string(window_norm.cols) + ", network expects " +
                                std::to_string(net.window) + "x" +
                                std::to_string(net.channels));

    const std::size_t h = net.forward_cell.hidden_dim;
    Matrix hf = neural::lstm_forward(net.forward_cell, window_norm,
                                     neural::Direction::Forward,
                                     scratch ? &scratch->fwd_trace : nullptr);
    Matrix hb = neural::lstm_forward(net.backward_cell, window_norm,
                                     neural::Direction::Backward,
                                     scratch ? &scratch->bwd_trace : nullptr);

    // Final state of each direction: forward ends at the last row, backward
    // (time-aligned) ends at row 0.
    Vec features(2 * h);
    for (std::size_t k = 0; k < h; ++k) {
        features[k] = hf.at(net.window - 1, k);
        features[h + k] = hb.at(0, k);
    }

    const bool use_dropout = training && net.dropout_rate > 0.0;
    if (use_dropout) {
        features = neural::dropout_forward(features, net.dropout_rate, *dropout_rng, true,
                                           scratch ? &scratch->dropout_mask : nullptr);
    }
    if (scratch) scratch->trained_with_dropout = use_dropout;

    return neural::dense_forward(net.head, features, scratch ? &scratch->head_trace : nullptr);
}

void backward_impl(const ForecastNetwork& net, const Scratch& scratch, const Vec& dpred,
                   StructuredGrads& grads) {
    Vec dfeatures = neural::dense_backward(net.head, scratch.head_trace, dpred, grads.head);
    if (scratch.trained_with_dropout)
        dfeatures = neural::dropout_backward(dfeatures, net.dropout_rate, scratch.dropout_mask);

    const std::size_t h = net.forward_cell.hidden_dim;
    Matrix dh_fwd(net.window, h);
    Matrix dh_bwd(net.window, h);
    for (std::size_t k = 0; k < h; ++k) {
        dh_fwd.at(net.window - 1, k) = dfeatures[k];
        dh_bwd.at(0, k) = dfeatures[h + k];
    }
    neural::lstm_backward(net.forward_cell, scratch.fwd_trace, dh_fwd, grads.fwd);
    neural::lstm_backward(net.backward_cell, scratch.bwd_trace, dh_bwd, grads.bwd);
}

Matrix window_matrix(const Vec& flat, std::size_t rows, std::size_t cols) {
    Matrix m(rows, cols);
    m.data = flat;
    return m;
}

void format_double(std::string& out, double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    out.append(buf, ptr);
}

}  // namespace

ForecastNetwork ForecastNetwork::init(std::size_t channels, const ForecasterConfig& config,
                                      timeseries::NormalizationSpec normalization) {
    ForecastNetwork net;
    net.window = config.window;
    net.horizon = config.horizon;
    net.channels = channels;
    net.dropout_rate = config.dropout;
    net.normalization = std::move(normalization);
    Rng rng = Rng::stream(config.seed, "forecaster/init");
    net.forward_cell = neural::LstmCell::init(channels, config.hidden, rng);
    net.backward_cell = neural::LstmCell::init(channels, config.hidden, rng);
    net.head = neural::DenseLayer::init(2 * config.hidden, config.horizon * channels,
                                        neural::Activation::Identity, rng);
    return net;
}

std::size_t ForecastNetwork::parameter_count() const {
    return forward_cell.parameter_count() + backward_cell.parameter_count() +
           head.parameter_count();
}

std::vector<double> ForecastNetwork::flatten_parameters() const {
    std::vector<double> flat;
    flat.reserve(parameter_count());
    auto push = [&flat](const Vec& v) { flat.insert(flat.end(), v.begin(), v.end()); };
    push(forward_cell.w_input.data);
    push(forward_cell.w_hidden.data);
    push(forward_cell.biases);
    push(backward_cell.w_input.data);
    push(backward_cell.w_hidden.data);
    push(backward_cell.biases);
    push(head.weights.data);
    push(head.biases);
    return flat;
}

void ForecastNetwork::unflatten_parameters(std::span<const double> flat) {
    if (flat.size() != parameter_count())
        throw DimensionMismatch("flat parameter vector has wrong length");
    std::size_t k = 0;
    auto pull = [&](Vec& v) {
        std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(k), v.size(), v.begin());
        k += v.size();
    };
    pull(forward_cell.w_input.data);
    pull(forward_cell.w_hidden.data);
    pull(forward_cell.biases);
    pull(backward_cell.w_input.data);
    pull(backward_cell.w_hidden.data);
    pull(backward_cell.biases);
    pull(head.weights.data);
    pull(head.biases);
}

TrainReport continue_training(ForecastNetwork& net, const timeseries::WindowedDataset& dataset,
                              const ForecasterConfig& config) {
    if (dataset.empty()) throw EmptyDataset("forecaster dataset has no examples");
    if (dataset.window_length != config.window || dataset.horizon != config.horizon)
        throw DimensionMismatch("dataset windowing does not match forecaster config");
    if (net.window != config.window || net.horizon != config.horizon ||
        net.channels != dataset.channel_count)
        throw ShapeMismatch("network shape does not match the dataset to train on");

    std::size_t val_count =
        static_cast<std::size_t>(static_cast<double>(dataset.size()) *
                                 config.validation_fraction);
    std::size_t train_count = dataset.size() - val_count;
    if (train_count == 0) {
        train_count = dataset.size();
        val_count = 0;
    }

    Rng shuffle_rng = Rng::stream(config.seed, "forecaster/shuffle");
    Rng dropout_rng = Rng::stream(config.seed, "forecaster/dropout");

    Vec flat_params = net.flatten_parameters();
    neural::AdamState adam = neural::AdamState::for_parameter_count(
        flat_params.size(), {.learning_rate = config.learning_rate});

    TrainReport report;
    report.seed = config.seed;
    report.epoch_losses.reserve(config.epochs);

    std::vector<std::size_t> order(train_count);
    std::iota(order.begin(), order.end(), std::size_t{0});
    const std::size_t batch_size = std::max<std::size_t>(1, config.batch_size);
    Vec flat_grads(flat_params.size(), 0.0);
    Scratch scratch;

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        double loss_sum = 0.0;
        for (std::size_t begin = 0; begin < train_count; begin += batch_size) {
            const std::size_t end = std::min(begin + batch_size, train_count);
            const double inv_batch = 1.0 / static_cast<double>(end - begin);
            StructuredGrads grads = StructuredGrads::zeros_like(net);
            for (std::size_t b = begin; b < end; ++b) {
                const std::size_t idx = order[b];
                const Matrix window =
                    window_matrix(dataset.inputs[idx], net.window, net.channels);
                const Vec pred = forward_impl(net, window, true, &dropout_rng, &scratch);
                loss_sum += neural::mse_loss(pred, dataset.targets[idx]);
                Vec dpred = neural::mse_gradient(pred, dataset.targets[idx]);
                for (double& g : dpred) g *= inv_batch;
                backward_impl(net, scratch, dpred, grads);
            }
            std::fill(flat_grads.begin(), flat_grads.end(), 0.0);
            grads.add_flat(flat_grads);
            neural::adam_step(adam, flat_params, flat_grads);
            net.unflatten_parameters(flat_params);
        }
        const double epoch_loss = loss_sum / static_cast<double>(train_count);
        if (!std::isfinite(epoch_loss))
            throw DivergedLoss("training loss became non-finite at epoch " +
                               std::to_string(epoch + 1));
        report.epoch_losses.push_back(epoch_loss);
    }
    report.epochs_run = config.epochs;

    if (val_count > 0) {
        report.validation = evaluate_horizons(net, dataset, train_count, val_count);
    } else {
        report.validation = evaluate_horizons(net, dataset, 0, dataset.size());
    }
    return report;
}

std::pair<ForecastNetwork, TrainReport> train_forecaster(
    const timeseries::WindowedDataset& dataset, const ForecasterConfig& config,
    timeseries::NormalizationSpec normalization) {
    if (dataset.empty()) throw EmptyDataset("forecaster dataset has no examples");
    ForecastNetwork net =
        ForecastNetwork::init(dataset.channel_count, config, std::move(normalization));
    TrainReport report = continue_training(net, dataset, config);
    return {std::move(net), std::move(report)};
}

Vec forecast_forward(const ForecastNetwork& net, const Matrix& window_norm) {
    return forward_impl(net, window_norm, false, nullptr, nullptr);
}

double accumulate_example_gradient(const ForecastNetwork& net, const Matrix& window_norm,
                                   std::span<const double> target_norm, double grad_weight,
                                   std::span<double> flat_grads) {
    if (flat_grads.size() != net.parameter_count())
        throw DimensionMismatch("gradient buffer has wrong length");
    Scratch scratch;
    const Vec pred = forward_impl(net, window_norm, false, nullptr, &scratch);
    const double loss = neural::mse_loss(pred, target_norm);
    Vec dpred = neural::mse_gradient(pred, target_norm);
    for (double& g : dpred) g *= grad_weight;
    StructuredGrads grads = StructuredGrads::zeros_like(net);
    backward_impl(net, scratch, dpred, grads);
    grads.add_flat(flat_grads);
    return loss;
}

Matrix predict_horizon(const ForecastNetwork& net, const Matrix& window) {
    if (window.rows != net.window || window.cols != net.channels)
        throw DimensionMismatch("predict window is " + std::to_string(window.rows) + "x" +
                                std::to_string(window.cols) + ", network expects " +
                                std::to_string(net.window) + "x" +
                                std::to_string(net.channels));
    Matrix norm(window.rows, window.cols);
    for (std::size_t r = 0; r < window.rows; ++r)
        for (std::size_t c = 0; c < window.cols; ++c)
            norm.at(r, c) = net.normalization.apply_one(window.at(r, c), c);

    const Vec pred_norm = forecast_forward(net, norm);
    Matrix out(net.horizon, net.channels);
    for (std::size_t hstep = 0; hstep < net.horizon; ++hstep)
        for (std::size_t c = 0; c < net.channels; ++c)
            out.at(hstep, c) =
                net.normalization.invert_one(pred_norm[hstep * net.channels + c], c);
    return out;
}

ForecastFrame rolling_forecast(const ForecastNetwork& net,
                               const timeseries::TimeSeriesFrame& frame) {
    if (frame.cols() != net.channels)
        throw DimensionMismatch("frame has " + std::to_string(frame.cols()) +
                                " channels, network expects " +
                                std::to_string(net.channels));
    if (frame.rows() < net.window)
        throw FrameTooShort("frame has " + std::to_string(frame.rows()) +
                            " rows, rolling forecast needs at least " +
                            std::to_string(net.window));

    const std::int64_t interval =
        frame.rows() >= 2 ? frame.timestamps[1] - frame.timestamps[0] : 1;

    ForecastFrame out;
    out.frame.channels = frame.channels;
    Matrix window(net.window, net.channels);
    for (std::size_t anchor = net.window - 1; anchor < frame.rows(); ++anchor) {
        for (std::size_t r = 0; r < net.window; ++r)
            for (std::size_t c = 0; c < net.channels; ++c)
                window.at(r, c) = frame.at(anchor - net.window + 1 + r, c);
        const Matrix pred = predict_horizon(net, window);
        const std::int64_t anchor_ts = frame.timestamps[anchor];
        for (std::size_t hstep = 0; hstep < net.horizon; ++hstep) {
            out.anchor_timestamps.push_back(anchor_ts);
            out.horizon_steps.push_back(static_cast<int>(hstep) + 1);
            out.frame.timestamps.push_back(anchor_ts +
                                           static_cast<std::int64_t>(hstep + 1) * interval);
            for (std::size_t c = 0; c < net.channels; ++c)
                out.frame.values.push_back(pred.at(hstep, c));
        }
    }
    return out;
}

void write_forecast_csv(const std::filesystem::path& path, const ForecastFrame& forecast) {
    std::string out = "anchor_t,horizon_step";
    for (const auto& ch : forecast.frame.channels) {
        out += ',';
        out += ch;
    }
    out += '\n';
    for (std::size_t r = 0; r < forecast.frame.rows(); ++r) {
        out += std::to_string(forecast.anchor_timestamps[r]);
        out += ',';
        out += std::to_string(forecast.horizon_steps[r]);
        for (std::size_t c = 0; c < forecast.frame.cols(); ++c) {
            out += ',';
            format_double(out, forecast.frame.at(r, c));
        }
        out += '\n';
    }
    std::ofstream file(path, std::ios::binary | std::ios::trunc);
    if (!file) throw IoError("cannot write '" + path.string() + "'");
    file << out;
}

HorizonMetrics evaluate_horizons(const ForecastNetwork& net,
                                 const timeseries::WindowedDataset& dataset,
                                 std::size_t first_example, std::size_t count) {
    if (first_example + count > dataset.size())
        throw DimensionMismatch("evaluation range exceeds dataset");
    if (count == 0) throw EmptyDataset("no examples to evaluate");

    const std::size_t channels = dataset.channel_count;
    const std::size_t horizon = dataset.horizon;
    std::vector<Vec> pred_by_step(horizon);
    std::vector<Vec> actual_by_step(horizon);
    Vec pred_all, actual_all;

    for (std::size_t i = first_example; i < first_example + count; ++i) {
        const Matrix window = window_matrix(dataset.inputs[i], net.window, channels);
        const Vec pred_norm = forecast_forward(net, window);
        for (std::size_t hstep = 0; hstep < horizon; ++hstep) {
            for (std::size_t c = 0; c < channels; ++c) {
                const double p =
                    net.normalization.invert_one(pred_norm[hstep * channels + c], c);
                const double a = net.normalization.invert_one(
                    dataset.targets[i][hstep * channels + c], c);
                pred_by_step[hstep].push_back(p);
                actual_by_step[hstep].push_back(a);
                pred_all.push_back(p);
                actual_all.push_back(a);
            }
        }
    }

    HorizonMetrics hm;
    hm.per_step.reserve(horizon);
    for (std::size_t hstep = 0; hstep < horizon; ++hstep)
        hm.per_step.push_back(metrics::report(pred_by_step[hstep], actual_by_step[hstep]));
    hm.aggregate = metrics::report(pred_all, actual_all);
    return hm;
}

}  // namespace predmon::forecaster

#pragma once

#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

#include "predmon/metrics.hpp"
#include "predmon/neural.hpp"
#include "predmon/timeseries.hpp"

namespace predmon::forecaster {

struct ForecasterConfig {
    std::size_t window = 8;
    std::size_t horizon = 4;
    std::size_t stride = 1;
    std::size_t hidden = 32;
    double dropout = 0.2;
    std::size_t epochs = 200;
    std::size_t batch_size = 32;
    double learning_rate = 0.005;
    double validation_fraction = 0.2;
    std::uint64_t seed = 0;
};

/// Bidirectional LSTM regressor: one cell per direction over the W-step
/// window, final hidden states concatenated (2h) and mapped by a dense
/// identity head to all H*C horizon outputs at once.
///
/// Flat parameter order (checkpoints and the optimizer rely on it):
/// forward cell w_input, w_hidden, biases; backward cell likewise; head
/// weights, head biases.
struct ForecastNetwork {
    neural::LstmCell forward_cell;
    neural::LstmCell backward_cell;
    neural::DenseLayer head;
    double dropout_rate = 0.2;
    std::size_t window = 8;
    std::size_t horizon = 4;
    std::size_t channels = 1;
    timeseries::NormalizationSpec normalization;

    static ForecastNetwork init(std::size_t channels, const ForecasterConfig& config,
                                timeseries::NormalizationSpec normalization);

    std::size_t parameter_count() const;
    std::vector<double> flatten_parameters() const;
    void unflatten_parameters(std::span<const double> flat);
};

/// Per-horizon-step validation errors in original units, plus the pooled
/// aggregate over all horizon steps.
struct HorizonMetrics {
    std::vector<metrics::MetricReport> per_step;  // index 0 = one step ahead
    metrics::MetricReport aggregate;
};

struct TrainReport {
    std::vector<double> epoch_losses;  // normalized-space training MSE
    HorizonMetrics validation;
    std::size_t epochs_run = 0;
    std::uint64_t seed = 0;
};

/// Mini-batch Adam on MSE over all horizon outputs. The dataset must already
/// be normalized with `normalization`; the spec travels with the returned
/// network so inference can map back to original units. The last
/// validation_fraction of windows is held out (temporal split).
std::pair<ForecastNetwork, TrainReport> train_forecaster(
    const timeseries::WindowedDataset& dataset, const ForecasterConfig& config,
    timeseries::NormalizationSpec normalization);

/// Same training loop, but starting from an existing network's weights
/// (transfer learning). The network keeps its current normalization; the
/// optimizer state starts fresh.
TrainReport continue_training(ForecastNetwork& net,
                              const timeseries::WindowedDataset& dataset,
                              const ForecasterConfig& config);

/// Deterministic inference on one raw-unit W x C window; returns the H x C
/// forecast in original units.
neural::Matrix predict_horizon(const ForecastNetwork& net, const neural::Matrix& window);

/// Rolling forecast over a raw frame: one H-step block per anchor.
struct ForecastFrame {
    std::vector<std::int64_t> anchor_timestamps;  // per output row
    std::vector<int> horizon_steps;               // per output row, 1..H
    timeseries::TimeSeriesFrame frame;            // predicted values per channel
};

ForecastFrame rolling_forecast(const ForecastNetwork& net,
                               const timeseries::TimeSeriesFrame& frame);

/// CSV export with columns anchor_t, horizon_step, then one per channel.
void write_forecast_csv(const std::filesystem::path& path, const ForecastFrame& forecast);

/// Validation metrics of a trained network on a (normalized) dataset,
/// reported in original units.
HorizonMetrics evaluate_horizons(const ForecastNetwork& net,
                                 const timeseries::WindowedDataset& dataset,
                                 std::size_t first_example, std::size_t count);

/// Normalized-space forward pass and single-example gradient, exposed for
/// gradient verification. flat_grads must have parameter_count() entries;
/// the gradient of grad_weight * mse(prediction, target) is accumulated.
neural::Vec forecast_forward(const ForecastNetwork& net, const neural::Matrix& window_norm);
double accumulate_example_gradient(const ForecastNetwork& net,
                                   const neural::Matrix& window_norm,
                                   std::span<const double> target_norm, double grad_weight,
                                   std::span<double> flat_grads);

}  // namespace predmon::forecaster

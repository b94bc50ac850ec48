#include "predmon/forecaster.hpp"

#include <cmath>

#include <doctest.h>

#include "predmon/errors.hpp"
#include "predmon/rng.hpp"
#include "support/gradient_check.hpp"

using namespace predmon;
using forecaster::ForecasterConfig;
using forecaster::ForecastNetwork;
using neural::Matrix;
using neural::Vec;

namespace {

ForecasterConfig tiny_config(std::uint64_t seed) {
    ForecasterConfig cfg;
    cfg.window = 3;
    cfg.horizon = 2;
    cfg.hidden = 2;
    cfg.dropout = 0.0;
    cfg.seed = seed;
    return cfg;
}

timeseries::NormalizationSpec identity_spec(std::size_t channels) {
    timeseries::NormalizationSpec spec;
    spec.method = timeseries::NormMethod::ZScore;
    spec.shift.assign(channels, 0.0);
    spec.scale.assign(channels, 1.0);
    return spec;
}

timeseries::TimeSeriesFrame constant_frame(std::size_t rows, double value) {
    timeseries::TimeSeriesFrame frame;
    frame.channels = {"x"};
    for (std::size_t i = 0; i < rows; ++i) {
        frame.timestamps.push_back(static_cast<std::int64_t>(i));
        frame.values.push_back(value);
    }
    return frame;
}

}  // namespace

TEST_CASE("full forecaster gradient matches finite differences") {
    for (std::uint64_t seed : {3ull, 14ull, 159ull}) {
        auto net = ForecastNetwork::init(1, tiny_config(seed), identity_spec(1));
        Rng rng(seed + 1);
        Matrix window(3, 1);
        for (double& v : window.data) v = rng.uniform(-1.0, 1.0);
        const Vec target = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};

        Vec analytic(net.parameter_count(), 0.0);
        forecaster::accumulate_example_gradient(net, window, target, 1.0, analytic);

        auto loss = [&](const Vec& flat) {
            ForecastNetwork probe = net;
            probe.unflatten_parameters(flat);
            return neural::mse_loss(forecaster::forecast_forward(probe, window), target);
        };
        const auto check =
            testsupport::check_gradient(net.flatten_parameters(), loss, analytic);
        CAPTURE(seed);
        CHECK(check.max_relative_error < 1e-4);
    }
}

TEST_CASE("inference is deterministic and shape-checked") {
    auto net = ForecastNetwork::init(1, tiny_config(5), identity_spec(1));
    Matrix window(3, 1);
    window.data = {0.1, 0.2, 0.3};
    const auto a = forecaster::predict_horizon(net, window);
    const auto b = forecaster::predict_horizon(net, window);
    CHECK(a.data == b.data);

    Matrix wrong(4, 1);
    CHECK_THROWS_AS(forecaster::predict_horizon(net, wrong), DimensionMismatch);
}

TEST_CASE("zero-parameter network predicts the de-normalized head bias everywhere") {
    auto net = ForecastNetwork::init(1, tiny_config(6), identity_spec(1));
    Vec zeros(net.parameter_count(), 0.0);
    net.unflatten_parameters(zeros);
    net.head.biases = {0.25, -0.5};
    net.normalization.shift = {10.0};
    net.normalization.scale = {4.0};

    for (double fill : {-3.0, 0.0, 42.0}) {
        Matrix window(3, 1);
        std::fill(window.data.begin(), window.data.end(), fill);
        const auto pred = forecaster::predict_horizon(net, window);
        CHECK(pred.at(0, 0) == doctest::Approx(0.25 * 4.0 + 10.0));
        CHECK(pred.at(1, 0) == doctest::Approx(-0.5 * 4.0 + 10.0));
    }
}

TEST_CASE("constant series is learnable in a few epochs") {
    const auto frame = constant_frame(60, 0.5);
    const auto spec = timeseries::fit_normalizer(frame, timeseries::NormMethod::ZScore);
    const auto norm = timeseries::apply(spec, frame);
    const auto dataset = timeseries::make_windows(norm, 8, 4, 1);

    ForecasterConfig cfg;
    cfg.window = 8;
    cfg.horizon = 4;
    cfg.hidden = 8;
    cfg.dropout = 0.0;
    cfg.epochs = 5;
    cfg.learning_rate = 0.05;
    cfg.seed = 21;
    auto [net, report] = forecaster::train_forecaster(dataset, cfg, spec);

    CHECK(report.epochs_run == 5);
    REQUIRE(report.validation.per_step.size() == 4);
    CHECK(report.validation.per_step[0].mae < 0.05);
    // A z-scored constant series is identically zero, so the loss starts at
    // its floor; it must simply never rise.
    CHECK(report.epoch_losses.back() <= report.epoch_losses.front());

    Matrix window(8, 1);
    std::fill(window.data.begin(), window.data.end(), 0.5);
    const auto pred = forecaster::predict_horizon(net, window);
    for (double v : pred.data) CHECK(std::fabs(v - 0.5) < 0.05);
}

TEST_CASE("empty dataset is rejected") {
    timeseries::WindowedDataset empty;
    empty.window_length = 8;
    empty.horizon = 4;
    empty.channel_count = 1;
    CHECK_THROWS_AS(
        forecaster::train_forecaster(empty, ForecasterConfig{}, identity_spec(1)),
        EmptyDataset);
}

TEST_CASE("rolling forecast emits one block per anchor") {
    ForecasterConfig cfg;
    cfg.window = 8;
    cfg.horizon = 4;
    cfg.hidden = 4;
    cfg.seed = 3;
    auto net = ForecastNetwork::init(1, cfg, identity_spec(1));

    const auto exact = forecaster::rolling_forecast(net, constant_frame(8, 1.0));
    CHECK(exact.frame.rows() == 4);
    CHECK(exact.horizon_steps == std::vector<int>{1, 2, 3, 4});

    const auto three = forecaster::rolling_forecast(net, constant_frame(10, 1.0));
    CHECK(three.frame.rows() == 12);
    CHECK(three.anchor_timestamps[0] == 7);
    CHECK(three.anchor_timestamps[4] == 8);
    CHECK(three.anchor_timestamps[8] == 9);

    CHECK_THROWS_AS(forecaster::rolling_forecast(net, constant_frame(7, 1.0)),
                    FrameTooShort);
}

TEST_CASE("training twice with one seed is bit-identical") {
    const auto frame = constant_frame(40, 2.0);
    const auto spec = timeseries::fit_normalizer(frame, timeseries::NormMethod::ZScore);
    const auto dataset = timeseries::make_windows(timeseries::apply(spec, frame), 8, 4, 1);
    ForecasterConfig cfg;
    cfg.window = 8;
    cfg.horizon = 4;
    cfg.hidden = 4;
    cfg.dropout = 0.1;
    cfg.epochs = 3;
    cfg.seed = 77;
    auto [net_a, rep_a] = forecaster::train_forecaster(dataset, cfg, spec);
    auto [net_b, rep_b] = forecaster::train_forecaster(dataset, cfg, spec);
    CHECK(net_a.flatten_parameters() == net_b.flatten_parameters());
    CHECK(rep_a.epoch_losses == rep_b.epoch_losses);
}

TEST_CASE("original-unit errors equal normalized errors scaled by channel range") {
    // Min-max spec with a known range; a fixed network's prediction error in
    // original units must be the normalized error times the range.
    ForecasterConfig cfg = tiny_config(9);
    timeseries::NormalizationSpec spec;
    spec.method = timeseries::NormMethod::MinMax;
    spec.shift = {50.0};
    spec.scale = {25.0};
    auto net = ForecastNetwork::init(1, cfg, spec);

    Matrix window_raw(3, 1);
    window_raw.data = {55.0, 60.0, 65.0};
    Matrix window_norm(3, 1);
    for (std::size_t r = 0; r < 3; ++r)
        window_norm.at(r, 0) = spec.apply_one(window_raw.at(r, 0), 0);

    const Vec pred_norm = forecaster::forecast_forward(net, window_norm);
    const auto pred_orig = forecaster::predict_horizon(net, window_raw);
    const Vec target_norm = {0.4, 0.6};
    for (std::size_t h = 0; h < 2; ++h) {
        const double err_norm = std::fabs(pred_norm[h] - target_norm[h]);
        const double err_orig =
            std::fabs(pred_orig.at(h, 0) - spec.invert_one(target_norm[h], 0));
        CHECK(std::fabs(err_orig - err_norm * 25.0) <= 1e-9 * std::max(1.0, err_orig));
    }
}

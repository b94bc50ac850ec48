#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace predmon::metrics {

/// Regression error summary for one prediction set.
struct MetricReport {
    double mae = 0.0;
    double mape = 0.0;  // percent
    double rmse = 0.0;
    std::size_t n = 0;
};

/// Mean absolute error: (1/n) * sum |pred - actual|.
double mae(std::span<const double> pred, std::span<const double> actual);

/// Root mean squared error.
double rmse(std::span<const double> pred, std::span<const double> actual);

/// Mean absolute percentage error, in percent. Throws ZeroActual if any
/// actual value is zero.
double mape(std::span<const double> pred, std::span<const double> actual);

/// Sum of per-step rewards. Empty input sums to zero.
double cumulative_reward(std::span<const double> rewards);

/// All three regression metrics at once.
MetricReport report(std::span<const double> pred, std::span<const double> actual);

}  // namespace predmon::metrics

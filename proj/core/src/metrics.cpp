#include "predmon/metrics.hpp"

#include <cmath>

#include "predmon/errors.hpp"

namespace predmon::metrics {

namespace {

void check_pair(std::span<const double> pred, std::span<const double> actual) {
    if (pred.size() != actual.size())
        throw DimensionMismatch("metric inputs differ in length: " +
                                std::to_string(pred.size()) + " vs " +
                                std::to_string(actual.size()));
    if (pred.empty()) throw EmptyInput("metric inputs are empty");
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (!std::isfinite(pred[i]) || !std::isfinite(actual[i]))
            throw NonFiniteValue("metric inputs contain a non-finite value");
    }
}

}  // namespace

double mae(std::span<const double> pred, std::span<const double> actual) {
    check_pair(pred, actual);
    double sum = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) sum += std::fabs(pred[i] - actual[i]);
    return sum / static_cast<double>(pred.size());
}

double rmse(std::span<const double> pred, std::span<const double> actual) {
    check_pair(pred, actual);
    double sum = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = pred[i] - actual[i];
        sum += d * d;
    }
    return std::sqrt(sum / static_cast<double>(pred.size()));
}

double mape(std::span<const double> pred, std::span<const double> actual) {
    check_pair(pred, actual);
    double sum = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (actual[i] == 0.0)
            throw ZeroActual("mape undefined: actual value at index " +
                             std::to_string(i) + " is zero");
        sum += std::fabs(pred[i] - actual[i]) / std::fabs(actual[i]);
    }
    return 100.0 * sum / static_cast<double>(pred.size());
}

double cumulative_reward(std::span<const double> rewards) {
    double sum = 0.0;
    for (double r : rewards) {
        if (!std::isfinite(r)) throw NonFiniteValue("reward is non-finite");
        sum += r;
    }
    return sum;
}

MetricReport report(std::span<const double> pred, std::span<const double> actual) {
    MetricReport out;
    out.mae = mae(pred, actual);
    out.mape = mape(pred, actual);
    out.rmse = rmse(pred, actual);
    out.n = pred.size();
    return out;
}

}  // namespace predmon::metrics

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace predmon::timeseries {

/// Timestamped multi-channel observation matrix. Row-major: values[r * C + c]
/// is channel c at step r. Channel order follows the source CSV header, not
/// the order channels were requested in, so a frame is a pure function of the
/// file plus the requested channel set.
struct TimeSeriesFrame {
    std::vector<std::int64_t> timestamps;
    std::vector<std::string> channels;
    std::vector<double> values;

    std::size_t rows() const { return timestamps.size(); }
    std::size_t cols() const { return channels.size(); }
    double at(std::size_t row, std::size_t col) const { return values[row * cols() + col]; }
    double& at(std::size_t row, std::size_t col) { return values[row * cols() + col]; }

    /// Index of a channel by name; throws MissingColumn if absent.
    std::size_t channel_index(const std::string& name) const;

    /// One channel as a contiguous column vector.
    std::vector<double> column(std::size_t col) const;
};

enum class NanPolicy { Drop, Error };

/// Ingestion configuration for load_csv.
struct IngestSchema {
    std::string timestamp_column = "t";
    /// Channels to keep. Empty means every non-timestamp column. Frame
    /// column order always follows the CSV header.
    std::vector<std::string> channels;
    NanPolicy nan_policy = NanPolicy::Drop;
    /// Maximum absolute deviation from the base sampling interval before a
    /// gap is rejected. 0 = strictly regular ladder required.
    std::int64_t gap_tolerance = 0;
    /// Count of rows dropped by the NaN policy, filled by load_csv.
    mutable std::size_t dropped_rows = 0;
};

/// Parse a CSV file (comma separator, '.' decimal point, header row) into a
/// validated frame. Throws MissingColumn, NonMonotonicTimestamps,
/// IrregularSampling, EmptyAfterFiltering.
TimeSeriesFrame load_csv(const std::filesystem::path& path, const IngestSchema& schema);

/// Same parser over an in-memory CSV body; load_csv delegates here.
TimeSeriesFrame parse_csv(const std::string& text, const IngestSchema& schema);

/// Write a frame back out as CSV (used by gen-synthetic and forecast export).
void write_csv(const std::filesystem::path& path, const TimeSeriesFrame& frame);

/// Supervised windows cut from a frame. inputs[i] is W*C doubles (row-major),
/// targets[i] is H*C doubles covering the steps immediately after the window.
struct WindowedDataset {
    std::vector<std::vector<double>> inputs;
    std::vector<std::vector<double>> targets;
    std::size_t window_length = 0;
    std::size_t horizon = 0;
    std::size_t channel_count = 0;

    std::size_t size() const { return inputs.size(); }
    bool empty() const { return inputs.empty(); }
};

/// Cut contiguous (window, horizon) pairs with the given stride.
/// Example count = floor((rows - W - H) / stride) + 1.
WindowedDataset make_windows(const TimeSeriesFrame& frame, std::size_t window_length,
                             std::size_t horizon, std::size_t stride = 1);

enum class NormMethod { MinMax, ZScore };

/// Per-channel affine normalization: normalized = (x - shift) / scale.
struct NormalizationSpec {
    NormMethod method = NormMethod::MinMax;
    std::vector<double> shift;
    std::vector<double> scale;  // strictly positive

    std::size_t channel_count() const { return shift.size(); }
    double apply_one(double x, std::size_t channel) const {
        return (x - shift[channel]) / scale[channel];
    }
    double invert_one(double x, std::size_t channel) const {
        return x * scale[channel] + shift[channel];
    }
};

/// Fit per-channel parameters. MinMax maps [min, max] to [0, 1] and throws
/// ConstantChannel on zero range. ZScore maps to mean 0 / unit variance;
/// a zero-variance channel gets scale 1 so the map stays invertible.
NormalizationSpec fit_normalizer(const TimeSeriesFrame& frame, NormMethod method);

/// Normalize / denormalize a whole frame. Timestamps and channels carry over.
TimeSeriesFrame apply(const NormalizationSpec& spec, const TimeSeriesFrame& frame);
TimeSeriesFrame invert(const NormalizationSpec& spec, const TimeSeriesFrame& frame);

}  // namespace predmon::timeseries

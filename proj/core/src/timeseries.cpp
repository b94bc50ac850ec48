#include "predmon/timeseries.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "predmon/errors.hpp"

namespace predmon::timeseries {

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}

std::string trim(const std::string& s) {
    auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return "";
    auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

bool parse_double(const std::string& raw, double& out) {
    const std::string s = trim(raw);
    if (s.empty()) return false;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc{} && ptr == last;
}

void format_double(std::string& out, double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    out.append(buf, ptr);
}

}  // namespace

std::size_t TimeSeriesFrame::channel_index(const std::string& name) const {
    auto it = std::find(channels.begin(), channels.end(), name);
    if (it == channels.end()) throw MissingColumn("no channel named '" + name + "'");
    return static_cast<std::size_t>(it - channels.begin());
}

std::vector<double> TimeSeriesFrame::column(std::size_t col) const {
    std::vector<double> out(rows());
    for (std::size_t r = 0; r < rows(); ++r) out[r] = at(r, col);
    return out;
}

TimeSeriesFrame parse_csv(const std::string& text, const IngestSchema& schema) {
    std::stringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw MissingColumn("CSV has no header row");

    const auto header = split_line(line);
    std::size_t ts_col = header.size();
    std::vector<std::size_t> channel_cols;
    std::vector<std::string> channel_names;
    for (std::size_t i = 0; i < header.size(); ++i) {
        const std::string name = trim(header[i]);
        if (name == schema.timestamp_column) {
            ts_col = i;
            continue;
        }
        // Keep header order; the schema's channel list only selects columns.
        if (schema.channels.empty() ||
            std::find(schema.channels.begin(), schema.channels.end(), name) !=
                schema.channels.end()) {
            channel_cols.push_back(i);
            channel_names.push_back(name);
        }
    }
    if (ts_col == header.size())
        throw MissingColumn("timestamp column '" + schema.timestamp_column + "' not found");
    for (const auto& wanted : schema.channels) {
        if (std::find(channel_names.begin(), channel_names.end(), wanted) ==
            channel_names.end())
            throw MissingColumn("channel column '" + wanted + "' not found");
    }
    if (channel_cols.empty()) throw MissingColumn("no channel columns in CSV");

    std::vector<std::int64_t> timestamps;
    std::vector<std::int64_t> raw_ladder;  // every parseable timestamp, kept rows or not
    std::vector<double> values;
    schema.dropped_rows = 0;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto fields = split_line(line);
        if (fields.size() != header.size())
            throw MissingColumn("row " + std::to_string(line_no) + " has " +
                                std::to_string(fields.size()) + " fields, expected " +
                                std::to_string(header.size()));
        double ts_raw = 0.0;
        const bool ts_ok = parse_double(fields[ts_col], ts_raw) && std::isfinite(ts_raw);
        if (ts_ok) raw_ladder.push_back(static_cast<std::int64_t>(std::llround(ts_raw)));
        bool row_ok = ts_ok;
        std::vector<double> row(channel_cols.size());
        for (std::size_t c = 0; row_ok && c < channel_cols.size(); ++c) {
            row_ok = parse_double(fields[channel_cols[c]], row[c]) && std::isfinite(row[c]);
        }
        if (!row_ok) {
            if (schema.nan_policy == NanPolicy::Error)
                throw NonFiniteValue("row " + std::to_string(line_no) +
                                     " has an unparseable or non-finite value");
            ++schema.dropped_rows;
            continue;
        }
        timestamps.push_back(raw_ladder.back());
        values.insert(values.end(), row.begin(), row.end());
    }

    if (timestamps.empty()) throw EmptyAfterFiltering("no rows left after filtering");

    for (std::size_t i = 1; i < raw_ladder.size(); ++i) {
        if (raw_ladder[i] <= raw_ladder[i - 1])
            throw NonMonotonicTimestamps("timestamp " + std::to_string(raw_ladder[i]) +
                                         " at data row " + std::to_string(i + 1) +
                                         " does not increase");
    }

    // Sampling regularity is judged on the file's timestamp ladder; rows
    // removed by the NaN policy are an accepted source of gaps (counted in
    // dropped_rows) and do not trip this check.
    if (raw_ladder.size() >= 3) {
        const std::int64_t base = raw_ladder[1] - raw_ladder[0];
        for (std::size_t i = 2; i < raw_ladder.size(); ++i) {
            const std::int64_t step = raw_ladder[i] - raw_ladder[i - 1];
            if (std::llabs(step - base) > schema.gap_tolerance)
                throw IrregularSampling("sampling interval " + std::to_string(step) +
                                        " at data row " + std::to_string(i + 1) +
                                        " deviates from base interval " +
                                        std::to_string(base));
        }
    }

    TimeSeriesFrame frame;
    frame.timestamps = std::move(timestamps);
    frame.channels = std::move(channel_names);
    frame.values = std::move(values);
    return frame;
}

TimeSeriesFrame load_csv(const std::filesystem::path& path, const IngestSchema& schema) {
    std::ifstream file(path, std::ios::binary);
    if (!file) throw IoError("cannot open '" + path.string() + "'");
    std::stringstream buffer;
    buffer << file.rdbuf();
    return parse_csv(buffer.str(), schema);
}

void write_csv(const std::filesystem::path& path, const TimeSeriesFrame& frame) {
    std::string out = "t";
    for (const auto& ch : frame.channels) {
        out += ',';
        out += ch;
    }
    out += '\n';
    for (std::size_t r = 0; r < frame.rows(); ++r) {
        out += std::to_string(frame.timestamps[r]);
        for (std::size_t c = 0; c < frame.cols(); ++c) {
            out += ',';
            format_double(out, frame.at(r, c));
        }
        out += '\n';
    }
    std::ofstream file(path, std::ios::binary | std::ios::trunc);
    if (!file) throw IoError("cannot write '" + path.string() + "'");
    file << out;
    if (!file) throw IoError("short write to '" + path.string() + "'");
}

WindowedDataset make_windows(const TimeSeriesFrame& frame, std::size_t window_length,
                             std::size_t horizon, std::size_t stride) {
    if (window_length == 0 || horizon == 0 || stride == 0)
        throw DimensionMismatch("window, horizon and stride must be positive");
    const std::size_t rows = frame.rows();
    const std::size_t cols = frame.cols();
    if (rows < window_length + horizon)
        throw FrameTooShort("frame has " + std::to_string(rows) + " rows, needs at least " +
                            std::to_string(window_length + horizon));

    WindowedDataset ds;
    ds.window_length = window_length;
    ds.horizon = horizon;
    ds.channel_count = cols;
    const std::size_t count = (rows - window_length - horizon) / stride + 1;
    ds.inputs.reserve(count);
    ds.targets.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t start = i * stride;
        std::vector<double> input(
            frame.values.begin() + static_cast<std::ptrdiff_t>(start * cols),
            frame.values.begin() + static_cast<std::ptrdiff_t>((start + window_length) * cols));
        std::vector<double> target(
            frame.values.begin() + static_cast<std::ptrdiff_t>((start + window_length) * cols),
            frame.values.begin() +
                static_cast<std::ptrdiff_t>((start + window_length + horizon) * cols));
        ds.inputs.push_back(std::move(input));
        ds.targets.push_back(std::move(target));
    }
    return ds;
}

NormalizationSpec fit_normalizer(const TimeSeriesFrame& frame, NormMethod method) {
    if (frame.rows() == 0) throw EmptyAfterFiltering("cannot fit normalizer on empty frame");
    const std::size_t cols = frame.cols();
    NormalizationSpec spec;
    spec.method = method;
    spec.shift.resize(cols);
    spec.scale.resize(cols);
    for (std::size_t c = 0; c < cols; ++c) {
        if (method == NormMethod::MinMax) {
            double lo = frame.at(0, c), hi = frame.at(0, c);
            for (std::size_t r = 1; r < frame.rows(); ++r) {
                lo = std::min(lo, frame.at(r, c));
                hi = std::max(hi, frame.at(r, c));
            }
            if (hi == lo)
                throw ConstantChannel("channel '" + frame.channels[c] +
                                      "' has zero range; min-max undefined");
            spec.shift[c] = lo;
            spec.scale[c] = hi - lo;
        } else {
            double mean = 0.0;
            for (std::size_t r = 0; r < frame.rows(); ++r) mean += frame.at(r, c);
            mean /= static_cast<double>(frame.rows());
            double var = 0.0;
            for (std::size_t r = 0; r < frame.rows(); ++r) {
                const double d = frame.at(r, c) - mean;
                var += d * d;
            }
            var /= static_cast<double>(frame.rows());
            const double sd = std::sqrt(var);
            spec.shift[c] = mean;
            spec.scale[c] = sd > 0.0 ? sd : 1.0;
        }
    }
    return spec;
}

namespace {

TimeSeriesFrame map_frame(const NormalizationSpec& spec, const TimeSeriesFrame& frame,
                          bool forward) {
    if (spec.channel_count() != frame.cols())
        throw DimensionMismatch("normalizer fitted on " +
                                std::to_string(spec.channel_count()) +
                                " channels, frame has " + std::to_string(frame.cols()));
    TimeSeriesFrame out = frame;
    for (std::size_t r = 0; r < out.rows(); ++r)
        for (std::size_t c = 0; c < out.cols(); ++c)
            out.at(r, c) = forward ? spec.apply_one(frame.at(r, c), c)
                                   : spec.invert_one(frame.at(r, c), c);
    return out;
}

}  // namespace

TimeSeriesFrame apply(const NormalizationSpec& spec, const TimeSeriesFrame& frame) {
    return map_frame(spec, frame, true);
}

TimeSeriesFrame invert(const NormalizationSpec& spec, const TimeSeriesFrame& frame) {
    return map_frame(spec, frame, false);
}

}  // namespace predmon::timeseries

#include "predmon/timeseries.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <doctest.h>

#include "predmon/errors.hpp"
#include "predmon/rng.hpp"

using namespace predmon;
using timeseries::IngestSchema;
using timeseries::parse_csv;

TEST_CASE("parse_csv reads a small frame") {
    IngestSchema schema;
    const auto frame = parse_csv("t,hr\n0,70\n1,72\n2,71\n", schema);
    CHECK(frame.rows() == 3);
    CHECK(frame.cols() == 1);
    CHECK(frame.channels == std::vector<std::string>{"hr"});
    CHECK(frame.at(0, 0) == 70.0);
    CHECK(frame.at(2, 0) == 71.0);
    CHECK(frame.timestamps == std::vector<std::int64_t>{0, 1, 2});
}

TEST_CASE("duplicate timestamps are rejected") {
    IngestSchema schema;
    CHECK_THROWS_AS(parse_csv("t,hr\n4,70\n5,72\n5,71\n", schema), NonMonotonicTimestamps);
    CHECK_THROWS_AS(parse_csv("t,hr\n5,70\n4,72\n", schema), NonMonotonicTimestamps);
}

TEST_CASE("nan rows follow the configured policy") {
    IngestSchema drop;
    drop.nan_policy = timeseries::NanPolicy::Drop;
    const auto frame = parse_csv("t,hr\n0,70\n1,nan\n2,71\n3,72\n", drop);
    CHECK(frame.rows() == 3);
    CHECK(drop.dropped_rows == 1);

    IngestSchema strict;
    strict.nan_policy = timeseries::NanPolicy::Error;
    CHECK_THROWS_AS(parse_csv("t,hr\n0,70\n1,nan\n2,71\n", strict), NonFiniteValue);
}

TEST_CASE("missing columns and irregular ladders are rejected") {
    IngestSchema schema;
    schema.channels = {"hr", "spo2"};
    CHECK_THROWS_AS(parse_csv("t,hr\n0,70\n1,72\n2,71\n", schema), MissingColumn);

    IngestSchema base;
    CHECK_THROWS_AS(parse_csv("t,hr\n0,70\n1,72\n5,71\n", base), IrregularSampling);
    base.gap_tolerance = 4;
    CHECK_NOTHROW(parse_csv("t,hr\n0,70\n1,72\n5,71\n", base));
}

TEST_CASE("empty after filtering") {
    IngestSchema schema;
    CHECK_THROWS_AS(parse_csv("t,hr\n0,nan\n", schema), EmptyAfterFiltering);
}

TEST_CASE("channel order follows the file header, not the request order") {
    IngestSchema schema;
    schema.channels = {"c", "a"};
    const auto frame = parse_csv("t,a,b,c\n0,1,2,3\n1,4,5,6\n", schema);
    CHECK(frame.channels == std::vector<std::string>{"a", "c"});
    CHECK(frame.at(0, 0) == 1.0);
    CHECK(frame.at(0, 1) == 3.0);
}

TEST_CASE("parse is deterministic") {
    IngestSchema schema;
    const std::string body = "t,hr,resp\n0,70,15\n1,72,16\n2,71,14\n";
    const auto a = parse_csv(body, schema);
    const auto b = parse_csv(body, schema);
    CHECK(a.values == b.values);
    CHECK(a.timestamps == b.timestamps);
}

TEST_CASE("make_windows counts and alignment") {
    IngestSchema schema;
    std::string body = "t,x\n";
    for (int i = 0; i < 10; ++i) body += std::to_string(i) + "," + std::to_string(i * 10) + "\n";
    const auto frame = parse_csv(body, schema);

    const auto ds = timeseries::make_windows(frame, 4, 4, 1);
    CHECK(ds.size() == 3);
    CHECK(ds.window_length == 4);
    CHECK(ds.horizon == 4);

    // Window i ends at step t; target i covers steps t+1..t+H, sharing no rows.
    for (std::size_t i = 0; i < ds.size(); ++i) {
        CHECK(ds.inputs[i].back() == frame.at(i + 3, 0));
        CHECK(ds.targets[i].front() == frame.at(i + 4, 0));
    }

    // Exact fit: 8 rows, W=4, H=4 -> one example.
    std::string exact = "t,x\n";
    for (int i = 0; i < 8; ++i) exact += std::to_string(i) + ",1\n";
    CHECK(timeseries::make_windows(parse_csv(exact, schema), 4, 4, 1).size() == 1);

    // Too short.
    std::string tiny = "t,x\n";
    for (int i = 0; i < 7; ++i) tiny += std::to_string(i) + ",1\n";
    CHECK_THROWS_AS(timeseries::make_windows(parse_csv(tiny, schema), 4, 4, 1),
                    FrameTooShort);
}

TEST_CASE("windowing preserves values bit for bit") {
    Rng rng(11);
    timeseries::TimeSeriesFrame frame;
    frame.channels = {"a", "b"};
    for (int i = 0; i < 40; ++i) {
        frame.timestamps.push_back(i);
        frame.values.push_back(rng.uniform(-5.0, 5.0));
        frame.values.push_back(rng.uniform(-5.0, 5.0));
    }
    const auto ds = timeseries::make_windows(frame, 6, 3, 2);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const std::size_t start = i * 2;
        for (std::size_t r = 0; r < 6; ++r)
            for (std::size_t c = 0; c < 2; ++c)
                CHECK(ds.inputs[i][r * 2 + c] == frame.at(start + r, c));
        for (std::size_t r = 0; r < 3; ++r)
            for (std::size_t c = 0; c < 2; ++c)
                CHECK(ds.targets[i][r * 2 + c] == frame.at(start + 6 + r, c));
    }
}

TEST_CASE("min-max normalization maps range to unit interval") {
    IngestSchema schema;
    const auto frame = parse_csv("t,x\n0,0\n1,5\n2,10\n", schema);
    const auto spec = timeseries::fit_normalizer(frame, timeseries::NormMethod::MinMax);
    const auto norm = timeseries::apply(spec, frame);
    CHECK(norm.at(0, 0) == 0.0);
    CHECK(norm.at(1, 0) == 0.5);
    CHECK(norm.at(2, 0) == 1.0);
}

TEST_CASE("constant channel rejected by min-max, tolerated by z-score") {
    IngestSchema schema;
    const auto frame = parse_csv("t,x\n0,4\n1,4\n2,4\n", schema);
    CHECK_THROWS_AS(timeseries::fit_normalizer(frame, timeseries::NormMethod::MinMax),
                    ConstantChannel);
    const auto spec = timeseries::fit_normalizer(frame, timeseries::NormMethod::ZScore);
    CHECK(spec.scale[0] == 1.0);
    CHECK(timeseries::apply(spec, frame).at(1, 0) == 0.0);
}

TEST_CASE("normalization round trip within 1e-9 relative") {
    Rng rng(31);
    for (auto method : {timeseries::NormMethod::MinMax, timeseries::NormMethod::ZScore}) {
        timeseries::TimeSeriesFrame frame;
        frame.channels = {"a", "b", "c"};
        for (int i = 0; i < 64; ++i) {
            frame.timestamps.push_back(i);
            frame.values.push_back(rng.uniform(-1000.0, 1000.0));
            frame.values.push_back(rng.uniform(0.001, 0.002));
            frame.values.push_back(rng.uniform(1e5, 1e6));
        }
        const auto spec = timeseries::fit_normalizer(frame, method);
        const auto round = timeseries::invert(spec, timeseries::apply(spec, frame));
        for (std::size_t i = 0; i < frame.values.size(); ++i) {
            const double x = frame.values[i];
            CHECK(std::fabs(round.values[i] - x) <= 1e-9 * std::max(1.0, std::fabs(x)));
        }
    }
}

TEST_CASE("write_csv then load_csv round-trips exactly") {
    Rng rng(8);
    timeseries::TimeSeriesFrame frame;
    frame.channels = {"x", "y"};
    for (int i = 0; i < 25; ++i) {
        frame.timestamps.push_back(i);
        frame.values.push_back(rng.uniform(-7.0, 7.0));
        frame.values.push_back(rng.normal(0.0, 3.0));
    }
    const auto path = std::filesystem::temp_directory_path() / "predmon_ts_roundtrip.csv";
    timeseries::write_csv(path, frame);
    IngestSchema schema;
    const auto loaded = timeseries::load_csv(path, schema);
    CHECK(loaded.values == frame.values);
    CHECK(loaded.timestamps == frame.timestamps);
    std::filesystem::remove(path);
}

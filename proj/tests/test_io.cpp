#include <atomic>
#include <filesystem>
#include <fstream>
#include <thread>

#include <doctest.h>
#include <httplib.h>

#include "predmon/alerts.hpp"
#include "predmon/checkpoint.hpp"
#include "predmon/config.hpp"
#include "predmon/errors.hpp"
#include "predmon/forecaster.hpp"
#include "predmon/rng.hpp"
#include "predmon/synthetic.hpp"

#include <json.hpp>

using namespace predmon;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) {
        path = fs::temp_directory_path() / name;
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

forecaster::ForecastNetwork sample_forecaster(std::uint64_t seed) {
    forecaster::ForecasterConfig cfg;
    cfg.window = 6;
    cfg.horizon = 3;
    cfg.hidden = 5;
    cfg.seed = seed;
    timeseries::NormalizationSpec spec;
    spec.method = timeseries::NormMethod::MinMax;
    spec.shift = {12.5, -3.0};
    spec.scale = {7.25, 0.125};
    return forecaster::ForecastNetwork::init(2, cfg, spec);
}

}  // namespace

TEST_CASE("forecaster checkpoint round-trips bit for bit") {
    TempDir dir("predmon_ckpt_f");
    const auto net = sample_forecaster(91);
    auto adam = neural::AdamState::for_parameter_count(net.parameter_count(),
                                                       {.learning_rate = 0.004});
    adam.step = 17;
    Rng rng(1);
    for (auto& m : adam.m) m = rng.normal();
    for (auto& v : adam.v) v = rng.uniform01();

    const auto path = dir.path / "f.ckpt";
    io::save_forecaster(path, {net, adam, "{\"note\":1}"});
    const auto loaded = io::load_forecaster(path);

    CHECK(loaded.network.flatten_parameters() == net.flatten_parameters());
    CHECK(loaded.network.normalization.shift == net.normalization.shift);
    CHECK(loaded.network.normalization.scale == net.normalization.scale);
    CHECK(loaded.optimizer.m == adam.m);
    CHECK(loaded.optimizer.v == adam.v);
    CHECK(loaded.optimizer.step == 17);
    CHECK(loaded.config_snapshot == "{\"note\":1}");

    // Identical predictions on random probes.
    Rng probe_rng(5);
    for (int i = 0; i < 10; ++i) {
        neural::Matrix window(6, 2);
        for (double& v : window.data) v = probe_rng.uniform(-20.0, 20.0);
        CHECK(forecaster::predict_horizon(loaded.network, window).data ==
              forecaster::predict_horizon(net, window).data);
    }
    CHECK(io::checkpoint_kind(path) == "forecaster");
}

TEST_CASE("qnetwork checkpoint round-trips bit for bit") {
    TempDir dir("predmon_ckpt_q");
    Rng rng(7);
    auto net = agent::QNetwork::init(3, 16, 5, rng);
    auto adam = neural::AdamState::for_parameter_count(net.parameter_count());
    for (auto& m : adam.m) m = rng.normal();
    adam.step = 3;

    const auto path = dir.path / "q.ckpt";
    io::save_qnetwork(path, {net, adam, 0.37, "{}"});
    const auto loaded = io::load_qnetwork(path);
    CHECK(loaded.network.flatten_parameters() == net.flatten_parameters());
    CHECK(loaded.epsilon == 0.37);
    CHECK(loaded.network.predict({0.1, -0.2, 0.3}) == net.predict({0.1, -0.2, 0.3}));
    CHECK(io::checkpoint_kind(path) == "qnetwork");
}

TEST_CASE("corruption, version skew and missing files are distinct errors") {
    TempDir dir("predmon_ckpt_err");
    const auto path = dir.path / "f.ckpt";
    const auto net = sample_forecaster(2);
    io::save_forecaster(
        path, {net, neural::AdamState::for_parameter_count(net.parameter_count()), ""});

    // Flip one payload byte -> checksum mismatch.
    {
        std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(40);
        char c;
        f.seekg(40);
        f.get(c);
        f.seekp(40);
        f.put(static_cast<char>(c ^ 0x01));
    }
    CHECK_THROWS_AS(io::load_forecaster(path), ChecksumMismatch);

    // Rewrite with a future version tag (and a checksum that matches, so the
    // version check is what fires).
    {
        std::ifstream in(path, std::ios::binary);
        std::string bytes((std::istreambuf_iterator<char>(in)),
                          std::istreambuf_iterator<char>());
        bytes.resize(bytes.size() - 8);
        bytes[40] ^= 0x01;          // undo the earlier flip
        bytes[4] = 99;              // version field
        const std::uint64_t checksum = fnv1a64(bytes.data(), bytes.size());
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        out.write(reinterpret_cast<const char*>(&checksum), 8);
    }
    CHECK_THROWS_AS(io::load_forecaster(path), VersionUnsupported);

    CHECK_THROWS_AS(io::load_forecaster(dir.path / "absent.ckpt"), CheckpointMissing);

    // A qnetwork file loaded as a forecaster is rejected.
    Rng rng(1);
    auto q = agent::QNetwork::init(2, 4, 3, rng);
    io::save_qnetwork(dir.path / "q.ckpt",
                      {q, neural::AdamState::for_parameter_count(q.parameter_count()), 0.5,
                       ""});
    CHECK_THROWS_AS(io::load_forecaster(dir.path / "q.ckpt"), IoError);
}

TEST_CASE("alert events serialize to one json line") {
    alerts::AlertEvent e{42, "hr", 123.5, 2, "ward-nurse", 1, 3, 17};
    const auto parsed = json::parse(alerts::to_json_line(e));
    CHECK(parsed.at("channel") == "hr");
    CHECK(parsed.at("value") == 123.5);
    CHECK(parsed.at("team") == "ward-nurse");
    CHECK(parsed.at("severity") == 1);
}

TEST_CASE("severity-0 events are suppressed") {
    TempDir dir("predmon_alerts_suppress");
    auto sink = std::make_shared<alerts::FileSink>(dir.path / "a.jsonl");
    alerts::AlertEvent normal{0, "hr", 80.0, 0, "none", 0, 1, 1};
    const auto results = alerts::dispatch_alert(normal, {sink});
    CHECK(results.empty());
    CHECK_FALSE(fs::exists(dir.path / "a.jsonl"));
}

TEST_CASE("file sink appends one line per delivered event") {
    TempDir dir("predmon_alerts_file");
    auto sink = std::make_shared<alerts::FileSink>(dir.path / "a.jsonl");
    alerts::AlertEvent e{5, "resp", 27.0, 4, "met", 2, 1, 5};
    const auto results = alerts::dispatch_alert(e, {sink});
    REQUIRE(results.size() == 1);
    CHECK(results[0].delivered);
    CHECK(results[0].attempts == 1);

    alerts::dispatch_alert(e, {sink});
    std::ifstream f(dir.path / "a.jsonl");
    std::string line;
    int lines = 0;
    while (std::getline(f, line)) ++lines;
    CHECK(lines == 2);
}

TEST_CASE("webhook sink delivers and retries against a live server") {
    httplib::Server server;
    std::atomic<int> ok_hits{0};
    std::atomic<int> failing_hits{0};
    server.Post("/alerts", [&](const httplib::Request& req, httplib::Response& res) {
        ++ok_hits;
        CHECK(json::parse(req.body).at("channel") == "temp");
        res.status = 200;
    });
    server.Post("/broken", [&](const httplib::Request&, httplib::Response& res) {
        ++failing_hits;
        res.status = 500;
    });
    const int port = server.bind_to_any_port("127.0.0.1");
    REQUIRE(port > 0);
    std::thread server_thread([&server] { server.listen_after_bind(); });
    server.wait_until_ready();

    alerts::AlertEvent e{9, "temp", 39.5, 4, "met", 2, 2, 9};
    const std::string base = "http://127.0.0.1:" + std::to_string(port);

    auto good = std::make_shared<alerts::WebhookSink>(base + "/alerts");
    auto good_results = alerts::dispatch_alert(e, {good});
    REQUIRE(good_results.size() == 1);
    CHECK(good_results[0].delivered);
    CHECK(ok_hits == 1);

    // A 500 endpoint: initial attempt plus two retries, recorded as failed,
    // no exception escapes.
    auto broken = std::make_shared<alerts::WebhookSink>(base + "/broken");
    auto broken_results = alerts::dispatch_alert(e, {broken});
    REQUIRE(broken_results.size() == 1);
    CHECK_FALSE(broken_results[0].delivered);
    CHECK(broken_results[0].attempts == 3);
    CHECK(failing_hits == 3);

    server.stop();
    server_thread.join();
}

TEST_CASE("synthetic corpus is deterministic and covers every action") {
    synthetic::SyntheticConfig cfg;
    cfg.seed = 3;
    cfg.rows = 2500;
    const auto a = synthetic::generate(cfg);
    const auto b = synthetic::generate(cfg);
    CHECK(a.values == b.values);

    cfg.seed = 4;
    CHECK(synthetic::generate(cfg).values != a.values);

    for (const auto& channel : synthetic::channel_names()) {
        const auto table = synthetic::threshold_table(synthetic::Profile::Default, channel);
        std::vector<int> seen(table.action_count(), 0);
        const std::size_t col = a.channel_index(channel);
        for (std::size_t r = 0; r < a.rows(); ++r)
            seen[static_cast<std::size_t>(policy::correct_action(table, a.at(r, col)))]++;
        for (std::size_t action = 0; action < seen.size(); ++action) {
            CAPTURE(channel);
            CAPTURE(action);
            CHECK(seen[action] > 0);
        }
    }
}

TEST_CASE("alt profile differs from default and matches its own tables") {
    synthetic::SyntheticConfig cfg;
    cfg.seed = 3;
    cfg.rows = 600;
    const auto def = synthetic::generate(cfg);
    cfg.profile = synthetic::Profile::Alt;
    const auto alt = synthetic::generate(cfg);
    CHECK(def.values != alt.values);

    const auto table = synthetic::threshold_table(synthetic::Profile::Alt, "temp");
    CHECK(policy::validate_table(table).empty());
    // Most alt-temp values sit inside the alt normal band, which default
    // tables would score as severe-low.
    std::size_t in_normal = 0;
    const auto col = alt.channel_index("temp");
    for (std::size_t r = 0; r < alt.rows(); ++r)
        if (policy::correct_action(table, alt.at(r, col)) == 0) ++in_normal;
    CHECK(in_normal > alt.rows() / 2);
}

TEST_CASE("run config parses, validates, and rejects malformed input") {
    TempDir dir("predmon_config");
    const std::string table_json = policy::table_to_json_text(policy::demo_table("hr"));
    {
        std::ofstream t(dir.path / "hr.json");
        t << table_json;
    }

    const std::string body = R"({
      "data": {"csv": ")" + (dir.path / "d.csv").string() + R"(", "channels": ["hr"]},
      "normalization": "z-score",
      "forecaster": {"window": 6, "horizon": 2, "epochs": 3},
      "thresholds": [")" + (dir.path / "hr.json").string() + R"("],
      "agents": {"defaults": {"gamma": 0.9, "replay_cadence": "per-episode"},
                 "per_channel": {"hr": {"hidden": 12}}},
      "run": {"episodes": 2, "steps_per_episode": 50, "seed": 9, "output_dir": ")" +
                             (dir.path / "out").string() + R"("},
      "sinks": [{"type": "stdout"}, {"type": "file", "path": "alerts.jsonl"}]
    })";
    const auto cfg = config::run_config_from_json_text(body);
    CHECK(cfg.normalization == timeseries::NormMethod::ZScore);
    CHECK(cfg.forecaster.window == 6);
    CHECK(cfg.replay_cadence == config::ReplayCadence::PerEpisode);
    CHECK(cfg.agent_for("hr").hidden == 12);
    CHECK(cfg.agent_for("hr").gamma == 0.9);
    CHECK(cfg.agent_for("other").hidden == 24);
    CHECK(cfg.tables.at("hr").bands.size() == 5);
    CHECK(cfg.sinks.size() == 2);

    CHECK_THROWS_AS(config::run_config_from_json_text("{nope"), ConfigError);
    CHECK_THROWS_AS(config::run_config_from_json_text(
                        R"({"agents": {"defaults": {"gamma": 7.0}}})"),
                    ConfigError);
    CHECK_THROWS_AS(config::run_config_from_json_text(
                        R"({"run": {"episodes": 0}})"),
                    ConfigError);
    CHECK_THROWS_AS(config::load_run_config(dir.path / "missing.json"), ConfigError);
}

TEST_CASE("environment variables override output dir and webhook urls") {
    setenv("PREDMON_OUTPUT_DIR", "/tmp/predmon_env_out", 1);
    setenv("PREDMON_WEBHOOK_URL", "http://override:9/hook", 1);
    const auto cfg = config::run_config_from_json_text(
        R"({"sinks": [{"type": "webhook", "url": "http://original:1/x"}]})");
    CHECK(cfg.output_dir == "/tmp/predmon_env_out");
    REQUIRE(cfg.sinks.size() == 1);
    CHECK(cfg.sinks[0].target == "http://override:9/hook");
    unsetenv("PREDMON_OUTPUT_DIR");
    unsetenv("PREDMON_WEBHOOK_URL");
}

#include "predmon/config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "predmon/errors.hpp"

namespace predmon::config {

using nlohmann::json;

namespace {

void merge_agent_fields(agent::AgentConfig& cfg, const json& j) {
    if (j.contains("gamma")) cfg.gamma = j["gamma"].get<double>();
    if (j.contains("epsilon")) cfg.epsilon = j["epsilon"].get<double>();
    if (j.contains("epsilon_min")) cfg.epsilon_min = j["epsilon_min"].get<double>();
    if (j.contains("epsilon_decay")) cfg.epsilon_decay = j["epsilon_decay"].get<double>();
    if (j.contains("batch_size")) cfg.batch_size = j["batch_size"].get<std::size_t>();
    if (j.contains("learning_rate")) cfg.learning_rate = j["learning_rate"].get<double>();
    if (j.contains("hidden")) cfg.hidden = j["hidden"].get<std::size_t>();
    if (j.contains("replay_capacity"))
        cfg.replay_capacity = j["replay_capacity"].get<std::size_t>();
}

policy::ThresholdTable table_from_entry(const json& entry,
                                        const std::filesystem::path& base_dir) {
    if (entry.is_string()) {
        std::filesystem::path p = entry.get<std::string>();
        if (p.is_relative()) p = base_dir / p;
        return policy::load_table(p);
    }
    return policy::table_from_json_text(entry.dump());
}

}  // namespace

agent::AgentConfig RunConfig::agent_for(const std::string& channel) const {
    auto it = agent_overrides.find(channel);
    if (it != agent_overrides.end()) return it->second;
    return agent_defaults;
}

const policy::ThresholdTable& RunConfig::table_for(const std::string& channel) const {
    auto it = tables.find(channel);
    if (it == tables.end())
        throw ConfigError("no threshold table configured for channel '" + channel + "'");
    return it->second;
}

void RunConfig::validate() const {
    if (episodes == 0) throw ConfigError("run.episodes must be positive");
    if (steps_per_episode == 0) throw ConfigError("run.steps_per_episode must be positive");
    if (reward_magnitude <= 0.0 || penalty_magnitude <= 0.0)
        throw ConfigError("reward magnitudes must be positive");
    agent_defaults.validate();
    for (const auto& [channel, cfg] : agent_overrides) {
        (void)channel;
        cfg.validate();
    }
    for (const auto& [channel, table] : tables) {
        if (table.channel != channel)
            throw ConfigError("threshold table keyed '" + channel + "' names channel '" +
                              table.channel + "'");
        policy::require_valid(table);
    }
    for (const auto& channel : schema.channels) {
        if (tables.find(channel) == tables.end())
            throw ConfigError("monitored channel '" + channel +
                              "' has no threshold table");
    }
    for (const auto& sink : sinks) {
        if (sink.type != "stdout" && sink.type != "file" && sink.type != "webhook")
            throw ConfigError("unknown sink type '" + sink.type + "'");
        if (sink.type != "stdout" && sink.target.empty())
            throw ConfigError("sink of type '" + sink.type + "' needs a target");
    }
    if (forecaster.window == 0 || forecaster.horizon == 0 || forecaster.stride == 0)
        throw ConfigError("forecaster window/horizon/stride must be positive");
    if (forecaster.dropout < 0.0 || forecaster.dropout >= 1.0)
        throw ConfigError("forecaster dropout must be in [0, 1)");
    if (forecaster.validation_fraction < 0.0 || forecaster.validation_fraction >= 1.0)
        throw ConfigError("forecaster validation_fraction must be in [0, 1)");
}

RunConfig run_config_from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("run config is not valid JSON: ") + e.what());
    }

    RunConfig cfg;
    try {
        if (j.contains("data")) {
            const auto& d = j["data"];
            cfg.csv_path = d.value("csv", std::string{});
            cfg.schema.timestamp_column = d.value("timestamp_column", std::string{"t"});
            if (d.contains("channels"))
                cfg.schema.channels = d["channels"].get<std::vector<std::string>>();
            const std::string nan = d.value("nan_policy", std::string{"drop"});
            if (nan == "drop")
                cfg.schema.nan_policy = timeseries::NanPolicy::Drop;
            else if (nan == "error")
                cfg.schema.nan_policy = timeseries::NanPolicy::Error;
            else
                throw ConfigError("data.nan_policy must be drop|error, got '" + nan + "'");
            cfg.schema.gap_tolerance = d.value("gap_tolerance", std::int64_t{0});
        }

        const std::string norm = j.value("normalization", std::string{"min-max"});
        if (norm == "min-max")
            cfg.normalization = timeseries::NormMethod::MinMax;
        else if (norm == "z-score")
            cfg.normalization = timeseries::NormMethod::ZScore;
        else
            throw ConfigError("normalization must be min-max|z-score, got '" + norm + "'");

        if (j.contains("forecaster")) {
            const auto& f = j["forecaster"];
            cfg.forecaster.window = f.value("window", cfg.forecaster.window);
            cfg.forecaster.horizon = f.value("horizon", cfg.forecaster.horizon);
            cfg.forecaster.stride = f.value("stride", cfg.forecaster.stride);
            cfg.forecaster.hidden = f.value("hidden", cfg.forecaster.hidden);
            cfg.forecaster.dropout = f.value("dropout", cfg.forecaster.dropout);
            cfg.forecaster.epochs = f.value("epochs", cfg.forecaster.epochs);
            cfg.forecaster.batch_size = f.value("batch_size", cfg.forecaster.batch_size);
            cfg.forecaster.learning_rate =
                f.value("learning_rate", cfg.forecaster.learning_rate);
            cfg.forecaster.validation_fraction =
                f.value("validation_fraction", cfg.forecaster.validation_fraction);
        }

        if (j.contains("thresholds")) {
            if (!j["thresholds"].is_array())
                throw ConfigError("thresholds must be an array of tables or paths");
            for (const auto& entry : j["thresholds"]) {
                auto table = table_from_entry(entry, cfg.csv_path.parent_path());
                cfg.tables.emplace(table.channel, std::move(table));
            }
        }

        if (j.contains("agents")) {
            const auto& a = j["agents"];
            if (a.contains("defaults")) {
                merge_agent_fields(cfg.agent_defaults, a["defaults"]);
                if (a["defaults"].contains("replay_cadence")) {
                    const std::string cad = a["defaults"]["replay_cadence"].get<std::string>();
                    if (cad == "per-step")
                        cfg.replay_cadence = ReplayCadence::PerStep;
                    else if (cad == "per-episode")
                        cfg.replay_cadence = ReplayCadence::PerEpisode;
                    else
                        throw ConfigError(
                            "replay_cadence must be per-step|per-episode, got '" + cad + "'");
                }
            }
            if (a.contains("per_channel")) {
                for (const auto& [channel, overrides] : a["per_channel"].items()) {
                    agent::AgentConfig merged = cfg.agent_defaults;
                    merge_agent_fields(merged, overrides);
                    cfg.agent_overrides.emplace(channel, merged);
                }
            }
        }

        if (j.contains("run")) {
            const auto& r = j["run"];
            cfg.episodes = r.value("episodes", cfg.episodes);
            cfg.steps_per_episode = r.value("steps_per_episode", cfg.steps_per_episode);
            cfg.seed = r.value("seed", cfg.seed);
            cfg.output_dir = r.value("output_dir", cfg.output_dir.string());
            cfg.parallel = r.value("parallel", cfg.parallel);
            cfg.reward_magnitude = r.value("reward", cfg.reward_magnitude);
            cfg.penalty_magnitude = r.value("penalty", cfg.penalty_magnitude);
            const std::string source = r.value("monitor_source", std::string{"forecast"});
            if (source == "forecast")
                cfg.monitor_source = MonitorSource::Forecast;
            else if (source == "raw")
                cfg.monitor_source = MonitorSource::Raw;
            else
                throw ConfigError("run.monitor_source must be forecast|raw, got '" +
                                  source + "'");
        }

        if (j.contains("sinks")) {
            for (const auto& s : j["sinks"]) {
                SinkConfig sink;
                sink.type = s.at("type").get<std::string>();
                if (sink.type == "file")
                    sink.target = s.at("path").get<std::string>();
                else if (sink.type == "webhook")
                    sink.target = s.at("url").get<std::string>();
                cfg.sinks.push_back(std::move(sink));
            }
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("run config malformed: ") + e.what());
    }

    if (const char* out = std::getenv("PREDMON_OUTPUT_DIR"); out && *out)
        cfg.output_dir = out;
    if (const char* url = std::getenv("PREDMON_WEBHOOK_URL"); url && *url) {
        for (auto& sink : cfg.sinks)
            if (sink.type == "webhook") sink.target = url;
    }

    cfg.validate();
    return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream file(path, std::ios::binary);
    if (!file) throw ConfigError("cannot open run config '" + path.string() + "'");
    std::stringstream buffer;
    buffer << file.rdbuf();
    return run_config_from_json_text(buffer.str());
}

std::string config_snapshot(const RunConfig& config) {
    json j = {{"csv", config.csv_path.string()},
              {"normalization",
               config.normalization == timeseries::NormMethod::MinMax ? "min-max" : "z-score"},
              {"window", config.forecaster.window},
              {"horizon", config.forecaster.horizon},
              {"stride", config.forecaster.stride},
              {"hidden", config.forecaster.hidden},
              {"dropout", config.forecaster.dropout},
              {"epochs", config.forecaster.epochs},
              {"learning_rate", config.forecaster.learning_rate},
              {"episodes", config.episodes},
              {"steps_per_episode", config.steps_per_episode},
              {"seed", config.seed},
              {"replay_cadence",
               config.replay_cadence == ReplayCadence::PerStep ? "per-step" : "per-episode"}};
    return j.dump();
}

}  // namespace predmon::config

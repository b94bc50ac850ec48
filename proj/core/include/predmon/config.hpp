#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "predmon/agent.hpp"
#include "predmon/forecaster.hpp"
#include "predmon/policy.hpp"
#include "predmon/timeseries.hpp"

namespace predmon::config {

/// When the agents learn: after every environment step once the memory can
/// fill a batch, or once per episode.
enum class ReplayCadence { PerStep, PerEpisode };

/// What the agents monitor: the rolling forecast of the frame, or the raw
/// frame itself.
enum class MonitorSource { Forecast, Raw };

struct SinkConfig {
    std::string type;  // "stdout" | "file" | "webhook"
    std::string target;  // file path or URL; unused for stdout
};

/// One file describes a full run: data, normalization, forecaster, threshold
/// tables, agents, episode loop and alert sinks.
struct RunConfig {
    std::filesystem::path csv_path;
    timeseries::IngestSchema schema;
    timeseries::NormMethod normalization = timeseries::NormMethod::MinMax;

    forecaster::ForecasterConfig forecaster;

    std::map<std::string, policy::ThresholdTable> tables;

    agent::AgentConfig agent_defaults;
    std::map<std::string, agent::AgentConfig> agent_overrides;
    ReplayCadence replay_cadence = ReplayCadence::PerStep;

    std::size_t episodes = 10;
    std::size_t steps_per_episode = 300;
    std::uint64_t seed = 0;
    std::filesystem::path output_dir = "out";
    bool parallel = false;
    MonitorSource monitor_source = MonitorSource::Forecast;
    double reward_magnitude = 1.0;
    double penalty_magnitude = 1.0;

    std::vector<SinkConfig> sinks;

    /// Per-channel agent settings: overrides merged over the defaults.
    agent::AgentConfig agent_for(const std::string& channel) const;

    /// Table for a channel; throws ConfigError when missing.
    const policy::ThresholdTable& table_for(const std::string& channel) const;

    /// Static checks: tables valid, agent configs in range, channels covered.
    void validate() const;
};

/// Parse a run config JSON document. Environment overrides are applied here:
/// PREDMON_OUTPUT_DIR replaces run.output_dir, PREDMON_WEBHOOK_URL replaces
/// the URL of every webhook sink.
RunConfig run_config_from_json_text(const std::string& text);
RunConfig load_run_config(const std::filesystem::path& path);

/// Compact JSON snapshot of the parts that shape training, embedded into
/// checkpoints for provenance.
std::string config_snapshot(const RunConfig& config);

}  // namespace predmon::config

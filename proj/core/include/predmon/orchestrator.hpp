#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "predmon/agent.hpp"
#include "predmon/config.hpp"
#include "predmon/environment.hpp"
#include "predmon/forecaster.hpp"

namespace predmon::orchestrator {

/// One episode's outcome for one agent.
struct EpisodeReport {
    std::size_t episode = 0;  // 1-based
    std::string channel;
    double score = 0.0;
    std::size_t steps = 0;
    double correct_rate = 0.0;
    double epsilon = 0.0;
    double duration_seconds = 0.0;
};

struct AgentRunReport {
    std::string channel;
    std::vector<EpisodeReport> episodes;
    bool failed = false;
    std::string error;
};

struct RunResult {
    std::vector<AgentRunReport> agents;  // frame channel order
    forecaster::TrainReport forecaster_report;
    std::filesystem::path output_dir;
    bool transfer = false;

    bool any_failed() const;
};

/// What a policy sees each step: the raw channel value plus the feature
/// vector fed to function approximators.
struct Observation {
    double value = 0.0;
    neural::Vec features;
};

/// Q-network input features for one observation: the value re-centered and
/// scaled by the channel's severity-0 band, so channels with different units
/// share one input scale. Derived from the table alone, hence identical
/// across training, evaluation and transfer.
neural::Vec observation_features(double value, const policy::ThresholdTable& table);

/// Behavior driving one channel's episode loop. The default implementation
/// wraps a DQN agent; tests inject oracles through run_training's factory.
class ActionPolicy {
public:
    virtual ~ActionPolicy() = default;
    virtual int act(const Observation& observation) = 0;
    virtual void observe(const Observation& from, int action, double reward,
                         const Observation& to, bool done) = 0;
    virtual bool ready_to_learn(std::size_t batch_size) const = 0;
    virtual double learn(std::size_t batch_size) = 0;
    virtual double epsilon() const = 0;
    /// Non-null for policies backed by a DQN agent; used for checkpointing.
    virtual agent::DqnAgent* agent() { return nullptr; }
};

using PolicyFactory = std::function<std::unique_ptr<ActionPolicy>(
    const std::string& channel, std::size_t action_count, agent::AgentConfig agent_config)>;

/// Train the forecaster, build one environment per channel from its output,
/// and run every agent for the configured number of episodes. Reports and
/// step logs are written under config.output_dir together with forecaster
/// and per-agent checkpoints. Deterministic for a fixed config and seed;
/// a failing agent is isolated (its report carries the error) while the
/// others complete.
RunResult run_training(const config::RunConfig& config);
RunResult run_training(const config::RunConfig& config, const PolicyFactory& factory);

struct EvaluationResult {
    std::vector<EpisodeReport> greedy_episodes;  // one per agent
    forecaster::HorizonMetrics forecaster_metrics;
};

/// Greedy pass (epsilon 0, no learning) from saved checkpoints plus
/// forecaster accuracy per horizon on the held-out window tail.
EvaluationResult evaluate(const config::RunConfig& config,
                          const std::filesystem::path& checkpoint_dir);

/// Retrain on a new domain starting from saved weights. Agents keep their
/// source Q-networks (shape-checked against the target action spaces unless
/// `reinitialize_on_mismatch`); the forecaster keeps its weights but adopts
/// the target domain's normalization. Epsilon restarts from the target
/// config.
RunResult run_transfer(const std::filesystem::path& source_checkpoint_dir,
                       const config::RunConfig& target_config,
                       bool reinitialize_on_mismatch = false);

struct MonitorSummary {
    std::string channel;
    std::size_t steps = 0;
    double score = 0.0;
    double correct_rate = 0.0;
    std::size_t alerts_raised = 0;
    std::size_t deliveries_failed = 0;
};

/// Greedy monitoring pass with live alert dispatch to the configured sinks.
/// Uses the frame at `frame_csv` when given, else the config's data file.
std::vector<MonitorSummary> monitor(const config::RunConfig& config,
                                    const std::filesystem::path& checkpoint_dir,
                                    const std::optional<std::filesystem::path>& frame_csv);

/// Write reports as CSV with the stable column set
/// episode,agent,score,steps,correct_rate,epsilon.
void write_reports_csv(const std::filesystem::path& path,
                       const std::vector<AgentRunReport>& agents);

}  // namespace predmon::orchestrator

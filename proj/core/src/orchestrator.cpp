#include "predmon/orchestrator.hpp"

#include <charconv>
#include <chrono>
#include <fstream>
#include <thread>

#include <json.hpp>

#include "predmon/alerts.hpp"
#include "predmon/checkpoint.hpp"
#include "predmon/errors.hpp"
#include "predmon/metrics.hpp"
#include "predmon/rng.hpp"

namespace predmon::orchestrator {

using nlohmann::json;

namespace {

std::string format_double(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, ptr);
}

std::uint64_t derive_seed(std::uint64_t seed, const std::string& name) {
    std::uint64_t h = fnv1a64(&seed, sizeof(seed));
    return fnv1a64(name.data(), name.size(), h);
}

/// Default policy: the DQN agent over band-relative features.
class DqnPolicy final : public ActionPolicy {
public:
    DqnPolicy(std::size_t state_dim, std::size_t action_count, agent::AgentConfig cfg)
        : agent_(state_dim, action_count, cfg) {}

    int act(const Observation& observation) override {
        return agent_.act(observation.features);
    }
    void observe(const Observation& from, int action, double reward, const Observation& to,
                 bool done) override {
        agent_.memorize(agent::Transition{from.features, action, reward, to.features, done});
    }
    bool ready_to_learn(std::size_t batch_size) const override {
        return agent_.memory().size() >= batch_size;
    }
    double learn(std::size_t batch_size) override { return agent_.replay(batch_size); }
    double epsilon() const override { return agent_.epsilon(); }
    agent::DqnAgent* agent() override { return &agent_; }

private:
    agent::DqnAgent agent_;
};

PolicyFactory default_factory() {
    return [](const std::string& /*channel*/, std::size_t action_count,
              agent::AgentConfig cfg) -> std::unique_ptr<ActionPolicy> {
        return std::make_unique<DqnPolicy>(1, action_count, cfg);
    };
}

struct StepRecord {
    std::size_t episode;
    std::size_t t;
    double state;
    int action;
    int correct_action;
    double reward;
    bool done;
};

std::string step_log_text(const std::vector<StepRecord>& records) {
    std::string out;
    for (const auto& r : records) {
        json line = {{"episode", r.episode}, {"t", r.t},
                     {"state", r.state},     {"action", r.action},
                     {"correct_action", r.correct_action}, {"reward", r.reward},
                     {"done", r.done}};
        out += line.dump();
        out += '\n';
    }
    return out;
}

/// The episode loop of one agent over one environment (the inner two loops
/// of the multi-agent driver).
AgentRunReport run_agent_episodes(const std::string& channel, environment::MonitorEnv env,
                                  ActionPolicy& policy, const config::RunConfig& config,
                                  std::size_t batch_size,
                                  std::vector<StepRecord>* step_log) {
    AgentRunReport report;
    report.channel = channel;
    const auto& table = env.table();

    for (std::size_t episode = 1; episode <= config.episodes; ++episode) {
        const auto started = std::chrono::steady_clock::now();
        Observation state;
        state.value = env.reset();
        state.features = observation_features(state.value, table);
        double score = 0.0;
        std::size_t steps = 0;
        std::size_t correct = 0;

        while (!env.done()) {
            const int action = policy.act(state);
            const auto result = env.step(action);
            Observation next;
            next.value = result.next_state;
            next.features = observation_features(next.value, table);
            policy.observe(state, action, result.reward, next, result.done);
            score += result.reward;
            if (result.reward > 0.0) ++correct;
            if (step_log)
                step_log->push_back({episode, steps, state.value, action,
                                     result.correct_action, result.reward, result.done});
            ++steps;
            state = std::move(next);
            if (config.replay_cadence == config::ReplayCadence::PerStep &&
                policy.ready_to_learn(batch_size))
                policy.learn(batch_size);
        }
        if (config.replay_cadence == config::ReplayCadence::PerEpisode &&
            policy.ready_to_learn(batch_size))
            policy.learn(batch_size);

        EpisodeReport er;
        er.episode = episode;
        er.channel = channel;
        er.score = score;
        er.steps = steps;
        er.correct_rate = steps > 0 ? static_cast<double>(correct) / static_cast<double>(steps)
                                    : 0.0;
        er.epsilon = policy.epsilon();
        er.duration_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - started)
                .count();

        // Score accounting: the episode score must equal the sum of logged
        // step rewards, and with symmetric magnitudes the correct rate obeys
        // (steps + score/r) / (2 steps).
        if (step_log) {
            std::vector<double> rewards;
            for (const auto& r : *step_log)
                if (r.episode == episode) rewards.push_back(r.reward);
            if (metrics::cumulative_reward(rewards) != score)
                throw Error("internal: step log rewards disagree with episode score");
        }
        if (config.reward_magnitude == config.penalty_magnitude && steps > 0) {
            const double implied =
                (static_cast<double>(steps) + score / config.reward_magnitude) /
                (2.0 * static_cast<double>(steps));
            if (implied != er.correct_rate)
                throw Error("internal: correct-rate identity violated");
        }

        report.episodes.push_back(er);
    }
    return report;
}

std::vector<double> channel_sequence(const timeseries::TimeSeriesFrame& frame,
                                     std::size_t column) {
    return frame.column(column);
}

struct PreparedRun {
    timeseries::TimeSeriesFrame raw_frame;
    forecaster::ForecastNetwork network;
    forecaster::TrainReport train_report;
    timeseries::TimeSeriesFrame monitor_frame;
};

/// Load data, fit normalization, train (or warm-start) the forecaster and
/// produce the frame the agents will monitor.
PreparedRun prepare_run(const config::RunConfig& config,
                        forecaster::ForecastNetwork* warm_start) {
    PreparedRun run;
    run.raw_frame = timeseries::load_csv(config.csv_path, config.schema);
    for (const auto& channel : run.raw_frame.channels)
        config.table_for(channel);  // every monitored channel needs a table

    const auto spec = timeseries::fit_normalizer(run.raw_frame, config.normalization);
    const auto normalized = timeseries::apply(spec, run.raw_frame);
    const auto windows =
        timeseries::make_windows(normalized, config.forecaster.window,
                                 config.forecaster.horizon, config.forecaster.stride);

    forecaster::ForecasterConfig fcfg = config.forecaster;
    fcfg.seed = derive_seed(config.seed, "forecaster");
    if (warm_start) {
        run.network = std::move(*warm_start);
        run.network.normalization = spec;
        run.train_report = forecaster::continue_training(run.network, windows, fcfg);
    } else {
        auto [net, rep] = forecaster::train_forecaster(windows, fcfg, spec);
        run.network = std::move(net);
        run.train_report = std::move(rep);
    }

    if (config.monitor_source == config::MonitorSource::Forecast) {
        run.monitor_frame = forecaster::rolling_forecast(run.network, run.raw_frame).frame;
    } else {
        run.monitor_frame = run.raw_frame;
    }
    return run;
}

RunResult run_impl(const config::RunConfig& config, const PolicyFactory& factory,
                   forecaster::ForecastNetwork* warm_start,
                   const std::map<std::string, io::QNetworkCheckpoint>* agent_warm_start,
                   bool transfer) {
    config.validate();
    PreparedRun prepared = prepare_run(config, warm_start);
    const auto& channels = prepared.raw_frame.channels;

    std::filesystem::create_directories(config.output_dir);

    RunResult result;
    result.transfer = transfer;
    result.output_dir = config.output_dir;
    result.forecaster_report = prepared.train_report;
    result.agents.resize(channels.size());

    std::vector<std::unique_ptr<ActionPolicy>> policies(channels.size());
    for (std::size_t c = 0; c < channels.size(); ++c) {
        const auto& channel = channels[c];
        const auto& table = config.table_for(channel);
        agent::AgentConfig acfg = config.agent_for(channel);
        acfg.seed = derive_seed(config.seed, "agent/" + channel);
        policies[c] = factory(channel, table.action_count(), acfg);
        if (agent_warm_start && policies[c]->agent()) {
            auto it = agent_warm_start->find(channel);
            if (it != agent_warm_start->end())
                policies[c]->agent()->load_network(it->second.network);
        }
    }

    auto worker = [&](std::size_t c) {
        const auto& channel = channels[c];
        std::vector<StepRecord> step_log;
        try {
            environment::MonitorEnv env(
                channel_sequence(prepared.monitor_frame,
                                 prepared.monitor_frame.channel_index(channel)),
                config.table_for(channel), config.steps_per_episode,
                config.reward_magnitude, config.penalty_magnitude);
            const std::size_t batch = config.agent_for(channel).batch_size;
            result.agents[c] =
                run_agent_episodes(channel, std::move(env), *policies[c], config, batch,
                                   &step_log);
        } catch (const std::exception& e) {
            result.agents[c].channel = channel;
            result.agents[c].failed = true;
            result.agents[c].error = e.what();
        }
        std::ofstream log(config.output_dir / ("steps_" + channel + ".jsonl"),
                          std::ios::binary | std::ios::trunc);
        log << step_log_text(step_log);
    };

    if (config.parallel) {
        std::vector<std::thread> threads;
        threads.reserve(channels.size());
        for (std::size_t c = 0; c < channels.size(); ++c) threads.emplace_back(worker, c);
        for (auto& t : threads) t.join();
    } else {
        for (std::size_t c = 0; c < channels.size(); ++c) worker(c);
    }

    // Persist everything the evaluate/transfer/monitor commands need.
    const std::string snapshot = config::config_snapshot(config);
    io::save_forecaster(config.output_dir / "forecaster.ckpt",
                        {prepared.network,
                         neural::AdamState::for_parameter_count(
                             prepared.network.parameter_count(),
                             {.learning_rate = config.forecaster.learning_rate}),
                         snapshot});
    for (std::size_t c = 0; c < channels.size(); ++c) {
        if (auto* dqn = policies[c]->agent(); dqn && !result.agents[c].failed) {
            io::save_qnetwork(config.output_dir / ("agent_" + channels[c] + ".ckpt"),
                              {dqn->network(), dqn->optimizer_state(), dqn->epsilon(),
                               snapshot});
        }
    }
    write_reports_csv(config.output_dir / "reports.csv", result.agents);

    json manifest = {{"channels", channels},
                     {"seed", config.seed},
                     {"episodes", config.episodes},
                     {"steps_per_episode", config.steps_per_episode},
                     {"transfer", transfer}};
    std::ofstream mf(config.output_dir / "run.json", std::ios::binary | std::ios::trunc);
    mf << manifest.dump(2) << '\n';

    return result;
}

}  // namespace

bool RunResult::any_failed() const {
    for (const auto& a : agents)
        if (a.failed) return true;
    return false;
}

neural::Vec observation_features(double value, const policy::ThresholdTable& table) {
    double center = 0.0;
    double halfwidth = 1.0;
    for (const auto& band : table.bands) {
        if (band.severity != 0) continue;
        if (std::isfinite(band.lo) && std::isfinite(band.hi)) {
            center = 0.5 * (band.lo + band.hi);
            halfwidth = 0.5 * (band.hi - band.lo);
        }
        break;
    }
    return {(value - center) / halfwidth};
}

RunResult run_training(const config::RunConfig& config) {
    return run_impl(config, default_factory(), nullptr, nullptr, false);
}

RunResult run_training(const config::RunConfig& config, const PolicyFactory& factory) {
    return run_impl(config, factory, nullptr, nullptr, false);
}

EvaluationResult evaluate(const config::RunConfig& config,
                          const std::filesystem::path& checkpoint_dir) {
    config.validate();
    auto fc = io::load_forecaster(checkpoint_dir / "forecaster.ckpt");

    const auto raw = timeseries::load_csv(config.csv_path, config.schema);

    // Held-out windows, normalized with the checkpoint's own spec so the
    // evaluation happens in the units the network was trained for.
    const auto normalized = timeseries::apply(fc.network.normalization, raw);
    const auto windows = timeseries::make_windows(normalized, fc.network.window,
                                                  fc.network.horizon,
                                                  config.forecaster.stride);
    std::size_t val_count = static_cast<std::size_t>(
        static_cast<double>(windows.size()) * config.forecaster.validation_fraction);
    if (val_count == 0) val_count = windows.size();

    EvaluationResult result;
    result.forecaster_metrics = forecaster::evaluate_horizons(
        fc.network, windows, windows.size() - val_count, val_count);

    const auto monitor_frame =
        config.monitor_source == config::MonitorSource::Forecast
            ? forecaster::rolling_forecast(fc.network, raw).frame
            : raw;

    for (const auto& channel : raw.channels) {
        const auto ckpt_path = checkpoint_dir / ("agent_" + channel + ".ckpt");
        auto qc = io::load_qnetwork(ckpt_path);

        agent::AgentConfig acfg = config.agent_for(channel);
        acfg.epsilon = 0.0;
        acfg.epsilon_min = 0.0;
        acfg.hidden = qc.network.has_hidden ? qc.network.hidden.output_dim() : 0;
        agent::DqnAgent greedy(qc.network.state_dim, qc.network.action_count, acfg);
        greedy.load_network(qc.network);

        environment::MonitorEnv env(
            monitor_frame.column(monitor_frame.channel_index(channel)),
            config.table_for(channel), config.steps_per_episode, config.reward_magnitude,
            config.penalty_magnitude);

        EpisodeReport er;
        er.episode = 1;
        er.channel = channel;
        double state = env.reset();
        std::size_t correct = 0;
        while (!env.done()) {
            const int action =
                greedy.greedy_action(observation_features(state, config.table_for(channel)));
            const auto r = env.step(action);
            er.score += r.reward;
            if (r.reward > 0.0) ++correct;
            ++er.steps;
            state = r.next_state;
        }
        er.correct_rate =
            er.steps > 0 ? static_cast<double>(correct) / static_cast<double>(er.steps) : 0.0;
        er.epsilon = 0.0;
        result.greedy_episodes.push_back(std::move(er));
    }
    return result;
}

RunResult run_transfer(const std::filesystem::path& source_checkpoint_dir,
                       const config::RunConfig& target_config,
                       bool reinitialize_on_mismatch) {
    target_config.validate();

    auto fc = io::load_forecaster(source_checkpoint_dir / "forecaster.ckpt");
    if (fc.network.window != target_config.forecaster.window ||
        fc.network.horizon != target_config.forecaster.horizon)
        throw ShapeMismatch("source forecaster windowing does not match target config");

    // Agent warm starts keyed by channel name; shape checks happen against
    // the target tables before any training runs.
    std::map<std::string, io::QNetworkCheckpoint> warm_agents;
    for (const auto& [channel, table] : target_config.tables) {
        const auto path = source_checkpoint_dir / ("agent_" + channel + ".ckpt");
        if (!std::filesystem::exists(path)) continue;
        auto qc = io::load_qnetwork(path);
        if (qc.network.action_count != table.action_count() ||
            qc.network.state_dim != 1) {
            if (!reinitialize_on_mismatch)
                throw ShapeMismatch(
                    "agent checkpoint for '" + channel + "' has K=" +
                    std::to_string(qc.network.action_count) + ", target table has K=" +
                    std::to_string(table.action_count()) +
                    " (pass the reinit flag to start that agent fresh)");
            continue;  // agent starts fresh
        }
        warm_agents.emplace(channel, std::move(qc));
    }

    return run_impl(target_config, default_factory(), &fc.network, &warm_agents, true);
}

std::vector<MonitorSummary> monitor(const config::RunConfig& config,
                                    const std::filesystem::path& checkpoint_dir,
                                    const std::optional<std::filesystem::path>& frame_csv) {
    config.validate();
    auto fc = io::load_forecaster(checkpoint_dir / "forecaster.ckpt");

    config::RunConfig data_config = config;
    if (frame_csv) data_config.csv_path = *frame_csv;
    const auto raw = timeseries::load_csv(data_config.csv_path, data_config.schema);

    const auto frame = config.monitor_source == config::MonitorSource::Forecast
                           ? forecaster::rolling_forecast(fc.network, raw).frame
                           : raw;

    std::vector<std::shared_ptr<alerts::AlertSink>> sinks;
    for (const auto& s : config.sinks) {
        if (s.type == "stdout")
            sinks.push_back(std::make_shared<alerts::StdoutSink>());
        else if (s.type == "file")
            sinks.push_back(std::make_shared<alerts::FileSink>(s.target));
        else if (s.type == "webhook")
            sinks.push_back(std::make_shared<alerts::WebhookSink>(s.target));
    }

    std::vector<MonitorSummary> summaries;
    for (const auto& channel : raw.channels) {
        auto qc = io::load_qnetwork(checkpoint_dir / ("agent_" + channel + ".ckpt"));
        const auto& table = config.table_for(channel);
        if (qc.network.action_count != table.action_count())
            throw ShapeMismatch("agent checkpoint for '" + channel +
                                "' does not match its threshold table");

        agent::AgentConfig acfg = config.agent_for(channel);
        acfg.epsilon = 0.0;
        acfg.epsilon_min = 0.0;
        acfg.hidden = qc.network.has_hidden ? qc.network.hidden.output_dim() : 0;
        agent::DqnAgent greedy(qc.network.state_dim, qc.network.action_count, acfg);
        greedy.load_network(qc.network);

        environment::MonitorEnv env(frame.column(frame.channel_index(channel)), table,
                                    config.steps_per_episode, config.reward_magnitude,
                                    config.penalty_magnitude);

        MonitorSummary summary;
        summary.channel = channel;
        double state = env.reset();
        std::size_t correct = 0;
        std::size_t step = 0;
        while (!env.done()) {
            const int action = greedy.greedy_action(observation_features(state, table));
            const auto r = env.step(action);
            summary.score += r.reward;
            if (r.reward > 0.0) ++correct;

            alerts::AlertEvent event;
            event.timestamp = static_cast<std::int64_t>(step);
            event.channel = channel;
            event.value = r.observed_value;
            event.action = action;
            event.team = r.team;
            event.severity = r.severity;
            event.episode = 1;
            event.step = static_cast<int>(step);
            const auto outcomes = alerts::dispatch_alert(event, sinks);
            if (!outcomes.empty()) ++summary.alerts_raised;
            for (const auto& o : outcomes)
                if (!o.delivered) ++summary.deliveries_failed;

            ++step;
            ++summary.steps;
            state = r.next_state;
        }
        summary.correct_rate =
            summary.steps > 0 ? static_cast<double>(correct) / static_cast<double>(summary.steps)
                              : 0.0;
        summaries.push_back(std::move(summary));
    }
    return summaries;
}

void write_reports_csv(const std::filesystem::path& path,
                       const std::vector<AgentRunReport>& agents) {
    std::string out = "episode,agent,score,steps,correct_rate,epsilon\n";
    for (const auto& agent_report : agents) {
        for (const auto& er : agent_report.episodes) {
            out += std::to_string(er.episode);
            out += ',';
            out += er.channel;
            out += ',';
            out += format_double(er.score);
            out += ',';
            out += std::to_string(er.steps);
            out += ',';
            out += format_double(er.correct_rate);
            out += ',';
            out += format_double(er.epsilon);
            out += '\n';
        }
    }
    std::ofstream file(path, std::ios::binary | std::ios::trunc);
    if (!file) throw IoError("cannot write reports to '" + path.string() + "'");
    file << out;
}

}  // namespace predmon::orchestrator

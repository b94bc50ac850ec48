#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "predmon/checkpoint.hpp"
#include "predmon/config.hpp"
#include "predmon/errors.hpp"
#include "predmon/orchestrator.hpp"
#include "predmon/policy.hpp"
#include "predmon/synthetic.hpp"
#include "predmon/timeseries.hpp"

namespace {

using namespace predmon;

constexpr int kExitOk = 0;
constexpr int kExitPartialFailure = 1;
constexpr int kExitBadConfig = 2;

config::RunConfig load_config(const std::string& path, std::optional<std::uint64_t> seed) {
    auto cfg = config::load_run_config(path);
    if (seed) cfg.seed = *seed;
    return cfg;
}

void print_forecaster_metrics(const forecaster::HorizonMetrics& metrics) {
    std::printf("horizon        mae       mape       rmse\n");
    for (std::size_t h = 0; h < metrics.per_step.size(); ++h) {
        const auto& m = metrics.per_step[h];
        std::printf("  +%zu      %8.4f   %7.3f%%   %8.4f\n", h + 1, m.mae, m.mape, m.rmse);
    }
    const auto& agg = metrics.aggregate;
    std::printf("  all     %8.4f   %7.3f%%   %8.4f\n", agg.mae, agg.mape, agg.rmse);
}

int print_run_result(const orchestrator::RunResult& result) {
    for (const auto& agent_report : result.agents) {
        if (agent_report.failed) {
            std::fprintf(stderr, "agent %s failed: %s\n", agent_report.channel.c_str(),
                         agent_report.error.c_str());
            continue;
        }
        const auto& first = agent_report.episodes.front();
        const auto& last = agent_report.episodes.back();
        std::printf("agent %-8s episode 1 score %8.1f -> episode %zu score %8.1f (eps %.3f)\n",
                    agent_report.channel.c_str(), first.score, last.episode, last.score,
                    last.epsilon);
    }
    std::printf("reports written to %s\n", result.output_dir.string().c_str());
    return result.any_failed() ? kExitPartialFailure : kExitOk;
}

int cmd_ingest(const std::string& config_path) {
    const auto cfg = config::load_run_config(config_path);
    const auto frame = timeseries::load_csv(cfg.csv_path, cfg.schema);
    std::printf("loaded %zu rows x %zu channels from %s\n", frame.rows(), frame.cols(),
                cfg.csv_path.string().c_str());
    if (cfg.schema.dropped_rows > 0)
        std::printf("dropped %zu rows with non-finite values\n", cfg.schema.dropped_rows);
    for (std::size_t c = 0; c < frame.cols(); ++c) {
        const auto& channel = frame.channels[c];
        const auto warning =
            policy::range_mismatch_warning(cfg.table_for(channel), frame.column(c));
        if (!warning.empty()) std::fprintf(stderr, "warning: %s\n", warning.c_str());
    }
    return kExitOk;
}

int cmd_gen_synthetic(std::uint64_t seed, std::size_t rows, const std::string& out,
                      const std::string& profile, double noise) {
    synthetic::SyntheticConfig cfg;
    cfg.seed = seed;
    cfg.rows = rows;
    cfg.noise_fraction = noise;
    cfg.profile = synthetic::profile_from_name(profile);
    timeseries::write_csv(out, synthetic::generate(cfg));
    std::printf("wrote %zu rows to %s (profile %s, seed %llu)\n", rows, out.c_str(),
                profile.c_str(), static_cast<unsigned long long>(seed));
    return kExitOk;
}

int cmd_train_forecaster(const std::string& config_path, std::optional<std::uint64_t> seed,
                         const std::optional<std::string>& export_forecast) {
    const auto cfg = load_config(config_path, seed);
    const auto frame = timeseries::load_csv(cfg.csv_path, cfg.schema);
    const auto spec = timeseries::fit_normalizer(frame, cfg.normalization);
    const auto windows =
        timeseries::make_windows(timeseries::apply(spec, frame), cfg.forecaster.window,
                                 cfg.forecaster.horizon, cfg.forecaster.stride);
    forecaster::ForecasterConfig fcfg = cfg.forecaster;
    fcfg.seed = cfg.seed;
    auto [net, report] = forecaster::train_forecaster(windows, fcfg, spec);

    std::filesystem::create_directories(cfg.output_dir);
    io::save_forecaster(cfg.output_dir / "forecaster.ckpt",
                        {net,
                         neural::AdamState::for_parameter_count(
                             net.parameter_count(), {.learning_rate = fcfg.learning_rate}),
                         config::config_snapshot(cfg)});
    std::printf("trained %zu epochs, final loss %.6f\n", report.epochs_run,
                report.epoch_losses.back());
    print_forecaster_metrics(report.validation);
    std::printf("checkpoint written to %s\n",
                (cfg.output_dir / "forecaster.ckpt").string().c_str());
    if (export_forecast) {
        forecaster::write_forecast_csv(*export_forecast,
                                       forecaster::rolling_forecast(net, frame));
        std::printf("rolling forecast written to %s\n", export_forecast->c_str());
    }
    return kExitOk;
}

int cmd_train_agents(const std::string& config_path, std::optional<std::uint64_t> seed) {
    const auto cfg = load_config(config_path, seed);
    return print_run_result(orchestrator::run_training(cfg));
}

int cmd_evaluate(const std::string& config_path, const std::string& checkpoint_dir) {
    const auto cfg = config::load_run_config(config_path);
    const auto result = orchestrator::evaluate(cfg, checkpoint_dir);
    std::printf("forecaster validation metrics:\n");
    print_forecaster_metrics(result.forecaster_metrics);
    for (const auto& er : result.greedy_episodes)
        std::printf("agent %-8s greedy score %8.1f over %zu steps (correct %.1f%%)\n",
                    er.channel.c_str(), er.score, er.steps, 100.0 * er.correct_rate);
    return kExitOk;
}

int cmd_monitor(const std::string& config_path, const std::string& checkpoint_dir,
                const std::optional<std::string>& frame_csv) {
    const auto cfg = config::load_run_config(config_path);
    std::optional<std::filesystem::path> frame;
    if (frame_csv) frame = *frame_csv;
    const auto summaries = orchestrator::monitor(cfg, checkpoint_dir, frame);
    for (const auto& s : summaries)
        std::printf(
            "channel %-8s %zu steps, score %8.1f, correct %.1f%%, alerts %zu, failed "
            "deliveries %zu\n",
            s.channel.c_str(), s.steps, s.score, 100.0 * s.correct_rate, s.alerts_raised,
            s.deliveries_failed);
    return kExitOk;
}

int cmd_transfer(const std::string& config_path, const std::string& source_dir, bool reinit,
                 std::optional<std::uint64_t> seed) {
    const auto cfg = load_config(config_path, seed);
    return print_run_result(orchestrator::run_transfer(source_dir, cfg, reinit));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"predmon: forecast-driven multi-agent threshold monitoring"};
    app.require_subcommand(1);

    std::string config_path;
    std::string checkpoint_dir;
    std::string source_dir;
    std::string out_path;
    std::string profile = "default";
    std::optional<std::string> frame_csv;
    std::optional<std::uint64_t> seed;
    std::uint64_t gen_seed = 7;
    std::size_t rows = 3000;
    double noise = 0.02;
    bool reinit = false;

    auto* ingest = app.add_subcommand("ingest", "Validate and summarize a CSV frame");
    ingest->add_option("--config", config_path, "Run config JSON")->required();

    auto* gen = app.add_subcommand("gen-synthetic", "Emit a deterministic synthetic corpus");
    gen->add_option("--seed", gen_seed, "Generator seed");
    gen->add_option("--rows", rows, "Number of rows");
    gen->add_option("--out", out_path, "Output CSV path")->required();
    gen->add_option("--profile", profile, "Corpus profile: default|alt");
    gen->add_option("--noise", noise, "Noise sigma as a fraction of channel range");

    std::optional<std::string> export_forecast;
    auto* trainf = app.add_subcommand("train-forecaster", "Train only the forecaster");
    trainf->add_option("--config", config_path, "Run config JSON")->required();
    trainf->add_option("--seed", seed, "Override the config seed");
    trainf->add_option("--export-forecast", export_forecast,
                       "Write the rolling forecast as CSV to this path");

    auto* traina = app.add_subcommand("train-agents", "Full pipeline: forecaster + agents");
    traina->add_option("--config", config_path, "Run config JSON")->required();
    traina->add_option("--seed", seed, "Override the config seed");

    auto* eval = app.add_subcommand("evaluate", "Greedy evaluation from checkpoints");
    eval->add_option("--config", config_path, "Run config JSON")->required();
    eval->add_option("--checkpoint-dir", checkpoint_dir, "Directory with checkpoints")
        ->required();

    auto* mon = app.add_subcommand("monitor", "Greedy run with live alert dispatch");
    mon->add_option("--config", config_path, "Run config JSON")->required();
    mon->add_option("--checkpoint-dir", checkpoint_dir, "Directory with checkpoints")
        ->required();
    mon->add_option("--frame", frame_csv, "CSV frame to monitor (default: config data)");

    auto* trans = app.add_subcommand("transfer", "Retrain saved agents on a new domain");
    trans->add_option("--config", config_path, "Target run config JSON")->required();
    trans->add_option("--source-checkpoint-dir", source_dir, "Source checkpoints")
        ->required();
    trans->add_flag("--reinit-on-mismatch", reinit,
                    "Start fresh agents where shapes do not match");
    trans->add_option("--seed", seed, "Override the config seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help and friends
        app.exit(e);
        return kExitBadConfig;
    }

    try {
        if (ingest->parsed()) return cmd_ingest(config_path);
        if (gen->parsed()) return cmd_gen_synthetic(gen_seed, rows, out_path, profile, noise);
        if (trainf->parsed()) return cmd_train_forecaster(config_path, seed, export_forecast);
        if (traina->parsed()) return cmd_train_agents(config_path, seed);
        if (eval->parsed()) return cmd_evaluate(config_path, checkpoint_dir);
        if (mon->parsed()) return cmd_monitor(config_path, checkpoint_dir, frame_csv);
        if (trans->parsed()) return cmd_transfer(config_path, source_dir, reinit, seed);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitBadConfig;
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitPartialFailure;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "unexpected error: %s\n", e.what());
        return kExitPartialFailure;
    }
    return kExitBadConfig;
}

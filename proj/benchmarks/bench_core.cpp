#include <benchmark/benchmark.h>

#include "predmon/agent.hpp"
#include "predmon/environment.hpp"
#include "predmon/forecaster.hpp"
#include "predmon/neural.hpp"
#include "predmon/policy.hpp"
#include "predmon/rng.hpp"

using namespace predmon;

namespace {

neural::Matrix random_sequence(std::size_t rows, std::size_t cols, Rng& rng) {
    neural::Matrix m(rows, cols);
    for (double& v : m.data) v = rng.uniform(-1.0, 1.0);
    return m;
}

void BM_LstmForward(benchmark::State& state) {
    Rng rng(1);
    auto cell = neural::LstmCell::init(3, 32, rng);
    const auto seq = random_sequence(8, 3, rng);
    for (auto _ : state) {
        auto hidden = neural::lstm_forward(cell, seq, neural::Direction::Forward);
        benchmark::DoNotOptimize(hidden.data.data());
    }
}
BENCHMARK(BM_LstmForward);

void BM_ForecasterExampleGradient(benchmark::State& state) {
    forecaster::ForecasterConfig cfg;
    cfg.seed = 2;
    timeseries::NormalizationSpec spec;
    spec.shift = {0.0, 0.0, 0.0};
    spec.scale = {1.0, 1.0, 1.0};
    auto net = forecaster::ForecastNetwork::init(3, cfg, spec);
    Rng rng(3);
    const auto window = random_sequence(cfg.window, 3, rng);
    neural::Vec target(cfg.horizon * 3);
    for (double& v : target) v = rng.uniform(-1.0, 1.0);
    neural::Vec grads(net.parameter_count(), 0.0);
    for (auto _ : state) {
        std::fill(grads.begin(), grads.end(), 0.0);
        benchmark::DoNotOptimize(
            forecaster::accumulate_example_gradient(net, window, target, 1.0, grads));
    }
}
BENCHMARK(BM_ForecasterExampleGradient);

void BM_AdamStep(benchmark::State& state) {
    const std::size_t n = static_cast<std::size_t>(state.range(0));
    auto adam = neural::AdamState::for_parameter_count(n);
    neural::Vec params(n, 0.1);
    neural::Vec grads(n, 0.01);
    for (auto _ : state) {
        neural::adam_step(adam, params, grads);
        benchmark::DoNotOptimize(params.data());
    }
}
BENCHMARK(BM_AdamStep)->Arg(1 << 10)->Arg(1 << 14);

void BM_AgentReplay(benchmark::State& state) {
    agent::AgentConfig cfg;
    cfg.seed = 4;
    agent::DqnAgent dqn(1, 5, cfg);
    Rng rng(5);
    for (int i = 0; i < 512; ++i)
        dqn.memorize({{rng.uniform(-2.0, 2.0)},
                      static_cast<int>(rng.below(5)),
                      rng.uniform01() < 0.5 ? 1.0 : -1.0,
                      {rng.uniform(-2.0, 2.0)},
                      false});
    for (auto _ : state) benchmark::DoNotOptimize(dqn.replay(32));
}
BENCHMARK(BM_AgentReplay);

void BM_EnvironmentEpisode(benchmark::State& state) {
    Rng rng(6);
    std::vector<double> seq(300);
    for (double& v : seq) v = rng.uniform(40.0, 130.0);
    const auto table = policy::demo_table("hr");
    environment::MonitorEnv env(seq, table, 300);
    for (auto _ : state) {
        double value = env.reset();
        double score = 0.0;
        while (!env.done()) {
            const auto r = env.step(policy::correct_action(table, value));
            score += r.reward;
            value = r.next_state;
        }
        benchmark::DoNotOptimize(score);
    }
}
BENCHMARK(BM_EnvironmentEpisode);

void BM_CorrectAction(benchmark::State& state) {
    const auto table = policy::demo_table("hr");
    Rng rng(7);
    double v = 72.0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(policy::correct_action(table, v));
        v = 40.0 + (v * 31.0 + 7.0) * 0.001;
        if (v > 140.0) v -= 100.0;
    }
}
BENCHMARK(BM_CorrectAction);

}  // namespace

BENCHMARK_MAIN();

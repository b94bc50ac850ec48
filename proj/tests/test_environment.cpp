#include "predmon/environment.hpp"

#include <limits>

#include <doctest.h>

#include "predmon/errors.hpp"
#include "predmon/policy.hpp"
#include "predmon/rng.hpp"

using namespace predmon;
using environment::MonitorEnv;
using policy::Band;
using policy::ThresholdTable;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

ThresholdTable hr_table() {
    ThresholdTable t;
    t.channel = "hr";
    t.bands = {{-kInf, 60.0, 1, "low-team", 1},
               {60.0, 100.0, 0, "none", 0},
               {100.0, kInf, 2, "high-team", 2}};
    return t;
}

ThresholdTable random_table(Rng& rng) {
    const std::size_t k = 2 + rng.below(4);
    std::vector<double> cuts(k - 1);
    for (double& c : cuts) c = rng.uniform(-50.0, 50.0);
    std::sort(cuts.begin(), cuts.end());
    std::vector<int> ids(k);
    for (std::size_t i = 0; i < k; ++i) ids[i] = static_cast<int>(i);
    rng.shuffle(ids);
    const std::size_t normal = rng.below(k);
    ThresholdTable t;
    t.channel = "random";
    for (std::size_t i = 0; i < k; ++i) {
        Band b;
        b.lo = i == 0 ? -kInf : cuts[i - 1];
        b.hi = i == k - 1 ? kInf : cuts[i];
        b.action = ids[i];
        b.severity = i == normal ? 0 : 1;
        b.team = b.severity == 0 ? "none" : "team";
        t.bands.push_back(b);
    }
    return t;
}

}  // namespace

TEST_CASE("reset returns the first observation and restores the budget") {
    MonitorEnv env({70.0, 72.0, 130.0}, hr_table(), 300);
    CHECK(env.reset() == 70.0);
    CHECK(env.steps_remaining() == 300);
    CHECK_FALSE(env.done());

    // Run the episode out, then reset again; the initial state is identical.
    while (!env.done()) env.step(0);
    CHECK(env.reset() == 70.0);
    CHECK(env.steps_remaining() == 300);
}

TEST_CASE("empty sequence cannot start an episode") {
    MonitorEnv env({}, hr_table(), 10);
    CHECK_THROWS_AS(env.reset(), EmptySequence);
}

TEST_CASE("step rewards the matching band and penalizes the rest") {
    MonitorEnv env({72.0, 72.0, 72.0}, hr_table(), 10);
    env.reset();
    const auto good = env.step(0);
    CHECK(good.reward == 1.0);
    CHECK(good.correct_action == 0);
    CHECK(good.team == "none");

    const auto bad = env.step(2);
    CHECK(bad.reward == -1.0);
    CHECK(bad.correct_action == 0);
    CHECK(bad.team == "high-team");
    CHECK(bad.severity == 2);
}

TEST_CASE("finished episodes reject further steps and bad actions throw") {
    MonitorEnv env({70.0, 71.0}, hr_table(), 5);
    env.reset();
    env.step(0);
    const auto last = env.step(0);
    CHECK(last.done);
    CHECK_THROWS_AS(env.step(0), EpisodeFinished);

    env.reset();
    CHECK_THROWS_AS(env.step(3), InvalidAction);
    CHECK_THROWS_AS(env.step(-1), InvalidAction);
}

TEST_CASE("episode_max_reward is r+ times min(N, sequence length)") {
    MonitorEnv long_env(std::vector<double>(400, 70.0), hr_table(), 300);
    CHECK(long_env.episode_max_reward() == 300.0);

    MonitorEnv short_env(std::vector<double>(10, 70.0), hr_table(), 300);
    CHECK(short_env.episode_max_reward() == 10.0);

    MonitorEnv scaled(std::vector<double>(9, 70.0), hr_table(), 5, 3.0, 1.0);
    CHECK(scaled.episode_max_reward() == 15.0);
}

TEST_CASE("reward dichotomy and episode length over random environments") {
    Rng rng(2025);
    for (int trial = 0; trial < 50; ++trial) {
        const auto table = random_table(rng);
        const std::size_t len = 1 + rng.below(60);
        const std::size_t budget = 1 + rng.below(80);
        std::vector<double> seq(len);
        for (double& v : seq) v = rng.uniform(-80.0, 80.0);
        const double rplus = 0.5 + rng.uniform01() * 2.0;
        const double rminus = 0.5 + rng.uniform01() * 2.0;
        MonitorEnv env(seq, table, budget, rplus, rminus);

        env.reset();
        std::size_t steps = 0;
        while (!env.done()) {
            const int a = static_cast<int>(rng.below(table.bands.size()));
            const auto r = env.step(a);
            CHECK((r.reward == rplus || r.reward == -rminus));
            ++steps;
        }
        CHECK(steps == std::min(budget, len));
    }
}

TEST_CASE("oracle play reaches exactly the episode maximum") {
    Rng rng(99);
    for (int trial = 0; trial < 100; ++trial) {
        const auto table = random_table(rng);
        const std::size_t len = 1 + rng.below(50);
        std::vector<double> seq(len);
        for (double& v : seq) v = rng.uniform(-80.0, 80.0);
        MonitorEnv env(seq, table, 40);

        double state = env.reset();
        double total = 0.0;
        while (!env.done()) {
            const auto r = env.step(policy::correct_action(table, state));
            total += r.reward;
            state = r.next_state;
        }
        CHECK(total == env.episode_max_reward());
    }
}

TEST_CASE("environment is deterministic") {
    const std::vector<double> seq = {70, 105, 58, 72, 99, 101};
    const std::vector<int> actions = {0, 2, 1, 0, 0, 2};
    auto run = [&]() {
        MonitorEnv env(seq, hr_table(), 6);
        env.reset();
        std::vector<double> rewards;
        for (int a : actions) rewards.push_back(env.step(a).reward);
        return rewards;
    };
    CHECK(run() == run());
}

#pragma once

// Five-state, two-action deterministic chain used to verify Q-learning
// against brute-force value iteration. Action 0 moves left, action 1 moves
// right, positions clamp at the ends. Reward depends only on the arrival
// state: +1.0 for reaching (or staying at) state 4, +0.9 for state 0, else 0.
// With gamma = 0.9 the optimal policy is [left, left, right, right, right]
// with a margin of 0.9 in every state, so function approximation noise will
// not flip it.

#include <cstddef>
#include <utility>
#include <vector>

namespace testsupport {

struct ToyMdp {
    static constexpr std::size_t kStates = 5;
    static constexpr std::size_t kActions = 2;

    static std::pair<std::size_t, double> step(std::size_t state, std::size_t action) {
        const std::size_t next =
            action == 0 ? (state == 0 ? 0 : state - 1)
                        : (state == kStates - 1 ? kStates - 1 : state + 1);
        const double reward = next == kStates - 1 ? 1.0 : (next == 0 ? 0.9 : 0.0);
        return {next, reward};
    }
};

/// Independent oracle: brute-force value iteration over the full state space.
inline std::vector<std::size_t> value_iteration_policy(double gamma,
                                                       int sweeps = 10000) {
    std::vector<double> value(ToyMdp::kStates, 0.0);
    for (int i = 0; i < sweeps; ++i) {
        std::vector<double> next_value(ToyMdp::kStates);
        for (std::size_t s = 0; s < ToyMdp::kStates; ++s) {
            double best = -1e300;
            for (std::size_t a = 0; a < ToyMdp::kActions; ++a) {
                const auto [sn, r] = ToyMdp::step(s, a);
                best = std::max(best, r + gamma * value[sn]);
            }
            next_value[s] = best;
        }
        value = next_value;
    }
    std::vector<std::size_t> policy(ToyMdp::kStates);
    for (std::size_t s = 0; s < ToyMdp::kStates; ++s) {
        double best = -1e300;
        std::size_t best_action = 0;
        for (std::size_t a = 0; a < ToyMdp::kActions; ++a) {
            const auto [sn, r] = ToyMdp::step(s, a);
            const double q = r + gamma * value[sn];
            if (q > best) {
                best = q;
                best_action = a;
            }
        }
        policy[s] = best_action;
    }
    return policy;
}

}  // namespace testsupport

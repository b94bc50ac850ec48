#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "predmon/policy.hpp"

namespace predmon::environment {

/// Outcome of one environment step.
struct StepResult {
    double next_state = 0.0;
    double reward = 0.0;
    bool done = false;
    int correct_action = 0;   // what the table says the action should have been
    std::string team;         // team label of the agent's chosen action
    int severity = 0;         // severity of the agent's chosen action
    double observed_value = 0.0;  // the value the action was judged against
};

/// Single-channel monitoring environment. The state sequence is a fixed walk
/// (forecast values or raw observations); actions never alter the trajectory,
/// they only earn +reward when they match the threshold table's band for the
/// current value and -penalty otherwise. An episode ends after monitor_length
/// steps or when the sequence is exhausted, whichever comes first.
class MonitorEnv {
public:
    MonitorEnv(std::vector<double> sequence, policy::ThresholdTable table,
               std::size_t monitor_length, double reward_magnitude = 1.0,
               double penalty_magnitude = 1.0);

    /// Rewind to the start of the sequence and restore the step budget.
    /// Returns the first observation. Throws EmptySequence if there is none.
    double reset();

    /// Judge an action against the current value, advance the cursor,
    /// decrement the step budget. Throws EpisodeFinished after done,
    /// InvalidAction for ids outside the action space.
    StepResult step(int action);

    /// Perfect-play cumulative reward: reward_magnitude * min(monitor_length,
    /// sequence length).
    double episode_max_reward() const;

    bool done() const { return done_; }
    std::size_t action_count() const { return table_.action_count(); }
    std::size_t sequence_length() const { return sequence_.size(); }
    std::size_t steps_remaining() const { return remaining_; }
    const policy::ThresholdTable& table() const { return table_; }
    double current_value() const;

private:
    std::vector<double> sequence_;
    policy::ThresholdTable table_;
    std::size_t monitor_length_;
    double reward_magnitude_;
    double penalty_magnitude_;

    std::size_t cursor_ = 0;
    std::size_t remaining_ = 0;
    bool done_ = true;  // must reset() before stepping
};

}  // namespace predmon::environment

#include "predmon/environment.hpp"

#include <cmath>

#include "predmon/errors.hpp"

namespace predmon::environment {

MonitorEnv::MonitorEnv(std::vector<double> sequence, policy::ThresholdTable table,
                       std::size_t monitor_length, double reward_magnitude,
                       double penalty_magnitude)
    : sequence_(std::move(sequence)),
      table_(std::move(table)),
      monitor_length_(monitor_length),
      reward_magnitude_(reward_magnitude),
      penalty_magnitude_(penalty_magnitude) {
    policy::require_valid(table_);
    if (monitor_length_ == 0) throw ConfigError("monitor length must be positive");
    for (double v : sequence_)
        if (!std::isfinite(v)) throw NonFiniteValue("environment sequence has a non-finite value");
}

double MonitorEnv::reset() {
    if (sequence_.empty()) throw EmptySequence("environment sequence is empty");
    cursor_ = 0;
    remaining_ = monitor_length_;
    done_ = false;
    return sequence_[0];
}

double MonitorEnv::current_value() const {
    if (done_) throw EpisodeFinished("no current value after episode end");
    return sequence_[cursor_];
}

StepResult MonitorEnv::step(int action) {
    if (done_) throw EpisodeFinished("step() called on a finished episode");
    if (action < 0 || static_cast<std::size_t>(action) >= table_.action_count())
        throw InvalidAction("action " + std::to_string(action) + " outside 0.." +
                            std::to_string(table_.action_count() - 1));

    const double value = sequence_[cursor_];
    const int right = policy::correct_action(table_, value);
    const auto& chosen = table_.band_for_action(action);

    StepResult result;
    result.observed_value = value;
    result.correct_action = right;
    result.reward = (action == right) ? reward_magnitude_ : -penalty_magnitude_;
    result.team = chosen.team;
    result.severity = chosen.severity;

    ++cursor_;
    --remaining_;
    done_ = (remaining_ == 0) || (cursor_ >= sequence_.size());
    result.done = done_;
    result.next_state = (cursor_ < sequence_.size()) ? sequence_[cursor_] : sequence_.back();
    return result;
}

double MonitorEnv::episode_max_reward() const {
    const std::size_t steps = std::min(monitor_length_, sequence_.size());
    return reward_magnitude_ * static_cast<double>(steps);
}

}  // namespace predmon::environment

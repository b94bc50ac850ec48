#pragma once

#include <cstdint>
#include <vector>

#include "predmon/neural.hpp"
#include "predmon/rng.hpp"

namespace predmon::agent {

/// One experience tuple (s, a, r, s', done).
struct Transition {
    neural::Vec state;
    int action = 0;
    double reward = 0.0;
    neural::Vec next_state;
    bool done = false;
};

/// Bounded FIFO of transitions; oldest entries are evicted first.
class ReplayMemory {
public:
    explicit ReplayMemory(std::size_t capacity);

    void push(Transition t);
    std::size_t size() const { return buffer_.size(); }
    std::size_t capacity() const { return capacity_; }

    /// Element i in age order: 0 is the oldest surviving transition.
    const Transition& at(std::size_t i) const;

    /// Distinct indices drawn uniformly without replacement.
    std::vector<std::size_t> sample_indices(std::size_t count, Rng& rng) const;

private:
    std::vector<Transition> buffer_;
    std::size_t capacity_;
    std::size_t next_ = 0;  // write position once full
};

/// Three-layer Q-function approximator: state in, one output node per
/// action. hidden_size 0 collapses it to a single linear layer, which the
/// one-hot toy-problem tests rely on.
///
/// Flat parameter order: hidden weights, hidden biases (when present), then
/// output weights, output biases.
struct QNetwork {
    neural::DenseLayer hidden;  // relu
    neural::DenseLayer output;  // identity
    bool has_hidden = true;
    std::size_t state_dim = 0;
    std::size_t action_count = 0;

    static QNetwork init(std::size_t state_dim, std::size_t hidden_size,
                         std::size_t action_count, Rng& rng);

    neural::Vec predict(const neural::Vec& state) const;
    std::size_t parameter_count() const;
    std::vector<double> flatten_parameters() const;
    void unflatten_parameters(std::span<const double> flat);
};

struct AgentConfig {
    double gamma = 0.95;
    double epsilon = 1.0;
    double epsilon_min = 0.01;
    double epsilon_decay = 0.995;
    std::size_t batch_size = 32;
    double learning_rate = 0.005;
    std::size_t hidden = 24;
    std::size_t replay_capacity = 2000;
    std::uint64_t seed = 0;

    void validate() const;  // throws ConfigError
};

/// Epsilon schedule after n replay calls: the decay recurrence
/// e <- max(epsilon_min, e * decay) iterated n times, which equals
/// max(epsilon_min, epsilon0 * decay^n). Iterated form so the result is
/// bit-identical to what an agent reaches.
double decay_schedule(double epsilon0, double decay, std::size_t n, double epsilon_min);

/// DQN learning agent: epsilon-greedy over Q-network outputs, replay memory,
/// Bellman targets from the live network (no separate target network), one
/// Adam step per replay call followed by one epsilon decay.
class DqnAgent {
public:
    /// Captured inputs/outputs of the last replay call, for target audits.
    struct ReplayTrace {
        std::vector<Transition> batch;
        std::vector<neural::Vec> q_before;  // Q(s_t) before the update
        std::vector<neural::Vec> targets;   // training target vectors
    };

    DqnAgent(std::size_t state_dim, std::size_t action_count, AgentConfig config);

    /// Epsilon-greedy: uniform random with probability epsilon, otherwise
    /// the greedy action.
    int act(const neural::Vec& state);

    /// Argmax over Q outputs; ties break to the lowest action id.
    int greedy_action(const neural::Vec& state) const;

    /// Append to replay memory. Throws InvalidAction / NonFiniteValue /
    /// DimensionMismatch on malformed transitions.
    void memorize(Transition transition);

    /// Sample a batch, regress Q(s_t) onto the Bellman targets with one Adam
    /// step, decay epsilon. Returns the batch loss.
    /// Throws InsufficientMemory when the memory holds fewer than batch_size.
    double replay(std::size_t batch_size);

    double epsilon() const { return epsilon_; }
    void set_epsilon(double e) { epsilon_ = e; }
    std::size_t replay_calls() const { return replay_calls_; }
    std::size_t action_count() const { return net_.action_count; }
    std::size_t state_dim() const { return net_.state_dim; }
    const AgentConfig& config() const { return config_; }

    const ReplayMemory& memory() const { return memory_; }
    const QNetwork& network() const { return net_; }
    QNetwork& network() { return net_; }
    neural::AdamState& optimizer_state() { return adam_; }

    /// Replace the Q-network with pretrained weights (transfer learning).
    /// Shapes must match; throws ShapeMismatch otherwise.
    void load_network(const QNetwork& source);

    void enable_replay_trace(bool on) { trace_enabled_ = on; }
    const ReplayTrace& last_replay_trace() const { return trace_; }

private:
    AgentConfig config_;
    QNetwork net_;
    ReplayMemory memory_;
    Rng rng_;
    double epsilon_;
    neural::AdamState adam_;
    std::size_t replay_calls_ = 0;
    bool trace_enabled_ = false;
    ReplayTrace trace_;
};

/// Tabular Q value update (verification aid; the product path is the DQN):
/// Q(s,a) <- (1-alpha) Q(s,a) + alpha (r + gamma max_a' Q(s',a')).
using QTable = std::vector<std::vector<double>>;
void tabular_q_update(QTable& table, std::size_t state, std::size_t action, double reward,
                      std::size_t next_state, double alpha, double gamma);

}  // namespace predmon::agent

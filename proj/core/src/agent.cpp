#include "predmon/agent.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "predmon/errors.hpp"

namespace predmon::agent {

using neural::Vec;

ReplayMemory::ReplayMemory(std::size_t capacity) : capacity_(capacity) {
    if (capacity_ == 0) throw ConfigError("replay capacity must be positive");
    buffer_.reserve(capacity_);
}

void ReplayMemory::push(Transition t) {
    if (buffer_.size() < capacity_) {
        buffer_.push_back(std::move(t));
    } else {
        buffer_[next_] = std::move(t);
        next_ = (next_ + 1) % capacity_;
    }
}

const Transition& ReplayMemory::at(std::size_t i) const {
    if (i >= buffer_.size()) throw DimensionMismatch("replay memory index out of range");
    if (buffer_.size() < capacity_) return buffer_[i];
    return buffer_[(next_ + i) % capacity_];
}

std::vector<std::size_t> ReplayMemory::sample_indices(std::size_t count, Rng& rng) const {
    if (count > buffer_.size())
        throw InsufficientMemory("cannot sample " + std::to_string(count) + " of " +
                                 std::to_string(buffer_.size()) + " transitions");
    std::vector<std::size_t> pool(buffer_.size());
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    // Partial Fisher-Yates: first `count` entries become the sample.
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.below(pool.size() - i));
        std::swap(pool[i], pool[j]);
    }
    pool.resize(count);
    return pool;
}

QNetwork QNetwork::init(std::size_t state_dim, std::size_t hidden_size,
                        std::size_t action_count, Rng& rng) {
    if (state_dim == 0 || action_count == 0)
        throw ConfigError("q-network needs positive state and action dims");
    QNetwork net;
    net.state_dim = state_dim;
    net.action_count = action_count;
    net.has_hidden = hidden_size > 0;
    if (net.has_hidden) {
        net.hidden =
            neural::DenseLayer::init(state_dim, hidden_size, neural::Activation::Relu, rng);
        net.output = neural::DenseLayer::init(hidden_size, action_count,
                                              neural::Activation::Identity, rng);
    } else {
        net.output = neural::DenseLayer::init(state_dim, action_count,
                                              neural::Activation::Identity, rng);
    }
    return net;
}

Vec QNetwork::predict(const Vec& state) const {
    if (has_hidden) return neural::dense_forward(output, neural::dense_forward(hidden, state));
    return neural::dense_forward(output, state);
}

std::size_t QNetwork::parameter_count() const {
    std::size_t n = output.parameter_count();
    if (has_hidden) n += hidden.parameter_count();
    return n;
}

std::vector<double> QNetwork::flatten_parameters() const {
    std::vector<double> flat;
    flat.reserve(parameter_count());
    auto push = [&flat](const Vec& v) { flat.insert(flat.end(), v.begin(), v.end()); };
    if (has_hidden) {
        push(hidden.weights.data);
        push(hidden.biases);
    }
    push(output.weights.data);
    push(output.biases);
    return flat;
}

void QNetwork::unflatten_parameters(std::span<const double> flat) {
    if (flat.size() != parameter_count())
        throw DimensionMismatch("flat parameter vector has wrong length");
    std::size_t k = 0;
    auto pull = [&](Vec& v) {
        std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(k), v.size(), v.begin());
        k += v.size();
    };
    if (has_hidden) {
        pull(hidden.weights.data);
        pull(hidden.biases);
    }
    pull(output.weights.data);
    pull(output.biases);
}

void AgentConfig::validate() const {
    if (gamma < 0.0 || gamma > 1.0) throw ConfigError("gamma must be in [0, 1]");
    if (epsilon < 0.0 || epsilon > 1.0) throw ConfigError("epsilon must be in [0, 1]");
    if (epsilon_min < 0.0 || epsilon_min > epsilon)
        throw ConfigError("epsilon_min must be in [0, epsilon]");
    if (epsilon_decay <= 0.0 || epsilon_decay > 1.0)
        throw ConfigError("epsilon_decay must be in (0, 1]");
    if (batch_size == 0) throw ConfigError("batch_size must be positive");
    if (learning_rate <= 0.0) throw ConfigError("learning_rate must be positive");
    if (replay_capacity == 0) throw ConfigError("replay_capacity must be positive");
}

double decay_schedule(double epsilon0, double decay, std::size_t n, double epsilon_min) {
    double e = epsilon0;
    for (std::size_t i = 0; i < n; ++i) e = std::max(epsilon_min, e * decay);
    return e;
}

DqnAgent::DqnAgent(std::size_t state_dim, std::size_t action_count, AgentConfig config)
    : config_(config),
      net_(),
      memory_(config.replay_capacity),
      rng_(Rng::stream(config.seed, "agent")),
      epsilon_(config.epsilon),
      adam_(neural::AdamState::for_parameter_count(0)) {
    config_.validate();
    net_ = QNetwork::init(state_dim, config_.hidden, action_count, rng_);
    adam_ = neural::AdamState::for_parameter_count(net_.parameter_count(),
                                                   {.learning_rate = config_.learning_rate});
}

int DqnAgent::greedy_action(const Vec& state) const {
    const Vec q = net_.predict(state);
    std::size_t best = 0;
    for (std::size_t a = 1; a < q.size(); ++a)
        if (q[a] > q[best]) best = a;
    return static_cast<int>(best);
}

int DqnAgent::act(const Vec& state) {
    if (rng_.uniform01() < epsilon_)
        return static_cast<int>(rng_.below(net_.action_count));
    return greedy_action(state);
}

void DqnAgent::memorize(Transition transition) {
    if (transition.action < 0 ||
        static_cast<std::size_t>(transition.action) >= net_.action_count)
        throw InvalidAction("transition action " + std::to_string(transition.action) +
                            " outside 0.." + std::to_string(net_.action_count - 1));
    if (!std::isfinite(transition.reward))
        throw NonFiniteValue("transition reward is not finite");
    if (transition.state.size() != net_.state_dim ||
        transition.next_state.size() != net_.state_dim)
        throw DimensionMismatch("transition state width does not match agent");
    memory_.push(std::move(transition));
}

double DqnAgent::replay(std::size_t batch_size) {
    if (batch_size == 0) throw ConfigError("replay batch size must be positive");
    if (memory_.size() < batch_size)
        throw InsufficientMemory("memory holds " + std::to_string(memory_.size()) +
                                 " transitions, batch needs " + std::to_string(batch_size));

    const auto indices = memory_.sample_indices(batch_size, rng_);
    if (trace_enabled_) {
        trace_.batch.clear();
        trace_.q_before.clear();
        trace_.targets.clear();
    }

    neural::DenseGrads grad_hidden = neural::DenseGrads::zeros_like(net_.hidden);
    neural::DenseGrads grad_output = neural::DenseGrads::zeros_like(net_.output);
    const double inv_batch = 1.0 / static_cast<double>(batch_size);
    double loss_sum = 0.0;

    for (const std::size_t idx : indices) {
        const Transition& t = memory_.at(idx);

        neural::DenseTrace hidden_trace;
        neural::DenseTrace output_trace;
        Vec features = t.state;
        if (net_.has_hidden)
            features = neural::dense_forward(net_.hidden, t.state, &hidden_trace);
        const Vec q = neural::dense_forward(net_.output, features, &output_trace);

        Vec target = q;
        if (t.done) {
            target[static_cast<std::size_t>(t.action)] = t.reward;
        } else {
            const Vec q_next = net_.predict(t.next_state);
            const double best_next = *std::max_element(q_next.begin(), q_next.end());
            target[static_cast<std::size_t>(t.action)] =
                t.reward + config_.gamma * best_next;
        }

        loss_sum += neural::mse_loss(q, target);
        Vec dq = neural::mse_gradient(q, target);
        for (double& g : dq) g *= inv_batch;
        const Vec dfeatures = neural::dense_backward(net_.output, output_trace, dq, grad_output);
        if (net_.has_hidden)
            neural::dense_backward(net_.hidden, hidden_trace, dfeatures, grad_hidden);

        if (trace_enabled_) {
            trace_.batch.push_back(t);
            trace_.q_before.push_back(q);
            trace_.targets.push_back(std::move(target));
        }
    }

    Vec flat_params = net_.flatten_parameters();
    Vec flat_grads;
    flat_grads.reserve(flat_params.size());
    auto push = [&flat_grads](const Vec& v) {
        flat_grads.insert(flat_grads.end(), v.begin(), v.end());
    };
    if (net_.has_hidden) {
        push(grad_hidden.weights.data);
        push(grad_hidden.biases);
    }
    push(grad_output.weights.data);
    push(grad_output.biases);

    neural::adam_step(adam_, flat_params, flat_grads);
    net_.unflatten_parameters(flat_params);

    ++replay_calls_;
    epsilon_ = std::max(config_.epsilon_min, epsilon_ * config_.epsilon_decay);
    return loss_sum * inv_batch;
}

void DqnAgent::load_network(const QNetwork& source) {
    if (source.state_dim != net_.state_dim || source.action_count != net_.action_count ||
        source.has_hidden != net_.has_hidden ||
        (net_.has_hidden && source.hidden.output_dim() != net_.hidden.output_dim()))
        throw ShapeMismatch("source q-network shape (" + std::to_string(source.state_dim) +
                            " -> " + std::to_string(source.action_count) +
                            ") does not match agent (" + std::to_string(net_.state_dim) +
                            " -> " + std::to_string(net_.action_count) + ")");
    net_ = source;
}

void tabular_q_update(QTable& table, std::size_t state, std::size_t action, double reward,
                      std::size_t next_state, double alpha, double gamma) {
    if (state >= table.size() || next_state >= table.size())
        throw DimensionMismatch("state index outside q-table");
    if (action >= table[state].size())
        throw InvalidAction("action index outside q-table row");
    if (alpha < 0.0 || alpha > 1.0) throw ConfigError("alpha must be in [0, 1]");
    if (gamma < 0.0 || gamma > 1.0) throw ConfigError("gamma must be in [0, 1]");
    const double best_next =
        *std::max_element(table[next_state].begin(), table[next_state].end());
    table[state][action] =
        (1.0 - alpha) * table[state][action] + alpha * (reward + gamma * best_next);
}

}  // namespace predmon::agent

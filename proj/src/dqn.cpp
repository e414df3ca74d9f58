#include "roommem/dqn.hpp"

#include <chrono>
#include <cmath>
#include <iomanip>
#include <ostream>

namespace roommem {

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw ConfigError("replay capacity must be >= 1");
    items_.reserve(std::min<std::size_t>(capacity, 1 << 20));
}

void ReplayBuffer::push(Transition t) {
    if (t.reward != 0 && t.reward != 1) throw Error("replay: reward must be 0 or 1");
    if (items_.size() < capacity_) {
        items_.push_back(std::move(t));
        return;
    }
    items_[head_] = std::move(t);
    head_ = (head_ + 1) % capacity_;
}

const Transition& ReplayBuffer::at(std::size_t i) const {
    if (i >= items_.size()) throw Error("replay: index out of range");
    return items_[(head_ + i) % items_.size()];
}

std::vector<const Transition*> ReplayBuffer::sample(std::size_t n, Rng& rng) const {
    if (items_.empty()) throw Error("replay: sampling from an empty buffer");
    std::vector<const Transition*> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(&items_[rng.below(items_.size())]);
    return out;
}

void TrainConfig::validate() const {
    if (epochs < 1 || batch_size < 1 || replay_capacity < 1 || warm_start < 1 ||
        epsilon_last_step < 1 || target_sync < 1 || eval_iterations < 1 || runs < 1) {
        throw ConfigError("training counts must all be >= 1");
    }
    if (warm_start > replay_capacity) throw ConfigError("warm_start exceeds replay capacity");
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw ConfigError("gamma must be in [0, 1]");
    if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
    for (double e : {epsilon_start, epsilon_end}) {
        if (!(e >= 0.0 && e <= 1.0)) throw ConfigError("epsilon values must be in [0, 1]");
    }
    if (dims.embedding_dim < 1 || dims.hidden_dim < 1 || dims.lstm_layers < 1) {
        throw ConfigError("network dimensions must be positive");
    }
}

TrainConfig TrainConfig::paper() { return {}; }

TrainConfig TrainConfig::desk() {
    TrainConfig c;
    c.epochs = 4;
    c.batch_size = 128;
    c.replay_capacity = 16 * 128;
    c.warm_start = 16 * 128;
    c.epsilon_last_step = 128 * 4;
    return c;
}

double epsilon_at(std::int64_t step, const TrainConfig& config) {
    if (step < 0) throw Error("epsilon_at: negative step");
    if (step >= config.epsilon_last_step) return config.epsilon_end;
    const double frac = static_cast<double>(step) / config.epsilon_last_step;
    return config.epsilon_start + (config.epsilon_end - config.epsilon_start) * frac;
}

Real td_loss(std::span<const Transition* const> batch, QNetwork& online, const QNetwork& target,
             double gamma) {
    if (batch.empty()) throw Error("td_loss: empty batch");
    const auto n = batch.size();
    std::vector<EncodedState> states, next_states;
    states.reserve(n);
    next_states.reserve(n);
    for (const auto* t : batch) {
        states.push_back(t->state);
        next_states.push_back(t->next_state);
    }
    const nn::Matrix q_next = target.forward(next_states);
    QNetwork::Cache cache;
    const nn::Matrix q = online.forward(states, &cache);

    nn::Matrix dq = nn::Matrix::Zero(kNumActions, static_cast<Eigen::Index>(n));
    Real loss = 0;
    const Real scale = Real(1) / static_cast<Real>(n);
    for (std::size_t b = 0; b < n; ++b) {
        const auto& t = *batch[b];
        const auto col = static_cast<Eigen::Index>(b);
        Real y = static_cast<Real>(t.reward);
        if (!t.done) y += static_cast<Real>(gamma) * q_next.col(col).maxCoeff();
        const auto a = static_cast<Eigen::Index>(t.action);
        loss += nn::huber_loss(q(a, col), y);
        dq(a, col) = nn::huber_grad(q(a, col), y) * scale;
    }
    loss *= scale;
    if (!std::isfinite(loss)) throw Error("td_loss: non-finite loss");
    online.backward(cache, dq);
    return loss;
}

void write_epoch_log(std::ostream& out, const std::vector<EpochLog>& log) {
    out << "epoch,train_loss_mean,val_reward_mean,val_reward_std,epsilon_end,wall_seconds\n";
    out << std::setprecision(10);
    for (const auto& e : log) {
        out << e.epoch << ',' << e.train_loss_mean << ',' << e.val_reward_mean << ','
            << e.val_reward_std << ',' << e.epsilon_end << ',' << std::fixed
            << std::setprecision(3) << e.wall_seconds << std::defaultfloat
            << std::setprecision(10) << '\n';
    }
}

std::uint64_t validation_seed(std::uint64_t seed) { return mix_seed(seed, 0x7a1); }
std::uint64_t test_seed(std::uint64_t seed) { return mix_seed(seed, 0x7e57); }

namespace {

// One agent episode that reports each (s, a, r, s', done) as it completes.
template <class Choose, class OnTransition>
void transition_episode(RoomEnv& env, Variant variant, const Capacities& capacities,
                        const Vocabulary& vocab, Choose&& choose, OnTransition&& on_transition) {
    auto [observation, question] = env.reset();
    MemoryState memory(1, capacities.episodic, capacities.semantic);
    if (variant == Variant::pretrained) prefill_semantic(memory.semantic, env.kb());
    observe(memory.short_term, observation);
    EncodedState state = encode_state(memory, vocab);
    for (;;) {
        const Action action = choose(state);
        apply_action(memory, action);
        const auto outcome =
            env.step(answer_of(retrieve(question, memory.episodic, memory.semantic)));
        if (!outcome.done) {
            question = *outcome.question;
            observe(memory.short_term, *outcome.observation);
        }
        EncodedState next = encode_state(memory, vocab);
        on_transition(Transition{std::move(state), action, outcome.reward, next, outcome.done});
        if (outcome.done) return;
        state = std::move(next);
    }
}

}  // namespace

RewardStats evaluate_network(const QNetwork& net, const Vocabulary& vocab,
                             const EnvConfig& env_config, Variant variant,
                             const Capacities& capacities, int n_iterations, std::uint64_t seed) {
    return evaluate([&](std::uint64_t) { return std::make_unique<GreedyQPolicy>(net, vocab); },
                    env_config, variant, capacities, n_iterations, seed);
}

DqnLearner::DqnLearner(int vocab_size, const TrainConfig& config, std::uint64_t seed)
    : config_(config),
      online_(vocab_size, config.dims, mix_seed(seed, 0x3e7)),
      target_(online_),
      replay_(static_cast<std::size_t>(config.replay_capacity)),
      action_rng_(mix_seed(seed, 0xac7)),
      sample_rng_(mix_seed(seed, 0x5a3)) {
    config_.validate();
    adam_ = nn::Adam(online_.parameters(), nn::AdamOptions{static_cast<Real>(config.learning_rate)});
}

Action DqnLearner::random_action() { return static_cast<Action>(action_rng_.below(kNumActions)); }

Action DqnLearner::act(const EncodedState& state, double epsilon) {
    if (action_rng_.uniform() < epsilon) return random_action();
    return greedy_action(online_.q_values(state));
}

Real DqnLearner::learn() {
    const auto batch = replay_.sample(static_cast<std::size_t>(config_.batch_size), sample_rng_);
    const Real loss = td_loss(batch, online_, target_, config_.gamma);
    adam_.step();
    if (++optimizer_steps_ % config_.target_sync == 0) target_ = online_;
    return loss;
}

TrainResult train(const EnvConfig& env_config, Variant variant, const Capacities& capacities,
                  const TrainConfig& train_config, std::uint64_t seed,
                  const EpochCallback& on_epoch) {
    train_config.validate();
    env_config.validate();
    using Clock = std::chrono::steady_clock;

    const RoomEnv prototype(env_config);
    const auto vocab = vocabulary_for(prototype);
    DqnLearner learner(vocab.size(), train_config, seed);
    const auto train_stream = mix_seed(seed, 0x7a0);
    std::uint64_t episode_counter = 0;
    auto next_env = [&] {
        EnvConfig c = env_config;
        c.seed = mix_seed(train_stream, episode_counter++);
        return RoomEnv(c, prototype.kb());
    };

    const auto warm = static_cast<std::size_t>(train_config.warm_start);
    while (learner.replay().size() < warm) {
        auto env = next_env();
        transition_episode(
            env, variant, capacities, vocab,
            [&](const EncodedState&) { return learner.random_action(); },
            [&](Transition&& t) {
                if (learner.replay().size() < warm) learner.remember(std::move(t));
            });
    }

    TrainResult result;
    result.vocab = vocab;
    double best_score = -1.0;
    std::int64_t global_step = 0;
    for (int epoch = 0; epoch < train_config.epochs; ++epoch) {
        const auto start = Clock::now();
        double loss_sum = 0.0;
        int loss_count = 0;
        double epsilon = epsilon_at(global_step, train_config);
        auto env = next_env();
        transition_episode(
            env, variant, capacities, vocab,
            [&](const EncodedState& s) {
                epsilon = epsilon_at(global_step++, train_config);
                return learner.act(s, epsilon);
            },
            [&](Transition&& t) {
                learner.remember(std::move(t));
                loss_sum += learner.learn();
                ++loss_count;
            });

        const auto val = evaluate_network(learner.online(), vocab, env_config, variant, capacities,
                                          train_config.eval_iterations, validation_seed(seed));
        EpochLog entry;
        entry.epoch = epoch;
        entry.train_loss_mean = loss_count ? loss_sum / loss_count : 0.0;
        entry.val_reward_mean = val.mean;
        entry.val_reward_std = val.std;
        entry.epsilon_end = epsilon;
        entry.wall_seconds = std::chrono::duration<double>(Clock::now() - start).count();
        result.log.push_back(entry);
        if (val.mean > best_score) {
            best_score = val.mean;
            result.best = learner.online();
            result.best_epoch = epoch;
        }
        if (on_epoch) on_epoch(entry);
    }
    return result;
}

}  // namespace roommem

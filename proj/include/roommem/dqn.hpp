#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "roommem/policies.hpp"

namespace roommem {

// States are kept tokenized; encoding is a pure function of the symbolic
// memories, so nothing is lost.
struct Transition {
    EncodedState state;
    Action action = Action::forget;
    int reward = 0;
    EncodedState next_state;
    bool done = false;
};

// Fixed-capacity FIFO ring with uniform sampling (with replacement).
class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity);

    void push(Transition t);
    std::vector<const Transition*> sample(std::size_t n, Rng& rng) const;

    std::size_t size() const { return items_.size(); }
    std::size_t capacity() const { return capacity_; }
    // Oldest first.
    const Transition& at(std::size_t i) const;

private:
    std::size_t capacity_;
    std::size_t head_ = 0;
    std::vector<Transition> items_;
};

struct TrainConfig {
    int epochs = 16;
    int batch_size = 1024;
    int replay_capacity = 1024 * 128;
    int warm_start = 1024 * 128;
    double epsilon_start = 1.0;
    double epsilon_end = 0.0;
    int epsilon_last_step = 128 * 16;
    double gamma = 0.65;
    double learning_rate = 1e-3;
    int target_sync = 10;
    int eval_iterations = 10;
    int runs = 5;
    NetworkDims dims;

    void validate() const;
    bool operator==(const TrainConfig&) const = default;

    static TrainConfig paper();
    static TrainConfig desk();
};

double epsilon_at(std::int64_t step, const TrainConfig& config);

// Mean Huber TD error over the batch. Gradients accumulate into `online`;
// `target` is only read. Terminal transitions drop the bootstrap term.
Real td_loss(std::span<const Transition* const> batch, QNetwork& online, const QNetwork& target,
             double gamma);

// The parts of deep Q-learning that do not depend on the environment:
// online and target networks, optimizer, replay and the exploration draw.
class DqnLearner {
public:
    DqnLearner(int vocab_size, const TrainConfig& config, std::uint64_t seed);
    DqnLearner(const DqnLearner&) = delete;
    DqnLearner& operator=(const DqnLearner&) = delete;

    Action random_action();
    // Random with probability epsilon, else greedy on the online network.
    Action act(const EncodedState& state, double epsilon);
    void remember(Transition t) { replay_.push(std::move(t)); }
    // One optimizer step on a sampled batch; syncs the target network every
    // `target_sync` steps. Returns the batch loss.
    Real learn();

    const QNetwork& online() const { return online_; }
    const QNetwork& target() const { return target_; }
    const ReplayBuffer& replay() const { return replay_; }
    std::int64_t optimizer_steps() const { return optimizer_steps_; }

private:
    TrainConfig config_;
    QNetwork online_;
    QNetwork target_;
    nn::Adam adam_;
    ReplayBuffer replay_;
    Rng action_rng_;
    Rng sample_rng_;
    std::int64_t optimizer_steps_ = 0;
};

struct EpochLog {
    int epoch = 0;
    double train_loss_mean = 0.0;
    double val_reward_mean = 0.0;
    double val_reward_std = 0.0;
    double epsilon_end = 0.0;
    double wall_seconds = 0.0;
};

void write_epoch_log(std::ostream& out, const std::vector<EpochLog>& log);

struct TrainResult {
    QNetwork best;
    Vocabulary vocab;
    int best_epoch = 0;
    std::vector<EpochLog> log;
};

// Seed streams used by train(): the training, validation and test
// environments never share question seeds.
std::uint64_t validation_seed(std::uint64_t seed);
std::uint64_t test_seed(std::uint64_t seed);

using EpochCallback = std::function<void(const EpochLog&)>;

TrainResult train(const EnvConfig& env_config, Variant variant, const Capacities& capacities,
                  const TrainConfig& train_config, std::uint64_t seed,
                  const EpochCallback& on_epoch = {});

// Greedy evaluation of a trained network on the test seed stream.
RewardStats evaluate_network(const QNetwork& net, const Vocabulary& vocab,
                             const EnvConfig& env_config, Variant variant,
                             const Capacities& capacities, int n_iterations, std::uint64_t seed);

}  // namespace roommem

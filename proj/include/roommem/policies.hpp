#pragma once

#include <array>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "roommem/q_network.hpp"
#include "roommem/room_env.hpp"

namespace roommem {

enum class Variant { scratch, pretrained };
std::string_view to_string(Variant variant);
Variant parse_variant(std::string_view text);

enum class AgentKind { episodic_only, semantic_only, random, rl_scratch, rl_pretrained };
std::string_view to_string(AgentKind kind);
AgentKind parse_agent_kind(std::string_view text);
bool is_learned(AgentKind kind);
Variant variant_of(AgentKind kind);

struct Capacities {
    std::size_t episodic = 0;
    std::size_t semantic = 0;

    bool operator==(const Capacities&) const = default;
};

// How an agent spends a total long-term capacity: the single-memory
// baselines get all of it, the others split it evenly (odd totals give the
// extra slot to episodic).
Capacities split_capacity(AgentKind kind, std::size_t total);

// Token vocabulary for everything the environment can emit.
Vocabulary vocabulary_for(const RoomEnv& env);

struct Decision {
    Action action = Action::forget;
    std::optional<std::array<Real, 3>> q_values;
};

class Policy {
public:
    virtual ~Policy() = default;
    virtual Decision decide(const MemoryState& state) = 0;
};

Action episodic_only(const MemoryState& state);
Action semantic_only(const MemoryState& state);
Action random_policy(const MemoryState& state, Rng& rng);
Decision greedy_q(const MemoryState& state, const QNetwork& net, const Vocabulary& vocab);

class EpisodicOnlyPolicy : public Policy {
public:
    Decision decide(const MemoryState& state) override { return {episodic_only(state), {}}; }
};

class SemanticOnlyPolicy : public Policy {
public:
    Decision decide(const MemoryState& state) override { return {semantic_only(state), {}}; }
};

class RandomPolicy : public Policy {
public:
    explicit RandomPolicy(std::uint64_t seed) : rng_(seed) {}
    Decision decide(const MemoryState& state) override { return {random_policy(state, rng_), {}}; }

private:
    Rng rng_;
};

// Holds references; the network and vocabulary must outlive the policy.
class GreedyQPolicy : public Policy {
public:
    GreedyQPolicy(const QNetwork& net, const Vocabulary& vocab) : net_(net), vocab_(vocab) {}
    Decision decide(const MemoryState& state) override { return greedy_q(state, net_, vocab_); }

private:
    const QNetwork& net_;
    const Vocabulary& vocab_;
};

// Builds a fresh policy for one evaluation episode from that episode's seed.
using PolicyFactory = std::function<std::unique_ptr<Policy>(std::uint64_t seed)>;

struct StepRecord {
    int step = 0;
    Observation observation;
    Question question;
    Action action = Action::forget;
    std::optional<std::array<Real, 3>> q_values;
    std::optional<Quadruple> retrieved;
    std::optional<std::string> answer;
    int reward = 0;
};

struct EpisodeTrace {
    std::vector<StepRecord> steps;
    // Memory contents right after the action at the given step.
    std::map<int, MemoryState> snapshots;
};

// One JSON object per line: step records, then snapshot records.
void write_trace(std::ostream& out, const EpisodeTrace& trace);

inline const std::set<int> kDefaultSnapshotSteps{2, 86};

struct EpisodeOptions {
    bool trace = false;
    std::set<int> snapshot_steps = kDefaultSnapshotSteps;
};

struct EpisodeResult {
    int total_reward = 0;
    std::optional<EpisodeTrace> trace;
};

// Runs one episode: observe into short-term, act, answer from memory. The
// env seed is overridden by `seed`. A pretrained agent starts with semantic
// memory prefilled from the knowledge base.
EpisodeResult run_episode(Policy& policy, const EnvConfig& env_config, Variant variant,
                          const Capacities& capacities, std::uint64_t seed,
                          const EpisodeOptions& options = {});
// Same loop on a caller-owned environment (already seeded); avoids rebuilding
// the knowledge base.
EpisodeResult run_episode(Policy& policy, RoomEnv& env, Variant variant,
                          const Capacities& capacities, const EpisodeOptions& options = {});

struct RewardStats {
    double mean = 0.0;
    double std = 0.0;  // population standard deviation
    std::vector<int> totals;
};

RewardStats reward_stats(std::vector<int> totals);

// n_iterations episodes; episode i uses env seed mix_seed(seed, i) and a
// policy seeded from a separate stream derived from the same pair.
RewardStats evaluate(const PolicyFactory& make_policy, const EnvConfig& env_config,
                     Variant variant, const Capacities& capacities, int n_iterations,
                     std::uint64_t seed);

}  // namespace roommem

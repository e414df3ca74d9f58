#include "roommem/policies.hpp"

#include <cmath>
#include <ostream>

#include "json.hpp"

namespace roommem {

std::string_view to_string(Variant variant) {
    return variant == Variant::scratch ? "scratch" : "pretrained";
}

Variant parse_variant(std::string_view text) {
    if (text == "scratch") return Variant::scratch;
    if (text == "pretrained") return Variant::pretrained;
    throw ConfigError("unknown agent variant '" + std::string(text) + "'");
}

std::string_view to_string(AgentKind kind) {
    switch (kind) {
        case AgentKind::episodic_only: return "episodic_only";
        case AgentKind::semantic_only: return "semantic_only";
        case AgentKind::random: return "random";
        case AgentKind::rl_scratch: return "rl_scratch";
        case AgentKind::rl_pretrained: return "rl_pretrained";
    }
    return "?";
}

AgentKind parse_agent_kind(std::string_view text) {
    for (auto k : {AgentKind::episodic_only, AgentKind::semantic_only, AgentKind::random,
                   AgentKind::rl_scratch, AgentKind::rl_pretrained}) {
        if (text == to_string(k)) return k;
    }
    throw ConfigError("unknown agent '" + std::string(text) + "'");
}

bool is_learned(AgentKind kind) {
    return kind == AgentKind::rl_scratch || kind == AgentKind::rl_pretrained;
}

Variant variant_of(AgentKind kind) {
    return kind == AgentKind::rl_pretrained ? Variant::pretrained : Variant::scratch;
}

Capacities split_capacity(AgentKind kind, std::size_t total) {
    switch (kind) {
        case AgentKind::episodic_only: return {total, 0};
        case AgentKind::semantic_only: return {0, total};
        default: return {total - total / 2, total / 2};
    }
}

Vocabulary vocabulary_for(const RoomEnv& env) {
    return Vocabulary(env.human_names(), env.kb().objects(), env.kb().locations());
}

Action episodic_only(const MemoryState&) { return Action::to_episodic; }
Action semantic_only(const MemoryState&) { return Action::to_semantic; }

Action random_policy(const MemoryState&, Rng& rng) {
    return static_cast<Action>(rng.below(kNumActions));
}

Decision greedy_q(const MemoryState& state, const QNetwork& net, const Vocabulary& vocab) {
    const auto q = net.q_values(encode_state(state, vocab));
    Decision d;
    d.action = greedy_action(q);
    d.q_values = std::array<Real, 3>{q(0), q(1), q(2)};
    return d;
}

namespace {

nlohmann::json quad_json(const Quadruple& q) {
    return nlohmann::json::array({q.head, q.relation, q.tail, q.value});
}

nlohmann::json memory_json(const MemorySystem& m) {
    auto out = nlohmann::json::array();
    for (const auto& q : m.entries()) out.push_back(quad_json(q));
    return out;
}

}  // namespace

void write_trace(std::ostream& out, const EpisodeTrace& trace) {
    for (const auto& r : trace.steps) {
        nlohmann::json j;
        j["type"] = "step";
        j["step"] = r.step;
        j["observation"] = quad_json(r.observation);
        j["question"] = nlohmann::json::array({r.question.head, r.question.relation});
        j["action"] = to_string(r.action);
        j["q_values"] = r.q_values ? nlohmann::json(*r.q_values) : nlohmann::json(nullptr);
        j["retrieved"] = r.retrieved ? quad_json(*r.retrieved) : nlohmann::json(nullptr);
        j["answer"] = r.answer ? nlohmann::json(*r.answer) : nlohmann::json(nullptr);
        j["reward"] = r.reward;
        out << j.dump() << '\n';
    }
    for (const auto& [step, state] : trace.snapshots) {
        nlohmann::json j;
        j["type"] = "snapshot";
        j["step"] = step;
        j["short_term"] = memory_json(state.short_term);
        j["episodic"] = memory_json(state.episodic);
        j["semantic"] = memory_json(state.semantic);
        out << j.dump() << '\n';
    }
}

EpisodeResult run_episode(Policy& policy, RoomEnv& env, Variant variant,
                          const Capacities& capacities, const EpisodeOptions& options) {
    EpisodeResult result;
    if (options.trace) result.trace.emplace();

    auto [observation, question] = env.reset();
    MemoryState state(1, capacities.episodic, capacities.semantic);
    if (variant == Variant::pretrained) prefill_semantic(state.semantic, env.kb());

    for (int step = 0;; ++step) {
        observe(state.short_term, observation);
        const auto decision = policy.decide(state);
        apply_action(state, decision.action);
        auto retrieved = retrieve(question, state.episodic, state.semantic);
        auto answer = answer_of(retrieved);
        const auto outcome = env.step(answer);
        result.total_reward += outcome.reward;

        if (result.trace) {
            result.trace->steps.push_back({step, observation, question, decision.action,
                                           decision.q_values, std::move(retrieved),
                                           std::move(answer), outcome.reward});
            if (options.snapshot_steps.contains(step)) result.trace->snapshots[step] = state;
        }
        if (outcome.done) break;
        observation = *outcome.observation;
        question = *outcome.question;
    }
    return result;
}

EpisodeResult run_episode(Policy& policy, const EnvConfig& env_config, Variant variant,
                          const Capacities& capacities, std::uint64_t seed,
                          const EpisodeOptions& options) {
    if (env_config.episode_length == 0) {
        EpisodeResult empty;
        if (options.trace) empty.trace.emplace();
        return empty;
    }
    EnvConfig config = env_config;
    config.seed = seed;
    RoomEnv env(config);
    return run_episode(policy, env, variant, capacities, options);
}

RewardStats reward_stats(std::vector<int> totals) {
    RewardStats s;
    if (!totals.empty()) {
        double sum = 0.0;
        for (int t : totals) sum += t;
        s.mean = sum / static_cast<double>(totals.size());
        double sq = 0.0;
        for (int t : totals) sq += (t - s.mean) * (t - s.mean);
        s.std = std::sqrt(sq / static_cast<double>(totals.size()));
    }
    s.totals = std::move(totals);
    return s;
}

RewardStats evaluate(const PolicyFactory& make_policy, const EnvConfig& env_config,
                     Variant variant, const Capacities& capacities, int n_iterations,
                     std::uint64_t seed) {
    if (n_iterations < 1) throw ConfigError("evaluation needs at least one iteration");
    std::vector<int> totals;
    if (env_config.episode_length == 0) {
        totals.assign(static_cast<std::size_t>(n_iterations), 0);
        return reward_stats(std::move(totals));
    }
    RoomEnv prototype(env_config);
    for (int i = 0; i < n_iterations; ++i) {
        const auto episode_seed = mix_seed(seed, static_cast<std::uint64_t>(i));
        EnvConfig config = env_config;
        config.seed = episode_seed;
        RoomEnv env(config, prototype.kb());
        auto policy = make_policy(mix_seed(episode_seed, 0x90));
        totals.push_back(run_episode(*policy, env, variant, capacities).total_reward);
    }
    return reward_stats(std::move(totals));
}

}  // namespace roommem

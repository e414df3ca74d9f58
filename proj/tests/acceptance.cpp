// End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
// exits non-zero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "gradcheck.hpp"
#include "mdp_oracle.hpp"
#include "oracles.hpp"
#include "roommem/experiment.hpp"

using namespace roommem;

namespace {

const std::filesystem::path kPresets = ROOMMEM_PRESETS;

struct Outcome {
    bool pass = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* f, double a) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

// Pooled mean/std per (agent, capacity) over every seed and evaluation.
using Table = std::map<std::pair<AgentKind, std::size_t>, RewardStats>;

Table pooled(const std::vector<SweepCell>& cells) {
    std::map<std::pair<AgentKind, std::size_t>, std::vector<int>> totals;
    for (const auto& c : cells) {
        if (!c.ok) throw Error("cell failed: " + c.error);
        auto& t = totals[{c.agent, c.capacity}];
        t.insert(t.end(), c.stats.totals.begin(), c.stats.totals.end());
    }
    Table out;
    for (auto& [key, t] : totals) out[key] = reward_stats(std::move(t));
    return out;
}

ExperimentConfig preset(const char* name, std::vector<AgentKind> agents, std::vector<std::size_t> caps) {
    auto config = load_experiment(kPresets / name);
    config.agents = std::move(agents);
    config.capacities = std::move(caps);
    config.seeds.clear();
    config.workers = 1;
    return config;
}

Table sweep(const ExperimentConfig& config) { return pooled(run_sweep(config)); }

Outcome episodic_exact() {
    const auto t = sweep(preset("paper.env", {AgentKind::episodic_only}, {64}));
    const auto& s = t.at({AgentKind::episodic_only, 64});
    return {s.mean == 128.0 && s.std == 0.0 && s.totals.size() == 50,
            "episodic_only@64 = " + fmt("%.4f", s.mean) + " +- " + fmt("%.4f", s.std)};
}

Outcome semantic_plateau() {
    const auto t = sweep(preset("paper.env", {AgentKind::semantic_only}, {32, 64}));
    const double a = t.at({AgentKind::semantic_only, 32}).mean;
    const double b = t.at({AgentKind::semantic_only, 64}).mean;
    return {std::abs(a - b) <= 5.0, "semantic_only@32 = " + fmt("%.2f", a) + ", @64 = " + fmt("%.2f", b)};
}

Outcome low_capacity_order() {
    const auto t = sweep(preset("paper.env", {AgentKind::episodic_only, AgentKind::semantic_only}, {4, 8, 16}));
    bool ok = true;
    std::string detail;
    for (const std::size_t c : {4, 8, 16}) {
        const double e = t.at({AgentKind::episodic_only, c}).mean;
        const double s = t.at({AgentKind::semantic_only, c}).mean;
        ok = ok && s > e;
        detail += "@" + std::to_string(c) + " sem " + fmt("%.2f", s) + " vs epi " + fmt("%.2f", e) + "; ";
    }
    return {ok, detail};
}

// Criteria 4 and 5 share one training run.
struct RlResult {
    double scratch = 0, pretrained = 0, random = 0, episodic = 0, semantic = 0, seconds = 0;
};

RlResult rl_run() {
    const auto start = Clock::now();
    const auto config = preset("desk.env",
                               {AgentKind::episodic_only, AgentKind::semantic_only, AgentKind::random,
                                AgentKind::rl_scratch, AgentKind::rl_pretrained},
                               {32});
    const auto t = sweep(config);
    RlResult r;
    r.scratch = t.at({AgentKind::rl_scratch, 32}).mean;
    r.pretrained = t.at({AgentKind::rl_pretrained, 32}).mean;
    r.random = t.at({AgentKind::random, 32}).mean;
    r.episodic = t.at({AgentKind::episodic_only, 32}).mean;
    r.semantic = t.at({AgentKind::semantic_only, 32}).mean;
    r.seconds = seconds_since(start);
    return r;
}

Outcome gradients() {
    using Check = std::function<gradcheck::Report(std::uint64_t)>;
    const std::vector<std::pair<const char*, Check>> checks{
        {"embedding", gradcheck::embedding}, {"linear", gradcheck::linear},
        {"relu", gradcheck::relu},           {"lstm", gradcheck::lstm},
        {"huber", gradcheck::huber},         {"q_network", gradcheck::q_network}};
    bool ok = true;
    std::string detail;
    for (const auto& [name, check] : checks) {
        gradcheck::Report all;
        for (std::uint64_t seed = 0; seed < 10; ++seed) all.merge(check(1000 + seed));
        ok = ok && all.ok;
        detail += std::string(name) + " " + fmt("%.1e", all.worst_rel) + (all.ok ? "" : " at " + all.where) + "; ";
    }
    return {ok, "worst relative error: " + detail};
}

Outcome mdp_oracle() {
    const auto config = load_experiment(kPresets / "desk.env").train;
    double worst = 0;
    for (std::uint64_t seed = 0; seed < 5; ++seed) worst = std::max(worst, mdp::train(config, seed).worst_error);
    return {worst < 1e-2, "max |Q - Q*| over 5 seeds = " + fmt("%.2e", worst)};
}

Outcome retrieve_oracle() {
    Rng rng(20240);
    int ties = 0;
    for (int i = 0; i < 10000; ++i) {
        const auto state = oracle::random_state(rng, 64);
        const auto q = oracle::random_question(rng);
        const auto got = retrieve(q, state.episodic, state.semantic);
        const auto want = oracle::retrieve(q, state.episodic, state.semantic);
        if (got.has_value() != want.has_value() || (got && !(*got == *want))) {
            return {false, "mismatch on state " + std::to_string(i)};
        }
        int best = 0;
        std::int64_t top = -1;
        for (const auto& e : state.episodic.entries()) {
            if (e.head != q.head) continue;
            if (e.value > top) top = e.value, best = 0;
            if (e.value == top) ++best;
        }
        ties += best > 1;
    }
    return {true, "10000 states agree, " + std::to_string(ties) + " with tied episodic maxima"};
}

std::string sweep_bytes(const ExperimentConfig& config) {
    const auto cells = run_sweep(config);
    std::ostringstream out;
    write_sweep_csv(out, cells);
    write_sweep_table(out, cells);
    return out.str();
}

Outcome determinism() {
    const auto dir = std::filesystem::temp_directory_path() / "roommem_acceptance";
    std::filesystem::create_directories(dir);
    const auto path = dir / "determinism.env";
    write_file_atomic(path, "include " + (kPresets / "desk.env").string() +
                                "\nagents = episodic_only, semantic_only, random, rl_scratch\n"
                                "capacities = 4, 32\nseeds = 0, 1\ntrain.epochs = 1\n"
                                "train.eval_iterations = 3\nworkers = 2\n");
    const auto a = sweep_bytes(load_experiment(path));
    const auto b = sweep_bytes(load_experiment(path));
    return {a == b && !a.empty(), std::to_string(a.size()) + " bytes, " + (a == b ? "identical" : "different")};
}

Outcome parameter_count() {
    const auto config = load_experiment(kPresets / "paper.env");
    const RoomEnv env(config.env);
    const auto vocab = vocabulary_for(env);
    const QNetwork net(vocab.size(), config.train.dims, 0);
    const auto n = static_cast<double>(net.parameter_count());
    return {std::abs(n - 265000.0) <= 0.2 * 265000.0,
            std::to_string(net.parameter_count()) + " parameters, vocabulary " + std::to_string(vocab.size())};
}

int failures = 0;

void report(int id, const char* name, double limit_seconds, const std::function<Outcome()>& run) {
    const auto start = Clock::now();
    Outcome o;
    try {
        o = run();
    } catch (const std::exception& e) {
        o = {false, std::string("error: ") + e.what()};
    }
    const double secs = seconds_since(start);
    while (!o.detail.empty() && (o.detail.back() == ' ' || o.detail.back() == ';')) o.detail.pop_back();
    if (limit_seconds > 0 && secs > limit_seconds) {
        o.pass = false;
        o.detail += " (over the " + fmt("%.0f", limit_seconds) + " s budget)";
    }
    failures += !o.pass;
    std::printf("%s %d %s: %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str(), secs);
    std::fflush(stdout);
}

}  // namespace

int main() {
    report(1, "episodic-only exactness", 60, episodic_exact);
    report(2, "semantic-only plateau", 120, semantic_plateau);
    report(3, "low-capacity ordering", 120, low_capacity_order);

    RlResult rl;
    std::string rl_error;
    try {
        rl = rl_run();
    } catch (const std::exception& e) {
        rl_error = e.what();
    }
    report(4, "RL beats baselines at capacity 32", 0, [&]() -> Outcome {
        if (!rl_error.empty()) return {false, "error: " + rl_error};
        const double floor = std::max(rl.random + 20, std::max(rl.episodic, rl.semantic) - 5);
        const bool fast = rl.seconds <= 1800;
        return {rl.scratch >= floor && fast,
                "scratch " + fmt("%.2f", rl.scratch) + " vs needed " + fmt("%.2f", floor) + " (random " +
                    fmt("%.2f", rl.random) + ", episodic " + fmt("%.2f", rl.episodic) + ", semantic " +
                    fmt("%.2f", rl.semantic) + "), training+eval " + fmt("%.0f", rl.seconds) + " s" +
                    (fast ? "" : " over the 1800 s budget")};
    });
    report(5, "pretraining helps", 0, [&]() -> Outcome {
        if (!rl_error.empty()) return {false, "error: " + rl_error};
        return {rl.pretrained >= rl.scratch,
                "pretrained " + fmt("%.2f", rl.pretrained) + " vs scratch " + fmt("%.2f", rl.scratch)};
    });
    report(6, "gradient correctness", 60, gradients);
    report(7, "DQN two-state oracle", 60, mdp_oracle);
    report(8, "retrieve oracle equivalence", 30, retrieve_oracle);
    report(9, "sweep determinism", 0, determinism);
    report(10, "parameter count", 0, parameter_count);

    std::printf("%d of 10 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}

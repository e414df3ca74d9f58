// Command-line front end: train, eval, sweep, trace, gen-kb.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "roommem/experiment.hpp"

using namespace roommem;

namespace {

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open " + path.string());
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

struct Common {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<int> workers;
};

ExperimentConfig load(const Common& c) {
    auto config = c.config_path.empty() ? ExperimentConfig{} : load_experiment(c.config_path);
    if (c.seed) config.seeds = {*c.seed};
    if (c.out) config.out_dir = *c.out;
    if (c.workers) config.workers = *c.workers;
    config.validate();
    return config;
}

void add_common(CLI::App* cmd, Common& c, bool need_config = true) {
    auto* opt = cmd->add_option("--config", c.config_path, "experiment config file");
    if (need_config) opt->required();
    cmd->add_option("--seed", c.seed, "run seed (replaces the config's seed list)");
    cmd->add_option("--out", c.out, "output directory");
}

int cmd_train(const Common& common, std::optional<std::size_t> capacity) {
    const auto config = load(common);
    const auto seed = config.seed_list().front();
    const auto total = capacity ? *capacity : config.capacities.front();
    const auto agent = config.variant == Variant::pretrained ? AgentKind::rl_pretrained
                                                             : AgentKind::rl_scratch;
    const auto caps = split_capacity(agent, total);
    std::cerr << "training " << to_string(agent) << " capacity " << total << " seed " << seed << '\n';
    const auto result = train(config.env, config.variant, caps, config.train, seed,
                              [](const EpochLog& e) {
                                  std::cerr << "epoch " << e.epoch << " loss " << e.train_loss_mean
                                            << " val " << e.val_reward_mean << " +- "
                                            << e.val_reward_std << " (" << e.wall_seconds << "s)\n";
                              });
    std::ostringstream log;
    write_epoch_log(log, result.log);
    write_file_atomic(config.out_dir / "train_log.csv", log.str());
    write_file_atomic(config.out_dir / "checkpoint.bin", save_q_network(result.best, result.vocab));
    write_file_atomic(config.out_dir / "config.env", dump_experiment(config));
    std::cout << "best epoch " << result.best_epoch << ", validation "
              << result.log[static_cast<std::size_t>(result.best_epoch)].val_reward_mean << '\n';
    return 0;
}

int cmd_eval(const Common& common, const std::string& agent_name, std::optional<std::size_t> capacity,
             const std::string& checkpoint) {
    const auto config = load(common);
    const auto agent = parse_agent_kind(agent_name);
    std::vector<SweepCell> cells;
    for (auto total : capacity ? std::vector<std::size_t>{*capacity} : config.capacities) {
        for (auto seed : config.seed_list()) {
            SweepCell cell;
            cell.agent = agent;
            cell.capacity = total;
            cell.seed = seed;
            if (is_learned(agent) && !checkpoint.empty()) {
                const auto loaded = load_q_network(read_file(checkpoint));
                const RoomEnv env(config.env);
                if (!(loaded.vocab == vocabulary_for(env))) {
                    throw Error("checkpoint vocabulary does not match the environment");
                }
                cell.stats = evaluate_network(loaded.network, loaded.vocab, config.env,
                                              variant_of(agent), split_capacity(agent, total),
                                              config.train.eval_iterations, test_seed(seed));
            } else {
                cell.stats = run_cell(config, agent, total, seed);
            }
            cell.ok = true;
            cells.push_back(cell);
        }
    }
    std::ostringstream csv;
    write_sweep_csv(csv, cells);
    write_file_atomic(config.out_dir / "eval.csv", csv.str());
    std::cout << csv.str();
    return 0;
}

int cmd_sweep(const Common& common) {
    const auto config = load(common);
    const auto cells = run_sweep(config);
    std::ostringstream csv, table;
    write_sweep_csv(csv, cells);
    write_sweep_table(table, cells);
    write_file_atomic(config.out_dir / "sweep.csv", csv.str());
    write_file_atomic(config.out_dir / "sweep_table.csv", table.str());
    std::cout << table.str();
    int failures = 0;
    for (const auto& c : cells) {
        if (!c.ok) {
            ++failures;
            std::cerr << "cell " << to_string(c.agent) << " capacity " << c.capacity << " seed "
                      << c.seed << " failed: " << c.error << '\n';
        }
    }
    return failures ? 1 : 0;
}

int cmd_trace(const Common& common, const std::string& checkpoint, std::optional<std::size_t> capacity,
              const std::string& agent_name) {
    const auto config = load(common);
    const auto seed = test_seed(config.seed_list().front());
    const auto total = capacity ? *capacity : config.capacities.front();
    const auto agent = parse_agent_kind(agent_name);
    EpisodeOptions options;
    options.trace = true;
    options.snapshot_steps = config.snapshot_steps;

    std::unique_ptr<Policy> policy;
    std::optional<LoadedNetwork> loaded;
    if (is_learned(agent)) {
        if (checkpoint.empty()) throw ConfigError("trace of a learned agent needs --checkpoint");
        loaded = load_q_network(read_file(checkpoint));
        const RoomEnv env(config.env);
        if (!(loaded->vocab == vocabulary_for(env))) {
            throw Error("checkpoint vocabulary does not match the environment");
        }
        policy = std::make_unique<GreedyQPolicy>(loaded->network, loaded->vocab);
    } else if (agent == AgentKind::episodic_only) {
        policy = std::make_unique<EpisodicOnlyPolicy>();
    } else if (agent == AgentKind::semantic_only) {
        policy = std::make_unique<SemanticOnlyPolicy>();
    } else {
        policy = std::make_unique<RandomPolicy>(mix_seed(seed, 0x90));
    }
    const auto result = run_episode(*policy, config.env, variant_of(agent),
                                    split_capacity(agent, total), seed, options);
    std::ostringstream out;
    write_trace(out, *result.trace);
    write_file_atomic(config.out_dir / "trace.jsonl", out.str());
    std::cout << "total reward " << result.total_reward << '\n';
    return 0;
}

int cmd_gen_kb(std::uint64_t seed, int n_objects, int n_locations, const std::string& out) {
    const auto kb = generate_synthetic_kb(seed, n_objects, n_locations);
    std::ostringstream text;
    write_kb(text, kb);
    if (out.empty() || out == "-") {
        std::cout << text.str();
    } else {
        write_file_atomic(out, text.str());
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"roommem: memory-management agents in a simulated room"};
    app.require_subcommand(1);

    Common common;
    std::optional<std::size_t> capacity;
    std::string checkpoint;
    std::string agent_name = "rl_scratch";

    auto* train_cmd = app.add_subcommand("train", "train a Q-network agent");
    add_common(train_cmd, common);
    train_cmd->add_option("--capacity", capacity, "total long-term capacity");

    auto* eval_cmd = app.add_subcommand("eval", "evaluate one agent");
    add_common(eval_cmd, common);
    eval_cmd->add_option("--agent", agent_name, "episodic_only|semantic_only|random|rl_scratch|rl_pretrained");
    eval_cmd->add_option("--capacity", capacity, "total long-term capacity");
    eval_cmd->add_option("--checkpoint", checkpoint, "trained network (learned agents)");

    auto* sweep_cmd = app.add_subcommand("sweep", "agents x capacities x seeds table");
    add_common(sweep_cmd, common);
    sweep_cmd->add_option("--workers", common.workers, "worker threads");

    auto* trace_cmd = app.add_subcommand("trace", "trace one greedy episode");
    add_common(trace_cmd, common);
    trace_cmd->add_option("--checkpoint", checkpoint, "trained network");
    trace_cmd->add_option("--capacity", capacity, "total long-term capacity");
    trace_cmd->add_option("--agent", agent_name, "agent kind");

    std::uint64_t kb_seed = 7;
    int n_objects = 16, n_locations = 28;
    std::string kb_out;
    auto* kb_cmd = app.add_subcommand("gen-kb", "write a synthetic knowledge base");
    kb_cmd->add_option("--seed", kb_seed, "generator seed");
    kb_cmd->add_option("--n-objects", n_objects, "number of objects");
    kb_cmd->add_option("--n-locations", n_locations, "number of locations");
    kb_cmd->add_option("--out", kb_out, "output TSV path (stdout if omitted)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*train_cmd) return cmd_train(common, capacity);
        if (*eval_cmd) return cmd_eval(common, agent_name, capacity, checkpoint);
        if (*sweep_cmd) return cmd_sweep(common);
        if (*trace_cmd) return cmd_trace(common, checkpoint, capacity, agent_name);
        if (*kb_cmd) return cmd_gen_kb(kb_seed, n_objects, n_locations, kb_out);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

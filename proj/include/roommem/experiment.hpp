#pragma once

#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "roommem/dqn.hpp"

namespace roommem {

struct ExperimentConfig {
    EnvConfig env;
    TrainConfig train = TrainConfig::paper();
    std::vector<AgentKind> agents{AgentKind::episodic_only, AgentKind::semantic_only,
                                  AgentKind::random, AgentKind::rl_scratch,
                                  AgentKind::rl_pretrained};
    Variant variant = Variant::scratch;
    std::vector<std::size_t> capacities{2, 4, 8, 16, 32, 64};
    // Empty means 0 .. train.runs - 1.
    std::vector<std::uint64_t> seeds;
    std::set<int> snapshot_steps = kDefaultSnapshotSteps;
    std::filesystem::path out_dir = "out";
    int workers = 1;

    void validate() const;
    std::vector<std::uint64_t> seed_list() const;
};

// Flat `key = value` lines; `#` starts a comment; `include <path>` pulls in
// another file (relative to the including one) at that point. Later keys
// override earlier ones.
ExperimentConfig load_experiment(const std::filesystem::path& path);
void apply_setting(ExperimentConfig& config, const std::string& key, const std::string& value);
std::string dump_experiment(const ExperimentConfig& config);

struct SweepCell {
    AgentKind agent = AgentKind::episodic_only;
    std::size_t capacity = 0;
    std::uint64_t seed = 0;
    bool ok = false;
    std::string error;
    RewardStats stats;
};

// Runs every agent x capacity x seed cell on `workers` threads. Cell results
// do not depend on scheduling. Learned agents are trained first and then
// evaluated greedily on the test seed stream.
std::vector<SweepCell> run_sweep(const ExperimentConfig& config);
RewardStats run_cell(const ExperimentConfig& config, AgentKind agent, std::size_t capacity,
                     std::uint64_t seed);

// agent,capacity,seed,mean_reward,std_reward
void write_sweep_csv(std::ostream& out, const std::vector<SweepCell>& cells);
// One row per agent, one column per total capacity, cells "mean+-std" pooled
// over seeds and evaluation episodes.
void write_sweep_table(std::ostream& out, const std::vector<SweepCell>& cells);

// Writes `content` to a sibling temp file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace roommem

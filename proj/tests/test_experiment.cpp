#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "roommem/experiment.hpp"

using namespace roommem;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir() {
    auto dir = fs::temp_directory_path() / "roommem_experiment_test";
    fs::create_directories(dir);
    return dir;
}

fs::path write(const fs::path& path, const std::string& text) {
    std::ofstream(path) << text;
    return path;
}

std::string csv(const std::vector<SweepCell>& cells) {
    std::ostringstream out;
    write_sweep_csv(out, cells);
    return out.str();
}

}  // namespace

TEST_CASE("config files with includes") {
    const auto dir = scratch_dir();
    write(dir / "base.env", "env.n_humans = 8\ntrain.epochs = 3 # trailing comment\n");
    const auto top = write(dir / "top.env",
                           "include base.env\n\ntrain.epochs = 5\nagents = random, episodic_only\n"
                           "capacities = 2,4\nseeds = 3, 9\n");
    const auto c = load_experiment(top);
    CHECK(c.env.n_humans == 8);
    CHECK(c.train.epochs == 5);
    CHECK(c.agents == std::vector<AgentKind>{AgentKind::random, AgentKind::episodic_only});
    CHECK(c.capacities == std::vector<std::size_t>{2, 4});
    CHECK(c.seed_list() == std::vector<std::uint64_t>{3, 9});

    // The dump parses back to the same settings.
    const auto again = load_experiment(write(dir / "dump.env", dump_experiment(c)));
    CHECK(again.env == c.env);
    CHECK(again.train == c.train);
    CHECK(again.agents == c.agents);
    CHECK(dump_experiment(again) == dump_experiment(c));
}

TEST_CASE("shipped presets") {
    const fs::path presets = ROOMMEM_PRESETS;
    const auto paper = load_experiment(presets / "paper.env");
    CHECK(paper.train == TrainConfig::paper());
    CHECK(paper.env == EnvConfig{});
    const auto desk = load_experiment(presets / "desk.env");
    CHECK(desk.train == TrainConfig::desk());
    CHECK(desk.env == paper.env);
}

TEST_CASE("config errors") {
    const auto dir = scratch_dir();
    CHECK_THROWS_AS(load_experiment(dir / "missing.env"), ConfigError);
    CHECK_THROWS_WITH_AS(load_experiment(write(dir / "bad1.env", "train.epochs = three\n")),
                         doctest::Contains(":1"), ConfigError);
    CHECK_THROWS_AS(load_experiment(write(dir / "bad2.env", "no_such_key = 1\n")), ConfigError);
    CHECK_THROWS_AS(load_experiment(write(dir / "bad3.env", "just words\n")), ConfigError);
    CHECK_THROWS_AS(load_experiment(write(dir / "bad4.env", "seeds = 1, 1\n")), ConfigError);
    CHECK_THROWS_AS(load_experiment(write(dir / "bad5.env", "capacities =\n")), ConfigError);
    CHECK_THROWS_AS(load_experiment(write(dir / "loop.env", "include loop.env\n")), ConfigError);
}

TEST_CASE("baseline sweep shape and determinism") {
    ExperimentConfig c;
    c.agents = {AgentKind::episodic_only, AgentKind::semantic_only, AgentKind::random};
    c.capacities = {2, 4, 8, 16, 32, 64};
    c.seeds = {0, 1, 2, 3, 4};
    c.train.eval_iterations = 2;
    const auto one = run_sweep(c);
    CHECK(one.size() == 3 * 6 * 5);
    c.workers = 3;
    const auto threaded = run_sweep(c);
    CHECK(csv(one) == csv(threaded));

    std::ostringstream table;
    write_sweep_table(table, one);
    std::istringstream lines(table.str());
    std::string line;
    std::getline(lines, line);
    CHECK(line == "agent,2,4,8,16,32,64");
    int rows = 0;
    while (std::getline(lines, line)) {
        ++rows;
        CHECK(std::count(line.begin(), line.end(), ',') == 6);
    }
    CHECK(rows == 3);
    CHECK(table.str().find("episodic_only,") != std::string::npos);
    for (const auto& cell : one) {
        if (cell.agent == AgentKind::episodic_only && cell.capacity == 64) {
            CHECK(cell.stats.mean == 128.0);
            CHECK(cell.stats.std == 0.0);
        }
    }
}

TEST_CASE("single cell sweep") {
    ExperimentConfig c;
    c.agents = {AgentKind::semantic_only};
    c.capacities = {8};
    c.seeds = {42};
    const auto cells = run_sweep(c);
    CHECK(cells.size() == 1);
    const auto text = csv(cells);
    CHECK(std::count(text.begin(), text.end(), '\n') == 2);
    CHECK(text.rfind("agent,capacity,seed,mean_reward,std_reward\nsemantic_only,8,42,", 0) == 0);
}

TEST_CASE("failed cells are marked and the sweep continues") {
    ExperimentConfig c;
    c.agents = {AgentKind::episodic_only, AgentKind::semantic_only};
    c.capacities = {4};
    c.seeds = {0, 1};
    c.env.kb_path = (scratch_dir() / "absent.tsv").string();
    const auto cells = run_sweep(c);
    REQUIRE(cells.size() == 4);
    for (const auto& cell : cells) {
        CHECK_FALSE(cell.ok);
        CHECK(cell.error.find("absent.tsv") != std::string::npos);
    }
    const auto text = csv(cells);
    CHECK(text.find("episodic_only,4,1,FAILED,FAILED") != std::string::npos);
    std::ostringstream table;
    write_sweep_table(table, cells);
    CHECK(table.str().find("semantic_only,FAILED") != std::string::npos);
}

TEST_CASE("atomic writes") {
    const auto path = scratch_dir() / "sub" / "out.txt";
    write_file_atomic(path, "hello");
    std::ifstream in(path);
    std::string s;
    std::getline(in, s);
    CHECK(s == "hello");
    CHECK_FALSE(fs::exists(path.string() + ".tmp"));
}

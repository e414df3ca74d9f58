#include "roommem/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

namespace roommem {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

template <class T>
T parse_number(const std::string& key, const std::string& value) {
    T out{};
    const auto* end = value.data() + value.size();
    const auto [ptr, ec] = std::from_chars(value.data(), end, out);
    if (ec != std::errc() || ptr != end) {
        throw ConfigError("bad value for " + key + ": '" + value + "'");
    }
    return out;
}

std::vector<std::string> split_list(const std::string& value) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(value);
    while (std::getline(in, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

void load_into(ExperimentConfig& config, const std::filesystem::path& path, int depth) {
    if (depth > 16) throw ConfigError("config include nesting too deep at " + path.string());
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto where = path.string() + ":" + std::to_string(line_no);
        if (line.rfind("include", 0) == 0 && line.size() > 7 && (line[7] == ' ' || line[7] == '\t')) {
            const std::filesystem::path target = trim(line.substr(8));
            load_into(config, target.is_absolute() ? target : path.parent_path() / target,
                      depth + 1);
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError(where + ": expected key = value");
        try {
            apply_setting(config, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
        } catch (const ConfigError& e) {
            throw ConfigError(where + ": " + e.what());
        }
    }
}

}  // namespace

void ExperimentConfig::validate() const {
    env.validate();
    train.validate();
    if (agents.empty()) throw ConfigError("agent list is empty");
    if (capacities.empty()) throw ConfigError("capacity list is empty");
    for (auto c : capacities) {
        if (c == 0) throw ConfigError("capacities must be >= 1");
    }
    auto s = seed_list();
    std::sort(s.begin(), s.end());
    if (std::adjacent_find(s.begin(), s.end()) != s.end()) throw ConfigError("seeds must be distinct");
    if (workers < 1) throw ConfigError("workers must be >= 1");
}

std::vector<std::uint64_t> ExperimentConfig::seed_list() const {
    if (!seeds.empty()) return seeds;
    std::vector<std::uint64_t> out;
    for (int i = 0; i < train.runs; ++i) out.push_back(static_cast<std::uint64_t>(i));
    return out;
}

void apply_setting(ExperimentConfig& c, const std::string& key, const std::string& value) {
    auto as_int = [&] { return parse_number<int>(key, value); };
    auto as_u64 = [&] { return parse_number<std::uint64_t>(key, value); };
    auto as_double = [&] { return parse_number<double>(key, value); };

    if (key == "env.n_humans") c.env.n_humans = as_int();
    else if (key == "env.n_objects") c.env.n_objects = as_int();
    else if (key == "env.n_object_locations") c.env.n_object_locations = as_int();
    else if (key == "env.p_commonsense") c.env.p_commonsense = as_double();
    else if (key == "env.episode_length") c.env.episode_length = as_int();
    else if (key == "env.kb_seed") c.env.kb_seed = as_u64();
    else if (key == "env.des_seed") c.env.des_seed = as_u64();
    else if (key == "env.kb_path") c.env.kb_path = value;
    else if (key == "env.location_capacity") c.env.des.location_capacity = as_int();
    else if (key == "env.min_segments") c.env.des.min_segments = as_int();
    else if (key == "env.max_segments") c.env.des.max_segments = as_int();
    else if (key == "env.min_duration") c.env.des.min_duration = as_int();
    else if (key == "env.max_duration") c.env.des.max_duration = as_int();
    else if (key == "train.epochs") c.train.epochs = as_int();
    else if (key == "train.batch_size") c.train.batch_size = as_int();
    else if (key == "train.replay_capacity") c.train.replay_capacity = as_int();
    else if (key == "train.warm_start") c.train.warm_start = as_int();
    else if (key == "train.epsilon_start") c.train.epsilon_start = as_double();
    else if (key == "train.epsilon_end") c.train.epsilon_end = as_double();
    else if (key == "train.epsilon_last_step") c.train.epsilon_last_step = as_int();
    else if (key == "train.gamma") c.train.gamma = as_double();
    else if (key == "train.learning_rate") c.train.learning_rate = as_double();
    else if (key == "train.target_sync") c.train.target_sync = as_int();
    else if (key == "train.eval_iterations") c.train.eval_iterations = as_int();
    else if (key == "train.runs") c.train.runs = as_int();
    else if (key == "net.embedding_dim") c.train.dims.embedding_dim = as_int();
    else if (key == "net.hidden_dim") c.train.dims.hidden_dim = as_int();
    else if (key == "net.lstm_layers") c.train.dims.lstm_layers = as_int();
    else if (key == "agents") {
        c.agents.clear();
        for (const auto& a : split_list(value)) c.agents.push_back(parse_agent_kind(a));
    } else if (key == "variant") c.variant = parse_variant(value);
    else if (key == "capacities") {
        c.capacities.clear();
        for (const auto& v : split_list(value)) c.capacities.push_back(parse_number<std::size_t>(key, v));
    } else if (key == "seeds") {
        c.seeds.clear();
        for (const auto& v : split_list(value)) c.seeds.push_back(parse_number<std::uint64_t>(key, v));
    } else if (key == "trace.snapshot_steps") {
        c.snapshot_steps.clear();
        for (const auto& v : split_list(value)) c.snapshot_steps.insert(parse_number<int>(key, v));
    } else if (key == "out") c.out_dir = value;
    else if (key == "workers") c.workers = as_int();
    else throw ConfigError("unknown key '" + key + "'");
}

ExperimentConfig load_experiment(const std::filesystem::path& path) {
    ExperimentConfig config;
    load_into(config, path, 0);
    config.validate();
    return config;
}

std::string dump_experiment(const ExperimentConfig& c) {
    auto join = [](const auto& items, auto fmt) {
        std::string out;
        for (const auto& i : items) {
            if (!out.empty()) out += ',';
            out += fmt(i);
        }
        return out;
    };
    auto num = [](auto v) { std::ostringstream s; s << v; return s.str(); };
    std::ostringstream o;
    o << "env.n_humans = " << c.env.n_humans << '\n'
      << "env.n_objects = " << c.env.n_objects << '\n'
      << "env.n_object_locations = " << c.env.n_object_locations << '\n'
      << "env.p_commonsense = " << c.env.p_commonsense << '\n'
      << "env.episode_length = " << c.env.episode_length << '\n'
      << "env.kb_seed = " << c.env.kb_seed << '\n'
      << "env.des_seed = " << c.env.des_seed << '\n';
    if (!c.env.kb_path.empty()) o << "env.kb_path = " << c.env.kb_path << '\n';
    o << "env.location_capacity = " << c.env.des.location_capacity << '\n'
      << "env.min_segments = " << c.env.des.min_segments << '\n'
      << "env.max_segments = " << c.env.des.max_segments << '\n'
      << "env.min_duration = " << c.env.des.min_duration << '\n'
      << "env.max_duration = " << c.env.des.max_duration << '\n'
      << "train.epochs = " << c.train.epochs << '\n'
      << "train.batch_size = " << c.train.batch_size << '\n'
      << "train.replay_capacity = " << c.train.replay_capacity << '\n'
      << "train.warm_start = " << c.train.warm_start << '\n'
      << "train.epsilon_start = " << c.train.epsilon_start << '\n'
      << "train.epsilon_end = " << c.train.epsilon_end << '\n'
      << "train.epsilon_last_step = " << c.train.epsilon_last_step << '\n'
      << "train.gamma = " << c.train.gamma << '\n'
      << "train.learning_rate = " << c.train.learning_rate << '\n'
      << "train.target_sync = " << c.train.target_sync << '\n'
      << "train.eval_iterations = " << c.train.eval_iterations << '\n'
      << "train.runs = " << c.train.runs << '\n'
      << "net.embedding_dim = " << c.train.dims.embedding_dim << '\n'
      << "net.hidden_dim = " << c.train.dims.hidden_dim << '\n'
      << "net.lstm_layers = " << c.train.dims.lstm_layers << '\n'
      << "agents = " << join(c.agents, [](AgentKind a) { return std::string(to_string(a)); }) << '\n'
      << "variant = " << to_string(c.variant) << '\n'
      << "capacities = " << join(c.capacities, num) << '\n';
    if (!c.seeds.empty()) o << "seeds = " << join(c.seeds, num) << '\n';
    o << "trace.snapshot_steps = " << join(c.snapshot_steps, num) << '\n'
      << "out = " << c.out_dir.string() << '\n'
      << "workers = " << c.workers << '\n';
    return o.str();
}

RewardStats run_cell(const ExperimentConfig& config, AgentKind agent, std::size_t capacity,
                     std::uint64_t seed) {
    const auto caps = split_capacity(agent, capacity);
    const auto variant = variant_of(agent);
    const int n = config.train.eval_iterations;
    switch (agent) {
        case AgentKind::episodic_only:
            return evaluate([](std::uint64_t) { return std::make_unique<EpisodicOnlyPolicy>(); },
                            config.env, variant, caps, n, test_seed(seed));
        case AgentKind::semantic_only:
            return evaluate([](std::uint64_t) { return std::make_unique<SemanticOnlyPolicy>(); },
                            config.env, variant, caps, n, test_seed(seed));
        case AgentKind::random:
            return evaluate([](std::uint64_t s) { return std::make_unique<RandomPolicy>(s); },
                            config.env, variant, caps, n, test_seed(seed));
        case AgentKind::rl_scratch:
        case AgentKind::rl_pretrained: {
            const auto trained = train(config.env, variant, caps, config.train, seed);
            return evaluate_network(trained.best, trained.vocab, config.env, variant, caps, n,
                                    test_seed(seed));
        }
    }
    throw Error("unhandled agent kind");
}

std::vector<SweepCell> run_sweep(const ExperimentConfig& config) {
    config.validate();
    std::vector<SweepCell> cells;
    for (auto agent : config.agents) {
        for (auto capacity : config.capacities) {
            for (auto seed : config.seed_list()) {
                SweepCell cell;
                cell.agent = agent;
                cell.capacity = capacity;
                cell.seed = seed;
                cells.push_back(std::move(cell));
            }
        }
    }
    // Learned cells are far slower; start them first so the pool drains evenly.
    std::vector<std::size_t> order(cells.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_partition(order.begin(), order.end(),
                          [&](std::size_t i) { return is_learned(cells[i].agent); });

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (;;) {
            const auto k = next.fetch_add(1);
            if (k >= order.size()) return;
            auto& cell = cells[order[k]];
            try {
                cell.stats = run_cell(config, cell.agent, cell.capacity, cell.seed);
                cell.ok = true;
            } catch (const std::exception& e) {
                cell.error = e.what();
            }
        }
    };
    const auto n_threads = static_cast<std::size_t>(config.workers);
    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t i = 0; i < std::min(n_threads, cells.size()); ++i) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    return cells;
}

namespace {

std::string fixed(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

}  // namespace

void write_sweep_csv(std::ostream& out, const std::vector<SweepCell>& cells) {
    out << "agent,capacity,seed,mean_reward,std_reward\n";
    for (const auto& c : cells) {
        out << to_string(c.agent) << ',' << c.capacity << ',' << c.seed << ',';
        if (c.ok) out << fixed(c.stats.mean, 4) << ',' << fixed(c.stats.std, 4) << '\n';
        else out << "FAILED,FAILED\n";
    }
}

void write_sweep_table(std::ostream& out, const std::vector<SweepCell>& cells) {
    std::vector<AgentKind> agents;
    std::vector<std::size_t> capacities;
    std::map<std::pair<AgentKind, std::size_t>, std::vector<int>> pooled;
    std::map<std::pair<AgentKind, std::size_t>, bool> failed;
    for (const auto& c : cells) {
        if (std::find(agents.begin(), agents.end(), c.agent) == agents.end()) agents.push_back(c.agent);
        if (std::find(capacities.begin(), capacities.end(), c.capacity) == capacities.end()) {
            capacities.push_back(c.capacity);
        }
        auto& bucket = pooled[{c.agent, c.capacity}];
        if (c.ok) bucket.insert(bucket.end(), c.stats.totals.begin(), c.stats.totals.end());
        else failed[{c.agent, c.capacity}] = true;
    }
    out << "agent";
    for (auto cap : capacities) out << ',' << cap;
    out << '\n';
    for (auto agent : agents) {
        out << to_string(agent);
        for (auto cap : capacities) {
            out << ',';
            const auto it = pooled.find({agent, cap});
            if (it == pooled.end()) continue;
            if (failed.count({agent, cap}) || it->second.empty()) {
                out << "FAILED";
                continue;
            }
            const auto s = reward_stats(it->second);
            out << fixed(s.mean, 1) << "+-" << fixed(s.std, 1);
        }
        out << '\n';
    }
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write " + tmp.string());
        out << content;
        out.flush();
        if (!out) throw Error("write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

}  // namespace roommem

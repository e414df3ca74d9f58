#include "roommem/kb.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>
#include <utility>

namespace roommem {

namespace {

constexpr std::array kObjectNames{
    "laptop", "bowl", "train", "phone", "book", "cup", "pen", "umbrella", "guitar", "wallet",
    "keys", "glasses", "pillow", "towel", "plate", "spoon", "toothbrush", "camera", "scarf", "ball",
    "lamp", "clock", "shoe", "backpack", "bottle", "teddy", "hat", "knife", "remote", "candle"};

constexpr std::array kLocationNames{
    "desk", "cupboard", "wardrobe", "zoo", "kitchen", "lap", "shelf", "drawer", "table", "bed",
    "sofa", "closet", "bathroom", "garage", "garden", "fridge", "sink", "floor", "attic", "basement",
    "hallway", "office", "pocket", "bag", "counter", "nightstand", "circus", "library", "porch",
    "balcony", "cabinet", "mantel", "stage", "station", "car", "box"};

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(first, last - first + 1));
}

template <std::size_t N>
std::vector<std::string> pick_names(const std::array<const char*, N>& pool, int count, Rng& rng) {
    std::vector<std::string> names(pool.begin(), pool.end());
    for (std::size_t i = names.size(); i > 1; --i) {
        std::swap(names[i - 1], names[rng.below(i)]);
    }
    std::vector<std::string> out;
    out.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        const auto base = names[static_cast<std::size_t>(i) % names.size()];
        const int round = i / static_cast<int>(names.size());
        out.push_back(round == 0 ? base : base + std::to_string(round + 1));
    }
    return out;
}

}  // namespace

KnowledgeBase::KnowledgeBase(std::vector<KbEdge> edges) : edges_(std::move(edges)) {
    if (edges_.empty()) throw Error("knowledge base: no objects");
    std::set<std::pair<std::string, std::string>> seen;
    std::set<std::string> objects_seen, locations_seen;
    for (const auto& e : edges_) {
        if (e.object.empty() || e.location.empty()) {
            throw Error("knowledge base: empty name in edge");
        }
        if (!(e.weight > 0.0) || !std::isfinite(e.weight)) {
            throw Error("knowledge base: non-positive weight for (" + e.object + ", " +
                        e.location + ")");
        }
        if (!seen.emplace(e.object, e.location).second) {
            throw Error("knowledge base: duplicate pair (" + e.object + ", " + e.location + ")");
        }
        if (objects_seen.insert(e.object).second) objects_.push_back(e.object);
        if (locations_seen.insert(e.location).second) locations_.push_back(e.location);
    }

    std::unordered_map<std::string, const KbEdge*> best;
    for (const auto& e : edges_) {
        auto [it, inserted] = best.try_emplace(e.object, &e);
        if (inserted) continue;
        const KbEdge* cur = it->second;
        if (e.weight > cur->weight || (e.weight == cur->weight && e.location < cur->location)) {
            it->second = &e;
        }
    }
    for (const auto& [object, edge] : best) commonsense_.emplace(object, edge->location);
}

bool KnowledgeBase::has_object(std::string_view object) const {
    return commonsense_.count(std::string(object)) != 0;
}

bool KnowledgeBase::has_location(std::string_view location) const {
    return std::find(locations_.begin(), locations_.end(), location) != locations_.end();
}

const std::string& KnowledgeBase::commonsense_location(std::string_view object) const {
    auto it = commonsense_.find(std::string(object));
    if (it == commonsense_.end()) throw Error("unknown object: " + std::string(object));
    return it->second;
}

KnowledgeBase parse_kb(std::istream& in, const std::string& source_name) {
    std::vector<KbEdge> edges;
    std::set<std::pair<std::string, std::string>> seen;
    std::string line;
    int lineno = 0;
    auto fail = [&](const std::string& what) -> ConfigError {
        return ConfigError(source_name + ":" + std::to_string(lineno) + ": " + what);
    };
    while (std::getline(in, line)) {
        ++lineno;
        const auto stripped = trim(line);
        if (stripped.empty() || stripped.front() == '#') continue;

        std::vector<std::string> fields;
        std::string_view rest = line;
        while (true) {
            const auto tab = rest.find('\t');
            fields.push_back(trim(rest.substr(0, tab)));
            if (tab == std::string_view::npos) break;
            rest.remove_prefix(tab + 1);
        }
        if (fields.size() != 3) throw fail("expected 3 tab-separated fields");
        if (fields[0].empty() || fields[1].empty()) throw fail("empty object or location");

        double weight = 0.0;
        const auto& w = fields[2];
        const auto [ptr, ec] = std::from_chars(w.data(), w.data() + w.size(), weight);
        if (ec != std::errc{} || ptr != w.data() + w.size()) throw fail("bad weight '" + w + "'");
        if (!(weight > 0.0) || !std::isfinite(weight)) throw fail("weight must be positive");
        if (!seen.emplace(fields[0], fields[1]).second) {
            throw fail("duplicate pair (" + fields[0] + ", " + fields[1] + ")");
        }
        edges.push_back({fields[0], fields[1], weight});
    }
    if (edges.empty()) throw ConfigError(source_name + ": no objects");
    return KnowledgeBase(std::move(edges));
}

KnowledgeBase load_kb(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open knowledge base file " + path.string());
    return parse_kb(in, path.string());
}

void write_kb(std::ostream& out, const KnowledgeBase& kb) {
    out << "# object\tlocation\tweight\n";
    for (const auto& e : kb.edges()) {
        char buf[64];
        const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, e.weight);
        out << e.object << '\t' << e.location << '\t' << std::string_view(buf, ptr - buf) << '\n';
    }
}

void save_kb(const std::filesystem::path& path, const KnowledgeBase& kb) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    write_kb(out, kb);
}

KnowledgeBase generate_synthetic_kb(std::uint64_t seed, int n_objects, int n_locations) {
    if (n_objects < 1) throw ConfigError("n_objects must be >= 1");
    if (n_locations < 2) throw ConfigError("n_locations must be >= 2");
    if (n_locations > 4 * n_objects) {
        throw ConfigError("n_locations must be <= 4 * n_objects so every location has an edge");
    }
    Rng rng(mix_seed(seed, 0x6b62));
    const auto objects = pick_names(kObjectNames, n_objects, rng);
    const auto locations = pick_names(kLocationNames, n_locations, rng);
    const auto n_obj = static_cast<std::size_t>(n_objects);
    const auto n_loc = static_cast<std::size_t>(n_locations);
    const auto max_distractors = static_cast<std::size_t>(std::min(3, n_locations - 1));

    std::vector<std::size_t> commonsense(n_obj);
    std::vector<std::vector<std::size_t>> distractors(n_obj);
    std::vector<int> cover(n_loc, 0);
    auto taken = [&](std::size_t o, std::size_t l) {
        return commonsense[o] == l ||
               std::find(distractors[o].begin(), distractors[o].end(), l) != distractors[o].end();
    };

    for (std::size_t o = 0; o < n_obj; ++o) {
        commonsense[o] = rng.below(n_loc);
        ++cover[commonsense[o]];
        const auto count = static_cast<std::size_t>(rng.between(1, static_cast<int>(max_distractors)));
        while (distractors[o].size() < count) {
            const auto l = rng.below(n_loc);
            if (taken(o, l)) continue;
            distractors[o].push_back(l);
            ++cover[l];
        }
    }

    // Give uncovered locations to an object with a free distractor slot,
    // retargeting a doubly-covered distractor when every object is full.
    for (std::size_t l = 0; l < n_loc; ++l) {
        if (cover[l] > 0) continue;
        bool placed = false;
        for (std::size_t step = 0; step < n_obj && !placed; ++step) {
            const auto o = (l + step) % n_obj;
            if (distractors[o].size() < max_distractors && !taken(o, l)) {
                distractors[o].push_back(l);
                ++cover[l];
                placed = true;
            }
        }
        for (std::size_t step = 0; step < n_obj && !placed; ++step) {
            const auto o = (l + step) % n_obj;
            for (auto& d : distractors[o]) {
                if (cover[d] > 1 && !taken(o, l)) {
                    --cover[d];
                    d = l;
                    ++cover[l];
                    placed = true;
                    break;
                }
            }
        }
        for (std::size_t step = 0; step < n_obj && !placed; ++step) {
            const auto o = (l + step) % n_obj;
            if (cover[commonsense[o]] > 1 && !taken(o, l)) {
                --cover[commonsense[o]];
                commonsense[o] = l;
                ++cover[l];
                placed = true;
            }
        }
        if (!placed) throw Error("synthetic kb: could not cover location " + locations[l]);
    }

    // Weights on a 1/1000 grid so the TSV form reparses to identical doubles.
    std::vector<KbEdge> edges;
    for (std::size_t o = 0; o < n_obj; ++o) {
        std::vector<KbEdge> mine;
        mine.push_back({objects[o], locations[commonsense[o]],
                        static_cast<double>(2000 + rng.below(3001)) / 1000.0});
        for (const auto l : distractors[o]) {
            mine.push_back({objects[o], locations[l], static_cast<double>(1 + rng.below(1000)) / 1000.0});
        }
        // Commonsense edge is not always listed first.
        for (std::size_t i = mine.size(); i > 1; --i) std::swap(mine[i - 1], mine[rng.below(i)]);
        for (auto& e : mine) edges.push_back(std::move(e));
    }
    return KnowledgeBase(std::move(edges));
}

}  // namespace roommem

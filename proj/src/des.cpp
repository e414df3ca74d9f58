#include "roommem/des.hpp"

#include <algorithm>
#include <array>
#include <numeric>

namespace roommem {

namespace {

constexpr std::array kFirstNames{
    "Alice", "Bob",    "Ann",   "Frank",  "Carol", "Dave",  "Eve",   "Grace", "Heidi", "Ivan",
    "Judy",  "Karl",   "Laura", "Mallory", "Nina", "Oscar", "Peggy", "Quinn", "Rupert", "Sybil",
    "Trent", "Ursula", "Victor", "Wendy", "Xavier", "Yara", "Zoe",   "Liam",  "Mia",   "Noah",
    "Olga",  "Paul"};

constexpr std::uint32_t kDesFormat = 1;

}  // namespace

std::string human_name(int index) {
    const auto n = static_cast<int>(kFirstNames.size());
    std::string name = kFirstNames[static_cast<std::size_t>(index % n)];
    if (index >= n) name += std::to_string(index / n + 1);
    return name;
}

int Routine::cycle_length() const {
    int total = 0;
    for (const auto& s : segments) total += s.duration;
    return total;
}

std::size_t Routine::segment_at(int offset) const {
    for (std::size_t i = 0; i < segments.size(); ++i) {
        if (offset < segments[i].duration) return i;
        offset -= segments[i].duration;
    }
    return segments.size() - 1;
}

void Routine::validate() const {
    if (segments.empty()) throw Error("routine needs at least one segment");
    for (const auto& s : segments) {
        if (s.duration < 1) throw Error("routine segment duration must be >= 1");
    }
}

void DesOptions::validate() const {
    if (location_capacity < 1) throw ConfigError("location_capacity must be >= 1");
    if (min_segments < 1 || max_segments < min_segments) {
        throw ConfigError("routine segment bounds must satisfy 1 <= min <= max");
    }
    if (min_duration < 1 || max_duration < min_duration) {
        throw ConfigError("routine duration bounds must satisfy 1 <= min <= max");
    }
}

RoomDes::RoomDes(std::vector<std::string> locations, std::vector<Human> humans,
                 int location_capacity)
    : locations_(std::move(locations)), humans_(std::move(humans)), capacity_(location_capacity) {
    if (capacity_ < 1) throw ConfigError("location capacity must be >= 1");
    build_indices();
    for (const auto& h : humans_) {
        h.routine.validate();
        if (h.name.find('\'') != std::string::npos) {
            throw Error("human names may not contain apostrophes: " + h.name);
        }
        for (const auto& s : h.routine.segments) location_index(s.location);
    }
    if (static_cast<std::size_t>(capacity_) * locations_.size() < humans_.size()) {
        throw ConfigError("total location capacity is smaller than the number of humans");
    }

    // Initial placement: segment 0, else later segments, else the first
    // location with room.
    occupancy_.assign(locations_.size(), 0);
    current_.assign(humans_.size(), 0);
    for (std::size_t i = 0; i < humans_.size(); ++i) {
        auto& h = humans_[i];
        std::optional<std::size_t> where;
        for (std::size_t k = 0; k < h.routine.segments.size() && !where; ++k) {
            const auto loc = location_index(h.routine.segments[k].location);
            if (occupancy_[loc] < capacity_) where = loc;
        }
        for (std::size_t loc = 0; loc < locations_.size() && !where; ++loc) {
            if (occupancy_[loc] < capacity_) where = loc;
        }
        current_[i] = *where;
        ++occupancy_[*where];
        h.segment = 0;
    }
}

void RoomDes::build_indices() {
    location_lookup_.clear();
    human_lookup_.clear();
    for (std::size_t i = 0; i < locations_.size(); ++i) {
        if (!location_lookup_.emplace(locations_[i], i).second) {
            throw Error("duplicate location " + locations_[i]);
        }
    }
    for (std::size_t i = 0; i < humans_.size(); ++i) {
        if (!human_lookup_.emplace(humans_[i].name, i).second) {
            throw Error("duplicate human name " + humans_[i].name);
        }
    }
}

std::size_t RoomDes::location_index(std::string_view name) const {
    auto it = location_lookup_.find(std::string(name));
    if (it == location_lookup_.end()) throw Error("unknown location: " + std::string(name));
    return it->second;
}

std::size_t RoomDes::human_index(std::string_view name) const {
    auto it = human_lookup_.find(std::string(name));
    if (it == human_lookup_.end()) throw Error("unknown human: " + std::string(name));
    return it->second;
}

std::vector<DesEvent> RoomDes::tick() {
    ++timestep_;
    std::vector<DesEvent> events;
    for (std::size_t i = 0; i < humans_.size(); ++i) {
        auto& h = humans_[i];
        const auto& segments = h.routine.segments;
        const int offset = static_cast<int>(h.steps % h.routine.cycle_length());
        ++h.steps;
        const auto next = h.routine.segment_at(offset);
        if (next == h.segment) continue;
        h.segment = next;

        const auto here = current_[i];
        for (std::size_t k = 0; k < segments.size(); ++k) {
            const auto loc = location_index(segments[(next + k) % segments.size()].location);
            if (loc == here) break;
            if (occupancy_[loc] < capacity_) {
                --occupancy_[here];
                ++occupancy_[loc];
                current_[i] = loc;
                events.push_back({h.name, h.object, locations_[here], locations_[loc]});
                break;
            }
        }
    }
    return events;
}

const std::string& RoomDes::true_location(std::string_view human) const {
    return locations_[current_[human_index(human)]];
}

int RoomDes::occupancy(std::string_view location) const {
    return occupancy_[location_index(location)];
}

bool RoomDes::invariants_hold() const {
    std::vector<int> count(locations_.size(), 0);
    for (const auto loc : current_) ++count[loc];
    for (std::size_t l = 0; l < locations_.size(); ++l) {
        if (count[l] != occupancy_[l] || occupancy_[l] > capacity_) return false;
    }
    return true;
}

void RoomDes::serialize(ByteWriter& w) const {
    w.u32(kDesFormat);
    w.i64(capacity_);
    w.i64(timestep_);
    w.u64(locations_.size());
    for (const auto& l : locations_) w.str(l);
    w.u64(humans_.size());
    for (std::size_t i = 0; i < humans_.size(); ++i) {
        const auto& h = humans_[i];
        w.str(h.name);
        w.str(h.object);
        w.u64(h.routine.segments.size());
        for (const auto& s : h.routine.segments) {
            w.str(s.location);
            w.i64(s.duration);
        }
        w.i64(h.steps);
        w.u64(h.segment);
        w.u64(current_[i]);
    }
}

RoomDes RoomDes::deserialize(ByteReader& r) {
    if (r.u32() != kDesFormat) throw Error("room snapshot: unsupported DES format");
    RoomDes des;
    des.capacity_ = static_cast<int>(r.i64());
    des.timestep_ = r.i64();
    const auto n_loc = r.count(1 << 20);
    for (std::size_t i = 0; i < n_loc; ++i) des.locations_.push_back(r.str());
    const auto n_humans = r.count(1 << 20);
    for (std::size_t i = 0; i < n_humans; ++i) {
        Human h;
        h.name = r.str();
        h.object = r.str();
        const auto n_seg = r.count(1 << 16);
        for (std::size_t k = 0; k < n_seg; ++k) {
            RoutineSegment s;
            s.location = r.str();
            s.duration = static_cast<int>(r.i64());
            h.routine.segments.push_back(std::move(s));
        }
        h.routine.validate();
        h.steps = r.i64();
        h.segment = static_cast<std::size_t>(r.u64());
        if (h.segment >= h.routine.segments.size()) throw Error("room snapshot: bad segment");
        const auto loc = static_cast<std::size_t>(r.u64());
        if (loc >= n_loc) throw Error("room snapshot: bad location index");
        des.current_.push_back(loc);
        des.humans_.push_back(std::move(h));
    }
    des.build_indices();
    des.occupancy_.assign(n_loc, 0);
    for (const auto loc : des.current_) ++des.occupancy_[loc];
    if (!des.invariants_hold()) throw Error("room snapshot: occupancy exceeds capacity");
    return des;
}

bool RoomDes::operator==(const RoomDes& other) const {
    return locations_ == other.locations_ && humans_ == other.humans_ &&
           current_ == other.current_ && occupancy_ == other.occupancy_ &&
           capacity_ == other.capacity_ && timestep_ == other.timestep_;
}

RoomDes init_des(int n_humans, const KnowledgeBase& kb, double p_commonsense, std::uint64_t seed,
                 const DesOptions& options) {
    if (n_humans < 1) throw ConfigError("n_humans must be >= 1");
    if (!(p_commonsense >= 0.0 && p_commonsense <= 1.0)) {
        throw ConfigError("p_commonsense must be in [0, 1]");
    }
    if (kb.locations().size() < 2) throw ConfigError("knowledge base needs >= 2 locations");
    options.validate();

    Rng rng(mix_seed(seed, 0xde5));
    const auto& objects = kb.objects();
    const auto& locations = kb.locations();
    std::vector<Human> humans;
    humans.reserve(static_cast<std::size_t>(n_humans));
    for (int i = 0; i < n_humans; ++i) {
        Human h;
        h.name = human_name(i);
        h.object = objects[rng.below(objects.size())];
        const auto& home = kb.commonsense_location(h.object);
        const int n_segments = rng.between(options.min_segments, options.max_segments);
        for (int s = 0; s < n_segments; ++s) {
            RoutineSegment seg;
            if (rng.bernoulli(p_commonsense)) {
                seg.location = home;
            } else {
                // Uniform over the locations other than the commonsense one.
                auto pick = rng.below(locations.size() - 1);
                const auto home_index = static_cast<std::size_t>(
                    std::find(locations.begin(), locations.end(), home) - locations.begin());
                if (pick >= home_index) ++pick;
                seg.location = locations[pick];
            }
            seg.duration = rng.between(options.min_duration, options.max_duration);
            h.routine.segments.push_back(std::move(seg));
        }
        humans.push_back(std::move(h));
    }
    return RoomDes(locations, std::move(humans), options.location_capacity);
}

}  // namespace roommem

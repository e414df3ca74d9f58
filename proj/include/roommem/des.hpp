#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "roommem/common.hpp"
#include "roommem/kb.hpp"
#include "roommem/serialize.hpp"

namespace roommem {

struct RoutineSegment {
    std::string location;
    int duration = 1;

    bool operator==(const RoutineSegment&) const = default;
};

// Cyclic schedule of where a human keeps its object.
struct Routine {
    std::vector<RoutineSegment> segments;

    int cycle_length() const;
    // Index of the segment covering `offset` within one cycle.
    std::size_t segment_at(int offset) const;
    void validate() const;

    bool operator==(const Routine&) const = default;
};

struct Human {
    std::string name;
    std::string object;
    Routine routine;
    // Ticks taken so far; the segment in force after tick n (n >= 1) is the
    // one covering offset (n - 1) mod cycle_length.
    std::int64_t steps = 0;
    std::size_t segment = 0;

    bool operator==(const Human&) const = default;
};

struct DesEvent {
    std::string human;
    std::string object;
    std::string from;
    std::string to;

    bool operator==(const DesEvent&) const = default;
};

struct DesOptions {
    int location_capacity = 8;
    int min_segments = 2;
    int max_segments = 5;
    int min_duration = 1;
    int max_duration = 4;

    void validate() const;
    bool operator==(const DesOptions&) const = default;
};

// Ground-truth room. Humans move only their own object, following their
// routine, and never push a location past its capacity.
class RoomDes {
public:
    RoomDes() = default;
    RoomDes(std::vector<std::string> locations, std::vector<Human> humans, int location_capacity);

    std::vector<DesEvent> tick();

    const std::string& true_location(std::string_view human) const;

    const std::vector<Human>& humans() const { return humans_; }
    const std::vector<std::string>& locations() const { return locations_; }
    std::int64_t timestep() const { return timestep_; }
    int occupancy(std::string_view location) const;
    int capacity() const { return capacity_; }
    const std::string& location_of(std::size_t human_index) const {
        return locations_[current_[human_index]];
    }

    // Checks occupancy <= capacity and occupancy == multiset of locations.
    bool invariants_hold() const;

    void serialize(ByteWriter& w) const;
    static RoomDes deserialize(ByteReader& r);

    bool operator==(const RoomDes& other) const;

private:
    std::size_t location_index(std::string_view name) const;
    std::size_t human_index(std::string_view name) const;
    void build_indices();

    std::vector<std::string> locations_;
    std::vector<Human> humans_;
    std::vector<std::size_t> current_;
    std::vector<int> occupancy_;
    int capacity_ = 8;
    std::int64_t timestep_ = 0;
    std::unordered_map<std::string, std::size_t> location_lookup_;
    std::unordered_map<std::string, std::size_t> human_lookup_;
};

// Builds a seeded room: each human draws an object uniformly from the KB and a
// routine whose segments sit at the object's commonsense location with
// probability p_commonsense, otherwise uniformly at one of the other locations.
RoomDes init_des(int n_humans, const KnowledgeBase& kb, double p_commonsense, std::uint64_t seed,
                 const DesOptions& options = {});

std::string human_name(int index);

}  // namespace roommem

#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "roommem/common.hpp"

namespace roommem {

struct KbEdge {
    std::string object;
    std::string location;
    double weight = 0.0;

    bool operator==(const KbEdge&) const = default;
};

// Object -> location commonsense knowledge. Immutable once built.
//
// Invariants checked at construction: weights are positive and finite, each
// (object, location) pair occurs once, and every object has an edge. The
// vocabulary lists are in first-appearance order over the edge list.
class KnowledgeBase {
public:
    KnowledgeBase() = default;
    explicit KnowledgeBase(std::vector<KbEdge> edges);

    const std::vector<std::string>& objects() const { return objects_; }
    const std::vector<std::string>& locations() const { return locations_; }
    const std::vector<KbEdge>& edges() const { return edges_; }

    bool has_object(std::string_view object) const;
    bool has_location(std::string_view location) const;

    // Highest-weight location for the object; equal weights resolve to the
    // lexicographically smallest location name.
    const std::string& commonsense_location(std::string_view object) const;

    bool operator==(const KnowledgeBase& other) const { return edges_ == other.edges_; }

private:
    std::vector<KbEdge> edges_;
    std::vector<std::string> objects_;
    std::vector<std::string> locations_;
    std::unordered_map<std::string, std::string> commonsense_;
};

KnowledgeBase parse_kb(std::istream& in, const std::string& source_name = "<stream>");
KnowledgeBase load_kb(const std::filesystem::path& path);

// TSV writer; output parses back to an equal KnowledgeBase.
void write_kb(std::ostream& out, const KnowledgeBase& kb);
void save_kb(const std::filesystem::path& path, const KnowledgeBase& kb);

// Seeded synthetic stand-in for a ConceptNet location subset. Every object
// gets one commonsense edge with weight in [2, 5] and 1-3 distractor edges
// with weight in (0, 1]. Distractors are spread so every location occurs in
// some edge, which needs n_locations <= 4 * n_objects.
KnowledgeBase generate_synthetic_kb(std::uint64_t seed, int n_objects, int n_locations);

}  // namespace roommem

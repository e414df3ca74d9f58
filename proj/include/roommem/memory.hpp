#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "roommem/common.hpp"
#include "roommem/kb.hpp"

namespace roommem {

enum class MemoryKind { short_term, episodic, semantic };

// Index order matches the Q-network output layout.
enum class Action : int { forget = 0, to_episodic = 1, to_semantic = 2 };
inline constexpr int kNumActions = 3;

std::string_view to_string(MemoryKind kind);
std::string_view to_string(Action action);
MemoryKind parse_memory_kind(std::string_view text);

// (head, relation, tail, value). value is a timestamp for short-term and
// episodic entries and a strength for semantic ones.
struct Quadruple {
    std::string head;
    std::string relation = kAtLocation;
    std::string tail;
    std::int64_t value = 0;

    bool operator==(const Quadruple&) const = default;
};

struct Question {
    std::string head;
    std::string relation = kAtLocation;

    bool operator==(const Question&) const = default;
};

struct OwnedObject {
    std::string human;
    std::string object;

    bool operator==(const OwnedObject&) const = default;
};

// "<human>'s <object>"
std::string format_owner(std::string_view human, std::string_view object);
OwnedObject strip_owner(std::string_view head);

// Bounded, insertion-ordered list of quadruples. Eviction policy lives in the
// free functions below; the class only guards the capacity bound and the
// semantic (head, tail) uniqueness.
class MemorySystem {
public:
    MemorySystem() = default;
    MemorySystem(MemoryKind kind, std::size_t capacity) : kind_(kind), capacity_(capacity) {}

    MemoryKind kind() const { return kind_; }
    std::size_t capacity() const { return capacity_; }
    const std::vector<Quadruple>& entries() const { return entries_; }
    std::size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }
    bool full() const { return entries_.size() >= capacity_; }

    void push(Quadruple q);
    Quadruple remove_at(std::size_t index);
    Quadruple& at(std::size_t index) { return entries_.at(index); }

    bool operator==(const MemorySystem&) const = default;

private:
    MemoryKind kind_ = MemoryKind::short_term;
    std::size_t capacity_ = 0;
    std::vector<Quadruple> entries_;
};

// The agent's three memories. Copies are deep and serve as state snapshots.
struct MemoryState {
    MemorySystem short_term{MemoryKind::short_term, 1};
    MemorySystem episodic{MemoryKind::episodic, 0};
    MemorySystem semantic{MemoryKind::semantic, 0};

    MemoryState() = default;
    MemoryState(std::size_t short_capacity, std::size_t episodic_capacity,
                std::size_t semantic_capacity)
        : short_term(MemoryKind::short_term, short_capacity),
          episodic(MemoryKind::episodic, episodic_capacity),
          semantic(MemoryKind::semantic, semantic_capacity) {}

    bool operator==(const MemoryState&) const = default;
};

// Appends an observation to short-term memory; throws when it is full.
void observe(MemorySystem& short_term, const Quadruple& observation);

// Moves the oldest short-term entry according to `action`. Episodic memory
// drops its oldest entry when full; semantic memory drops its weakest (the
// earliest inserted among equals) unless the generalized fact is already
// present, in which case that entry's strength goes up by one.
void apply_action(MemorySystem& short_term, MemorySystem& episodic, MemorySystem& semantic,
                  Action action);
void apply_action(MemoryState& state, Action action);

// Most recent relevant episodic entry, else strongest relevant semantic
// entry, else nothing. Equal timestamps or strengths go to the entry
// inserted last.
std::optional<Quadruple> retrieve(const Question& question, const MemorySystem& episodic,
                                  const MemorySystem& semantic);

inline std::optional<std::string> answer_of(const std::optional<Quadruple>& retrieved) {
    if (!retrieved) return std::nullopt;
    return retrieved->tail;
}

// Seeds an empty semantic memory with one strength-1 commonsense fact per
// object, in KB order, until capacity.
void prefill_semantic(MemorySystem& semantic, const KnowledgeBase& kb);

// kind<TAB>head<TAB>relation<TAB>tail<TAB>value, one entry per line.
void write_memory(std::ostream& out, const MemorySystem& m);
std::string memory_to_text(const MemoryState& state);

}  // namespace roommem

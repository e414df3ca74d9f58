#include "roommem/memory.hpp"

#include <ostream>
#include <sstream>

namespace roommem {

namespace {

constexpr std::string_view kOwnerSeparator = "'s ";

// Index of the entry with the smallest value; earliest inserted on ties.
std::size_t min_value_index(const std::vector<Quadruple>& entries) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < entries.size(); ++i) {
        if (entries[i].value < entries[best].value) best = i;
    }
    return best;
}

}  // namespace

std::string_view to_string(MemoryKind kind) {
    switch (kind) {
        case MemoryKind::short_term: return "short_term";
        case MemoryKind::episodic: return "episodic";
        case MemoryKind::semantic: return "semantic";
    }
    return "?";
}

std::string_view to_string(Action action) {
    switch (action) {
        case Action::forget: return "forget";
        case Action::to_episodic: return "to_episodic";
        case Action::to_semantic: return "to_semantic";
    }
    return "?";
}

MemoryKind parse_memory_kind(std::string_view text) {
    if (text == "short_term") return MemoryKind::short_term;
    if (text == "episodic") return MemoryKind::episodic;
    if (text == "semantic") return MemoryKind::semantic;
    throw Error("unknown memory kind: " + std::string(text));
}

std::string format_owner(std::string_view human, std::string_view object) {
    std::string head;
    head.reserve(human.size() + kOwnerSeparator.size() + object.size());
    head.append(human).append(kOwnerSeparator).append(object);
    return head;
}

OwnedObject strip_owner(std::string_view head) {
    const auto pos = head.find(kOwnerSeparator);
    if (pos == std::string_view::npos || pos == 0 || pos + kOwnerSeparator.size() >= head.size()) {
        throw Error("malformed owner-qualified head: '" + std::string(head) + "'");
    }
    const auto human = head.substr(0, pos);
    if (human.find('\'') != std::string_view::npos) {
        throw Error("malformed owner-qualified head: '" + std::string(head) + "'");
    }
    return {std::string(human), std::string(head.substr(pos + kOwnerSeparator.size()))};
}

void MemorySystem::push(Quadruple q) {
    if (full()) {
        throw Error(std::string(to_string(kind_)) + " memory overflow (capacity " +
                    std::to_string(capacity_) + ")");
    }
    entries_.push_back(std::move(q));
}

Quadruple MemorySystem::remove_at(std::size_t index) {
    Quadruple q = std::move(entries_.at(index));
    entries_.erase(entries_.begin() + static_cast<std::ptrdiff_t>(index));
    return q;
}

void observe(MemorySystem& short_term, const Quadruple& observation) {
    if (short_term.kind() != MemoryKind::short_term) {
        throw Error("observe: target is not a short-term memory");
    }
    short_term.push(observation);
}

void apply_action(MemorySystem& short_term, MemorySystem& episodic, MemorySystem& semantic,
                  Action action) {
    if (short_term.empty()) throw Error("apply_action: short-term memory is empty");
    Quadruple q = short_term.remove_at(min_value_index(short_term.entries()));

    switch (action) {
        case Action::forget:
            return;
        case Action::to_episodic:
            if (episodic.capacity() == 0) return;
            if (episodic.full()) episodic.remove_at(min_value_index(episodic.entries()));
            episodic.push(std::move(q));
            return;
        case Action::to_semantic: {
            const auto object = strip_owner(q.head).object;
            for (std::size_t i = 0; i < semantic.size(); ++i) {
                auto& e = semantic.at(i);
                if (e.head == object && e.relation == q.relation && e.tail == q.tail) {
                    ++e.value;
                    return;
                }
            }
            if (semantic.capacity() == 0) return;
            if (semantic.full()) semantic.remove_at(min_value_index(semantic.entries()));
            semantic.push({object, q.relation, q.tail, 1});
            return;
        }
    }
    throw Error("apply_action: invalid action");
}

void apply_action(MemoryState& state, Action action) {
    apply_action(state.short_term, state.episodic, state.semantic, action);
}

std::optional<Quadruple> retrieve(const Question& question, const MemorySystem& episodic,
                                  const MemorySystem& semantic) {
    const Quadruple* best = nullptr;
    for (const auto& e : episodic.entries()) {
        if (e.head != question.head || e.relation != question.relation) continue;
        if (!best || e.value >= best->value) best = &e;
    }
    if (best) return *best;

    const auto pos = question.head.find(kOwnerSeparator);
    const std::string_view object =
        pos == std::string::npos ? std::string_view(question.head)
                                 : std::string_view(question.head).substr(pos + kOwnerSeparator.size());
    for (const auto& e : semantic.entries()) {
        if (e.head != object || e.relation != question.relation) continue;
        if (!best || e.value >= best->value) best = &e;
    }
    if (best) return *best;
    return std::nullopt;
}

void prefill_semantic(MemorySystem& semantic, const KnowledgeBase& kb) {
    if (semantic.kind() != MemoryKind::semantic) {
        throw Error("prefill_semantic: target is not a semantic memory");
    }
    if (!semantic.empty()) throw Error("prefill_semantic: semantic memory is not empty");
    for (const auto& object : kb.objects()) {
        if (semantic.full()) break;
        semantic.push({object, kAtLocation, kb.commonsense_location(object), 1});
    }
}

void write_memory(std::ostream& out, const MemorySystem& m) {
    for (const auto& e : m.entries()) {
        out << to_string(m.kind()) << '\t' << e.head << '\t' << e.relation << '\t' << e.tail << '\t'
            << e.value << '\n';
    }
}

std::string memory_to_text(const MemoryState& state) {
    std::ostringstream out;
    write_memory(out, state.short_term);
    write_memory(out, state.episodic);
    write_memory(out, state.semantic);
    return out.str();
}

}  // namespace roommem

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "roommem/des.hpp"
#include "roommem/kb.hpp"
#include "roommem/memory.hpp"

namespace roommem {

// One observation: (<human>'s <object>, AtLocation, location, step).
using Observation = Quadruple;

struct EnvConfig {
    int n_humans = 64;
    int n_objects = 16;
    int n_object_locations = 28;
    double p_commonsense = 0.5;
    int episode_length = 128;
    // Drives question sampling only. The room itself (knowledge base, humans,
    // routines) comes from kb_seed / des_seed and stays fixed across episodes.
    std::uint64_t seed = 0;
    std::uint64_t kb_seed = 7;
    std::uint64_t des_seed = 1;
    // When set, the knowledge base is loaded from this TSV instead of generated.
    std::string kb_path;
    DesOptions des;

    void validate() const;
    bool operator==(const EnvConfig&) const = default;
};

KnowledgeBase build_kb(const EnvConfig& config);

struct StepResult {
    std::optional<Observation> observation;
    std::optional<Question> question;
    int reward = 0;
    bool done = false;
};

// Partially observable question-answering wrapper over the room DES. The
// agent sees one human per step in round-robin order and is asked where an
// already-observed human's object is. Answers are graded against the
// location recorded at that human's most recent observation.
class RoomEnv {
public:
    struct Reset {
        Observation observation;
        Question question;
    };

    explicit RoomEnv(const EnvConfig& config);
    // Shares an already-built knowledge base across environments.
    RoomEnv(const EnvConfig& config, const KnowledgeBase& kb);

    Reset reset();
    StepResult step(const std::optional<std::string>& answer);

    // Opaque versioned blob; restore(snapshot()) continues identically.
    std::string snapshot() const;
    static RoomEnv restore(const std::string& blob);

    const EnvConfig& config() const { return config_; }
    const KnowledgeBase& kb() const { return kb_; }
    const RoomDes& des() const { return des_; }
    int steps_taken() const { return step_; }
    bool done() const { return done_; }
    const std::optional<Question>& pending_question() const { return question_; }
    // Location recorded at the human's most recent observation, if any.
    std::optional<std::string> ledger_location(const std::string& human) const;

    std::vector<std::string> human_names() const;

private:
    RoomEnv() = default;
    Observation advance();

    EnvConfig config_;
    KnowledgeBase kb_;
    RoomDes des_;
    Rng rng_;
    int step_ = 0;
    bool started_ = false;
    bool done_ = false;
    // Per human index: location at most recent observation.
    std::vector<std::optional<std::string>> ledger_;
    // Human indices in order of first observation.
    std::vector<std::size_t> observed_;
    std::optional<Question> question_;
    std::size_t question_human_ = 0;
};

}  // namespace roommem

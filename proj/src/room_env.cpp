#include "roommem/room_env.hpp"

#include <sstream>

#include "roommem/serialize.hpp"

namespace roommem {

namespace {

constexpr std::string_view kSnapshotMagic = "RMENV";
constexpr std::uint32_t kSnapshotVersion = 1;

void write_config(ByteWriter& w, const EnvConfig& c) {
    w.i64(c.n_humans);
    w.i64(c.n_objects);
    w.i64(c.n_object_locations);
    w.f64(c.p_commonsense);
    w.i64(c.episode_length);
    w.u64(c.seed);
    w.u64(c.kb_seed);
    w.u64(c.des_seed);
    w.str(c.kb_path);
    w.i64(c.des.location_capacity);
    w.i64(c.des.min_segments);
    w.i64(c.des.max_segments);
    w.i64(c.des.min_duration);
    w.i64(c.des.max_duration);
}

EnvConfig read_config(ByteReader& r) {
    EnvConfig c;
    c.n_humans = static_cast<int>(r.i64());
    c.n_objects = static_cast<int>(r.i64());
    c.n_object_locations = static_cast<int>(r.i64());
    c.p_commonsense = r.f64();
    c.episode_length = static_cast<int>(r.i64());
    c.seed = r.u64();
    c.kb_seed = r.u64();
    c.des_seed = r.u64();
    c.kb_path = r.str();
    c.des.location_capacity = static_cast<int>(r.i64());
    c.des.min_segments = static_cast<int>(r.i64());
    c.des.max_segments = static_cast<int>(r.i64());
    c.des.min_duration = static_cast<int>(r.i64());
    c.des.max_duration = static_cast<int>(r.i64());
    return c;
}

}  // namespace

void EnvConfig::validate() const {
    if (n_humans < 1) throw ConfigError("n_humans must be >= 1");
    if (n_objects < 1) throw ConfigError("n_objects must be >= 1");
    if (n_object_locations < 2) throw ConfigError("n_object_locations must be >= 2");
    if (!(p_commonsense >= 0.0 && p_commonsense <= 1.0)) {
        throw ConfigError("p_commonsense must be in [0, 1]");
    }
    if (episode_length < 1) throw ConfigError("episode_length must be >= 1");
    des.validate();
}

KnowledgeBase build_kb(const EnvConfig& config) {
    if (!config.kb_path.empty()) return load_kb(config.kb_path);
    return generate_synthetic_kb(config.kb_seed, config.n_objects, config.n_object_locations);
}

RoomEnv::RoomEnv(const EnvConfig& config) : RoomEnv(config, build_kb(config)) {}

RoomEnv::RoomEnv(const EnvConfig& config, const KnowledgeBase& kb) : config_(config), kb_(kb) {
    config_.validate();
}

RoomEnv::Reset RoomEnv::reset() {
    des_ = init_des(config_.n_humans, kb_, config_.p_commonsense, config_.des_seed, config_.des);
    rng_ = Rng(mix_seed(config_.seed, 0x9e57));
    step_ = 0;
    started_ = true;
    done_ = false;
    ledger_.assign(des_.humans().size(), std::nullopt);
    observed_.clear();
    question_.reset();
    auto obs = advance();
    return {std::move(obs), *question_};
}

Observation RoomEnv::advance() {
    des_.tick();
    const auto n = des_.humans().size();
    const auto who = static_cast<std::size_t>(step_) % n;
    const auto& human = des_.humans()[who];
    const auto& location = des_.location_of(who);
    if (!ledger_[who]) observed_.push_back(who);
    ledger_[who] = location;

    question_human_ = observed_[rng_.below(observed_.size())];
    const auto& asked = des_.humans()[question_human_];
    question_ = Question{format_owner(asked.name, asked.object), kAtLocation};
    return {format_owner(human.name, human.object), kAtLocation, location, step_};
}

StepResult RoomEnv::step(const std::optional<std::string>& answer) {
    if (!started_) throw Error("step called before reset");
    if (done_) throw Error("step called on a finished episode");

    StepResult result;
    result.reward = (answer && *answer == *ledger_[question_human_]) ? 1 : 0;
    ++step_;
    if (step_ >= config_.episode_length) {
        done_ = true;
        question_.reset();
        result.done = true;
        return result;
    }
    result.observation = advance();
    result.question = question_;
    return result;
}

std::optional<std::string> RoomEnv::ledger_location(const std::string& human) const {
    for (std::size_t i = 0; i < des_.humans().size(); ++i) {
        if (des_.humans()[i].name == human) return i < ledger_.size() ? ledger_[i] : std::nullopt;
    }
    throw Error("unknown human: " + human);
}

std::vector<std::string> RoomEnv::human_names() const {
    // The room is a pure function of the config, so names are known before reset.
    const RoomDes fresh = started_ ? RoomDes{}
                                   : init_des(config_.n_humans, kb_, config_.p_commonsense,
                                              config_.des_seed, config_.des);
    std::vector<std::string> names;
    for (const auto& h : (started_ ? des_ : fresh).humans()) names.push_back(h.name);
    return names;
}

std::string RoomEnv::snapshot() const {
    ByteWriter body;
    write_config(body, config_);
    body.u64(kb_.edges().size());
    for (const auto& e : kb_.edges()) {
        body.str(e.object);
        body.str(e.location);
        body.f64(e.weight);
    }
    body.u8(started_ ? 1 : 0);
    body.u8(done_ ? 1 : 0);
    body.i64(step_);
    if (started_) {
        des_.serialize(body);
        std::ostringstream rng_state;
        rng_state << rng_.engine();
        body.str(rng_state.str());
        body.u64(ledger_.size());
        for (const auto& l : ledger_) {
            body.u8(l ? 1 : 0);
            if (l) body.str(*l);
        }
        body.u64(observed_.size());
        for (const auto i : observed_) body.u64(i);
        body.u8(question_ ? 1 : 0);
        body.u64(question_human_);
    }

    ByteWriter out;
    out.raw(kSnapshotMagic);
    out.u32(kSnapshotVersion);
    out.u64(fnv1a(body.bytes()));
    out.raw(body.bytes());
    return out.take();
}

RoomEnv RoomEnv::restore(const std::string& blob) {
    ByteReader header(blob);
    if (blob.size() < kSnapshotMagic.size() || header.raw(kSnapshotMagic.size()) != kSnapshotMagic) {
        throw Error("environment snapshot: bad magic");
    }
    const auto version = header.u32();
    if (version != kSnapshotVersion) {
        throw Error("environment snapshot: version mismatch (got " + std::to_string(version) +
                    ", expected " + std::to_string(kSnapshotVersion) + ")");
    }
    const auto checksum = header.u64();
    const std::string_view body_bytes =
        std::string_view(blob).substr(kSnapshotMagic.size() + 4 + 8);
    if (fnv1a(body_bytes) != checksum) throw Error("environment snapshot: checksum mismatch");

    ByteReader r(body_bytes);
    RoomEnv env;
    env.config_ = read_config(r);
    env.config_.validate();
    std::vector<KbEdge> edges(r.count(1 << 24));
    for (auto& e : edges) {
        e.object = r.str();
        e.location = r.str();
        e.weight = r.f64();
    }
    env.kb_ = KnowledgeBase(std::move(edges));
    env.started_ = r.u8() != 0;
    env.done_ = r.u8() != 0;
    env.step_ = static_cast<int>(r.i64());
    if (env.started_) {
        env.des_ = RoomDes::deserialize(r);
        std::istringstream rng_state(r.str());
        rng_state >> env.rng_.engine();
        if (!rng_state) throw Error("environment snapshot: bad rng state");
        env.ledger_.resize(r.count(env.des_.humans().size()));
        for (auto& l : env.ledger_) {
            if (r.u8() != 0) l = r.str();
        }
        env.observed_.resize(r.count(env.des_.humans().size()));
        for (auto& i : env.observed_) {
            i = static_cast<std::size_t>(r.u64());
            if (i >= env.ledger_.size() || !env.ledger_[i]) {
                throw Error("environment snapshot: bad observed index");
            }
        }
        const bool has_question = r.u8() != 0;
        env.question_human_ = static_cast<std::size_t>(r.u64());
        if (has_question) {
            if (env.question_human_ >= env.ledger_.size() || !env.ledger_[env.question_human_]) {
                throw Error("environment snapshot: bad question index");
            }
            const auto& h = env.des_.humans()[env.question_human_];
            env.question_ = Question{format_owner(h.name, h.object), kAtLocation};
        }
    }
    r.expect_end();
    return env;
}

}  // namespace roommem

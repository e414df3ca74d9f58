#include "doctest.h"

#include <algorithm>
#include <map>
#include <set>

#include "roommem/memory.hpp"
#include "roommem/room_env.hpp"

using namespace roommem;

namespace {

struct Stream {
    std::vector<Observation> observations;
    std::vector<Question> questions;
    std::vector<int> rewards;

    bool operator==(const Stream&) const = default;
};

// Answers from a perfect per-human record of the last observation.
Stream run_perfect(RoomEnv& env, int steps, bool reset = true) {
    Stream s;
    std::map<std::string, std::string> last;
    std::optional<Observation> obs;
    std::optional<Question> q;
    if (reset) {
        auto r = env.reset();
        obs = r.observation;
        q = r.question;
    } else {
        q = env.pending_question();
    }
    for (int i = 0; i < steps && !env.done(); ++i) {
        if (obs) {
            s.observations.push_back(*obs);
            last[obs->head] = obs->tail;
        }
        s.questions.push_back(*q);
        const auto it = last.find(q->head);
        auto result = env.step(it == last.end() ? std::nullopt : std::optional(it->second));
        s.rewards.push_back(result.reward);
        obs = result.observation;
        q = result.question;
    }
    return s;
}

}  // namespace

TEST_CASE("first step") {
    RoomEnv env(EnvConfig{});
    const auto names = env.human_names();
    const auto [obs, q] = env.reset();
    CHECK(strip_owner(obs.head).human == names[0]);
    CHECK(obs.relation == kAtLocation);
    CHECK(obs.value == 0);
    CHECK(q.head == obs.head);
}

TEST_CASE("round robin, questions and ledger over a full episode") {
    EnvConfig cfg;
    cfg.seed = 5;
    RoomEnv env(cfg);
    const auto names = env.human_names();
    auto [obs, q] = env.reset();
    std::set<std::string> observed;
    int step = 0;
    int total = 0;
    for (;;) {
        CHECK(obs.value == step);
        CHECK(strip_owner(obs.head).human == names[static_cast<std::size_t>(step) % names.size()]);
        observed.insert(obs.head);
        CHECK(observed.contains(q.head));
        const auto human = strip_owner(q.head).human;
        const auto truth = env.ledger_location(human);
        REQUIRE(truth);
        const auto r = env.step(*truth);
        CHECK(r.reward == 1);
        total += r.reward;
        ++step;
        if (r.done) {
            CHECK_FALSE(r.observation);
            CHECK_FALSE(r.question);
            break;
        }
        obs = *r.observation;
        q = *r.question;
    }
    CHECK(step == 128);
    CHECK(total == 128);
    CHECK_THROWS_AS(env.step(std::nullopt), Error);
}

TEST_CASE("null and wrong answers score zero") {
    RoomEnv env(EnvConfig{});
    env.reset();
    CHECK(env.step(std::nullopt).reward == 0);
    CHECK(env.step(std::string("nowhere")).reward == 0);
}

TEST_CASE("step before reset") {
    RoomEnv env(EnvConfig{});
    CHECK_THROWS_AS(env.step(std::nullopt), Error);
}

TEST_CASE("perfect memory scores the episode length") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        EnvConfig cfg;
        cfg.seed = seed;
        RoomEnv env(cfg);
        const auto s = run_perfect(env, 1000);
        int total = 0;
        for (int r : s.rewards) total += r;
        CHECK(total == 128);
    }
}

TEST_CASE("determinism") {
    EnvConfig cfg;
    cfg.seed = 17;
    RoomEnv a(cfg), b(cfg);
    CHECK(run_perfect(a, 128) == run_perfect(b, 128));
    cfg.seed = 18;
    RoomEnv c(cfg);
    CHECK_FALSE(run_perfect(a, 128).questions == run_perfect(c, 128).questions);
}

TEST_CASE("snapshot round trip") {
    EnvConfig cfg;
    cfg.seed = 3;
    RoomEnv env(cfg);
    run_perfect(env, 20);
    const auto blob = env.snapshot();
    auto restored = RoomEnv::restore(blob);
    CHECK(restored.snapshot() == blob);
    const auto direct = run_perfect(env, 10, false);
    const auto again = run_perfect(restored, 10, false);
    CHECK(direct.questions == again.questions);
    CHECK(direct.rewards == again.rewards);

    auto corrupt = blob;
    corrupt[corrupt.size() / 2] ^= 0x5a;
    CHECK_THROWS_AS(RoomEnv::restore(corrupt), Error);
    auto versioned = blob;
    versioned[5] = 9;
    CHECK_THROWS_WITH_AS(RoomEnv::restore(versioned), doctest::Contains("version"), Error);
    CHECK_THROWS_AS(RoomEnv::restore(blob.substr(0, 10)), Error);
}

TEST_CASE("snapshot before reset and after the end") {
    RoomEnv fresh(EnvConfig{});
    auto restored = RoomEnv::restore(fresh.snapshot());
    CHECK(restored.reset().observation == fresh.reset().observation);
    run_perfect(fresh, 200, false);
    CHECK(fresh.done());
    CHECK(RoomEnv::restore(fresh.snapshot()).done());
}

TEST_CASE("snapshot size is stable across seeds") {
    std::vector<std::size_t> sizes;
    for (std::uint64_t seed = 0; seed < 8; ++seed) {
        EnvConfig cfg;
        cfg.seed = seed;
        RoomEnv env(cfg);
        run_perfect(env, 64);
        sizes.push_back(env.snapshot().size());
    }
    const auto [lo, hi] = std::minmax_element(sizes.begin(), sizes.end());
    CHECK(static_cast<double>(*hi) <= 1.1 * static_cast<double>(*lo));
}

TEST_CASE("config validation") {
    EnvConfig cfg;
    cfg.p_commonsense = 1.5;
    CHECK_THROWS_AS(RoomEnv{cfg}, ConfigError);
    cfg = {};
    cfg.episode_length = 0;
    CHECK_THROWS_AS(RoomEnv{cfg}, ConfigError);
    cfg = {};
    cfg.kb_path = "/nonexistent.tsv";
    CHECK_THROWS_AS(RoomEnv{cfg}, ConfigError);
}

TEST_CASE("random answers score far below half") {
    EnvConfig cfg;
    RoomEnv env(cfg);
    const auto locations = env.kb().locations();
    Rng rng(3);
    int total = 0;
    for (int ep = 0; ep < 10; ++ep) {
        env.reset();
        for (;;) {
            const auto r = env.step(locations[rng.below(locations.size())]);
            total += r.reward;
            if (r.done) break;
        }
    }
    CHECK(total / 10.0 < 32.0);
}

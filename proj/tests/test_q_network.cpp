#include "doctest.h"

#include <algorithm>

#include "gradcheck.hpp"
#include "roommem/policies.hpp"
#include "roommem/q_network.hpp"

using namespace roommem;
using nn::Vector;

namespace {

Vocabulary tiny_vocab() { return Vocabulary({"Bob", "Ann"}, {"laptop", "train"}, {"desk", "zoo"}); }

}  // namespace

TEST_CASE("vocabulary") {
    const auto v = tiny_vocab();
    CHECK(v.size() == 6);
    CHECK(v.human("Bob") == 0);
    CHECK(v.object("laptop") == 2);
    CHECK(v.location("zoo") == 5);
    CHECK_THROWS_AS(v.human("Eve"), Error);
    CHECK(Vocabulary::from_text(v.to_text()) == v);
    CHECK_THROWS_AS(Vocabulary({"a", "a"}, {"o"}, {"l"}), Error);
}

TEST_CASE("environment vocabulary covers everything it emits") {
    RoomEnv env(EnvConfig{});
    const auto vocab = vocabulary_for(env);
    auto [obs, q] = env.reset();
    for (;;) {
        const auto owned = strip_owner(obs.head);
        CHECK_NOTHROW(vocab.human(owned.human));
        CHECK_NOTHROW(vocab.object(owned.object));
        CHECK_NOTHROW(vocab.location(obs.tail));
        const auto r = env.step(std::nullopt);
        if (r.done) break;
        obs = *r.observation;
    }
}

TEST_CASE("kge encoding") {
    const auto vocab = tiny_vocab();
    nn::Embedding table("e", vocab.size(), 4);
    Rng rng(1);
    table.table().init_uniform(rng, 1.0);

    MemorySystem empty(MemoryKind::episodic, 2);
    CHECK(kge_encode(empty, vocab, table).empty());

    MemorySystem ep(MemoryKind::episodic, 2);
    ep.push({"Bob's laptop", kAtLocation, "desk", 42});
    const auto v = kge_encode(ep, vocab, table);
    REQUIRE(v.size() == 1);
    CHECK(v[0].size() == 12);
    CHECK(v[0].head(4) == table.lookup(vocab.human("Bob")) + table.lookup(vocab.object("laptop")));
    CHECK(v[0].segment(4, 4).isZero());
    CHECK(v[0].tail(4) == table.lookup(vocab.location("desk")));

    MemorySystem sem(MemoryKind::semantic, 2);
    sem.push({"laptop", kAtLocation, "desk", 3});
    sem.push({"train", kAtLocation, "zoo", 1});
    const auto s = kge_encode(sem, vocab, table);
    REQUIRE(s.size() == 2);
    CHECK(s[0].head(4) == table.lookup(vocab.object("train")));
    CHECK(s[1].head(4) == table.lookup(vocab.object("laptop")));

    MemorySystem bad(MemoryKind::semantic, 1);
    bad.push({"sofa", kAtLocation, "desk", 1});
    CHECK_THROWS_AS(kge_encode(bad, vocab, table), Error);
}

TEST_CASE("encoding sorts ascending and keeps insertion order among ties") {
    const auto vocab = tiny_vocab();
    Rng rng(8);
    for (int trial = 0; trial < 200; ++trial) {
        MemorySystem m(MemoryKind::episodic, 10);
        const int n = static_cast<int>(rng.below(11));
        for (int i = 0; i < n; ++i) {
            m.push({format_owner(vocab.humans()[rng.below(2)], vocab.objects()[rng.below(2)]), kAtLocation,
                    vocab.locations()[rng.below(2)], static_cast<std::int64_t>(rng.below(4))});
        }
        // Oracle: insertion sort by value, which is stable.
        auto expect = m.entries();
        for (std::size_t i = 1; i < expect.size(); ++i) {
            for (std::size_t j = i; j > 0 && expect[j - 1].value > expect[j].value; --j) std::swap(expect[j - 1], expect[j]);
        }
        const auto enc = encode_memory(m, vocab);
        REQUIRE(enc.size() == expect.size());
        for (std::size_t i = 0; i < enc.size(); ++i) {
            const auto owned = strip_owner(expect[i].head);
            CHECK(enc[i].owner == vocab.human(owned.human));
            CHECK(enc[i].object == vocab.object(owned.object));
            CHECK(enc[i].tail == vocab.location(expect[i].tail));
        }
    }
}

TEST_CASE("q forward") {
    const auto vocab = tiny_vocab();
    QNetwork net(vocab.size(), NetworkDims{4, 8, 2}, 3);
    MemoryState empty(1, 2, 2);
    const auto q = net.q_values(encode_state(empty, vocab));
    CHECK(q.size() == 3);
    CHECK(q.allFinite());

    MemoryState s(1, 2, 2);
    s.short_term.push({"Bob's laptop", kAtLocation, "desk", 1});
    s.episodic.push({"Ann's train", kAtLocation, "zoo", 0});
    s.semantic.push({"laptop", kAtLocation, "desk", 2});
    const auto enc = encode_state(s, vocab);
    CHECK(net.q_values(enc) == net.q_values(enc));
    CHECK_FALSE(net.q_values(enc) == q);

    // A batch gives the same columns as single forwards.
    std::vector<EncodedState> batch{enc, encode_state(empty, vocab), enc};
    const auto qb = net.forward(batch);
    CHECK((qb.col(0) - net.q_values(enc)).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((qb.col(1) - q).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("branches are independent") {
    const auto vocab = tiny_vocab();
    QNetwork net(vocab.size(), NetworkDims{4, 8, 2}, 3);
    MemoryState s(1, 2, 2);
    s.short_term.push({"Bob's laptop", kAtLocation, "desk", 1});
    s.episodic.push({"Ann's train", kAtLocation, "zoo", 0});
    s.semantic.push({"laptop", kAtLocation, "desk", 2});
    auto without = s;
    without.episodic = MemorySystem(MemoryKind::episodic, 2);
    std::vector<EncodedState> a{encode_state(s, vocab)}, b{encode_state(without, vocab)};
    QNetwork::Cache ca, cb;
    net.forward(a, &ca);
    net.forward(b, &cb);
    const int h = 8;
    CHECK(ca.joined.middleRows(0, h) == cb.joined.middleRows(0, h));
    CHECK(ca.joined.middleRows(2 * h, h) == cb.joined.middleRows(2 * h, h));
    CHECK_FALSE(ca.joined.middleRows(h, h) == cb.joined.middleRows(h, h));
}

TEST_CASE("full network gradients" * doctest::skip(roommem::kSinglePrecision)) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto rep = gradcheck::q_network(seed);
        CAPTURE(seed);
        CAPTURE(rep.where);
        CHECK(rep.ok);
    }
}

TEST_CASE("forward and backward leave parameters alone") {
    Rng rng(2);
    QNetwork net(7, NetworkDims{4, 8, 2}, 2);
    const auto before = save_q_network(net, Vocabulary({"a"}, {"b", "c"}, {"d", "e", "f", "g"}));
    const auto states = gradcheck::random_states(rng, 7, 4, 3);
    QNetwork::Cache cache;
    net.forward(states, &cache);
    net.backward(cache, nn::Matrix::Ones(3, 4));
    CHECK(save_q_network(net, Vocabulary({"a"}, {"b", "c"}, {"d", "e", "f", "g"})) == before);
}

TEST_CASE("greedy action") {
    CHECK(greedy_action(Vector{{0.1, 0.9, 0.3}}) == Action::to_episodic);
    CHECK(greedy_action(Vector{{0.5, 0.5, 0.2}}) == Action::forget);
    CHECK(greedy_action(Vector{{0.1, 0.2, 0.2}}) == Action::to_episodic);
    Rng rng(6);
    for (int i = 0; i < 100; ++i) {
        Vector q{{rng.uniform(), rng.uniform(), rng.uniform()}};
        const double c = 10 * rng.uniform() - 5;
        CHECK(greedy_action(q) == greedy_action(Vector((q.array() + c).matrix())));
    }
    CHECK_THROWS_AS(greedy_action(Vector{{0.1, std::nan(""), 0.3}}), Error);
    const std::vector<Real> two{1, 2};
    CHECK_THROWS_AS(greedy_action(std::span<const Real>(two)), Error);
}

TEST_CASE("parameter count at default dimensions") {
    RoomEnv env(EnvConfig{});
    const auto vocab = vocabulary_for(env);
    QNetwork net(vocab.size(), NetworkDims{}, 0);
    const auto n = static_cast<double>(net.parameter_count());
    CHECK(n >= 0.8 * 265000);
    CHECK(n <= 1.2 * 265000);
}

TEST_CASE("checkpoint round trip") {
    RoomEnv env(EnvConfig{});
    const auto vocab = vocabulary_for(env);
    QNetwork net(vocab.size(), NetworkDims{8, 16, 2}, 4);
    const auto blob = save_q_network(net, vocab);
    const auto loaded = load_q_network(blob);
    CHECK(loaded.vocab == vocab);
    CHECK(loaded.network.dims() == net.dims());
    MemoryState s(1, 2, 2);
    s.short_term.push(env.reset().observation);
    const auto enc = encode_state(s, vocab);
    CHECK(loaded.network.q_values(enc) == net.q_values(enc));
    auto corrupt = blob;
    corrupt[corrupt.size() / 3] ^= 0x10;
    CHECK_THROWS_AS(load_q_network(corrupt), Error);
}

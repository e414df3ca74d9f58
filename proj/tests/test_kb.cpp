#include "doctest.h"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "roommem/kb.hpp"

using namespace roommem;

namespace {

KnowledgeBase parse(const std::string& text) {
    std::istringstream in(text);
    return parse_kb(in, "test");
}

}  // namespace

TEST_CASE("parse two edges for one object") {
    const auto kb = parse("bowl\tcupboard\t3.0\nbowl\twardrobe\t1.0\n");
    CHECK(kb.objects() == std::vector<std::string>{"bowl"});
    CHECK(kb.locations() == std::vector<std::string>{"cupboard", "wardrobe"});
    CHECK(kb.edges().size() == 2);
    CHECK(kb.commonsense_location("bowl") == "cupboard");
}

TEST_CASE("parse errors") {
    CHECK_THROWS_WITH_AS(parse(""), doctest::Contains("no objects"), ConfigError);
    CHECK_THROWS_AS(parse("bowl\tcupboard\t3\nbowl\tcupboard\t1\n"), ConfigError);
    CHECK_THROWS_WITH_AS(parse("bowl\tcupboard\n"), doctest::Contains(":1"), ConfigError);
    CHECK_THROWS_AS(parse("bowl\tcupboard\t-1\n"), ConfigError);
    CHECK_THROWS_AS(parse("bowl\tcupboard\tnan\n"), ConfigError);
    CHECK_NOTHROW(parse("# comment\n\nbowl\tcupboard\t2\n"));
}

TEST_CASE("missing file") {
    CHECK_THROWS_AS(load_kb("/nonexistent/kb.tsv"), ConfigError);
}

TEST_CASE("commonsense location") {
    const auto single = parse("lamp\tshelf\t0.5\n");
    CHECK(single.commonsense_location("lamp") == "shelf");
    CHECK_THROWS_AS(single.commonsense_location("sofa"), Error);

    // Equal weights: the smaller name wins whichever edge comes first.
    CHECK(parse("x\tdeskA\t2\nx\tdeskB\t2\n").commonsense_location("x") == "deskA");
    CHECK(parse("x\tdeskB\t2\nx\tdeskA\t2\n").commonsense_location("x") == "deskA");
}

TEST_CASE("commonsense location ignores edge order") {
    const auto kb = generate_synthetic_kb(3, 10, 20);
    auto edges = kb.edges();
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        std::shuffle(edges.begin(), edges.end(), rng);
        const KnowledgeBase shuffled(edges);
        for (const auto& o : kb.objects()) {
            CHECK(shuffled.commonsense_location(o) == kb.commonsense_location(o));
        }
    }
}

TEST_CASE("synthetic kb at the default size") {
    const auto kb = generate_synthetic_kb(7, 16, 28);
    CHECK(kb.objects().size() == 16);
    CHECK(kb.locations().size() == 28);
    for (const auto& o : kb.objects()) {
        int top = 0;
        int edges = 0;
        for (const auto& e : kb.edges()) {
            if (e.object != o) continue;
            ++edges;
            if (e.weight >= 2.0) {
                ++top;
                CHECK(e.weight <= 5.0);
                CHECK(e.location == kb.commonsense_location(o));
            } else {
                CHECK(e.weight > 0.0);
                CHECK(e.weight <= 1.0);
            }
        }
        CHECK(top == 1);
        CHECK(edges >= 2);
        CHECK(edges <= 4);
    }
    CHECK(generate_synthetic_kb(7, 16, 28) == kb);
    CHECK_FALSE(generate_synthetic_kb(8, 16, 28) == kb);
}

TEST_CASE("synthetic kb invariants over many seeds") {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const int n_obj = 1 + static_cast<int>(seed % 20);
        const int n_loc = 2 + static_cast<int>(seed % std::min(4 * n_obj - 1, 40));
        const auto kb = generate_synthetic_kb(seed, n_obj, n_loc);
        CHECK(static_cast<int>(kb.objects().size()) == n_obj);
        CHECK(static_cast<int>(kb.locations().size()) == n_loc);
        CHECK_NOTHROW(KnowledgeBase(kb.edges()));
    }
}

TEST_CASE("synthetic kb rejects infeasible sizes") {
    CHECK_THROWS_AS(generate_synthetic_kb(7, 16, 1), ConfigError);
    CHECK_THROWS_AS(generate_synthetic_kb(7, 0, 4), ConfigError);
    CHECK_THROWS_AS(generate_synthetic_kb(7, 2, 9), ConfigError);
}

TEST_CASE("tsv round trip") {
    const auto kb = generate_synthetic_kb(7, 16, 28);
    const auto path = std::filesystem::temp_directory_path() / "roommem_kb_roundtrip.tsv";
    save_kb(path, kb);
    CHECK(load_kb(path) == kb);
    std::ostringstream a, b;
    write_kb(a, kb);
    write_kb(b, load_kb(path));
    CHECK(a.str() == b.str());
    std::filesystem::remove(path);
}

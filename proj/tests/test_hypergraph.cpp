#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "hypergcl/hypergraph.hpp"
#include "hypergcl/rng.hpp"

using namespace hypergcl;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("hypergcl_test_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter()++));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    static int& counter() {
        static int c = 0;
        return c;
    }
};

void write_file(const fs::path& p, const std::string& content) {
    std::ofstream out(p);
    out << content;
}

Hypergraph tiny_graph() {
    // hyperedges {0,1}, {1,2}
    Hypergraph h;
    h.num_vertices = 3;
    h.num_hyperedges = 2;
    h.feature_dim = 2;
    h.features = {1, 0, 0, 1, 1, 1};
    h.incidences = {{0, 0}, {1, 0}, {1, 1}, {2, 1}};
    h.labels = {0, 1, 1};
    h.validate();
    return h;
}

Hypergraph random_graph(std::uint64_t seed, std::int64_t v = 50, std::int64_t e = 20) {
    SynthConfig cfg;
    cfg.num_vertices = v;
    cfg.num_classes = 3;
    cfg.num_hyperedges = e;
    cfg.min_edge_size = 2;
    cfg.max_edge_size = 5;
    cfg.feature_dim = 4;
    return synth_hypergraph(cfg, seed);
}

}  // namespace

TEST_CASE("load: single hyperedge file") {
    TempDir dir;
    write_file(dir.path / "he.txt", "0 1 2\n");
    write_file(dir.path / "x.txt", "1 0\n0 1\n1 1\n");
    Hypergraph h = load_hypergraph(dir.path / "he.txt", dir.path / "x.txt");
    CHECK(h.num_vertices == 3);
    CHECK(h.num_hyperedges == 1);
    CHECK(h.num_incidences() == 3);
    CHECK(h.feature_dim == 2);
}

TEST_CASE("load: duplicate mentions deduplicated, empty lines rejected") {
    TempDir dir;
    write_file(dir.path / "he.txt", "0 1 1 2\n");
    write_file(dir.path / "x.txt", "1\n2\n3\n");
    Hypergraph h = load_hypergraph(dir.path / "he.txt", dir.path / "x.txt");
    CHECK(h.num_incidences() == 3);

    write_file(dir.path / "bad.txt", "0 1\n\n1 2\n");
    CHECK_THROWS_WITH_AS(load_hypergraph(dir.path / "bad.txt", dir.path / "x.txt"),
                         doctest::Contains(":2"), ParseError);
}

TEST_CASE("load: vertex index out of range") {
    TempDir dir;
    write_file(dir.path / "he.txt", "0 5\n");
    write_file(dir.path / "x.txt", "1\n2\n3\n");
    CHECK_THROWS_WITH_AS(load_hypergraph(dir.path / "he.txt", dir.path / "x.txt"),
                         doctest::Contains("out of range"), DataError);
}

TEST_CASE("load: row-count mismatch and non-numeric features") {
    TempDir dir;
    write_file(dir.path / "he.txt", "0 1\n");
    write_file(dir.path / "x.txt", "1 0\n0 1\n");
    write_file(dir.path / "y.txt", "0\n1\n2\n");
    CHECK_THROWS_AS(load_hypergraph(dir.path / "he.txt", dir.path / "x.txt", dir.path / "y.txt"),
                    DataError);
    write_file(dir.path / "xbad.txt", "1 zebra\n0 1\n");
    CHECK_THROWS_WITH_AS(load_hypergraph(dir.path / "he.txt", dir.path / "xbad.txt"),
                         doctest::Contains("non-numeric"), ParseError);
}

TEST_CASE("json bundle round trip") {
    TempDir dir;
    Hypergraph h = tiny_graph();
    save_bundle(dir.path / "g.json", h);
    Hypergraph back = load_bundle(dir.path / "g.json");
    CHECK(structural_equal(h, back));
}

TEST_CASE("text save/load round trip") {
    TempDir dir;
    Hypergraph h = random_graph(3);
    save_text(dir.path, h);
    Hypergraph back = load_hypergraph(dir.path / "hyperedges.txt", dir.path / "features.txt",
                                      dir.path / "labels.txt");
    CHECK(structural_equal(h, back));
}

TEST_CASE("bipartite view") {
    SUBCASE("edge list matches incidences") {
        Hypergraph h = tiny_graph();
        BipartiteView v = to_bipartite(h);
        CHECK(v.num_left == 3);
        CHECK(v.num_right == 2);
        REQUIRE(v.edges.size() == 4);
        CHECK(v.edges[0] == Incidence{0, 0});
        CHECK(v.edges[2] == Incidence{1, 1});
    }
    SUBCASE("empty incidences stay empty") {
        Hypergraph h;
        h.num_vertices = 2;
        h.feature_dim = 1;
        h.features = {0, 0};
        CHECK(to_bipartite(h).edges.empty());
    }
    SUBCASE("round trip is the identity on structure") {
        Hypergraph h = random_graph(11);
        CHECK(structural_equal(h, from_bipartite(to_bipartite(h))));
    }
}

TEST_CASE("clique expansion") {
    SUBCASE("triangle from a 3-hyperedge") {
        Hypergraph h;
        h.num_vertices = 3;
        h.num_hyperedges = 1;
        h.feature_dim = 1;
        h.features = {0, 0, 0};
        h.incidences = {{0, 0}, {1, 0}, {2, 0}};
        Hypergraph g = clique_expand(h);
        CHECK(g.num_hyperedges == 3);
        CHECK(g.num_incidences() == 6);
    }
    SUBCASE("duplicate pairs merge") {
        Hypergraph h;
        h.num_vertices = 2;
        h.num_hyperedges = 2;
        h.feature_dim = 1;
        h.features = {0, 0};
        h.incidences = {{0, 0}, {1, 0}, {0, 1}, {1, 1}};
        CHECK(clique_expand(h).num_hyperedges == 1);
    }
    SUBCASE("pair count equals brute-force enumeration") {
        Hypergraph h = random_graph(17, 20, 12);
        std::set<std::pair<std::int64_t, std::int64_t>> want;
        for (const auto& m : h.edge_members()) {
            for (std::size_t i = 0; i < m.size(); ++i) {
                for (std::size_t j = i + 1; j < m.size(); ++j) {
                    want.insert({std::min(m[i], m[j]), std::max(m[i], m[j])});
                }
            }
        }
        Hypergraph g = clique_expand(h);
        CHECK(g.num_hyperedges == static_cast<std::int64_t>(want.size()));
        CHECK(structural_equal(g, clique_expand(g)));  // idempotent on 2-uniform input
    }
}

TEST_CASE("homophily") {
    SUBCASE("uniform labels give (1,1)") {
        Hypergraph h = tiny_graph();
        h.labels = {4, 4, 4};
        auto hom = homophily(h);
        CHECK(hom.h_edge == doctest::Approx(1.0));
        CHECK(hom.h_node == doctest::Approx(1.0));
    }
    SUBCASE("single mixed pair gives (0,0)") {
        Hypergraph h;
        h.num_vertices = 2;
        h.num_hyperedges = 1;
        h.feature_dim = 1;
        h.features = {0, 0};
        h.incidences = {{0, 0}, {1, 0}};
        h.labels = {0, 1};
        auto hom = homophily(h);
        CHECK(hom.h_edge == 0.0);
        CHECK(hom.h_node == 0.0);
    }
    SUBCASE("planted partition with q=1 is fully edge-homophilous") {
        SynthConfig cfg;
        cfg.intra_class_probability = 1.0;
        cfg.num_vertices = 60;
        cfg.num_hyperedges = 25;
        auto hom = homophily(synth_hypergraph(cfg, 5));
        CHECK(hom.h_edge == doctest::Approx(1.0));
    }
    SUBCASE("errors") {
        Hypergraph h = tiny_graph();
        h.labels.clear();
        CHECK_THROWS_AS(homophily(h), DataError);
        Hypergraph s;
        s.num_vertices = 2;
        s.num_hyperedges = 2;
        s.feature_dim = 1;
        s.features = {0, 0};
        s.incidences = {{0, 0}, {1, 1}};  // singletons only
        s.labels = {0, 1};
        CHECK_THROWS_AS(homophily(s), DataError);
    }
    SUBCASE("label permutation leaves homophily unchanged") {
        Hypergraph h = random_graph(23);
        auto a = homophily(h);
        for (auto& l : h.labels) l = (l + 1) % 3;  // relabel classes bijectively
        auto b = homophily(h);
        CHECK(a.h_edge == doctest::Approx(b.h_edge).epsilon(1e-12));
        CHECK(a.h_node == doctest::Approx(b.h_node).epsilon(1e-12));
        CHECK(a.h_edge >= 0.0);
        CHECK(a.h_edge <= 1.0);
        CHECK(a.h_node >= 0.0);
        CHECK(a.h_node <= 1.0);
    }
}

TEST_CASE("split") {
    SynthConfig cfg;
    cfg.num_vertices = 100;
    cfg.num_hyperedges = 30;
    Hypergraph h = synth_hypergraph(cfg, 1);

    SUBCASE("10/10/80") {
        SplitMasks m = split(h, 0.1, 0.1, 7);
        CHECK(m.count(m.train) == 10);
        CHECK(m.count(m.val) == 10);
        CHECK(m.count(m.test) == 80);
    }
    SUBCASE("all test when fractions are zero") {
        SplitMasks m = split(h, 0.0, 0.0, 7);
        CHECK(m.count(m.test) == 100);
    }
    SUBCASE("deterministic per seed, partition for every seed") {
        for (std::uint64_t seed : {1ull, 2ull, 99ull}) {
            SplitMasks a = split(h, 0.17, 0.21, seed);
            SplitMasks b = split(h, 0.17, 0.21, seed);
            CHECK(a.train == b.train);
            CHECK(a.val == b.val);
            CHECK(a.test == b.test);
            for (std::size_t v = 0; v < 100; ++v) {
                CHECK(a.train[v] + a.val[v] + a.test[v] == 1);
            }
        }
    }
    SUBCASE("fraction errors") {
        CHECK_THROWS_AS(split(h, 0.6, 0.4, 1), DataError);
        CHECK_THROWS_AS(split(h, -0.1, 0.2, 1), DataError);
    }
    SUBCASE("invariant to incidence order") {
        Hypergraph g = h;
        std::reverse(g.incidences.begin(), g.incidences.end());
        SplitMasks a = split(h, 0.1, 0.1, 13);
        SplitMasks b = split(g, 0.1, 0.1, 13);
        CHECK(a.train == b.train);
        CHECK(a.test == b.test);
    }
}

TEST_CASE("synthetic generator") {
    SUBCASE("zero hyperedges is a construction error") {
        SynthConfig cfg;
        cfg.num_hyperedges = 0;
        CHECK_THROWS_AS(synth_hypergraph(cfg, 1), DataError);
    }
    SUBCASE("infeasible size range") {
        SynthConfig cfg;
        cfg.num_vertices = 4;
        cfg.max_edge_size = 6;
        CHECK_THROWS_AS(synth_hypergraph(cfg, 1), DataError);
    }
    SUBCASE("deterministic per seed") {
        SynthConfig cfg;
        CHECK(structural_equal(synth_hypergraph(cfg, 9), synth_hypergraph(cfg, 9)));
    }
    SUBCASE("benchmark config stays strongly homophilous") {
        SynthConfig cfg;  // defaults: 400 vertices, 4 classes, 120 edges, q=0.9
        for (std::uint64_t seed = 0; seed < 10; ++seed) {
            auto hom = homophily(synth_hypergraph(cfg, seed));
            CHECK(hom.h_edge >= 0.8);
        }
    }
}

TEST_CASE("validate rejects broken structures") {
    Hypergraph h = tiny_graph();
    h.incidences.push_back({0, 0});  // duplicate pair
    CHECK_THROWS_AS(h.validate(), DataError);

    Hypergraph g = tiny_graph();
    g.num_hyperedges = 3;  // slot 2 has no incidences
    CHECK_THROWS_AS(g.validate(), DataError);

    Hypergraph w = tiny_graph();
    w.incidence_weights = {0.5, 0.5, 1.5, 0.0};  // weight out of [0,1]
    CHECK_THROWS_AS(w.validate(), DataError);
}

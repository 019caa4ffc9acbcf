#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "hypergcl/augment.hpp"
#include "hypergcl/hypergraph.hpp"
#include "hypergcl/rng.hpp"

using namespace hypergcl;
using namespace hypergcl::augment;

namespace {

Hypergraph make_graph(std::uint64_t seed, std::int64_t v = 50, std::int64_t e = 20) {
    SynthConfig cfg;
    cfg.num_vertices = v;
    cfg.num_classes = 3;
    cfg.num_hyperedges = e;
    cfg.min_edge_size = 2;
    cfg.max_edge_size = 5;
    cfg.feature_dim = 4;
    return synth_hypergraph(cfg, seed);
}

Hypergraph chain_graph(std::int64_t n) {
    // hyperedges {0,1},{1,2},...: connected
    Hypergraph h;
    h.num_vertices = n;
    h.num_hyperedges = n - 1;
    h.feature_dim = 1;
    h.features.assign(static_cast<std::size_t>(n), 1.0);
    for (std::int64_t e = 0; e + 1 < n; ++e) {
        h.incidences.push_back({e, e});
        h.incidences.push_back({e + 1, e});
    }
    h.validate();
    return h;
}

}  // namespace

TEST_CASE("spec grammar") {
    CHECK(parse_spec("A0").kind == Kind::identity);
    CHECK(parse_spec("A1:0.2").ratio == doctest::Approx(0.2));
    CHECK(parse_spec("A2:0.35").kind == Kind::incidence_removal);
    CHECK(parse_spec("A5:0.8").retain == doctest::Approx(0.8));
    CHECK(parse_spec("A6").kind == Kind::generative);
    CHECK(parse_spec("A3").ratio == doctest::Approx(0.2));  // default
    CHECK_THROWS_AS(parse_spec("A7"), DataError);
    CHECK_THROWS_AS(parse_spec("A1:1.5"), DataError);
    CHECK_THROWS_AS(parse_spec("A5:0"), DataError);
    CHECK_THROWS_AS(parse_spec("A0:0.2"), DataError);
    CHECK_THROWS_AS(apply_spec(make_graph(1), parse_spec("A6"), 0), DataError);
}

TEST_CASE("A0 identity") {
    Hypergraph h = make_graph(1);
    CHECK(structural_equal(h, a0_identity(h)));
    h.incidence_weights.assign(h.incidences.size(), 0.5);
    CHECK(structural_equal(h, a0_identity(h)));  // weights preserved
}

TEST_CASE("p=0 is structural identity for every operator") {
    Hypergraph h = make_graph(2);
    CHECK(structural_equal(h, a1_hyperedge_removal(h, 0.0, 3)));
    CHECK(structural_equal(h, a2_incidence_removal(h, 0.0, 3)));
    CHECK(structural_equal(h, a3_vertex_drop(h, 0.0, 3)));
    CHECK(structural_equal(h, a4_attr_mask(h, 0.0, 3)));
}

TEST_CASE("p=1 extremes") {
    Hypergraph h = make_graph(3);
    CHECK(a1_hyperedge_removal(h, 1.0, 3).num_hyperedges == 0);
    CHECK(a2_incidence_removal(h, 1.0, 3).num_hyperedges == 0);

    Hypergraph d = a3_vertex_drop(h, 1.0, 3);
    CHECK(d.num_vertices == h.num_vertices);
    CHECK(d.num_hyperedges == 0);
    for (double f : d.features) CHECK(f == 0.0);

    Hypergraph m = a4_attr_mask(h, 1.0, 3);
    for (double f : m.features) CHECK(f == 0.0);
    CHECK(m.num_incidences() == h.num_incidences());
}

TEST_CASE("determinism and invariants") {
    Hypergraph h = make_graph(4);
    for (const char* spec : {"A1:0.3", "A2:0.3", "A3:0.3", "A4:0.3", "A5:0.6"}) {
        CAPTURE(spec);
        Hypergraph a = apply_spec(h, parse_spec(spec), 77);
        Hypergraph b = apply_spec(h, parse_spec(spec), 77);
        CHECK(structural_equal(a, b));
        CHECK_NOTHROW(a.validate());
        CHECK(a.labels == h.labels);  // labels never modified
    }
}

TEST_CASE("A1 Monte Carlo: binomial band on surviving hyperedges") {
    SynthConfig cfg;
    cfg.num_vertices = 200;
    cfg.num_hyperedges = 1000;
    cfg.min_edge_size = 2;
    cfg.max_edge_size = 4;
    cfg.feature_dim = 2;
    Hypergraph h = synth_hypergraph(cfg, 5);
    const double p = 0.3;
    const int trials = 1000;
    double total = 0;
    for (int t = 0; t < trials; ++t) {
        total += static_cast<double>(a1_hyperedge_removal(h, p, 1000 + t).num_hyperedges);
    }
    const double mean = total / trials;
    const double band = 3.0 * std::sqrt(1000 * p * (1 - p));
    CHECK(std::abs(mean - 700.0) < band);
}

TEST_CASE("A2 Monte Carlo: binomial band on removed incidences") {
    SynthConfig cfg;
    cfg.num_vertices = 500;
    cfg.num_hyperedges = 2600;
    cfg.min_edge_size = 3;
    cfg.max_edge_size = 5;
    cfg.feature_dim = 2;
    Hypergraph h = synth_hypergraph(cfg, 6);
    const auto k = static_cast<double>(h.num_incidences());
    REQUIRE(k >= 10000);
    const double p = 0.2;
    const int trials = 500;
    double removed = 0;
    for (int t = 0; t < trials; ++t) {
        removed += k - static_cast<double>(a2_incidence_removal(h, p, 40 + t).num_incidences());
    }
    const double mean = removed / trials;
    const double band = 3.0 * std::sqrt(k * p * (1 - p));
    CHECK(std::abs(mean - k * p) < band);
}

TEST_CASE("A4 Monte Carlo: zeroed fraction within binomial band") {
    Hypergraph h = make_graph(8, 120, 40);
    const auto n = static_cast<double>(h.features.size());
    const double p = 0.4;
    const int trials = 200;
    double zeroed = 0;
    for (int t = 0; t < trials; ++t) {
        Hypergraph m = a4_attr_mask(h, p, 900 + t);
        for (std::size_t i = 0; i < m.features.size(); ++i) {
            if (m.features[i] == 0.0 && h.features[i] != 0.0) zeroed += 1.0;
        }
    }
    const double mean = zeroed / trials;
    const double band = 3.0 * std::sqrt(n * p * (1 - p));
    CHECK(std::abs(mean - n * p) < band);
}

TEST_CASE("A3 and A5 preserve the vertex count") {
    Hypergraph h = make_graph(9);
    for (int t = 0; t < 100; ++t) {
        CHECK(a3_vertex_drop(h, 0.2, t).num_vertices == h.num_vertices);
    }
    for (int t = 0; t < 20; ++t) {
        CHECK(a5_subgraph(h, 0.5, t).num_vertices == h.num_vertices);
    }
}

TEST_CASE("A1-A3, A5 never add incidences") {
    Hypergraph h = make_graph(10);
    auto incidence_multiset = [](const Hypergraph& g) {
        // compare as (vertex, member-set) since hyperedges are reindexed
        std::multiset<std::int64_t> vs;
        for (const auto& inc : g.incidences) vs.insert(inc.vertex);
        return vs;
    };
    auto base = incidence_multiset(h);
    for (const char* spec : {"A1:0.4", "A2:0.4", "A3:0.4", "A5:0.5"}) {
        Hypergraph a = apply_spec(h, parse_spec(spec), 13);
        CHECK(a.num_incidences() <= h.num_incidences());
        auto sub = incidence_multiset(a);
        CHECK(std::includes(base.begin(), base.end(), sub.begin(), sub.end()));
    }
}

TEST_CASE("A2 on a 2-uniform hypergraph generalizes edge perturbation") {
    // each size-2 hyperedge survives fully with probability (1-p)^2
    Hypergraph h = chain_graph(400);
    const double p = 0.3;
    int fully_alive = 0;
    const int trials = 400;
    for (int t = 0; t < trials; ++t) {
        Hypergraph a = a2_incidence_removal(h, p, 500 + t);
        auto members = a.edge_members();
        for (const auto& m : members) {
            if (m.size() == 2) ++fully_alive;
        }
    }
    const double n_edges = static_cast<double>(h.num_hyperedges) * trials;
    const double want = (1 - p) * (1 - p);
    const double got = fully_alive / n_edges;
    CHECK(std::abs(got - want) < 3.0 * std::sqrt(want * (1 - want) / n_edges));
}

TEST_CASE("A5 walk semantics") {
    SUBCASE("retain 1.0 on a connected hypergraph is the identity") {
        Hypergraph h = chain_graph(30);
        CHECK(structural_equal(h, a5_subgraph(h, 1.0, 3)));
    }
    SUBCASE("ceil(retain*|V|) distinct vertices on a single 3-hyperedge") {
        Hypergraph h;
        h.num_vertices = 3;
        h.num_hyperedges = 1;
        h.feature_dim = 1;
        h.features = {1, 1, 1};
        h.incidences = {{0, 0}, {1, 0}, {2, 0}};
        h.validate();
        // ceil(0.34*3) = 2 visited vertices; the hyperedge keeps 2 incidences
        Hypergraph a = a5_subgraph(h, 0.34, 9);
        CHECK(a.num_hyperedges == 1);
        CHECK(a.num_incidences() == 2);
        double zero_rows = 0;
        for (double f : a.features) {
            if (f == 0.0) zero_rows += 1;
        }
        CHECK(zero_rows == 1);
    }
    SUBCASE("visited count equals ceil(retain*|V|) on connected instances") {
        for (std::uint64_t seed = 0; seed < 30; ++seed) {
            Hypergraph h = chain_graph(41);
            const double retain = 0.3 + 0.02 * static_cast<double>(seed);
            Hypergraph a = a5_subgraph(h, retain, seed);
            std::int64_t kept = 0;
            for (std::int64_t v = 0; v < a.num_vertices; ++v) {
                if (a.features[static_cast<std::size_t>(v)] != 0.0) ++kept;
            }
            CHECK(kept == static_cast<std::int64_t>(std::ceil(retain * 41.0)));
        }
    }
    SUBCASE("disconnected components are handled by restarts") {
        // two disjoint triangles
        Hypergraph h;
        h.num_vertices = 6;
        h.num_hyperedges = 2;
        h.feature_dim = 1;
        h.features.assign(6, 1.0);
        h.incidences = {{0, 0}, {1, 0}, {2, 0}, {3, 1}, {4, 1}, {5, 1}};
        h.validate();
        Hypergraph a = a5_subgraph(h, 0.9, 4);  // needs 6*0.9 -> 6 visited? ceil(5.4)=6
        std::int64_t kept = 0;
        for (double f : a.features) {
            if (f != 0.0) ++kept;
        }
        CHECK(kept == 6);
    }
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "hypergcl/gradcheck.hpp"
#include "hypergcl/model.hpp"
#include "hypergcl/rng.hpp"

using namespace hypergcl;
using namespace hypergcl::model;

namespace {

Hypergraph toy_graph() {
    // hyperedges {0,1,2}, {2,3}, {3,4}
    Hypergraph h;
    h.num_vertices = 5;
    h.num_hyperedges = 3;
    h.feature_dim = 4;
    h.features = {0.5, -1.0, 0.2, 0.1,  1.0, 0.3, -0.4, 0.9, -0.2, 0.8,
                  0.7, -0.6, 0.4, 0.4,  -0.9, 0.2, -0.3, 1.2, 0.6, -0.5};
    h.incidences = {{0, 0}, {1, 0}, {2, 0}, {2, 1}, {3, 1}, {3, 2}, {4, 2}};
    h.labels = {0, 0, 1, 1, 1};
    h.validate();
    return h;
}

EncoderParams small_encoder(std::uint64_t seed = 3, std::int64_t hidden = 6) {
    Rng rng(seed);
    EncoderDims dims;
    dims.in_dim = 4;
    dims.hidden = hidden;
    dims.num_blocks = 2;
    dims.num_classes = 2;
    dims.proj_dim = 5;
    return init_encoder(dims, rng);
}

bool all_equal(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] != b[i]) return false;
    }
    return true;
}

}  // namespace

TEST_CASE("encode shapes and determinism") {
    Hypergraph h = toy_graph();
    EncoderParams p = small_encoder();
    auto out = encode(h, p);
    CHECK(out.z_v.shape() == diff::Shape{5, 6});
    CHECK(out.z_e.shape() == diff::Shape{3, 6});
    auto again = encode(h, p);
    CHECK(all_equal(out.z_v.data(), again.z_v.data()));
    CHECK(all_equal(out.z_e.data(), again.z_e.data()));
}

TEST_CASE("feature dim mismatch is an error") {
    Hypergraph h = toy_graph();
    Rng rng(1);
    EncoderDims dims;
    dims.in_dim = 7;
    dims.num_classes = 2;
    EncoderParams p = init_encoder(dims, rng);
    CHECK_THROWS_AS(encode(h, p), diff::ShapeError);
}

TEST_CASE("zero hyperedges: vertex states are blockwise relu of projected features") {
    Hypergraph h = toy_graph();
    h.incidences.clear();
    h.num_hyperedges = 0;
    EncoderParams p = small_encoder();
    auto out = encode(h, p);
    CHECK(out.z_e.dim(0) == 0);
    // with zero-initialized biases the aggregate path contributes nothing
    Tensor x = relu(add(matmul(Tensor::leaf({5, 4}, h.features), p.trunk.w_in), p.trunk.b_in));
    CHECK(all_equal(out.z_v.data(), x.data()));
}

TEST_CASE("all-zero weights match the zero-hyperedge case") {
    Hypergraph h = toy_graph();
    EncoderParams p = small_encoder();
    Tensor zero_w = Tensor::zeros({h.num_incidences()});
    auto weighted = encode(h, p, &zero_w);

    Hypergraph empty = toy_graph();
    empty.incidences.clear();
    empty.num_hyperedges = 0;
    auto bare = encode(empty, p);
    CHECK(all_equal(weighted.z_v.data(), bare.z_v.data()));
}

TEST_CASE("absent weights behave exactly like explicit ones") {
    Hypergraph h = toy_graph();
    EncoderParams p = small_encoder();
    auto implicit = encode(h, p);
    Tensor ones = Tensor::full({h.num_incidences()}, 1.0);
    auto explicit_w = encode(h, p, &ones);
    CHECK(all_equal(implicit.z_v.data(), explicit_w.z_v.data()));
    CHECK(all_equal(implicit.z_e.data(), explicit_w.z_e.data()));
}

TEST_CASE("zeroing one incidence weight equals deleting the incidence") {
    Hypergraph h = toy_graph();
    EncoderParams p = small_encoder();
    const std::size_t drop = 3;  // incidence (2,1)

    std::vector<double> w(static_cast<std::size_t>(h.num_incidences()), 1.0);
    w[drop] = 0.0;
    Tensor wt = Tensor::leaf({h.num_incidences()}, w);
    auto masked = encode(h, p, &wt);

    Hypergraph cut = h;
    cut.incidences.erase(cut.incidences.begin() + drop);
    auto removed = encode(cut, p);
    CHECK(all_equal(masked.z_v.data(), removed.z_v.data()));
}

TEST_CASE("permutation equivariance over vertices") {
    Hypergraph h = toy_graph();
    EncoderParams p = small_encoder();
    auto base = encode(h, p);

    // permute vertex ids, keep incidence order
    const std::vector<std::int64_t> perm = {2, 0, 4, 1, 3};  // new id of old vertex i
    Hypergraph g = h;
    for (std::int64_t v = 0; v < 5; ++v) {
        for (std::int64_t f = 0; f < 4; ++f) {
            g.features[static_cast<std::size_t>(perm[static_cast<std::size_t>(v)] * 4 + f)] =
                h.features[static_cast<std::size_t>(v * 4 + f)];
        }
        g.labels[static_cast<std::size_t>(perm[static_cast<std::size_t>(v)])] =
            h.labels[static_cast<std::size_t>(v)];
    }
    for (auto& inc : g.incidences) inc.vertex = perm[static_cast<std::size_t>(inc.vertex)];

    auto permuted = encode(g, p);
    for (std::int64_t v = 0; v < 5; ++v) {
        for (std::int64_t c = 0; c < 6; ++c) {
            CHECK(permuted.z_v[perm[static_cast<std::size_t>(v)] * 6 + c] == base.z_v[v * 6 + c]);
        }
    }
    CHECK(all_equal(permuted.z_e.data(), base.z_e.data()));
}

TEST_CASE("projection head") {
    Hypergraph h = toy_graph();
    EncoderParams p = small_encoder();
    auto out = encode(h, p);
    Tensor proj = project(out.z_v, p);
    REQUIRE(proj.shape() == diff::Shape{5, 5});
    for (std::int64_t r = 0; r < 5; ++r) {
        double sq = 0.0;
        for (std::int64_t c = 0; c < 5; ++c) sq += proj[r * 5 + c] * proj[r * 5 + c];
        CHECK(std::abs(std::sqrt(sq) - 1.0) < 1e-12);
    }

    // zero inputs with zero biases stay zero under the normalize convention
    Tensor zeros = Tensor::zeros({3, 6});
    Tensor pz = project(zeros, p);
    bool all_zero = true;
    for (std::int64_t i = 0; i < pz.numel(); ++i) all_zero = all_zero && pz[i] == 0.0;
    CHECK(all_zero);
}

TEST_CASE("projection gradient matches finite differences") {
    Hypergraph h = toy_graph();
    EncoderParams p = small_encoder(9, 5);
    auto f = [&]() {
        auto out = encode(h, p);
        return sum(square(project(out.z_v, p)));
    };
    CHECK(diff::grad_check(f, p.proj.w1, 1e-5) < 1e-4);
    CHECK(diff::grad_check(f, p.trunk.w_in, 1e-5) < 1e-4);
    CHECK(diff::grad_check(f, p.trunk.blocks[0].vertex_to_edge.w1, 1e-5) < 1e-4);
}

TEST_CASE("classifier") {
    Hypergraph h = toy_graph();
    EncoderParams p = small_encoder();
    auto out = encode(h, p);
    Tensor logits = classify(out.z_v, p);
    REQUIRE(logits.shape() == diff::Shape{5, 2});

    // zero weights give zero logits
    for (auto& v : p.w_cls.mutable_data()) v = 0.0;
    Tensor z2 = classify(out.z_v, p);
    for (std::int64_t i = 0; i < z2.numel(); ++i) CHECK(z2[i] == 0.0);

    Tensor sm = softmax_rows(logits);
    for (std::int64_t r = 0; r < 5; ++r) {
        CHECK(sm[r * 2] + sm[r * 2 + 1] == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("gradients flow to incidence weights") {
    Hypergraph h = toy_graph();
    EncoderParams p = small_encoder();
    Tensor w = Tensor::full({h.num_incidences()}, 0.7, true);
    auto f = [&]() {
        auto out = encode(h, p, &w);
        return sum(square(out.z_v));
    };
    CHECK(diff::grad_check(f, w, 1e-5) < 1e-4);
}

TEST_CASE("dropout masks scale surviving entries") {
    Rng rng(4);
    auto masks = dropout_masks(10, 8, 2, 0.5, rng);
    REQUIRE(masks.size() == 2);
    for (const auto& m : masks) {
        for (std::int64_t i = 0; i < m.numel(); ++i) {
            CHECK((m[i] == 0.0 || m[i] == 2.0));
        }
    }
    CHECK(dropout_masks(10, 8, 2, 0.0, rng).empty());
}

TEST_CASE("clone is a deep copy") {
    EncoderParams p = small_encoder();
    EncoderParams q = clone(p);
    q.w_cls.mutable_data()[0] = 123.0;
    CHECK(p.w_cls.data()[0] != 123.0);
    CHECK(named_tensors(p).size() == named_tensors(q).size());
}

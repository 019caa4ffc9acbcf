#include "hypergcl/model.hpp"

#include <cmath>

namespace hypergcl::model {

namespace {

Tensor glorot(std::int64_t fan_in, std::int64_t fan_out, Rng& rng) {
    const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::vector<double> data(static_cast<std::size_t>(fan_in * fan_out));
    for (auto& v : data) v = (rng.uniform() * 2.0 - 1.0) * a;
    return Tensor::leaf({fan_in, fan_out}, std::move(data), true);
}

Mlp init_mlp(std::int64_t in, std::int64_t hidden, std::int64_t out, Rng& rng) {
    Mlp m;
    m.w1 = glorot(in, hidden, rng);
    m.b1 = Tensor::zeros({hidden}, true);
    m.w2 = glorot(hidden, out, rng);
    m.b2 = Tensor::zeros({out}, true);
    return m;
}

void append_mlp(std::vector<std::pair<std::string, Tensor>>& out, const std::string& prefix,
                const Mlp& m) {
    out.emplace_back(prefix + ".w1", m.w1);
    out.emplace_back(prefix + ".b1", m.b1);
    out.emplace_back(prefix + ".w2", m.w2);
    out.emplace_back(prefix + ".b2", m.b2);
}

Tensor clone_tensor(const Tensor& t) {
    return Tensor::leaf(t.shape(), {t.data().begin(), t.data().end()}, t.requires_grad());
}

Mlp clone_mlp(const Mlp& m) {
    return {clone_tensor(m.w1), clone_tensor(m.b1), clone_tensor(m.w2), clone_tensor(m.b2)};
}

}  // namespace

Tensor mlp_apply(const Tensor& x, const Mlp& m) {
    return add(matmul(relu(add(matmul(x, m.w1), m.b1)), m.w2), m.b2);
}

TrunkParams init_trunk(std::int64_t in_dim, std::int64_t hidden, std::int64_t num_blocks,
                       Rng& rng) {
    if (num_blocks < 1) throw DataError("encoder needs at least one block");
    TrunkParams p;
    p.in_dim = in_dim;
    p.hidden = hidden;
    p.w_in = glorot(in_dim, hidden, rng);
    p.b_in = Tensor::zeros({hidden}, true);
    for (std::int64_t b = 0; b < num_blocks; ++b) {
        Block blk;
        blk.vertex_to_edge = init_mlp(hidden, hidden, hidden, rng);
        blk.edge_to_vertex = init_mlp(hidden, hidden, hidden, rng);
        p.blocks.push_back(std::move(blk));
    }
    return p;
}

EncoderParams init_encoder(const EncoderDims& dims, Rng& rng) {
    EncoderParams p;
    p.trunk = init_trunk(dims.in_dim, dims.hidden, dims.num_blocks, rng);
    p.num_classes = dims.num_classes;
    p.proj_dim = dims.proj_dim;
    p.w_cls = glorot(dims.hidden, dims.num_classes, rng);
    p.b_cls = Tensor::zeros({dims.num_classes}, true);
    p.proj = init_mlp(dims.hidden, dims.hidden, dims.proj_dim, rng);
    return p;
}

void append_named(std::vector<std::pair<std::string, Tensor>>& out, const std::string& prefix,
                  const TrunkParams& p) {
    out.emplace_back(prefix + ".w_in", p.w_in);
    out.emplace_back(prefix + ".b_in", p.b_in);
    for (std::size_t b = 0; b < p.blocks.size(); ++b) {
        const std::string bp = prefix + ".block" + std::to_string(b);
        append_mlp(out, bp + ".ve", p.blocks[b].vertex_to_edge);
        append_mlp(out, bp + ".ev", p.blocks[b].edge_to_vertex);
    }
}

std::vector<std::pair<std::string, Tensor>> named_tensors(const EncoderParams& p) {
    std::vector<std::pair<std::string, Tensor>> out;
    append_named(out, "trunk", p.trunk);
    out.emplace_back("cls.w", p.w_cls);
    out.emplace_back("cls.b", p.b_cls);
    append_mlp(out, "proj", p.proj);
    return out;
}

std::vector<Tensor> tensors(const TrunkParams& p) {
    std::vector<std::pair<std::string, Tensor>> named;
    append_named(named, "t", p);
    std::vector<Tensor> out;
    out.reserve(named.size());
    for (auto& [name, t] : named) out.push_back(t);
    return out;
}

std::vector<Tensor> tensors(const EncoderParams& p) {
    std::vector<Tensor> out;
    for (auto& [name, t] : named_tensors(p)) out.push_back(t);
    return out;
}

TrunkParams clone(const TrunkParams& p) {
    TrunkParams out;
    out.in_dim = p.in_dim;
    out.hidden = p.hidden;
    out.final_vertex_relu = p.final_vertex_relu;
    out.w_in = clone_tensor(p.w_in);
    out.b_in = clone_tensor(p.b_in);
    for (const auto& b : p.blocks) {
        out.blocks.push_back({clone_mlp(b.vertex_to_edge), clone_mlp(b.edge_to_vertex)});
    }
    return out;
}

EncoderParams clone(const EncoderParams& p) {
    EncoderParams out;
    out.trunk = clone(p.trunk);
    out.num_classes = p.num_classes;
    out.proj_dim = p.proj_dim;
    out.w_cls = clone_tensor(p.w_cls);
    out.b_cls = clone_tensor(p.b_cls);
    out.proj = clone_mlp(p.proj);
    return out;
}

EncodeOut encode_trunk(const Hypergraph& h, const TrunkParams& p,
                       const Tensor* incidence_weights, std::span<const Tensor> dropout_masks) {
    if (h.feature_dim != p.in_dim) {
        throw diff::ShapeError("encode: feature dim " + std::to_string(h.feature_dim) +
                               " does not match encoder input dim " + std::to_string(p.in_dim));
    }
    const std::int64_t k = h.num_incidences();
    Tensor x_in = Tensor::leaf({h.num_vertices, h.feature_dim}, h.features);
    Tensor w;
    if (incidence_weights != nullptr) {
        if (incidence_weights->numel() != k) {
            throw diff::ShapeError("encode: weight count " +
                                   std::to_string(incidence_weights->numel()) +
                                   " does not match " + std::to_string(k) + " incidences");
        }
        w = *incidence_weights;
    } else {
        w = Tensor::leaf({k}, h.weights_or_ones());
    }

    diff::SegmentIndex by_edge;
    by_edge.num_segments = h.num_hyperedges;
    diff::SegmentIndex by_vertex;
    by_vertex.num_segments = h.num_vertices;
    std::vector<std::int64_t> v_idx(static_cast<std::size_t>(k));
    std::vector<std::int64_t> e_idx(static_cast<std::size_t>(k));
    for (std::int64_t i = 0; i < k; ++i) {
        v_idx[static_cast<std::size_t>(i)] = h.incidences[static_cast<std::size_t>(i)].vertex;
        e_idx[static_cast<std::size_t>(i)] = h.incidences[static_cast<std::size_t>(i)].edge;
    }
    by_edge.targets = e_idx;
    by_vertex.targets = v_idx;

    Tensor x = relu(add(matmul(x_in, p.w_in), p.b_in));
    Tensor x_e;
    for (std::size_t b = 0; b < p.blocks.size(); ++b) {
        if (b < dropout_masks.size() && dropout_masks[b].defined()) {
            x = mul(x, dropout_masks[b]);
        }
        Tensor edge_agg = segment_weighted_mean(gather_rows(x, v_idx), w, by_edge);
        x_e = mlp_apply(edge_agg, p.blocks[b].vertex_to_edge);
        Tensor vertex_agg = segment_weighted_mean(gather_rows(x_e, e_idx), w, by_vertex);
        Tensor updated = add(x, mlp_apply(vertex_agg, p.blocks[b].edge_to_vertex));
        const bool last = (b + 1 == p.blocks.size());
        x = (last && !p.final_vertex_relu) ? updated : relu(updated);
    }
    return {x, x_e};
}

EncodeOut encode(const Hypergraph& h, const EncoderParams& p, const Tensor* incidence_weights,
                 std::span<const Tensor> dropout_masks) {
    return encode_trunk(h, p.trunk, incidence_weights, dropout_masks);
}

Tensor project(const Tensor& z_v, const EncoderParams& p) {
    return l2_normalize_rows(mlp_apply(z_v, p.proj));
}

Tensor classify(const Tensor& z_v, const EncoderParams& p) {
    return add(matmul(z_v, p.w_cls), p.b_cls);
}

std::vector<Tensor> dropout_masks(std::int64_t rows, std::int64_t cols, std::int64_t count,
                                  double rate, Rng& rng) {
    if (rate <= 0.0) return {};
    if (!(rate < 1.0)) throw DataError("dropout rate must be in [0,1)");
    const double scale = 1.0 / (1.0 - rate);
    std::vector<Tensor> masks;
    masks.reserve(static_cast<std::size_t>(count));
    for (std::int64_t m = 0; m < count; ++m) {
        std::vector<double> data(static_cast<std::size_t>(rows * cols));
        for (auto& v : data) v = rng.bernoulli(rate) ? 0.0 : scale;
        masks.push_back(Tensor::leaf({rows, cols}, std::move(data)));
    }
    return masks;
}

}  // namespace hypergcl::model

#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hypergcl/hypergraph.hpp"
#include "hypergcl/rng.hpp"
#include "hypergcl/tensor.hpp"

namespace hypergcl::model {

// Two affine layers with a ReLU between: x -> relu(x*w1 + b1)*w2 + b2.
struct Mlp {
    Tensor w1, b1, w2, b2;
};

Tensor mlp_apply(const Tensor& x, const Mlp& m);

struct Block {
    Mlp vertex_to_edge;
    Mlp edge_to_vertex;
};

// Message-passing trunk: input projection followed by alternating
// vertex->hyperedge and hyperedge->vertex mean aggregation blocks.
// `final_vertex_relu` controls the nonlinearity of the last vertex update;
// the variational stacks turn it off so their mean/log-sigma outputs are not
// floored at zero.
struct TrunkParams {
    std::int64_t in_dim = 0;
    std::int64_t hidden = 0;
    bool final_vertex_relu = true;
    Tensor w_in, b_in;
    std::vector<Block> blocks;
};

struct EncoderDims {
    std::int64_t in_dim = 0;
    std::int64_t hidden = 64;
    std::int64_t num_blocks = 2;
    std::int64_t num_classes = 0;
    std::int64_t proj_dim = 64;
};

struct EncoderParams {
    TrunkParams trunk;
    std::int64_t num_classes = 0;
    std::int64_t proj_dim = 0;
    Tensor w_cls, b_cls;
    Mlp proj;
};

// Glorot-uniform weights, zero biases. Draw order is fixed so inits are
// reproducible from the seed alone.
TrunkParams init_trunk(std::int64_t in_dim, std::int64_t hidden, std::int64_t num_blocks, Rng& rng);
EncoderParams init_encoder(const EncoderDims& dims, Rng& rng);

void append_named(std::vector<std::pair<std::string, Tensor>>& out, const std::string& prefix,
                  const TrunkParams& p);
std::vector<std::pair<std::string, Tensor>> named_tensors(const EncoderParams& p);
std::vector<Tensor> tensors(const TrunkParams& p);
std::vector<Tensor> tensors(const EncoderParams& p);

// Deep copy with fresh leaves (used for best-epoch snapshots).
TrunkParams clone(const TrunkParams& p);
EncoderParams clone(const EncoderParams& p);

struct EncodeOut {
    Tensor z_v;  // |V| x hidden
    Tensor z_e;  // |E| x hidden
};

// Forward pass over the weighted incidence structure.
//   x = relu(X*w_in + b_in)
//   per block: x_e = MLP_ve(weighted mean of x over each hyperedge)
//              x   = relu(x + MLP_ev(weighted mean of x_e over each vertex))
// `incidence_weights` (one per incidence) overrides the hypergraph's own
// weights and may be a graph tensor, in which case gradients flow to it.
// Rows with zero total incident weight aggregate to zero. `dropout_masks`
// holds up to num_blocks tensors; mask i is multiplied into the vertex state
// consumed by block i.
EncodeOut encode_trunk(const Hypergraph& h, const TrunkParams& p,
                       const Tensor* incidence_weights = nullptr,
                       std::span<const Tensor> dropout_masks = {});
EncodeOut encode(const Hypergraph& h, const EncoderParams& p,
                 const Tensor* incidence_weights = nullptr,
                 std::span<const Tensor> dropout_masks = {});

// L2-normalized projection head output, |V| x proj_dim.
Tensor project(const Tensor& z_v, const EncoderParams& p);

// Linear classifier logits, |V| x num_classes.
Tensor classify(const Tensor& z_v, const EncoderParams& p);

// Inverted-dropout masks (0 or 1/(1-rate)); one per block. rate=0 gives an
// empty list.
std::vector<Tensor> dropout_masks(std::int64_t rows, std::int64_t cols, std::int64_t count,
                                  double rate, Rng& rng);

}  // namespace hypergcl::model

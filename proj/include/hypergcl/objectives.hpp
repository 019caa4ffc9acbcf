#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "hypergcl/tensor.hpp"

namespace hypergcl::objectives {

// Mean over masked vertices of -log softmax(logits)[label], with clamped log.
Tensor cross_entropy(const Tensor& logits, const std::vector<std::int64_t>& labels,
                     const std::vector<std::uint8_t>& mask);

// Normalized-temperature cross entropy between two aligned views of
// L2-normalized projections (|V| x d). For each anchor the positive is the
// same row in the other view and the negatives are all other 2|V|-2 rows;
// the mean is taken over all 2|V| anchors.
Tensor nt_xent(const Tensor& p1, const Tensor& p2, double tau);

// ce + lambda * ntxent
Tensor mtl_loss(const Tensor& ce, const Tensor& ntxent, double lambda);

// l_gen - beta * l_cl, minimized by the generator parameters only: the
// generator fits the data distribution while pushing the contrastive loss up.
Tensor generator_objective(const Tensor& l_gen, const Tensor& l_cl, double beta);

struct LossReport {
    double total = 0.0;
    std::vector<std::pair<std::string, double>> components;

    double component(const std::string& name) const;
};

}  // namespace hypergcl::objectives

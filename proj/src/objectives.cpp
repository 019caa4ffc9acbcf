#include "hypergcl/objectives.hpp"

#include <stdexcept>

namespace hypergcl::objectives {

using namespace hypergcl::diff;

Tensor cross_entropy(const Tensor& logits, const std::vector<std::int64_t>& labels,
                     const std::vector<std::uint8_t>& mask) {
    if (logits.shape().size() != 2) {
        throw ShapeError("cross_entropy: logits must be rank-2, got " + shape_str(logits.shape()));
    }
    const std::int64_t n = logits.dim(0);
    const std::int64_t c = logits.dim(1);
    if (static_cast<std::int64_t>(labels.size()) != n ||
        static_cast<std::int64_t>(mask.size()) != n) {
        throw std::invalid_argument("cross_entropy: labels/mask length does not match logits rows");
    }
    std::int64_t count = 0;
    for (auto m : mask) count += m;
    if (count == 0) throw std::invalid_argument("cross_entropy: mask selects no vertices");

    std::vector<double> sel(static_cast<std::size_t>(n * c), 0.0);
    const double inv = 1.0 / static_cast<double>(count);
    for (std::int64_t i = 0; i < n; ++i) {
        if (!mask[static_cast<std::size_t>(i)]) continue;
        const std::int64_t y = labels[static_cast<std::size_t>(i)];
        if (y < 0 || y >= c) {
            throw std::invalid_argument("cross_entropy: label " + std::to_string(y) +
                                        " outside [0," + std::to_string(c) + ")");
        }
        sel[static_cast<std::size_t>(i * c + y)] = inv;
    }
    Tensor weights = Tensor::leaf({n, c}, std::move(sel));
    return scalar_mul(sum(mul(log(softmax_rows(logits)), weights)), -1.0);
}

Tensor nt_xent(const Tensor& p1, const Tensor& p2, double tau) {
    if (!(tau > 0.0)) throw std::invalid_argument("nt_xent: temperature must be positive");
    if (p1.shape().size() != 2 || p1.shape() != p2.shape()) {
        throw ShapeError("nt_xent: views must share a rank-2 shape, got " +
                         shape_str(p1.shape()) + " vs " + shape_str(p2.shape()));
    }
    const std::int64_t n = p1.dim(0);
    if (n < 2) throw std::invalid_argument("nt_xent: need at least two anchors");
    const double inv_tau = 1.0 / tau;

    // Cosine similarities of normalized rows are plain dot products; |s| <= 1
    // keeps exp() well inside double range for any sane tau.
    Tensor e11 = exp(scalar_mul(matmul(p1, p1, false, true), inv_tau));
    Tensor e22 = exp(scalar_mul(matmul(p2, p2, false, true), inv_tau));
    Tensor e12 = exp(scalar_mul(matmul(p1, p2, false, true), inv_tau));

    std::vector<double> eye(static_cast<std::size_t>(n * n), 0.0);
    for (std::int64_t i = 0; i < n; ++i) eye[static_cast<std::size_t>(i * n + i)] = 1.0;
    Tensor identity = Tensor::leaf({n, n}, std::move(eye));
    Tensor ones = Tensor::full({n, 1}, 1.0);

    Tensor pos = matmul(mul(e12, identity), ones);       // exp(s+/tau) per anchor
    Tensor rs12 = matmul(e12, ones);
    Tensor cs12 = matmul(e12, ones, true, false);        // column sums = view-2 anchor row sums
    Tensor den1 = add(sub(matmul(e11, ones), matmul(mul(e11, identity), ones)), rs12);
    Tensor den2 = add(sub(matmul(e22, ones), matmul(mul(e22, identity), ones)), cs12);

    Tensor total = add(sub(sum(log(den1)), sum(log(pos))), sub(sum(log(den2)), sum(log(pos))));
    return scalar_mul(total, 1.0 / static_cast<double>(2 * n));
}

Tensor mtl_loss(const Tensor& ce, const Tensor& ntxent, double lambda) {
    if (lambda < 0.0) throw std::invalid_argument("mtl_loss: lambda must be >= 0");
    return add(ce, scalar_mul(ntxent, lambda));
}

Tensor generator_objective(const Tensor& l_gen, const Tensor& l_cl, double beta) {
    if (beta < 0.0) throw std::invalid_argument("generator_objective: beta must be >= 0");
    return sub(l_gen, scalar_mul(l_cl, beta));
}

double LossReport::component(const std::string& name) const {
    for (const auto& [k, v] : components) {
        if (k == name) return v;
    }
    throw std::out_of_range("LossReport: no component '" + name + "'");
}

}  // namespace hypergcl::objectives

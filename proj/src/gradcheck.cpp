#include "hypergcl/gradcheck.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace hypergcl::diff {

double grad_check(const std::function<Tensor()>& f, Tensor x, double eps) {
    if (!(eps > 0.0)) throw std::invalid_argument("grad_check: eps must be positive");
    if (!x.requires_grad()) throw std::invalid_argument("grad_check: x must require grad");

    Tensor loss = f();
    if (loss.numel() != 1) {
        throw ShapeError("grad_check: f must return a scalar, got " + shape_str(loss.shape()));
    }
    if (!std::isfinite(loss.item())) throw std::runtime_error("grad_check: f(x) is non-finite");
    backward(loss);
    std::vector<double> analytic;
    if (x.has_grad()) {
        analytic.assign(x.grad().begin(), x.grad().end());
    } else {
        analytic.assign(static_cast<std::size_t>(x.numel()), 0.0);
    }

    auto data = x.mutable_data();
    double max_err = 0.0;
    NoGradGuard no_grad;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const double saved = data[i];
        data[i] = saved + eps;
        const double up = f().item();
        data[i] = saved - eps;
        const double down = f().item();
        data[i] = saved;
        if (!std::isfinite(up) || !std::isfinite(down)) {
            throw std::runtime_error("grad_check: f non-finite at perturbed coordinate " +
                                     std::to_string(i));
        }
        const double central = (up - down) / (2.0 * eps);
        const double err = std::abs(analytic[i] - central) / std::max(1.0, std::abs(central));
        max_err = std::max(max_err, err);
    }
    return max_err;
}

}  // namespace hypergcl::diff

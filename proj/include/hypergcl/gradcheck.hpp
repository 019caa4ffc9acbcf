#pragma once

#include <functional>

#include "hypergcl/tensor.hpp"

namespace hypergcl::diff {

// Central-difference gradient check of a deterministic scalar-valued function
// against the reverse-mode gradient of leaf `x` (any randomness inside `f`
// must be fixed or externalized). Returns
//   max_i |analytic_i - central_i| / max(1, |central_i|).
// Throws if f is non-finite at any probe point or does not return a scalar.
double grad_check(const std::function<Tensor()>& f, Tensor x, double eps = 1e-5);

}  // namespace hypergcl::diff

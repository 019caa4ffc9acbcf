#include "hypergcl/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>
#include <unordered_set>

#include "hypergcl/kernels.hpp"

namespace hypergcl::diff {

namespace {

thread_local bool g_grad_enabled = true;

std::vector<double> transposed(const std::vector<double>& a, std::int64_t rows, std::int64_t cols) {
    std::vector<double> out(a.size());
    kernels::transpose(a.data(), out.data(), static_cast<std::size_t>(rows),
                       static_cast<std::size_t>(cols));
    return out;
}

[[noreturn]] void shape_fail(OpKind kind, const std::string& detail) {
    throw ShapeError(std::string(op_name(kind)) + ": " + detail);
}

void require_rank2(OpKind kind, const Tensor& t, const char* role) {
    if (t.shape().size() != 2) {
        shape_fail(kind, std::string(role) + " must be rank-2, got " + shape_str(t.shape()));
    }
}

std::shared_ptr<Node> make_result(Shape shape, std::vector<double> data, OpKind op,
                                  const std::vector<Tensor>& inputs, OpAttrs attrs = {},
                                  std::vector<double> aux = {}) {
    auto n = std::make_shared<Node>();
    n->shape = std::move(shape);
    n->data = std::move(data);
    bool record = g_grad_enabled;
    if (record) {
        record = false;
        for (const auto& in : inputs) {
            if (in.requires_grad()) {
                record = true;
                break;
            }
        }
    }
    if (record) {
        n->requires_grad = true;
        n->op = op;
        n->inputs.reserve(inputs.size());
        for (const auto& in : inputs) n->inputs.push_back(in.node());
        n->attrs = std::move(attrs);
        n->aux = std::move(aux);
    }
    return n;
}

// Broadcast plan for elementwise binary ops: identical shapes, or the smaller
// operand's shape is a suffix of the larger one's (single-element operands
// broadcast everywhere).
struct Bcast {
    bool same = false;
    bool a_small = false;  // which operand is tiled
    std::int64_t outer = 1;
    std::int64_t inner = 1;
};

bool is_suffix(const Shape& small, const Shape& big) {
    if (small.size() > big.size()) return false;
    for (std::size_t i = 0; i < small.size(); ++i) {
        if (small[small.size() - 1 - i] != big[big.size() - 1 - i]) return false;
    }
    return true;
}

Bcast bcast_plan_shapes(const Shape& a, const Shape& b) {
    Bcast p;
    if (a == b) {
        p.same = true;
        p.inner = shape_numel(a);
        return p;
    }
    const std::int64_t an = shape_numel(a);
    const std::int64_t bn = shape_numel(b);
    if (b.size() < a.size() && is_suffix(b, a) && bn > 0) {
        p.a_small = false;
        p.inner = bn;
        p.outer = an / bn;
    } else if (a.size() < b.size() && is_suffix(a, b) && an > 0) {
        p.a_small = true;
        p.inner = an;
        p.outer = bn / an;
    } else if (bn == 1) {
        p.a_small = false;
        p.inner = 1;
        p.outer = an;
    } else if (an == 1) {
        p.a_small = true;
        p.inner = 1;
        p.outer = bn;
    } else {
        p.outer = -1;  // incompatible
    }
    return p;
}

Bcast bcast_plan(OpKind kind, const Tensor& a, const Tensor& b) {
    Bcast p = bcast_plan_shapes(a.shape(), b.shape());
    if (p.outer < 0) {
        shape_fail(kind, "shapes " + shape_str(a.shape()) + " and " + shape_str(b.shape()) +
                             " do not broadcast");
    }
    return p;
}

enum class EwBinary { add, sub, mul };

Tensor ew_binary(EwBinary which, const Tensor& a, const Tensor& b) {
    const OpKind kind = which == EwBinary::add   ? OpKind::add
                        : which == EwBinary::sub ? OpKind::sub
                                                 : OpKind::mul;
    const Bcast p = bcast_plan(kind, a, b);
    const Tensor& out_shape_src = p.same ? a : (p.a_small ? b : a);
    std::vector<double> out(static_cast<std::size_t>(out_shape_src.numel()));
    const double* ad = a.data().data();
    const double* bd = b.data().data();

    if (p.same) {
        const std::size_t n = out.size();
        switch (which) {
            case EwBinary::add: kernels::add(ad, bd, out.data(), n); break;
            case EwBinary::sub: kernels::sub(ad, bd, out.data(), n); break;
            case EwBinary::mul: kernels::mul(ad, bd, out.data(), n); break;
        }
    } else if (p.inner == 1) {
        const double s = p.a_small ? a.data()[0] : b.data()[0];
        const double* bigd = p.a_small ? bd : ad;
        const std::size_t n = out.size();
        switch (which) {
            case EwBinary::add:
                for (std::size_t i = 0; i < n; ++i) out[i] = bigd[i] + s;
                break;
            case EwBinary::sub:
                if (p.a_small) {
                    for (std::size_t i = 0; i < n; ++i) out[i] = s - bigd[i];
                } else {
                    for (std::size_t i = 0; i < n; ++i) out[i] = bigd[i] - s;
                }
                break;
            case EwBinary::mul:
                for (std::size_t i = 0; i < n; ++i) out[i] = bigd[i] * s;
                break;
        }
    } else {
        const double* smalld = p.a_small ? ad : bd;
        const double* bigd = p.a_small ? bd : ad;
        const std::size_t inner = static_cast<std::size_t>(p.inner);
        for (std::int64_t o = 0; o < p.outer; ++o) {
            const double* brow = bigd + o * p.inner;
            double* orow = out.data() + o * p.inner;
            switch (which) {
                case EwBinary::add: kernels::add(brow, smalld, orow, inner); break;
                case EwBinary::sub:
                    if (p.a_small) {
                        kernels::sub(smalld, brow, orow, inner);
                    } else {
                        kernels::sub(brow, smalld, orow, inner);
                    }
                    break;
                case EwBinary::mul: kernels::mul(brow, smalld, orow, inner); break;
            }
        }
    }
    return Tensor::wrap(make_result(out_shape_src.shape(), std::move(out), kind, {a, b}));
}

Tensor ew_unary(OpKind kind, const Tensor& a, const std::function<double(double)>& f) {
    std::vector<double> out(a.data().begin(), a.data().end());
    for (auto& v : out) v = f(v);
    return Tensor::wrap(make_result(a.shape(), std::move(out), kind, {a}));
}

}  // namespace

std::int64_t shape_numel(const Shape& shape) {
    std::int64_t n = 1;
    for (auto d : shape) n *= d;
    return n;
}

std::string shape_str(const Shape& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << 'x';
        os << shape[i];
    }
    os << ']';
    return os.str();
}

std::string_view op_name(OpKind kind) {
    switch (kind) {
        case OpKind::leaf: return "leaf";
        case OpKind::matmul: return "matmul";
        case OpKind::add: return "add";
        case OpKind::sub: return "sub";
        case OpKind::mul: return "mul";
        case OpKind::scalar_mul: return "scalar_mul";
        case OpKind::sigmoid: return "sigmoid";
        case OpKind::relu: return "relu";
        case OpKind::tanh: return "tanh";
        case OpKind::exp: return "exp";
        case OpKind::log: return "log";
        case OpKind::softmax_rows: return "softmax_rows";
        case OpKind::sum: return "sum";
        case OpKind::mean: return "mean";
        case OpKind::concat_cols: return "concat_cols";
        case OpKind::gather_rows: return "gather_rows";
        case OpKind::segment_sum: return "segment_sum";
        case OpKind::segment_weighted_mean: return "segment_weighted_mean";
        case OpKind::l2_normalize_rows: return "l2_normalize_rows";
        case OpKind::square: return "square";
        case OpKind::clamp: return "clamp";
    }
    return "unknown";
}

Tensor Tensor::leaf(Shape shape, std::vector<double> data, bool requires_grad) {
    if (shape_numel(shape) != static_cast<std::int64_t>(data.size())) {
        throw ShapeError("leaf: shape " + shape_str(shape) + " does not match data length " +
                         std::to_string(data.size()));
    }
    auto n = std::make_shared<Node>();
    n->shape = std::move(shape);
    n->data = std::move(data);
    n->requires_grad = requires_grad;
    return Tensor::wrap(std::move(n));
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
    std::vector<double> data(static_cast<std::size_t>(shape_numel(shape)), 0.0);
    return leaf(std::move(shape), std::move(data), requires_grad);
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
    std::vector<double> data(static_cast<std::size_t>(shape_numel(shape)), value);
    return leaf(std::move(shape), std::move(data), requires_grad);
}

Tensor Tensor::scalar(double value) { return leaf({1}, {value}); }

std::span<double> Tensor::mutable_data() {
    if (node_->op != OpKind::leaf) {
        throw std::logic_error("mutable_data: only leaf tensors may be edited in place");
    }
    return node_->data;
}

std::span<const double> Tensor::grad() const {
    if (!has_grad()) throw std::logic_error("grad: no gradient present (run backward first)");
    return node_->grad;
}

double Tensor::item() const {
    if (numel() != 1) {
        throw ShapeError("item: tensor is not scalar-shaped, shape " + shape_str(shape()));
    }
    return node_->data[0];
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : prev_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = prev_; }

Tensor matmul(const Tensor& a, const Tensor& b, bool trans_a, bool trans_b) {
    require_rank2(OpKind::matmul, a, "lhs");
    require_rank2(OpKind::matmul, b, "rhs");
    const std::int64_t m = trans_a ? a.dim(1) : a.dim(0);
    const std::int64_t k = trans_a ? a.dim(0) : a.dim(1);
    const std::int64_t k2 = trans_b ? b.dim(1) : b.dim(0);
    const std::int64_t n = trans_b ? b.dim(0) : b.dim(1);
    if (k != k2) {
        shape_fail(OpKind::matmul, "inner dims disagree: " + shape_str(a.shape()) +
                                       (trans_a ? "^T" : "") + " * " + shape_str(b.shape()) +
                                       (trans_b ? "^T" : ""));
    }
    std::vector<double> aeff;
    std::vector<double> beff;
    const double* ap = a.data().data();
    const double* bp = b.data().data();
    if (trans_a) {
        aeff = transposed({a.data().begin(), a.data().end()}, a.dim(0), a.dim(1));
        ap = aeff.data();
    }
    if (trans_b) {
        beff = transposed({b.data().begin(), b.data().end()}, b.dim(0), b.dim(1));
        bp = beff.data();
    }
    std::vector<double> out(static_cast<std::size_t>(m * n), 0.0);
    kernels::matmul_nn_acc(ap, bp, out.data(), static_cast<std::size_t>(m),
                           static_cast<std::size_t>(k), static_cast<std::size_t>(n));
    OpAttrs attrs;
    attrs.trans_a = trans_a;
    attrs.trans_b = trans_b;
    return Tensor::wrap(make_result({m, n}, std::move(out), OpKind::matmul, {a, b}, attrs));
}

Tensor add(const Tensor& a, const Tensor& b) { return ew_binary(EwBinary::add, a, b); }
Tensor sub(const Tensor& a, const Tensor& b) { return ew_binary(EwBinary::sub, a, b); }
Tensor mul(const Tensor& a, const Tensor& b) { return ew_binary(EwBinary::mul, a, b); }

Tensor scalar_mul(const Tensor& a, double c) {
    std::vector<double> out(static_cast<std::size_t>(a.numel()));
    kernels::scale(a.data().data(), c, out.data(), out.size());
    OpAttrs attrs;
    attrs.scalar = c;
    return Tensor::wrap(make_result(a.shape(), std::move(out), OpKind::scalar_mul, {a}, attrs));
}

Tensor sigmoid(const Tensor& a) {
    return ew_unary(OpKind::sigmoid, a, [](double x) {
        if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
    });
}

Tensor relu(const Tensor& a) {
    std::vector<double> out(static_cast<std::size_t>(a.numel()));
    kernels::relu(a.data().data(), out.data(), out.size());
    return Tensor::wrap(make_result(a.shape(), std::move(out), OpKind::relu, {a}));
}

Tensor tanh(const Tensor& a) {
    return ew_unary(OpKind::tanh, a, [](double x) { return std::tanh(x); });
}

Tensor exp(const Tensor& a) {
    return ew_unary(OpKind::exp, a, [](double x) { return std::exp(x); });
}

Tensor log(const Tensor& a) {
    return ew_unary(OpKind::log, a, [](double x) { return std::log(std::max(x, kLogClamp)); });
}

Tensor softmax_rows(const Tensor& a) {
    require_rank2(OpKind::softmax_rows, a, "input");
    const std::int64_t rows = a.dim(0);
    const std::int64_t cols = a.dim(1);
    if (cols == 0) shape_fail(OpKind::softmax_rows, "zero-width rows");
    std::vector<double> out(static_cast<std::size_t>(rows * cols));
    const double* ad = a.data().data();
    for (std::int64_t r = 0; r < rows; ++r) {
        const double* x = ad + r * cols;
        double* y = out.data() + r * cols;
        double mx = x[0];
        for (std::int64_t c = 1; c < cols; ++c) mx = std::max(mx, x[c]);
        double s = 0.0;
        for (std::int64_t c = 0; c < cols; ++c) {
            y[c] = std::exp(x[c] - mx);
            s += y[c];
        }
        const double inv = 1.0 / s;
        for (std::int64_t c = 0; c < cols; ++c) y[c] *= inv;
    }
    return Tensor::wrap(make_result(a.shape(), std::move(out), OpKind::softmax_rows, {a}));
}

Tensor sum(const Tensor& a) {
    double s = 0.0;
    for (double v : a.data()) s += v;
    return Tensor::wrap(make_result({1}, {s}, OpKind::sum, {a}));
}

Tensor mean(const Tensor& a) {
    if (a.numel() == 0) shape_fail(OpKind::mean, "mean of empty tensor");
    double s = 0.0;
    for (double v : a.data()) s += v;
    return Tensor::wrap(
        make_result({1}, {s / static_cast<double>(a.numel())}, OpKind::mean, {a}));
}

Tensor concat_cols(const Tensor& a, const Tensor& b) {
    require_rank2(OpKind::concat_cols, a, "lhs");
    require_rank2(OpKind::concat_cols, b, "rhs");
    if (a.dim(0) != b.dim(0)) {
        shape_fail(OpKind::concat_cols, "row counts disagree: " + shape_str(a.shape()) + " vs " +
                                            shape_str(b.shape()));
    }
    const std::int64_t rows = a.dim(0);
    const std::int64_t ca = a.dim(1);
    const std::int64_t cb = b.dim(1);
    std::vector<double> out(static_cast<std::size_t>(rows * (ca + cb)));
    for (std::int64_t r = 0; r < rows; ++r) {
        std::copy_n(a.data().data() + r * ca, ca, out.data() + r * (ca + cb));
        std::copy_n(b.data().data() + r * cb, cb, out.data() + r * (ca + cb) + ca);
    }
    return Tensor::wrap(make_result({rows, ca + cb}, std::move(out), OpKind::concat_cols, {a, b}));
}

Tensor gather_rows(const Tensor& a, std::vector<std::int64_t> rows) {
    require_rank2(OpKind::gather_rows, a, "input");
    const std::int64_t n = a.dim(0);
    const std::int64_t d = a.dim(1);
    for (auto r : rows) {
        if (r < 0 || r >= n) {
            shape_fail(OpKind::gather_rows,
                       "row index " + std::to_string(r) + " out of range [0," + std::to_string(n) + ")");
        }
    }
    const std::int64_t k = static_cast<std::int64_t>(rows.size());
    std::vector<double> out(static_cast<std::size_t>(k * d));
    for (std::int64_t i = 0; i < k; ++i) {
        std::copy_n(a.data().data() + rows[i] * d, d, out.data() + i * d);
    }
    OpAttrs attrs;
    attrs.indices = std::make_shared<const std::vector<std::int64_t>>(std::move(rows));
    return Tensor::wrap(make_result({k, d}, std::move(out), OpKind::gather_rows, {a}, attrs));
}

namespace {

void check_segments(OpKind kind, const SegmentIndex& seg, std::int64_t num_rows) {
    if (static_cast<std::int64_t>(seg.targets.size()) != num_rows) {
        shape_fail(kind, "targets length " + std::to_string(seg.targets.size()) +
                             " does not match row count " + std::to_string(num_rows));
    }
    for (auto t : seg.targets) {
        if (t < 0 || t >= seg.num_segments) {
            shape_fail(kind, "segment id " + std::to_string(t) + " out of range [0," +
                                 std::to_string(seg.num_segments) + ")");
        }
    }
}

}  // namespace

Tensor segment_sum(const Tensor& values, const SegmentIndex& seg) {
    require_rank2(OpKind::segment_sum, values, "values");
    const std::int64_t k = values.dim(0);
    const std::int64_t d = values.dim(1);
    check_segments(OpKind::segment_sum, seg, k);
    std::vector<double> out(static_cast<std::size_t>(seg.num_segments * d), 0.0);
    const double* vd = values.data().data();
    for (std::int64_t i = 0; i < k; ++i) {
        kernels::axpy(1.0, vd + i * d, out.data() + seg.targets[i] * d,
                      static_cast<std::size_t>(d));
    }
    OpAttrs attrs;
    attrs.indices = std::make_shared<const std::vector<std::int64_t>>(seg.targets);
    attrs.num_segments = seg.num_segments;
    return Tensor::wrap(
        make_result({seg.num_segments, d}, std::move(out), OpKind::segment_sum, {values}, attrs));
}

Tensor segment_weighted_mean(const Tensor& values, const Tensor& weights, const SegmentIndex& seg) {
    require_rank2(OpKind::segment_weighted_mean, values, "values");
    const std::int64_t k = values.dim(0);
    const std::int64_t d = values.dim(1);
    if (weights.numel() != k) {
        shape_fail(OpKind::segment_weighted_mean,
                   "weights shape " + shape_str(weights.shape()) + " does not match " +
                       std::to_string(k) + " rows");
    }
    check_segments(OpKind::segment_weighted_mean, seg, k);
    const std::int64_t s = seg.num_segments;
    std::vector<double> out(static_cast<std::size_t>(s * d), 0.0);
    std::vector<double> totals(static_cast<std::size_t>(s), 0.0);
    const double* vd = values.data().data();
    const double* wd = weights.data().data();
    for (std::int64_t i = 0; i < k; ++i) totals[static_cast<std::size_t>(seg.targets[i])] += wd[i];
    for (std::int64_t i = 0; i < k; ++i) {
        kernels::axpy(wd[i], vd + i * d, out.data() + seg.targets[i] * d,
                      static_cast<std::size_t>(d));
    }
    for (std::int64_t j = 0; j < s; ++j) {
        double* row = out.data() + j * d;
        if (totals[static_cast<std::size_t>(j)] == 0.0) {
            std::fill_n(row, d, 0.0);
        } else {
            kernels::scale(row, 1.0 / totals[static_cast<std::size_t>(j)], row,
                           static_cast<std::size_t>(d));
        }
    }
    OpAttrs attrs;
    attrs.indices = std::make_shared<const std::vector<std::int64_t>>(seg.targets);
    attrs.num_segments = s;
    return Tensor::wrap(make_result({s, d}, std::move(out), OpKind::segment_weighted_mean,
                                    {values, weights}, attrs, std::move(totals)));
}

Tensor l2_normalize_rows(const Tensor& a) {
    require_rank2(OpKind::l2_normalize_rows, a, "input");
    const std::int64_t rows = a.dim(0);
    const std::int64_t d = a.dim(1);
    std::vector<double> out(static_cast<std::size_t>(rows * d));
    std::vector<double> norms(static_cast<std::size_t>(rows), 0.0);
    const double* ad = a.data().data();
    for (std::int64_t r = 0; r < rows; ++r) {
        const double* x = ad + r * d;
        double sq = 0.0;
        for (std::int64_t c = 0; c < d; ++c) sq += x[c] * x[c];
        const double nrm = std::sqrt(sq);
        norms[static_cast<std::size_t>(r)] = nrm;
        double* y = out.data() + r * d;
        if (nrm == 0.0) {
            std::fill_n(y, d, 0.0);  // zero rows stay zero
        } else {
            kernels::scale(x, 1.0 / nrm, y, static_cast<std::size_t>(d));
        }
    }
    return Tensor::wrap(
        make_result(a.shape(), std::move(out), OpKind::l2_normalize_rows, {a}, {}, std::move(norms)));
}

Tensor square(const Tensor& a) {
    std::vector<double> out(static_cast<std::size_t>(a.numel()));
    kernels::square(a.data().data(), out.data(), out.size());
    return Tensor::wrap(make_result(a.shape(), std::move(out), OpKind::square, {a}));
}

Tensor clamp(const Tensor& a, double lo, double hi) {
    if (!(lo <= hi)) {
        shape_fail(OpKind::clamp, "invalid bounds [" + std::to_string(lo) + "," + std::to_string(hi) + "]");
    }
    OpAttrs attrs;
    attrs.lo = lo;
    attrs.hi = hi;
    std::vector<double> out(a.data().begin(), a.data().end());
    for (auto& v : out) v = std::min(std::max(v, lo), hi);
    return Tensor::wrap(make_result(a.shape(), std::move(out), OpKind::clamp, {a}, attrs));
}

Tensor apply(OpKind kind, const std::vector<Tensor>& inputs, const OpAttrs& attrs) {
    auto want = [&](std::size_t n) {
        if (inputs.size() != n) {
            shape_fail(kind, "expected " + std::to_string(n) + " inputs, got " +
                                 std::to_string(inputs.size()));
        }
    };
    switch (kind) {
        case OpKind::matmul: want(2); return matmul(inputs[0], inputs[1], attrs.trans_a, attrs.trans_b);
        case OpKind::add: want(2); return add(inputs[0], inputs[1]);
        case OpKind::sub: want(2); return sub(inputs[0], inputs[1]);
        case OpKind::mul: want(2); return mul(inputs[0], inputs[1]);
        case OpKind::scalar_mul: want(1); return scalar_mul(inputs[0], attrs.scalar);
        case OpKind::sigmoid: want(1); return sigmoid(inputs[0]);
        case OpKind::relu: want(1); return relu(inputs[0]);
        case OpKind::tanh: want(1); return tanh(inputs[0]);
        case OpKind::exp: want(1); return exp(inputs[0]);
        case OpKind::log: want(1); return log(inputs[0]);
        case OpKind::softmax_rows: want(1); return softmax_rows(inputs[0]);
        case OpKind::sum: want(1); return sum(inputs[0]);
        case OpKind::mean: want(1); return mean(inputs[0]);
        case OpKind::concat_cols: want(2); return concat_cols(inputs[0], inputs[1]);
        case OpKind::gather_rows: {
            want(1);
            if (!attrs.indices) shape_fail(kind, "missing row indices");
            return gather_rows(inputs[0], *attrs.indices);
        }
        case OpKind::segment_sum: {
            want(1);
            if (!attrs.indices) shape_fail(kind, "missing segment targets");
            return segment_sum(inputs[0], {*attrs.indices, attrs.num_segments});
        }
        case OpKind::segment_weighted_mean: {
            want(2);
            if (!attrs.indices) shape_fail(kind, "missing segment targets");
            return segment_weighted_mean(inputs[0], inputs[1], {*attrs.indices, attrs.num_segments});
        }
        case OpKind::l2_normalize_rows: want(1); return l2_normalize_rows(inputs[0]);
        case OpKind::square: want(1); return square(inputs[0]);
        case OpKind::clamp: want(1); return clamp(inputs[0], attrs.lo, attrs.hi);
        case OpKind::leaf: break;
    }
    shape_fail(kind, "not an applicable op");
}

// ---------------------------------------------------------------------------
// Backward
// ---------------------------------------------------------------------------

namespace {

// Accumulate g (shaped like the broadcast output) into the grad of `dst`,
// reducing over tiled leading dims when dst was the smaller operand.
void bcast_acc(Node* dst, const std::vector<double>& g, std::int64_t outer, std::int64_t inner,
               bool dst_small, double sign) {
    if (!dst->requires_grad) return;
    double* gd = dst->grad.data();
    if (!dst_small) {
        kernels::axpy(sign, g.data(), gd, g.size());
        return;
    }
    if (inner == 1) {
        double s = 0.0;
        for (double v : g) s += v;
        gd[0] += sign * s;
        return;
    }
    for (std::int64_t o = 0; o < outer; ++o) {
        kernels::axpy(sign, g.data() + o * inner, gd, static_cast<std::size_t>(inner));
    }
}

// Same, but with an elementwise factor (for mul): dst.grad += g * other.
void bcast_mul_acc(Node* dst, const std::vector<double>& g, const Node* other,
                   std::int64_t outer, std::int64_t inner, bool dst_small, bool other_small) {
    if (!dst->requires_grad) return;
    double* gd = dst->grad.data();
    const double* od = other->data.data();
    if (!dst_small && !other_small) {
        kernels::mul_acc(g.data(), od, gd, g.size());
        return;
    }
    if (!dst_small && other_small) {
        if (inner == 1) {
            kernels::axpy(od[0], g.data(), gd, g.size());
        } else {
            for (std::int64_t o = 0; o < outer; ++o) {
                kernels::mul_acc(g.data() + o * inner, od, gd + o * inner,
                                 static_cast<std::size_t>(inner));
            }
        }
        return;
    }
    // dst is the tiled operand: reduce g * other over the leading dims.
    if (inner == 1) {
        double s = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) s += g[i] * od[i];
        gd[0] += s;
        return;
    }
    for (std::int64_t o = 0; o < outer; ++o) {
        kernels::mul_acc(g.data() + o * inner, od + o * inner, gd,
                         static_cast<std::size_t>(inner));
    }
}

Bcast plan_of(const Node* n) {
    return bcast_plan_shapes(n->inputs[0]->shape, n->inputs[1]->shape);
}

void vjp_matmul(Node* n) {
    Node* a = n->inputs[0].get();
    Node* b = n->inputs[1].get();
    const bool ta = n->attrs.trans_a;
    const bool tb = n->attrs.trans_b;
    const std::int64_t m = n->shape[0];
    const std::int64_t nn = n->shape[1];
    const std::int64_t k = ta ? a->shape[0] : a->shape[1];
    const std::vector<double>& g = n->grad;

    if (a->requires_grad) {
        // dA_eff = g * B_eff^T; B_eff^T is b as stored when trans_b is set.
        std::vector<double> bt;
        const double* btp;
        if (tb) {
            btp = b->data.data();
        } else {
            bt = transposed(b->data, b->shape[0], b->shape[1]);
            btp = bt.data();
        }
        if (!ta) {
            kernels::matmul_nn_acc(g.data(), btp, a->grad.data(), static_cast<std::size_t>(m),
                                   static_cast<std::size_t>(nn), static_cast<std::size_t>(k));
        } else {
            std::vector<double> da(static_cast<std::size_t>(m * k), 0.0);
            kernels::matmul_nn_acc(g.data(), btp, da.data(), static_cast<std::size_t>(m),
                                   static_cast<std::size_t>(nn), static_cast<std::size_t>(k));
            // a stores the transposed layout [k x m]
            for (std::int64_t i = 0; i < m; ++i) {
                for (std::int64_t j = 0; j < k; ++j) a->grad[j * m + i] += da[i * k + j];
            }
        }
    }
    if (b->requires_grad) {
        // dB_eff = A_eff^T * g; A_eff^T is a as stored when trans_a is set.
        std::vector<double> at;
        const double* atp;
        if (ta) {
            atp = a->data.data();
        } else {
            at = transposed(a->data, a->shape[0], a->shape[1]);
            atp = at.data();
        }
        if (!tb) {
            kernels::matmul_nn_acc(atp, g.data(), b->grad.data(), static_cast<std::size_t>(k),
                                   static_cast<std::size_t>(m), static_cast<std::size_t>(nn));
        } else {
            std::vector<double> db(static_cast<std::size_t>(k * nn), 0.0);
            kernels::matmul_nn_acc(atp, g.data(), db.data(), static_cast<std::size_t>(k),
                                   static_cast<std::size_t>(m), static_cast<std::size_t>(nn));
            for (std::int64_t i = 0; i < k; ++i) {
                for (std::int64_t j = 0; j < nn; ++j) b->grad[j * k + i] += db[i * nn + j];
            }
        }
    }
}

void vjp_node(Node* n) {
    const std::vector<double>& g = n->grad;
    switch (n->op) {
        case OpKind::matmul:
            vjp_matmul(n);
            break;
        case OpKind::add: {
            auto p = plan_of(n);
            bcast_acc(n->inputs[0].get(), g, p.outer, p.inner, !p.same && p.a_small, 1.0);
            bcast_acc(n->inputs[1].get(), g, p.outer, p.inner, !p.same && !p.a_small, 1.0);
            break;
        }
        case OpKind::sub: {
            auto p = plan_of(n);
            bcast_acc(n->inputs[0].get(), g, p.outer, p.inner, !p.same && p.a_small, 1.0);
            bcast_acc(n->inputs[1].get(), g, p.outer, p.inner, !p.same && !p.a_small, -1.0);
            break;
        }
        case OpKind::mul: {
            auto p = plan_of(n);
            const bool a_small = !p.same && p.a_small;
            const bool b_small = !p.same && !p.a_small;
            bcast_mul_acc(n->inputs[0].get(), g, n->inputs[1].get(), p.outer, p.inner, a_small,
                          b_small);
            bcast_mul_acc(n->inputs[1].get(), g, n->inputs[0].get(), p.outer, p.inner, b_small,
                          a_small);
            break;
        }
        case OpKind::scalar_mul: {
            Node* a = n->inputs[0].get();
            if (a->requires_grad) kernels::axpy(n->attrs.scalar, g.data(), a->grad.data(), g.size());
            break;
        }
        case OpKind::sigmoid: {
            Node* a = n->inputs[0].get();
            if (!a->requires_grad) break;
            for (std::size_t i = 0; i < g.size(); ++i) {
                const double y = n->data[i];
                a->grad[i] += g[i] * y * (1.0 - y);
            }
            break;
        }
        case OpKind::relu: {
            Node* a = n->inputs[0].get();
            if (!a->requires_grad) break;
            kernels::relu_bwd_acc(a->data.data(), g.data(), a->grad.data(), g.size());
            break;
        }
        case OpKind::tanh: {
            Node* a = n->inputs[0].get();
            if (!a->requires_grad) break;
            for (std::size_t i = 0; i < g.size(); ++i) {
                const double y = n->data[i];
                a->grad[i] += g[i] * (1.0 - y * y);
            }
            break;
        }
        case OpKind::exp: {
            Node* a = n->inputs[0].get();
            if (!a->requires_grad) break;
            kernels::mul_acc(g.data(), n->data.data(), a->grad.data(), g.size());
            break;
        }
        case OpKind::log: {
            Node* a = n->inputs[0].get();
            if (!a->requires_grad) break;
            for (std::size_t i = 0; i < g.size(); ++i) {
                a->grad[i] += g[i] / std::max(a->data[i], kLogClamp);
            }
            break;
        }
        case OpKind::softmax_rows: {
            Node* a = n->inputs[0].get();
            if (!a->requires_grad) break;
            const std::int64_t rows = n->shape[0];
            const std::int64_t cols = n->shape[1];
            for (std::int64_t r = 0; r < rows; ++r) {
                const double* y = n->data.data() + r * cols;
                const double* gr = g.data() + r * cols;
                double* ga = a->grad.data() + r * cols;
                double dot = 0.0;
                for (std::int64_t c = 0; c < cols; ++c) dot += gr[c] * y[c];
                for (std::int64_t c = 0; c < cols; ++c) ga[c] += y[c] * (gr[c] - dot);
            }
            break;
        }
        case OpKind::sum: {
            Node* a = n->inputs[0].get();
            if (!a->requires_grad) break;
            const double g0 = g[0];
            for (auto& v : a->grad) v += g0;
            break;
        }
        case OpKind::mean: {
            Node* a = n->inputs[0].get();
            if (!a->requires_grad) break;
            const double g0 = g[0] / static_cast<double>(a->numel());
            for (auto& v : a->grad) v += g0;
            break;
        }
        case OpKind::concat_cols: {
            Node* a = n->inputs[0].get();
            Node* b = n->inputs[1].get();
            const std::int64_t rows = n->shape[0];
            const std::int64_t ca = a->shape[1];
            const std::int64_t cb = b->shape[1];
            for (std::int64_t r = 0; r < rows; ++r) {
                const double* gr = g.data() + r * (ca + cb);
                if (a->requires_grad) {
                    kernels::axpy(1.0, gr, a->grad.data() + r * ca, static_cast<std::size_t>(ca));
                }
                if (b->requires_grad) {
                    kernels::axpy(1.0, gr + ca, b->grad.data() + r * cb,
                                  static_cast<std::size_t>(cb));
                }
            }
            break;
        }
        case OpKind::gather_rows: {
            Node* a = n->inputs[0].get();
            if (!a->requires_grad) break;
            const auto& idx = *n->attrs.indices;
            const std::int64_t d = n->shape[1];
            for (std::size_t i = 0; i < idx.size(); ++i) {
                kernels::axpy(1.0, g.data() + static_cast<std::int64_t>(i) * d,
                              a->grad.data() + idx[i] * d, static_cast<std::size_t>(d));
            }
            break;
        }
        case OpKind::segment_sum: {
            Node* a = n->inputs[0].get();
            if (!a->requires_grad) break;
            const auto& tgt = *n->attrs.indices;
            const std::int64_t d = n->shape[1];
            for (std::size_t i = 0; i < tgt.size(); ++i) {
                kernels::axpy(1.0, g.data() + tgt[i] * d,
                              a->grad.data() + static_cast<std::int64_t>(i) * d,
                              static_cast<std::size_t>(d));
            }
            break;
        }
        case OpKind::segment_weighted_mean: {
            Node* v = n->inputs[0].get();
            Node* w = n->inputs[1].get();
            const auto& tgt = *n->attrs.indices;
            const std::int64_t d = n->shape[1];
            const std::vector<double>& totals = n->aux;
            for (std::size_t i = 0; i < tgt.size(); ++i) {
                const double total = totals[static_cast<std::size_t>(tgt[i])];
                if (total == 0.0) continue;
                const double* gs = g.data() + tgt[i] * d;
                if (v->requires_grad) {
                    kernels::axpy(w->data[i] / total, gs,
                                  v->grad.data() + static_cast<std::int64_t>(i) * d,
                                  static_cast<std::size_t>(d));
                }
                if (w->requires_grad) {
                    const double* vi = v->data.data() + static_cast<std::int64_t>(i) * d;
                    const double* os = n->data.data() + tgt[i] * d;
                    double acc = 0.0;
                    for (std::int64_t c = 0; c < d; ++c) acc += (vi[c] - os[c]) * gs[c];
                    w->grad[i] += acc / total;
                }
            }
            break;
        }
        case OpKind::l2_normalize_rows: {
            Node* a = n->inputs[0].get();
            if (!a->requires_grad) break;
            const std::int64_t rows = n->shape[0];
            const std::int64_t d = n->shape[1];
            for (std::int64_t r = 0; r < rows; ++r) {
                const double nrm = n->aux[static_cast<std::size_t>(r)];
                if (nrm == 0.0) continue;
                const double* y = n->data.data() + r * d;
                const double* gr = g.data() + r * d;
                double* ga = a->grad.data() + r * d;
                double dot = 0.0;
                for (std::int64_t c = 0; c < d; ++c) dot += y[c] * gr[c];
                const double inv = 1.0 / nrm;
                for (std::int64_t c = 0; c < d; ++c) ga[c] += (gr[c] - y[c] * dot) * inv;
            }
            break;
        }
        case OpKind::square: {
            Node* a = n->inputs[0].get();
            if (!a->requires_grad) break;
            for (std::size_t i = 0; i < g.size(); ++i) a->grad[i] += 2.0 * a->data[i] * g[i];
            break;
        }
        case OpKind::clamp: {
            Node* a = n->inputs[0].get();
            if (!a->requires_grad) break;
            const double lo = n->attrs.lo;
            const double hi = n->attrs.hi;
            for (std::size_t i = 0; i < g.size(); ++i) {
                const double x = a->data[i];
                if (x > lo && x < hi) a->grad[i] += g[i];
            }
            break;
        }
        case OpKind::leaf:
            break;
    }
}

}  // namespace

void backward(const Tensor& loss) {
    if (!loss.defined() || loss.numel() != 1) {
        throw ShapeError("backward: loss must be scalar-shaped, got " +
                         (loss.defined() ? shape_str(loss.shape()) : std::string("<undefined>")));
    }
    Node* root = loss.node().get();
    if (!root->requires_grad) return;  // constant graph, nothing reachable

    // Iterative post-order DFS; the op graph is acyclic by construction.
    std::vector<Node*> order;
    std::unordered_set<Node*> visited;
    std::vector<std::pair<Node*, std::size_t>> stack;
    stack.emplace_back(root, 0);
    visited.insert(root);
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->inputs.size()) {
            Node* child = node->inputs[next].get();
            ++next;
            if (child->requires_grad && visited.insert(child).second) {
                stack.emplace_back(child, 0);
            }
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }

    // Explicit zeroing pass: grads are overwritten per backward call.
    for (Node* n : order) n->grad.assign(n->data.size(), 0.0);
    root->grad[0] = 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        if ((*it)->op != OpKind::leaf) vjp_node(*it);
    }
}

}  // namespace hypergcl::diff

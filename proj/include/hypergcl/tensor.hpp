#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace hypergcl::diff {

using Shape = std::vector<std::int64_t>;

std::int64_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

class ShapeError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Inputs to log() are clamped here, and the backward pass differentiates the
// clamped value, so saturated sigmoids never produce NaN in BCE/KL terms.
inline constexpr double kLogClamp = 1e-12;

enum class OpKind {
    leaf,
    matmul,
    add,
    sub,
    mul,
    scalar_mul,
    sigmoid,
    relu,
    tanh,
    exp,
    log,
    softmax_rows,
    sum,
    mean,
    concat_cols,
    gather_rows,
    segment_sum,
    segment_weighted_mean,
    l2_normalize_rows,
    square,
    clamp,
};

std::string_view op_name(OpKind kind);

// Maps each source row to a segment id; carrier for incidence-indexed
// aggregation (vertex->hyperedge and back).
struct SegmentIndex {
    std::vector<std::int64_t> targets;
    std::int64_t num_segments = 0;
};

struct OpAttrs {
    double scalar = 0.0;                                        // scalar_mul
    double lo = 0.0;                                            // clamp
    double hi = 0.0;                                            // clamp
    bool trans_a = false;                                       // matmul
    bool trans_b = false;                                       // matmul
    std::shared_ptr<const std::vector<std::int64_t>> indices;   // gather_rows, segment ops
    std::int64_t num_segments = 0;                              // segment ops
};

struct Node {
    Shape shape;
    std::vector<double> data;
    bool requires_grad = false;
    OpKind op = OpKind::leaf;
    std::vector<std::shared_ptr<Node>> inputs;
    OpAttrs attrs;
    std::vector<double> aux;   // op-specific saved forward values
    std::vector<double> grad;  // sized by the zeroing pass in backward()

    std::int64_t numel() const { return static_cast<std::int64_t>(data.size()); }
};

// Dense tensor handle. Copies share the underlying node; the op graph hangs
// off `node->inputs` and is torn down when the last handle to a loss dies.
class Tensor {
  public:
    Tensor() = default;

    static Tensor leaf(Shape shape, std::vector<double> data, bool requires_grad = false);
    static Tensor zeros(Shape shape, bool requires_grad = false);
    static Tensor full(Shape shape, double value, bool requires_grad = false);
    static Tensor scalar(double value);

    bool defined() const { return node_ != nullptr; }
    const Shape& shape() const { return node_->shape; }
    std::int64_t numel() const { return node_->numel(); }
    std::int64_t dim(std::size_t i) const { return node_->shape.at(i); }
    bool requires_grad() const { return node_ && node_->requires_grad; }

    std::span<const double> data() const { return node_->data; }
    // Leaves only: parameter updates and finite-difference probes edit data in
    // place between graph builds.
    std::span<double> mutable_data();

    bool has_grad() const { return node_ && !node_->grad.empty(); }
    std::span<const double> grad() const;

    double item() const;
    double operator[](std::int64_t i) const { return node_->data.at(static_cast<std::size_t>(i)); }

    const std::shared_ptr<Node>& node() const { return node_; }
    static Tensor wrap(std::shared_ptr<Node> node) {
        Tensor t;
        t.node_ = std::move(node);
        return t;
    }

  private:
    std::shared_ptr<Node> node_;
};

// Thread-local switch; while disabled, ops produce constants with no
// provenance (used for evaluation passes and frozen-generator forwards).
bool grad_enabled();

class NoGradGuard {
  public:
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

  private:
    bool prev_;
};

// Generic catalog entry point; the named helpers below are thin wrappers.
Tensor apply(OpKind kind, const std::vector<Tensor>& inputs, const OpAttrs& attrs = {});

Tensor matmul(const Tensor& a, const Tensor& b, bool trans_a = false, bool trans_b = false);
// add/sub/mul broadcast over leading dims: the smaller operand's shape must be
// a suffix of the larger one's (or be a single element).
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scalar_mul(const Tensor& a, double c);
Tensor sigmoid(const Tensor& a);
Tensor relu(const Tensor& a);
Tensor tanh(const Tensor& a);
Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);
Tensor softmax_rows(const Tensor& a);
Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);
Tensor concat_cols(const Tensor& a, const Tensor& b);
Tensor gather_rows(const Tensor& a, std::vector<std::int64_t> rows);
Tensor segment_sum(const Tensor& values, const SegmentIndex& seg);
// Per-segment weighted mean of rows. Segments with zero total weight yield a
// zero row and pass no gradient.
Tensor segment_weighted_mean(const Tensor& values, const Tensor& weights, const SegmentIndex& seg);
Tensor l2_normalize_rows(const Tensor& a);
Tensor square(const Tensor& a);
Tensor clamp(const Tensor& a, double lo, double hi);

// Reverse-mode pass from a scalar loss. Grads of every node reachable from
// the loss are zeroed first, then overwritten; leaves keep their grad until
// the next backward() that touches them.
void backward(const Tensor& loss);

}  // namespace hypergcl::diff

namespace hypergcl {
using diff::Tensor;
}  // namespace hypergcl

#pragma once

#include <cstddef>
#include <string_view>

namespace hypergcl::kernels {

// Dense double-precision inner loops used by the tensor ops. Every kernel has
// a scalar reference implementation and (on x86-64) an AVX2 variant selected
// at runtime. The variants are written to produce bit-identical results: they
// keep the scalar accumulation order and use separate mul/add (no FMA), so the
// equivalence tests can compare lanes with memcmp.
//
// Reductions that would need a different accumulation order under SIMD
// (horizontal sums, softmax, transcendentals) intentionally stay scalar and
// live next to the ops that use them.

enum class Lane {
    scalar,
    avx2,
};

std::string_view lane_name(Lane lane);

// Lane picked at startup: best supported, unless the HYPERGCL_KERNELS
// environment variable ("scalar" or "avx2") says otherwise.
Lane active_lane();

// Highest lane this CPU supports.
Lane best_supported_lane();

// Force a lane, e.g. from tests. Returns false (and leaves the active lane
// unchanged) if the CPU does not support it. Not safe to call while kernels
// are running on other threads.
bool set_lane(Lane lane);

struct KernelTable {
    void (*add)(const double* a, const double* b, double* out, std::size_t n);
    void (*sub)(const double* a, const double* b, double* out, std::size_t n);
    void (*mul)(const double* a, const double* b, double* out, std::size_t n);
    void (*scale)(const double* a, double c, double* out, std::size_t n);
    // y += c * x
    void (*axpy)(double c, const double* x, double* y, std::size_t n);
    // out += a * b (elementwise)
    void (*mul_acc)(const double* a, const double* b, double* out, std::size_t n);
    void (*relu)(const double* a, double* out, std::size_t n);
    // out += (x > 0) ? g : 0
    void (*relu_bwd_acc)(const double* x, const double* g, double* out, std::size_t n);
    void (*square)(const double* a, double* out, std::size_t n);
    // C += A(m x k) * B(k x n), row-major, i-k-j loop order
    void (*matmul_nn_acc)(const double* a, const double* b, double* c,
                          std::size_t m, std::size_t k, std::size_t n);
};

const KernelTable& table();

inline void add(const double* a, const double* b, double* out, std::size_t n) { table().add(a, b, out, n); }
inline void sub(const double* a, const double* b, double* out, std::size_t n) { table().sub(a, b, out, n); }
inline void mul(const double* a, const double* b, double* out, std::size_t n) { table().mul(a, b, out, n); }
inline void scale(const double* a, double c, double* out, std::size_t n) { table().scale(a, c, out, n); }
inline void axpy(double c, const double* x, double* y, std::size_t n) { table().axpy(c, x, y, n); }
inline void mul_acc(const double* a, const double* b, double* out, std::size_t n) { table().mul_acc(a, b, out, n); }
inline void relu(const double* a, double* out, std::size_t n) { table().relu(a, out, n); }
inline void relu_bwd_acc(const double* x, const double* g, double* out, std::size_t n) { table().relu_bwd_acc(x, g, out, n); }
inline void square(const double* a, double* out, std::size_t n) { table().square(a, out, n); }
inline void matmul_nn_acc(const double* a, const double* b, double* c,
                          std::size_t m, std::size_t k, std::size_t n) {
    table().matmul_nn_acc(a, b, c, m, k, n);
}

// Plain data movement, no dispatch needed.
void transpose(const double* a, double* out, std::size_t rows, std::size_t cols);

namespace detail {
extern const KernelTable scalar_table;
#ifdef HYPERGCL_HAVE_AVX2
extern const KernelTable avx2_table;
#endif
}  // namespace detail

}  // namespace hypergcl::kernels

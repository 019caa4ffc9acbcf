#include "hypergcl/kernels.hpp"

#include <cstdlib>
#include <cstring>

namespace hypergcl::kernels {

namespace {

Lane detect_best() {
#ifdef HYPERGCL_HAVE_AVX2
    if (__builtin_cpu_supports("avx2")) return Lane::avx2;
#endif
    return Lane::scalar;
}

Lane initial_lane() {
    Lane best = detect_best();
    const char* env = std::getenv("HYPERGCL_KERNELS");
    if (env != nullptr) {
        if (std::strcmp(env, "scalar") == 0) return Lane::scalar;
        if (std::strcmp(env, "avx2") == 0 && best == Lane::avx2) return Lane::avx2;
    }
    return best;
}

const KernelTable* table_for(Lane lane) {
    switch (lane) {
        case Lane::avx2:
#ifdef HYPERGCL_HAVE_AVX2
            return &detail::avx2_table;
#else
            return nullptr;
#endif
        case Lane::scalar:
            return &detail::scalar_table;
    }
    return nullptr;
}

struct State {
    Lane lane;
    const KernelTable* table;
    State() : lane(initial_lane()), table(table_for(lane)) {}
};

State& state() {
    static State s;
    return s;
}

}  // namespace

std::string_view lane_name(Lane lane) {
    switch (lane) {
        case Lane::scalar: return "scalar";
        case Lane::avx2: return "avx2";
    }
    return "unknown";
}

Lane active_lane() { return state().lane; }

Lane best_supported_lane() { return detect_best(); }

bool set_lane(Lane lane) {
    if (lane == Lane::avx2 && detect_best() != Lane::avx2) return false;
    const KernelTable* t = table_for(lane);
    if (t == nullptr) return false;
    state().lane = lane;
    state().table = t;
    return true;
}

const KernelTable& table() { return *state().table; }

void transpose(const double* a, double* out, std::size_t rows, std::size_t cols) {
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < cols; ++j) out[j * rows + i] = a[i * cols + j];
    }
}

}  // namespace hypergcl::kernels

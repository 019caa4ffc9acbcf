#pragma once

// Shared fixtures for the test binaries.

#include <vector>

#include "hypergcl/hypergraph.hpp"

namespace hypergcl::testing {

// 5 vertices, 3 hyperedges: {0,1,2}, {2,3}, {3,4}; 7 incidences.
inline Hypergraph toy_5x3() {
    Hypergraph h;
    h.num_vertices = 5;
    h.num_hyperedges = 3;
    h.feature_dim = 4;
    h.features = {0.5, -1.0, 0.2, 0.1,  1.0, 0.3, -0.4, 0.9, -0.2, 0.8,
                  0.7, -0.6, 0.4, 0.4,  -0.9, 0.2, -0.3, 1.2, 0.6, -0.5};
    h.incidences = {{0, 0}, {1, 0}, {2, 0}, {2, 1}, {3, 1}, {3, 2}, {4, 2}};
    h.labels = {0, 0, 1, 1, 1};
    h.validate();
    return h;
}

}  // namespace hypergcl::testing

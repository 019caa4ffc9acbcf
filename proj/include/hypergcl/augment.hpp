#pragma once

#include <cstdint>
#include <string>

#include "hypergcl/hypergraph.hpp"

namespace hypergcl::augment {

enum class Kind {
    identity,           // A0
    hyperedge_removal,  // A1
    incidence_removal,  // A2
    vertex_drop,        // A3
    attr_mask,          // A4
    subgraph,           // A5
    generative,         // A6, produced by the trained generator, not here
};

struct AugmentationSpec {
    Kind kind = Kind::identity;
    double ratio = 0.2;    // removal probability for A1-A4
    double retain = 0.8;   // fraction of vertices kept by the A5 walk

    std::string str() const;
};

// Grammar: "A0", "A1:0.2", ..., "A5:0.8", "A6". The number is the removal
// ratio for A1-A4 and the retain fraction for A5; defaults are 0.2 / 0.8.
AugmentationSpec parse_spec(const std::string& text);

Hypergraph a0_identity(const Hypergraph& h);
// Removes each hyperedge independently with probability p, survivors
// reindexed densely.
Hypergraph a1_hyperedge_removal(const Hypergraph& h, double p, std::uint64_t seed);
// Removes each incidence pair independently with probability p; hyperedges
// left empty are dropped.
Hypergraph a2_incidence_removal(const Hypergraph& h, double p, std::uint64_t seed);
// Masks each vertex with probability p: incidences removed and feature row
// zeroed, but the row slot stays so the two contrastive views remain aligned.
Hypergraph a3_vertex_drop(const Hypergraph& h, double p, std::uint64_t seed);
// Zeroes each feature entry independently with probability p.
Hypergraph a4_attr_mask(const Hypergraph& h, double p, std::uint64_t seed);
// Random walk over the bipartite view until ceil(retain_frac*|V|) distinct
// vertices are visited (restarting when a component is exhausted); unvisited
// vertices are masked as in A3.
Hypergraph a5_subgraph(const Hypergraph& h, double retain_frac, std::uint64_t seed);

// Dispatch on spec.kind; throws DataError for Kind::generative.
Hypergraph apply_spec(const Hypergraph& h, const AugmentationSpec& spec, std::uint64_t seed);

// Keeps the flagged incidences, drops hyperedges left empty and reindexes
// them densely. Vertices, features and labels are untouched.
Hypergraph keep_incidences(const Hypergraph& h, const std::vector<std::uint8_t>& keep);

}  // namespace hypergcl::augment

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace hypergcl {

class DataError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// File/format problems; the message carries file name and line number.
class ParseError : public DataError {
  public:
    using DataError::DataError;
};

struct Incidence {
    std::int64_t vertex = 0;
    std::int64_t edge = 0;
    friend bool operator==(const Incidence&, const Incidence&) = default;
};

// Vertices with dense features plus a COO-style incidence list. Optional
// per-incidence weights in [0,1] act as a soft mask over the structure;
// absent weights mean all ones.
struct Hypergraph {
    std::int64_t num_vertices = 0;
    std::int64_t num_hyperedges = 0;
    std::int64_t feature_dim = 0;
    std::vector<double> features;             // row-major num_vertices x feature_dim
    std::vector<Incidence> incidences;
    std::vector<double> incidence_weights;    // empty or one per incidence
    std::vector<std::int64_t> labels;         // empty or one per vertex
    std::vector<std::int8_t> sensitive;       // empty or one per vertex, values 0/1

    bool has_labels() const { return !labels.empty(); }
    bool has_sensitive() const { return !sensitive.empty(); }
    bool has_weights() const { return !incidence_weights.empty(); }
    std::int64_t num_incidences() const { return static_cast<std::int64_t>(incidences.size()); }
    std::int64_t num_classes() const;

    // Throws DataError if any structural invariant is violated.
    void validate() const;

    std::vector<std::vector<std::int64_t>> edge_members() const;
    std::vector<double> weights_or_ones() const;
};

bool structural_equal(const Hypergraph& a, const Hypergraph& b);

// Lossless bipartite form: left set = vertices, right set = hyperedges,
// edges = incidences. Carries the payload so the round trip is total.
struct BipartiteView {
    std::int64_t num_left = 0;   // vertices
    std::int64_t num_right = 0;  // hyperedges
    std::vector<Incidence> edges;
    std::vector<double> edge_weights;
    std::int64_t feature_dim = 0;
    std::vector<double> left_features;
    std::vector<std::int64_t> left_labels;
    std::vector<std::int8_t> left_sensitive;
};

BipartiteView to_bipartite(const Hypergraph& h);
Hypergraph from_bipartite(const BipartiteView& view);

// Every hyperedge of size k becomes its k(k-1)/2 vertex pairs; duplicate
// pairs are merged. The result is 2-uniform with pairs in sorted order.
Hypergraph clique_expand(const Hypergraph& h);

struct Homophily {
    double h_edge = 0.0;
    double h_node = 0.0;
};

// h_edge: mean over hyperedges (size >= 2) of the fraction of same-label
// vertex pairs inside the hyperedge. h_node: mean over vertices with at least
// one co-member of the fraction of distinct co-hyperedge neighbours sharing
// the vertex's label.
Homophily homophily(const Hypergraph& h);

struct SplitMasks {
    std::vector<std::uint8_t> train;
    std::vector<std::uint8_t> val;
    std::vector<std::uint8_t> test;

    std::int64_t count(const std::vector<std::uint8_t>& mask) const;
};

// Uniform random split by shuffled vertex index: floor(frac*|V|) train and
// val rows, remainder test. Deterministic per seed.
SplitMasks split(const Hypergraph& h, double train_frac, double val_frac, std::uint64_t seed);

struct SynthConfig {
    std::int64_t num_vertices = 400;
    std::int64_t num_classes = 4;
    std::int64_t num_hyperedges = 120;
    std::int64_t min_edge_size = 3;
    std::int64_t max_edge_size = 6;
    double intra_class_probability = 0.9;  // q
    std::int64_t feature_dim = 16;
    double feature_noise = 1.0;
};

// Planted-partition style generator: with probability q a hyperedge draws all
// members from one random class, otherwise uniformly from all vertices.
// Features are one-hot(class) plus Gaussian noise, padded to feature_dim.
Hypergraph synth_hypergraph(const SynthConfig& cfg, std::uint64_t seed);

// Text formats (UTF-8, LF): hyperedge file has one hyperedge per line as
// space-separated 0-based vertex indices; feature file one vertex per line;
// label file one integer per line; sensitive file one 0/1 per line.
Hypergraph load_hypergraph(const std::filesystem::path& hyperedge_path,
                           const std::filesystem::path& feature_path,
                           const std::optional<std::filesystem::path>& label_path = {},
                           const std::optional<std::filesystem::path>& sensitive_path = {});

// Single-file JSON bundle:
// {"n": int, "hyperedges": [[int]], "features": [[float]], "labels": [int]?,
//  "sensitive": [int]?}
Hypergraph load_bundle(const std::filesystem::path& path);
void save_bundle(const std::filesystem::path& path, const Hypergraph& h);

// Writes hyperedges.txt / features.txt (+ labels.txt, sensitive.txt when
// present) into `dir`, creating it if needed. Byte-deterministic.
void save_text(const std::filesystem::path& dir, const Hypergraph& h);

}  // namespace hypergcl

#include "hypergcl/augment.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>

#include "hypergcl/rng.hpp"

namespace hypergcl::augment {

namespace {

void check_ratio(double p) {
    if (!(p >= 0.0 && p <= 1.0)) throw DataError("augment: ratio must be in [0,1]");
}

// Drop hyperedges that lost all incidences and reindex the survivors densely,
// preserving order. Weights stay aligned with their incidences.
Hypergraph rebuild(const Hypergraph& src, const std::vector<std::uint8_t>& keep_incidence,
                   std::vector<double> features) {
    Hypergraph out;
    out.num_vertices = src.num_vertices;
    out.feature_dim = src.feature_dim;
    out.features = std::move(features);
    out.labels = src.labels;
    out.sensitive = src.sensitive;

    std::vector<std::uint8_t> edge_alive(static_cast<std::size_t>(src.num_hyperedges), 0);
    for (std::size_t i = 0; i < src.incidences.size(); ++i) {
        if (keep_incidence[i]) edge_alive[static_cast<std::size_t>(src.incidences[i].edge)] = 1;
    }
    std::vector<std::int64_t> new_edge_id(static_cast<std::size_t>(src.num_hyperedges), -1);
    std::int64_t next = 0;
    for (std::int64_t e = 0; e < src.num_hyperedges; ++e) {
        if (edge_alive[static_cast<std::size_t>(e)]) new_edge_id[static_cast<std::size_t>(e)] = next++;
    }
    out.num_hyperedges = next;

    const bool weighted = src.has_weights();
    for (std::size_t i = 0; i < src.incidences.size(); ++i) {
        if (!keep_incidence[i]) continue;
        const auto& inc = src.incidences[i];
        out.incidences.push_back({inc.vertex, new_edge_id[static_cast<std::size_t>(inc.edge)]});
        if (weighted) out.incidence_weights.push_back(src.incidence_weights[i]);
    }
    out.validate();
    return out;
}

Hypergraph mask_vertices(const Hypergraph& h, const std::vector<std::uint8_t>& masked) {
    std::vector<double> features = h.features;
    for (std::int64_t v = 0; v < h.num_vertices; ++v) {
        if (masked[static_cast<std::size_t>(v)]) {
            std::fill_n(features.begin() + v * h.feature_dim, h.feature_dim, 0.0);
        }
    }
    std::vector<std::uint8_t> keep(h.incidences.size(), 1);
    for (std::size_t i = 0; i < h.incidences.size(); ++i) {
        if (masked[static_cast<std::size_t>(h.incidences[i].vertex)]) keep[i] = 0;
    }
    return rebuild(h, keep, std::move(features));
}

struct UnionFind {
    std::vector<std::int64_t> parent;
    explicit UnionFind(std::int64_t n) : parent(static_cast<std::size_t>(n)) {
        std::iota(parent.begin(), parent.end(), 0);
    }
    std::int64_t find(std::int64_t x) {
        while (parent[static_cast<std::size_t>(x)] != x) {
            parent[static_cast<std::size_t>(x)] =
                parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
            x = parent[static_cast<std::size_t>(x)];
        }
        return x;
    }
    void unite(std::int64_t a, std::int64_t b) {
        a = find(a);
        b = find(b);
        if (a != b) parent[static_cast<std::size_t>(b)] = a;
    }
};

}  // namespace

std::string AugmentationSpec::str() const {
    switch (kind) {
        case Kind::identity: return "A0";
        case Kind::hyperedge_removal: return "A1:" + std::to_string(ratio);
        case Kind::incidence_removal: return "A2:" + std::to_string(ratio);
        case Kind::vertex_drop: return "A3:" + std::to_string(ratio);
        case Kind::attr_mask: return "A4:" + std::to_string(ratio);
        case Kind::subgraph: return "A5:" + std::to_string(retain);
        case Kind::generative: return "A6";
    }
    return "A0";
}

AugmentationSpec parse_spec(const std::string& text) {
    std::string head = text;
    std::string param;
    if (auto pos = text.find(':'); pos != std::string::npos) {
        head = text.substr(0, pos);
        param = text.substr(pos + 1);
    }
    AugmentationSpec spec;
    if (head == "A0") {
        spec.kind = Kind::identity;
    } else if (head == "A1") {
        spec.kind = Kind::hyperedge_removal;
    } else if (head == "A2") {
        spec.kind = Kind::incidence_removal;
    } else if (head == "A3") {
        spec.kind = Kind::vertex_drop;
    } else if (head == "A4") {
        spec.kind = Kind::attr_mask;
    } else if (head == "A5") {
        spec.kind = Kind::subgraph;
    } else if (head == "A6") {
        spec.kind = Kind::generative;
    } else {
        throw DataError("augment: unknown operator '" + text + "' (expected A0..A6)");
    }
    if (!param.empty()) {
        if (spec.kind == Kind::identity || spec.kind == Kind::generative) {
            throw DataError("augment: '" + head + "' takes no parameter");
        }
        double value = 0.0;
        auto [p, ec] = std::from_chars(param.data(), param.data() + param.size(), value);
        if (ec != std::errc() || p != param.data() + param.size()) {
            throw DataError("augment: bad ratio in '" + text + "'");
        }
        if (spec.kind == Kind::subgraph) {
            if (!(value > 0.0 && value <= 1.0)) {
                throw DataError("augment: A5 retain fraction must be in (0,1]");
            }
            spec.retain = value;
        } else {
            check_ratio(value);
            spec.ratio = value;
        }
    }
    return spec;
}

Hypergraph a0_identity(const Hypergraph& h) { return h; }

Hypergraph a1_hyperedge_removal(const Hypergraph& h, double p, std::uint64_t seed) {
    check_ratio(p);
    Rng rng(seed);
    std::vector<std::uint8_t> edge_keep(static_cast<std::size_t>(h.num_hyperedges));
    for (auto& k : edge_keep) k = rng.bernoulli(p) ? 0 : 1;
    std::vector<std::uint8_t> keep(h.incidences.size(), 1);
    for (std::size_t i = 0; i < h.incidences.size(); ++i) {
        keep[i] = edge_keep[static_cast<std::size_t>(h.incidences[i].edge)];
    }
    return rebuild(h, keep, h.features);
}

Hypergraph a2_incidence_removal(const Hypergraph& h, double p, std::uint64_t seed) {
    check_ratio(p);
    Rng rng(seed);
    std::vector<std::uint8_t> keep(h.incidences.size());
    for (auto& k : keep) k = rng.bernoulli(p) ? 0 : 1;
    return rebuild(h, keep, h.features);
}

Hypergraph a3_vertex_drop(const Hypergraph& h, double p, std::uint64_t seed) {
    check_ratio(p);
    Rng rng(seed);
    std::vector<std::uint8_t> masked(static_cast<std::size_t>(h.num_vertices));
    for (auto& m : masked) m = rng.bernoulli(p) ? 1 : 0;
    return mask_vertices(h, masked);
}

Hypergraph a4_attr_mask(const Hypergraph& h, double p, std::uint64_t seed) {
    check_ratio(p);
    Rng rng(seed);
    Hypergraph out = h;
    for (auto& v : out.features) {
        if (rng.bernoulli(p)) v = 0.0;
    }
    return out;
}

Hypergraph a5_subgraph(const Hypergraph& h, double retain_frac, std::uint64_t seed) {
    if (!(retain_frac > 0.0 && retain_frac <= 1.0)) {
        throw DataError("augment: A5 retain fraction must be in (0,1]");
    }
    Rng rng(seed);
    const std::int64_t n = h.num_vertices;
    const auto target = std::min<std::int64_t>(
        n, static_cast<std::int64_t>(std::ceil(retain_frac * static_cast<double>(n))));

    // Vertex adjacency over the bipartite view plus connected components, so
    // walk exhaustion is detected by count instead of by wandering.
    const auto members = h.edge_members();
    std::vector<std::vector<std::int64_t>> vertex_edges(static_cast<std::size_t>(n));
    for (const auto& inc : h.incidences) {
        vertex_edges[static_cast<std::size_t>(inc.vertex)].push_back(inc.edge);
    }
    UnionFind uf(n);
    for (const auto& m : members) {
        for (std::size_t i = 1; i < m.size(); ++i) uf.unite(m[0], m[i]);
    }
    std::vector<std::int64_t> comp_size(static_cast<std::size_t>(n), 0);
    for (std::int64_t v = 0; v < n; ++v) comp_size[static_cast<std::size_t>(uf.find(v))]++;
    std::vector<std::int64_t> comp_visited(static_cast<std::size_t>(n), 0);

    std::vector<std::uint8_t> visited(static_cast<std::size_t>(n), 0);
    std::int64_t visited_count = 0;
    auto visit = [&](std::int64_t v) {
        if (!visited[static_cast<std::size_t>(v)]) {
            visited[static_cast<std::size_t>(v)] = 1;
            ++visited_count;
            comp_visited[static_cast<std::size_t>(uf.find(v))]++;
        }
    };
    auto random_unvisited = [&]() -> std::int64_t {
        std::vector<std::int64_t> pool;
        pool.reserve(static_cast<std::size_t>(n - visited_count));
        for (std::int64_t v = 0; v < n; ++v) {
            if (!visited[static_cast<std::size_t>(v)]) pool.push_back(v);
        }
        return pool[static_cast<std::size_t>(rng.uniform_int(pool.size()))];
    };

    std::int64_t current = static_cast<std::int64_t>(rng.uniform_int(static_cast<std::uint64_t>(n)));
    visit(current);
    while (visited_count < target) {
        const std::int64_t root = uf.find(current);
        const auto& edges = vertex_edges[static_cast<std::size_t>(current)];
        if (edges.empty() ||
            comp_visited[static_cast<std::size_t>(root)] == comp_size[static_cast<std::size_t>(root)]) {
            current = random_unvisited();
            visit(current);
            continue;
        }
        const auto e = edges[static_cast<std::size_t>(rng.uniform_int(edges.size()))];
        const auto& mem = members[static_cast<std::size_t>(e)];
        current = mem[static_cast<std::size_t>(rng.uniform_int(mem.size()))];
        visit(current);
    }

    std::vector<std::uint8_t> masked(static_cast<std::size_t>(n));
    for (std::int64_t v = 0; v < n; ++v) masked[static_cast<std::size_t>(v)] = visited[static_cast<std::size_t>(v)] ? 0 : 1;
    return mask_vertices(h, masked);
}

Hypergraph keep_incidences(const Hypergraph& h, const std::vector<std::uint8_t>& keep) {
    if (keep.size() != h.incidences.size()) {
        throw DataError("keep_incidences: mask length does not match incidence count");
    }
    return rebuild(h, keep, h.features);
}

Hypergraph apply_spec(const Hypergraph& h, const AugmentationSpec& spec, std::uint64_t seed) {
    switch (spec.kind) {
        case Kind::identity: return a0_identity(h);
        case Kind::hyperedge_removal: return a1_hyperedge_removal(h, spec.ratio, seed);
        case Kind::incidence_removal: return a2_incidence_removal(h, spec.ratio, seed);
        case Kind::vertex_drop: return a3_vertex_drop(h, spec.ratio, seed);
        case Kind::attr_mask: return a4_attr_mask(h, spec.ratio, seed);
        case Kind::subgraph: return a5_subgraph(h, spec.retain, seed);
        case Kind::generative:
            throw DataError("augment: A6 views come from the trained generator");
    }
    throw DataError("augment: unknown kind");
}

}  // namespace hypergcl::augment

#include "hypergcl/hypergraph.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "hypergcl/rng.hpp"

namespace hypergcl {

namespace {

std::uint64_t pair_key(std::int64_t v, std::int64_t e) {
    return (static_cast<std::uint64_t>(v) << 32) ^ static_cast<std::uint64_t>(e);
}

[[noreturn]] void parse_fail(const std::filesystem::path& path, std::size_t line,
                             const std::string& what) {
    throw ParseError(path.string() + ":" + std::to_string(line) + ": " + what);
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(line);
    }
    return lines;
}

}  // namespace

std::int64_t Hypergraph::num_classes() const {
    std::int64_t c = 0;
    for (auto l : labels) c = std::max(c, l + 1);
    return c;
}

void Hypergraph::validate() const {
    if (num_vertices < 0 || num_hyperedges < 0) throw DataError("negative vertex or hyperedge count");
    if (static_cast<std::int64_t>(features.size()) != num_vertices * feature_dim) {
        throw DataError("feature matrix size does not match num_vertices x feature_dim");
    }
    std::vector<std::uint8_t> edge_seen(static_cast<std::size_t>(num_hyperedges), 0);
    std::unordered_set<std::uint64_t> pairs;
    pairs.reserve(incidences.size() * 2);
    for (const auto& inc : incidences) {
        if (inc.vertex < 0 || inc.vertex >= num_vertices) {
            throw DataError("incidence vertex index " + std::to_string(inc.vertex) +
                            " out of range [0," + std::to_string(num_vertices) + ")");
        }
        if (inc.edge < 0 || inc.edge >= num_hyperedges) {
            throw DataError("incidence hyperedge index " + std::to_string(inc.edge) +
                            " out of range [0," + std::to_string(num_hyperedges) + ")");
        }
        if (!pairs.insert(pair_key(inc.vertex, inc.edge)).second) {
            throw DataError("duplicate incidence (" + std::to_string(inc.vertex) + "," +
                            std::to_string(inc.edge) + ")");
        }
        edge_seen[static_cast<std::size_t>(inc.edge)] = 1;
    }
    for (std::int64_t e = 0; e < num_hyperedges; ++e) {
        if (!edge_seen[static_cast<std::size_t>(e)]) {
            throw DataError("hyperedge " + std::to_string(e) + " has no incidences");
        }
    }
    if (!incidence_weights.empty()) {
        if (incidence_weights.size() != incidences.size()) {
            throw DataError("incidence_weights length does not match incidences");
        }
        for (double w : incidence_weights) {
            if (!(w >= 0.0 && w <= 1.0)) throw DataError("incidence weight outside [0,1]");
        }
    }
    if (!labels.empty()) {
        if (static_cast<std::int64_t>(labels.size()) != num_vertices) {
            throw DataError("labels length does not match num_vertices");
        }
        for (auto l : labels) {
            if (l < 0) throw DataError("negative class label");
        }
    }
    if (!sensitive.empty()) {
        if (static_cast<std::int64_t>(sensitive.size()) != num_vertices) {
            throw DataError("sensitive length does not match num_vertices");
        }
        for (auto s : sensitive) {
            if (s != 0 && s != 1) throw DataError("sensitive attribute must be 0/1");
        }
    }
}

std::vector<std::vector<std::int64_t>> Hypergraph::edge_members() const {
    std::vector<std::vector<std::int64_t>> members(static_cast<std::size_t>(num_hyperedges));
    for (const auto& inc : incidences) {
        members[static_cast<std::size_t>(inc.edge)].push_back(inc.vertex);
    }
    return members;
}

std::vector<double> Hypergraph::weights_or_ones() const {
    if (!incidence_weights.empty()) return incidence_weights;
    return std::vector<double>(incidences.size(), 1.0);
}

bool structural_equal(const Hypergraph& a, const Hypergraph& b) {
    if (a.num_vertices != b.num_vertices || a.num_hyperedges != b.num_hyperedges ||
        a.feature_dim != b.feature_dim) {
        return false;
    }
    if (a.features != b.features || a.labels != b.labels || a.sensitive != b.sensitive) {
        return false;
    }
    auto keyed = [](const Hypergraph& h) {
        std::vector<std::pair<std::uint64_t, double>> v;
        auto w = h.weights_or_ones();
        v.reserve(h.incidences.size());
        for (std::size_t i = 0; i < h.incidences.size(); ++i) {
            v.emplace_back(pair_key(h.incidences[i].vertex, h.incidences[i].edge), w[i]);
        }
        std::sort(v.begin(), v.end());
        return v;
    };
    return keyed(a) == keyed(b);
}

BipartiteView to_bipartite(const Hypergraph& h) {
    BipartiteView v;
    v.num_left = h.num_vertices;
    v.num_right = h.num_hyperedges;
    v.edges = h.incidences;
    v.edge_weights = h.incidence_weights;
    v.feature_dim = h.feature_dim;
    v.left_features = h.features;
    v.left_labels = h.labels;
    v.left_sensitive = h.sensitive;
    return v;
}

Hypergraph from_bipartite(const BipartiteView& view) {
    Hypergraph h;
    h.num_vertices = view.num_left;
    h.num_hyperedges = view.num_right;
    h.incidences = view.edges;
    h.incidence_weights = view.edge_weights;
    h.feature_dim = view.feature_dim;
    h.features = view.left_features;
    h.labels = view.left_labels;
    h.sensitive = view.left_sensitive;
    h.validate();
    return h;
}

Hypergraph clique_expand(const Hypergraph& h) {
    std::set<std::pair<std::int64_t, std::int64_t>> pairs;
    for (const auto& members : h.edge_members()) {
        for (std::size_t i = 0; i < members.size(); ++i) {
            for (std::size_t j = i + 1; j < members.size(); ++j) {
                auto a = members[i];
                auto b = members[j];
                if (a == b) continue;
                pairs.insert({std::min(a, b), std::max(a, b)});
            }
        }
    }
    Hypergraph out;
    out.num_vertices = h.num_vertices;
    out.feature_dim = h.feature_dim;
    out.features = h.features;
    out.labels = h.labels;
    out.sensitive = h.sensitive;
    out.num_hyperedges = static_cast<std::int64_t>(pairs.size());
    std::int64_t e = 0;
    for (const auto& [a, b] : pairs) {
        out.incidences.push_back({a, e});
        out.incidences.push_back({b, e});
        ++e;
    }
    out.validate();
    return out;
}

Homophily homophily(const Hypergraph& h) {
    if (!h.has_labels()) throw DataError("homophily: hypergraph has no labels");
    const auto members = h.edge_members();

    double edge_acc = 0.0;
    std::int64_t edge_cnt = 0;
    for (const auto& m : members) {
        const std::size_t k = m.size();
        if (k < 2) continue;
        std::int64_t same = 0;
        for (std::size_t i = 0; i < k; ++i) {
            for (std::size_t j = i + 1; j < k; ++j) {
                if (h.labels[static_cast<std::size_t>(m[i])] ==
                    h.labels[static_cast<std::size_t>(m[j])]) {
                    ++same;
                }
            }
        }
        const double total = static_cast<double>(k * (k - 1) / 2);
        edge_acc += static_cast<double>(same) / total;
        ++edge_cnt;
    }
    if (edge_cnt == 0) throw DataError("homophily: no hyperedge with at least two vertices");

    std::vector<std::set<std::int64_t>> neighbours(static_cast<std::size_t>(h.num_vertices));
    for (const auto& m : members) {
        for (std::size_t i = 0; i < m.size(); ++i) {
            for (std::size_t j = 0; j < m.size(); ++j) {
                if (i != j) neighbours[static_cast<std::size_t>(m[i])].insert(m[j]);
            }
        }
    }
    double node_acc = 0.0;
    std::int64_t node_cnt = 0;
    for (std::int64_t v = 0; v < h.num_vertices; ++v) {
        const auto& nb = neighbours[static_cast<std::size_t>(v)];
        if (nb.empty()) continue;
        std::int64_t same = 0;
        for (auto u : nb) {
            if (h.labels[static_cast<std::size_t>(u)] == h.labels[static_cast<std::size_t>(v)]) {
                ++same;
            }
        }
        node_acc += static_cast<double>(same) / static_cast<double>(nb.size());
        ++node_cnt;
    }
    return {edge_acc / static_cast<double>(edge_cnt),
            node_cnt == 0 ? 0.0 : node_acc / static_cast<double>(node_cnt)};
}

std::int64_t SplitMasks::count(const std::vector<std::uint8_t>& mask) const {
    std::int64_t c = 0;
    for (auto m : mask) c += m;
    return c;
}

SplitMasks split(const Hypergraph& h, double train_frac, double val_frac, std::uint64_t seed) {
    if (!(train_frac >= 0.0) || !(val_frac >= 0.0) || !(train_frac + val_frac < 1.0)) {
        throw DataError("split: fractions out of range (need train+val < 1)");
    }
    if (!h.has_labels()) throw DataError("split: hypergraph has no labels");
    const std::size_t n = static_cast<std::size_t>(h.num_vertices);
    std::vector<std::int64_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = static_cast<std::int64_t>(i);
    Rng rng(seed);
    rng.shuffle(idx);
    const std::size_t n_train = static_cast<std::size_t>(std::floor(train_frac * static_cast<double>(n)));
    const std::size_t n_val = static_cast<std::size_t>(std::floor(val_frac * static_cast<double>(n)));
    SplitMasks m;
    m.train.assign(n, 0);
    m.val.assign(n, 0);
    m.test.assign(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        const auto v = static_cast<std::size_t>(idx[i]);
        if (i < n_train) {
            m.train[v] = 1;
        } else if (i < n_train + n_val) {
            m.val[v] = 1;
        } else {
            m.test[v] = 1;
        }
    }
    return m;
}

Hypergraph synth_hypergraph(const SynthConfig& cfg, std::uint64_t seed) {
    if (cfg.num_vertices < 1 || cfg.num_classes < 1 || cfg.feature_dim < 1) {
        throw DataError("synth: vertex count, class count and feature dim must be positive");
    }
    if (cfg.num_hyperedges < 1) throw DataError("synth: need at least one hyperedge");
    if (cfg.min_edge_size < 2 || cfg.max_edge_size < cfg.min_edge_size) {
        throw DataError("synth: hyperedge size range invalid (min >= 2, max >= min)");
    }
    if (cfg.max_edge_size > cfg.num_vertices) {
        throw DataError("synth: hyperedge size range exceeds vertex count");
    }
    if (!(cfg.intra_class_probability > 0.0 && cfg.intra_class_probability <= 1.0)) {
        throw DataError("synth: intra-class probability must be in (0,1]");
    }

    Rng rng(seed);
    Hypergraph h;
    h.num_vertices = cfg.num_vertices;
    h.num_hyperedges = cfg.num_hyperedges;
    h.feature_dim = cfg.feature_dim;

    h.labels.resize(static_cast<std::size_t>(cfg.num_vertices));
    std::vector<std::vector<std::int64_t>> by_class(static_cast<std::size_t>(cfg.num_classes));
    for (std::int64_t v = 0; v < cfg.num_vertices; ++v) {
        const auto c = static_cast<std::int64_t>(rng.uniform_int(static_cast<std::uint64_t>(cfg.num_classes)));
        h.labels[static_cast<std::size_t>(v)] = c;
        by_class[static_cast<std::size_t>(c)].push_back(v);
    }

    for (std::int64_t e = 0; e < cfg.num_hyperedges; ++e) {
        const std::int64_t size =
            cfg.min_edge_size +
            static_cast<std::int64_t>(rng.uniform_int(
                static_cast<std::uint64_t>(cfg.max_edge_size - cfg.min_edge_size + 1)));
        const bool intra = rng.uniform() < cfg.intra_class_probability;
        std::vector<std::int64_t> chosen;
        if (intra) {
            const auto c = static_cast<std::size_t>(rng.uniform_int(static_cast<std::uint64_t>(cfg.num_classes)));
            const auto& pool = by_class[c];
            if (!pool.empty()) {
                auto picks = rng.sample_without_replacement(pool.size(),
                                                            static_cast<std::size_t>(size));
                for (auto p : picks) chosen.push_back(pool[p]);
            }
        }
        if (chosen.empty()) {
            auto picks = rng.sample_without_replacement(static_cast<std::size_t>(cfg.num_vertices),
                                                        static_cast<std::size_t>(size));
            chosen.assign(picks.begin(), picks.end());
        }
        std::sort(chosen.begin(), chosen.end());
        for (auto v : chosen) h.incidences.push_back({v, e});
    }

    h.features.resize(static_cast<std::size_t>(cfg.num_vertices * cfg.feature_dim));
    for (std::int64_t v = 0; v < cfg.num_vertices; ++v) {
        double* row = h.features.data() + v * cfg.feature_dim;
        for (std::int64_t f = 0; f < cfg.feature_dim; ++f) {
            row[f] = rng.normal() * cfg.feature_noise;
        }
        row[h.labels[static_cast<std::size_t>(v)] % cfg.feature_dim] += 1.0;
    }

    h.validate();
    return h;
}

namespace {

Hypergraph assemble(std::vector<std::vector<std::int64_t>> edges, std::vector<double> features,
                    std::int64_t num_vertices, std::int64_t feature_dim,
                    std::vector<std::int64_t> labels, std::vector<std::int8_t> sensitive,
                    const std::string& origin) {
    Hypergraph h;
    h.num_vertices = num_vertices;
    h.feature_dim = feature_dim;
    h.features = std::move(features);
    h.num_hyperedges = static_cast<std::int64_t>(edges.size());
    for (std::size_t e = 0; e < edges.size(); ++e) {
        std::unordered_set<std::int64_t> seen;
        for (auto v : edges[e]) {
            if (v < 0 || v >= num_vertices) {
                throw DataError(origin + ": vertex index " + std::to_string(v) +
                                " out of range [0," + std::to_string(num_vertices) +
                                ") in hyperedge " + std::to_string(e));
            }
            if (seen.insert(v).second) {
                h.incidences.push_back({v, static_cast<std::int64_t>(e)});
            }
        }
        if (seen.empty()) {
            throw DataError(origin + ": hyperedge " + std::to_string(e) + " is empty");
        }
    }
    h.labels = std::move(labels);
    h.sensitive = std::move(sensitive);
    h.validate();
    return h;
}

}  // namespace

Hypergraph load_hypergraph(const std::filesystem::path& hyperedge_path,
                           const std::filesystem::path& feature_path,
                           const std::optional<std::filesystem::path>& label_path,
                           const std::optional<std::filesystem::path>& sensitive_path) {
    // Features first; the row count defines |V|.
    std::vector<double> features;
    std::int64_t feature_dim = -1;
    std::int64_t num_vertices = 0;
    {
        auto lines = read_lines(feature_path);
        while (!lines.empty() && lines.back().empty()) lines.pop_back();
        for (std::size_t li = 0; li < lines.size(); ++li) {
            if (lines[li].empty()) parse_fail(feature_path, li + 1, "empty feature row");
            std::istringstream is(lines[li]);
            std::vector<double> row;
            std::string tok;
            while (is >> tok) {
                double v = 0.0;
                auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
                if (ec != std::errc() || p != tok.data() + tok.size()) {
                    parse_fail(feature_path, li + 1, "non-numeric feature value '" + tok + "'");
                }
                row.push_back(v);
            }
            if (feature_dim < 0) {
                feature_dim = static_cast<std::int64_t>(row.size());
            } else if (feature_dim != static_cast<std::int64_t>(row.size())) {
                parse_fail(feature_path, li + 1, "feature row width mismatch");
            }
            features.insert(features.end(), row.begin(), row.end());
            ++num_vertices;
        }
        if (num_vertices == 0) throw DataError(feature_path.string() + ": no feature rows");
    }

    std::vector<std::vector<std::int64_t>> edges;
    {
        auto lines = read_lines(hyperedge_path);
        while (!lines.empty() && lines.back().empty()) lines.pop_back();
        for (std::size_t li = 0; li < lines.size(); ++li) {
            if (lines[li].find_first_not_of(" \t") == std::string::npos) {
                parse_fail(hyperedge_path, li + 1, "empty hyperedge line");
            }
            std::istringstream is(lines[li]);
            std::vector<std::int64_t> members;
            std::string tok;
            while (is >> tok) {
                std::int64_t v = 0;
                auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
                if (ec != std::errc() || p != tok.data() + tok.size()) {
                    parse_fail(hyperedge_path, li + 1, "non-integer vertex index '" + tok + "'");
                }
                members.push_back(v);
            }
            edges.push_back(std::move(members));
        }
    }

    std::vector<std::int64_t> labels;
    if (label_path) {
        auto lines = read_lines(*label_path);
        while (!lines.empty() && lines.back().empty()) lines.pop_back();
        for (std::size_t li = 0; li < lines.size(); ++li) {
            std::int64_t v = 0;
            const std::string& tok = lines[li];
            auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
            if (ec != std::errc() || p != tok.data() + tok.size()) {
                parse_fail(*label_path, li + 1, "non-integer label '" + tok + "'");
            }
            labels.push_back(v);
        }
        if (static_cast<std::int64_t>(labels.size()) != num_vertices) {
            throw DataError(label_path->string() + ": " + std::to_string(labels.size()) +
                            " labels for " + std::to_string(num_vertices) + " vertices");
        }
    }

    std::vector<std::int8_t> sensitive;
    if (sensitive_path) {
        auto lines = read_lines(*sensitive_path);
        while (!lines.empty() && lines.back().empty()) lines.pop_back();
        for (std::size_t li = 0; li < lines.size(); ++li) {
            if (lines[li] != "0" && lines[li] != "1") {
                parse_fail(*sensitive_path, li + 1, "sensitive attribute must be 0 or 1");
            }
            sensitive.push_back(lines[li] == "1" ? 1 : 0);
        }
        if (static_cast<std::int64_t>(sensitive.size()) != num_vertices) {
            throw DataError(sensitive_path->string() + ": row count mismatch");
        }
    }

    return assemble(std::move(edges), std::move(features), num_vertices, feature_dim,
                    std::move(labels), std::move(sensitive), hyperedge_path.string());
}

Hypergraph load_bundle(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
    try {
        const std::int64_t n = j.at("n").get<std::int64_t>();
        auto edges = j.at("hyperedges").get<std::vector<std::vector<std::int64_t>>>();
        auto feats = j.at("features").get<std::vector<std::vector<double>>>();
        if (static_cast<std::int64_t>(feats.size()) != n) {
            throw DataError(path.string() + ": feature row count does not match n");
        }
        std::int64_t fdim = feats.empty() ? 0 : static_cast<std::int64_t>(feats[0].size());
        std::vector<double> flat;
        flat.reserve(static_cast<std::size_t>(n * fdim));
        for (const auto& row : feats) {
            if (static_cast<std::int64_t>(row.size()) != fdim) {
                throw DataError(path.string() + ": ragged feature rows");
            }
            flat.insert(flat.end(), row.begin(), row.end());
        }
        std::vector<std::int64_t> labels;
        if (j.contains("labels") && !j["labels"].is_null()) {
            labels = j["labels"].get<std::vector<std::int64_t>>();
        }
        std::vector<std::int8_t> sensitive;
        if (j.contains("sensitive") && !j["sensitive"].is_null()) {
            for (auto v : j["sensitive"].get<std::vector<int>>()) {
                sensitive.push_back(static_cast<std::int8_t>(v));
            }
        }
        return assemble(std::move(edges), std::move(flat), n, fdim, std::move(labels),
                        std::move(sensitive), path.string());
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

void save_bundle(const std::filesystem::path& path, const Hypergraph& h) {
    nlohmann::ordered_json j;
    j["n"] = h.num_vertices;
    j["hyperedges"] = h.edge_members();
    std::vector<std::vector<double>> feats(static_cast<std::size_t>(h.num_vertices));
    for (std::int64_t v = 0; v < h.num_vertices; ++v) {
        feats[static_cast<std::size_t>(v)].assign(
            h.features.begin() + v * h.feature_dim, h.features.begin() + (v + 1) * h.feature_dim);
    }
    j["features"] = feats;
    if (h.has_labels()) j["labels"] = h.labels;
    if (h.has_sensitive()) {
        std::vector<int> s(h.sensitive.begin(), h.sensitive.end());
        j["sensitive"] = s;
    }
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

void save_text(const std::filesystem::path& dir, const Hypergraph& h) {
    std::filesystem::create_directories(dir);
    {
        std::ofstream out(dir / "hyperedges.txt");
        if (!out) throw DataError("cannot write " + (dir / "hyperedges.txt").string());
        for (const auto& members : h.edge_members()) {
            for (std::size_t i = 0; i < members.size(); ++i) {
                if (i) out << ' ';
                out << members[i];
            }
            out << '\n';
        }
    }
    {
        std::ofstream out(dir / "features.txt");
        if (!out) throw DataError("cannot write " + (dir / "features.txt").string());
        char buf[32];
        for (std::int64_t v = 0; v < h.num_vertices; ++v) {
            for (std::int64_t f = 0; f < h.feature_dim; ++f) {
                if (f) out << ' ';
                std::snprintf(buf, sizeof(buf), "%.17g", h.features[static_cast<std::size_t>(v * h.feature_dim + f)]);
                out << buf;
            }
            out << '\n';
        }
    }
    if (h.has_labels()) {
        std::ofstream out(dir / "labels.txt");
        for (auto l : h.labels) out << l << '\n';
    }
    if (h.has_sensitive()) {
        std::ofstream out(dir / "sensitive.txt");
        for (auto s : h.sensitive) out << static_cast<int>(s) << '\n';
    }
}

}  // namespace hypergcl

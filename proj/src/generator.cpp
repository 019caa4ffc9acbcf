#include "hypergcl/generator.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_set>

namespace hypergcl::gen {

using namespace hypergcl::diff;

// Start the variational std below one so early reconstruction gradients are
// not buried in latent noise (the KL term pulls sigma back up as needed).
constexpr double kLogSigInitBias = -1.0;

VhgaeParams init_vhgae(std::int64_t in_dim, std::int64_t latent_dim, std::int64_t num_blocks,
                       Rng& rng) {
    VhgaeParams p;
    p.latent_dim = latent_dim;
    p.mu_stack = model::init_trunk(in_dim, latent_dim, num_blocks, rng);
    p.logsig_stack = model::init_trunk(in_dim, latent_dim, num_blocks, rng);
    p.mu_stack.final_vertex_relu = false;
    p.logsig_stack.final_vertex_relu = false;
    auto& last = p.logsig_stack.blocks.back();
    for (auto& v : last.vertex_to_edge.b2.mutable_data()) v = kLogSigInitBias;
    for (auto& v : last.edge_to_vertex.b2.mutable_data()) v = kLogSigInitBias;
    return p;
}

std::vector<std::pair<std::string, Tensor>> named_tensors(const VhgaeParams& p) {
    std::vector<std::pair<std::string, Tensor>> out;
    model::append_named(out, "mu", p.mu_stack);
    model::append_named(out, "logsig", p.logsig_stack);
    return out;
}

std::vector<Tensor> tensors(const VhgaeParams& p) {
    std::vector<Tensor> out;
    for (auto& [name, t] : named_tensors(p)) out.push_back(t);
    return out;
}

VhgaeParams clone(const VhgaeParams& p) {
    VhgaeParams out;
    out.latent_dim = p.latent_dim;
    out.mu_stack = model::clone(p.mu_stack);
    out.logsig_stack = model::clone(p.logsig_stack);
    return out;
}

VhgaeEncodeOut vhgae_encode(const Hypergraph& h, const VhgaeParams& p) {
    if (h.num_hyperedges == 0) {
        throw DataError("vhgae_encode: generative path requires at least one hyperedge");
    }
    auto mu = model::encode_trunk(h, p.mu_stack);
    auto ls = model::encode_trunk(h, p.logsig_stack);
    VhgaeEncodeOut out;
    out.mu_v = mu.z_v;
    out.mu_e = mu.z_e;
    out.logsig_v = clamp(ls.z_v, -10.0, 10.0);
    out.logsig_e = clamp(ls.z_e, -10.0, 10.0);
    return out;
}

std::pair<Tensor, Tensor> reparam_sample(const Tensor& mu, const Tensor& logsig,
                                         std::uint64_t seed) {
    if (mu.shape() != logsig.shape()) {
        throw ShapeError("reparam_sample: mu " + shape_str(mu.shape()) + " vs logsig " +
                         shape_str(logsig.shape()));
    }
    Rng rng(seed);
    Tensor eps = Tensor::leaf(mu.shape(), rng.normal_vec(static_cast<std::size_t>(mu.numel())));
    Tensor z = add(mu, mul(exp(logsig), eps));
    return {z, eps};
}

Tensor decode_logits(const Tensor& z_v, const Tensor& z_e,
                     const std::vector<Incidence>& incidences) {
    std::vector<std::int64_t> v_idx;
    std::vector<std::int64_t> e_idx;
    v_idx.reserve(incidences.size());
    e_idx.reserve(incidences.size());
    for (const auto& inc : incidences) {
        v_idx.push_back(inc.vertex);
        e_idx.push_back(inc.edge);
    }
    Tensor prod = mul(gather_rows(z_v, v_idx), gather_rows(z_e, e_idx));
    Tensor ones = Tensor::full({z_v.dim(1), 1}, 1.0);
    return matmul(prod, ones);  // row sums: one dot product per incidence
}

namespace {

Tensor bce_sum_positive(const Tensor& logits) {
    // sum of -log sigmoid(w)
    return scalar_mul(sum(log(sigmoid(logits))), -1.0);
}

Tensor bce_sum_negative(const Tensor& logits) {
    // sum of -log(1 - sigmoid(w))
    Tensor one = Tensor::full({1}, 1.0);
    return scalar_mul(sum(log(sub(one, sigmoid(logits)))), -1.0);
}

}  // namespace

Tensor reconstruction_loss(const Hypergraph& h, const Tensor& z_v, const Tensor& z_e,
                           std::int64_t neg_k, std::uint64_t seed, std::int64_t enum_budget) {
    if (neg_k < 0) throw std::invalid_argument("reconstruction_loss: neg_k must be >= 0");
    const std::int64_t v = h.num_vertices;
    const std::int64_t e = h.num_hyperedges;
    const std::int64_t k = h.num_incidences();
    if (e == 0 || k == 0) {
        throw DataError("reconstruction_loss: hypergraph has no incidences to reconstruct");
    }
    const std::int64_t total_pairs = v * e;

    if (total_pairs <= enum_budget) {
        // Dense path: score every (vertex, hyperedge) pair against the
        // incidence indicator.
        std::vector<double> target(static_cast<std::size_t>(total_pairs), 0.0);
        for (const auto& inc : h.incidences) {
            target[static_cast<std::size_t>(inc.vertex * e + inc.edge)] = 1.0;
        }
        std::vector<double> anti(target.size());
        for (std::size_t i = 0; i < target.size(); ++i) anti[i] = 1.0 - target[i];
        Tensor tgt = Tensor::leaf({v, e}, std::move(target));
        Tensor tgt_not = Tensor::leaf({v, e}, std::move(anti));

        Tensor probs = sigmoid(matmul(z_v, z_e, false, true));
        Tensor one = Tensor::full({1}, 1.0);
        Tensor ll = add(sum(mul(tgt, log(probs))), sum(mul(tgt_not, log(sub(one, probs)))));
        return scalar_mul(ll, -1.0 / static_cast<double>(total_pairs));
    }

    // Sampled path: exact positives plus neg_k sampled negatives per positive,
    // reweighted by the negative mass so the value is an unbiased estimate of
    // the dense mean above.
    Tensor pos = bce_sum_positive(decode_logits(z_v, z_e, h.incidences));
    const std::int64_t n_neg_total = total_pairs - k;
    const std::int64_t n_samples = neg_k * k;
    if (n_neg_total <= 0 || n_samples == 0) {
        if (n_samples == 0 && n_neg_total > 0) {
            return scalar_mul(pos, 1.0 / static_cast<double>(k));  // positives only
        }
        return scalar_mul(pos, 1.0 / static_cast<double>(total_pairs));
    }

    std::unordered_set<std::uint64_t> incident;
    incident.reserve(static_cast<std::size_t>(k) * 2);
    for (const auto& inc : h.incidences) {
        incident.insert(static_cast<std::uint64_t>(inc.vertex * e + inc.edge));
    }
    Rng rng(seed);
    std::vector<Incidence> negatives;
    negatives.reserve(static_cast<std::size_t>(n_samples));
    while (static_cast<std::int64_t>(negatives.size()) < n_samples) {
        const auto vi = static_cast<std::int64_t>(rng.uniform_int(static_cast<std::uint64_t>(v)));
        const auto ei = static_cast<std::int64_t>(rng.uniform_int(static_cast<std::uint64_t>(e)));
        if (incident.count(static_cast<std::uint64_t>(vi * e + ei))) continue;
        negatives.push_back({vi, ei});
    }
    Tensor neg = bce_sum_negative(decode_logits(z_v, z_e, negatives));
    const double neg_weight =
        static_cast<double>(n_neg_total) / static_cast<double>(n_samples);
    return scalar_mul(add(pos, scalar_mul(neg, neg_weight)),
                      1.0 / static_cast<double>(total_pairs));
}

Tensor kl_gauss(const Tensor& mu, const Tensor& logsig) {
    if (mu.shape() != logsig.shape() || mu.shape().size() != 2) {
        throw ShapeError("kl_gauss: mu " + shape_str(mu.shape()) + " vs logsig " +
                         shape_str(logsig.shape()));
    }
    const auto rows = static_cast<double>(mu.dim(0));
    Tensor sig_sq = exp(scalar_mul(logsig, 2.0));
    Tensor terms = add(add(sum(square(mu)), sum(sig_sq)),
                       add(scalar_mul(sum(logsig), -2.0),
                           Tensor::scalar(-static_cast<double>(mu.numel()))));
    return scalar_mul(terms, 0.5 / rows);
}

ElboResult elbo_loss(const Hypergraph& h, const VhgaeParams& p, std::uint64_t seed,
                     std::int64_t neg_k, std::int64_t enum_budget) {
    auto enc = vhgae_encode(h, p);
    auto [z_v, eps_v] = reparam_sample(enc.mu_v, enc.logsig_v, derive_seed(seed, "reparam-v"));
    auto [z_e, eps_e] = reparam_sample(enc.mu_e, enc.logsig_e, derive_seed(seed, "reparam-e"));

    ElboResult out;
    out.sample = {z_v, z_e, eps_v, eps_e};
    out.recon = reconstruction_loss(h, z_v, z_e, neg_k, derive_seed(seed, "negsamp"), enum_budget);
    out.kl_v = kl_gauss(enc.mu_v, enc.logsig_v);
    out.kl_e = kl_gauss(enc.mu_e, enc.logsig_e);
    const double dims = static_cast<double>(p.latent_dim);
    out.loss = add(out.recon,
                   add(scalar_mul(out.kl_v, 1.0 / (static_cast<double>(h.num_hyperedges) * dims)),
                       scalar_mul(out.kl_e, 1.0 / (static_cast<double>(h.num_vertices) * dims))));
    return out;
}

Tensor gumbel_sample(const Tensor& logits, double tau, std::uint64_t seed) {
    if (!(tau > 0.0)) throw std::invalid_argument("gumbel_sample: tau must be positive");
    Rng rng(seed);
    std::vector<double> noise(static_cast<std::size_t>(logits.numel()));
    for (auto& n : noise) {
        const double d = std::clamp(rng.uniform(), 1e-12, 1.0 - 1e-12);
        n = std::log(d) - std::log(1.0 - d);
    }
    return gumbel_sample_with_noise(logits, tau, Tensor::leaf(logits.shape(), std::move(noise)));
}

Tensor gumbel_sample_with_noise(const Tensor& logits, double tau, const Tensor& noise) {
    if (!(tau > 0.0)) throw std::invalid_argument("gumbel_sample: tau must be positive");
    if (noise.shape() != logits.shape()) {
        throw ShapeError("gumbel_sample: noise shape " + shape_str(noise.shape()) +
                         " does not match logits " + shape_str(logits.shape()));
    }
    // The concrete sample lies in (0,1) mathematically but the sigmoid
    // saturates to exactly 0/1 in double precision at low tau; nudge it back
    // into the open interval (no-op for interior values).
    Tensor t = sigmoid(scalar_mul(add(logits, noise), 1.0 / tau));
    return clamp(t, 1e-12, 1.0 - 1e-12);
}

Hypergraph generate_view(const Hypergraph& h, const Tensor& mask) {
    if (mask.numel() != h.num_incidences()) {
        throw DataError("generate_view: mask length " + std::to_string(mask.numel()) +
                        " does not match " + std::to_string(h.num_incidences()) + " incidences");
    }
    Hypergraph out = h;
    out.incidence_weights.assign(mask.data().begin(), mask.data().end());
    return out;
}

double soft_keep_ratio(const Tensor& logits) {
    if (logits.numel() == 0) return 0.0;
    double acc = 0.0;
    for (double w : logits.data()) {
        acc += w >= 0.0 ? 1.0 / (1.0 + std::exp(-w)) : std::exp(w) / (1.0 + std::exp(w));
    }
    return acc / static_cast<double>(logits.numel());
}

double hard_keep_ratio(const Tensor& mask) {
    if (mask.numel() == 0) return 0.0;
    double kept = 0.0;
    for (double t : mask.data()) {
        if (t > 0.5) kept += 1.0;
    }
    return kept / static_cast<double>(mask.numel());
}

}  // namespace hypergcl::gen

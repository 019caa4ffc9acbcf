#pragma once

#include <cstdint>
#include <utility>

#include "hypergcl/hypergraph.hpp"
#include "hypergcl/model.hpp"
#include "hypergcl/tensor.hpp"

namespace hypergcl::gen {

// Variational hypergraph auto-encoder: two message-passing trunks produce the
// mean and log standard deviation of Gaussian latents per vertex and per
// hyperedge; a sigmoid inner-product decoder scores incidences. Only trunk
// tensors live here so every parameter receives gradient from the ELBO.
struct VhgaeParams {
    model::TrunkParams mu_stack;
    model::TrunkParams logsig_stack;
    std::int64_t latent_dim = 0;
};

VhgaeParams init_vhgae(std::int64_t in_dim, std::int64_t latent_dim, std::int64_t num_blocks,
                       Rng& rng);
std::vector<std::pair<std::string, Tensor>> named_tensors(const VhgaeParams& p);
std::vector<Tensor> tensors(const VhgaeParams& p);
VhgaeParams clone(const VhgaeParams& p);

struct VhgaeEncodeOut {
    Tensor mu_v, logsig_v;  // |V| x latent
    Tensor mu_e, logsig_e;  // |E| x latent
};

// Runs both stacks; log-sigmas are clamped to [-10, 10]. Requires at least
// one hyperedge.
VhgaeEncodeOut vhgae_encode(const Hypergraph& h, const VhgaeParams& p);

// z = mu + exp(logsig) * eps with eps ~ N(0, I), deterministic per seed.
// Returns (z, eps); eps is retained so draws can be replayed.
std::pair<Tensor, Tensor> reparam_sample(const Tensor& mu, const Tensor& logsig,
                                         std::uint64_t seed);

struct LatentSample {
    Tensor z_v, z_e;
    Tensor eps_v, eps_e;
};

// One inner-product logit per existing incidence pair: w_k = z_v[v_k] . z_e[e_k],
// shaped |incidences| x 1. The probability view is sigmoid(w).
Tensor decode_logits(const Tensor& z_v, const Tensor& z_e, const std::vector<Incidence>& incidences);

// Binary cross-entropy of the decoder against the incidence structure,
// normalized per scored pair. When |V|*|E| fits within enum_budget every
// non-incident pair is enumerated; otherwise neg_k negatives are sampled per
// positive and reweighted so the estimator stays unbiased for the
// full-enumeration value.
Tensor reconstruction_loss(const Hypergraph& h, const Tensor& z_v, const Tensor& z_e,
                           std::int64_t neg_k, std::uint64_t seed,
                           std::int64_t enum_budget = 10'000'000);

// Mean over rows of sum_d 0.5*(mu^2 + sigma^2 - 1 - 2*logsig).
Tensor kl_gauss(const Tensor& mu, const Tensor& logsig);

struct ElboResult {
    Tensor loss;   // generator loss (negative ELBO)
    Tensor recon;
    Tensor kl_v, kl_e;
    LatentSample sample;
};

// loss = recon + kl_v/(|E|*D') + kl_e/(|V|*D'), computed on a fresh
// reparameterized sample. The KL outputs are per-row means; dividing by the
// opposite side's count restores the sum-form balance across graph sizes, and
// dividing by the latent width keeps the prior pull independent of D' (with
// per-row KL weights the prior dominates and the decoder never trains).
ElboResult elbo_loss(const Hypergraph& h, const VhgaeParams& p, std::uint64_t seed,
                     std::int64_t neg_k = 1, std::int64_t enum_budget = 10'000'000);

// Binary-concrete relaxation of Bernoulli(sigmoid(w)):
//   T = sigmoid((w + log d - log(1-d)) / tau), d ~ Uniform(0,1).
// Differentiable in w; noise is external and deterministic per seed.
Tensor gumbel_sample(const Tensor& logits, double tau, std::uint64_t seed);
// Same with caller-supplied logistic noise (log d - log(1-d)); used by tests.
Tensor gumbel_sample_with_noise(const Tensor& logits, double tau, const Tensor& noise);

// Copy of h with incidence_weights set to the sampled soft mask. Structure,
// features and labels are untouched; only existing incidences can be
// down-weighted.
Hypergraph generate_view(const Hypergraph& h, const Tensor& mask);

double soft_keep_ratio(const Tensor& logits);  // mean sigmoid(w)
double hard_keep_ratio(const Tensor& mask);    // mean 1[T > 0.5]

}  // namespace hypergcl::gen

#include "hypergcl/train.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <map>
#include <thread>

#include <json.hpp>

#include "hypergcl/rng.hpp"

namespace hypergcl::train {

using diff::backward;
using diff::NoGradGuard;

std::string_view mode_name(Mode m) {
    switch (m) {
        case Mode::supervised: return "supervised";
        case Mode::mtl: return "mtl";
        case Mode::pretrain_linear: return "pretrain_linear";
        case Mode::pretrain_finetune: return "pretrain_finetune";
    }
    return "unknown";
}

Mode mode_from_name(const std::string& name) {
    if (name == "supervised") return Mode::supervised;
    if (name == "mtl") return Mode::mtl;
    if (name == "pretrain_linear") return Mode::pretrain_linear;
    if (name == "pretrain_finetune") return Mode::pretrain_finetune;
    throw ConfigError("unknown mode '" + name + "'");
}

bool TrainConfig::uses_generator() const {
    if (mode == Mode::supervised) return false;
    return view1.kind == augment::Kind::generative || view2.kind == augment::Kind::generative;
}

void TrainConfig::validate() const {
    if (epochs < 0 || pretrain_epochs < 0) throw ConfigError("epoch counts must be >= 0");
    if (!(lr_model > 0.0) || !(lr_generator > 0.0)) throw ConfigError("learning rates must be positive");
    if (weight_decay < 0.0) throw ConfigError("weight decay must be >= 0");
    if (lambda < 0.0 || beta < 0.0) throw ConfigError("lambda and beta must be >= 0");
    if (!(tau_c > 0.0)) throw ConfigError("tau_c must be positive");
    if (!(tau_gumbel > 0.0)) throw ConfigError("tau_gumbel must be positive");
    if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must be in [0,1)");
    if (hidden < 1 || proj_dim < 1 || latent_dim < 1 || num_blocks < 1) {
        throw ConfigError("dimensions must be positive");
    }
    if (neg_k < 0) throw ConfigError("neg_k must be >= 0");
    if (seeds.empty()) throw ConfigError("need at least one seed");
    if (!(train_frac >= 0.0) || !(val_frac >= 0.0) || !(train_frac + val_frac < 1.0)) {
        throw ConfigError("split fractions out of range (train+val must be < 1)");
    }
    if (contrast_budget < 2) throw ConfigError("contrast budget must be >= 2");
    if (parallel < 1) throw ConfigError("parallel must be >= 1");
    if (view1.kind == augment::Kind::generative && view2.kind == augment::Kind::generative) {
        throw ConfigError("at most one view may be A6 (one generator is trained)");
    }
}

// ---------------------------------------------------------------------------
// Optimizer
// ---------------------------------------------------------------------------

Adam::Adam(std::vector<Tensor> params, double lr, double weight_decay)
    : params_(std::move(params)), lr_(lr), weight_decay_(weight_decay) {
    m_.resize(params_.size());
    v_.resize(params_.size());
    for (std::size_t i = 0; i < params_.size(); ++i) {
        m_[i].assign(static_cast<std::size_t>(params_[i].numel()), 0.0);
        v_[i].assign(static_cast<std::size_t>(params_[i].numel()), 0.0);
    }
}

void Adam::step() {
    constexpr double kBeta1 = 0.9;
    constexpr double kBeta2 = 0.999;
    constexpr double kEps = 1e-8;
    ++t_;
    const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params_.size(); ++i) {
        auto data = params_[i].mutable_data();
        const bool has_grad = params_[i].has_grad();
        auto grad = has_grad ? params_[i].grad() : std::span<const double>();
        for (std::size_t j = 0; j < data.size(); ++j) {
            double g = has_grad ? grad[j] : 0.0;
            if (weight_decay_ != 0.0) g += weight_decay_ * data[j];
            m_[i][j] = kBeta1 * m_[i][j] + (1.0 - kBeta1) * g;
            v_[i][j] = kBeta2 * v_[i][j] + (1.0 - kBeta2) * g * g;
            const double mhat = m_[i][j] / bc1;
            const double vhat = v_[i][j] / bc2;
            data[j] -= lr_ * mhat / (std::sqrt(vhat) + kEps);
        }
    }
}

// ---------------------------------------------------------------------------
// Evaluation and metrics
// ---------------------------------------------------------------------------

namespace {

std::vector<std::int64_t> argmax_rows(const Tensor& logits) {
    const std::int64_t n = logits.dim(0);
    const std::int64_t c = logits.dim(1);
    std::vector<std::int64_t> out(static_cast<std::size_t>(n), 0);
    for (std::int64_t i = 0; i < n; ++i) {
        double best = logits[i * c];
        std::int64_t arg = 0;
        for (std::int64_t j = 1; j < c; ++j) {
            if (logits[i * c + j] > best) {  // ties keep the lowest class index
                best = logits[i * c + j];
                arg = j;
            }
        }
        out[static_cast<std::size_t>(i)] = arg;
    }
    return out;
}

double masked_accuracy(const std::vector<std::int64_t>& pred,
                       const std::vector<std::int64_t>& labels,
                       const std::vector<std::uint8_t>& mask) {
    std::int64_t hit = 0, total = 0;
    for (std::size_t i = 0; i < mask.size(); ++i) {
        if (!mask[i]) continue;
        ++total;
        if (pred[i] == labels[i]) ++hit;
    }
    if (total == 0) throw std::invalid_argument("accuracy: mask selects no vertices");
    return 100.0 * static_cast<double>(hit) / static_cast<double>(total);
}

struct EvalPass {
    std::vector<std::int64_t> predictions;
    std::vector<double> positive_scores;  // softmax prob of class 1 (binary tasks)
};

EvalPass eval_forward(const model::EncoderParams& params, const Hypergraph& h) {
    NoGradGuard no_grad;
    Tensor logits = model::classify(model::encode(h, params).z_v, params);
    EvalPass out;
    out.predictions = argmax_rows(logits);
    if (params.num_classes == 2) {
        Tensor probs = diff::softmax_rows(logits);
        out.positive_scores.resize(static_cast<std::size_t>(h.num_vertices));
        for (std::int64_t i = 0; i < h.num_vertices; ++i) {
            out.positive_scores[static_cast<std::size_t>(i)] = probs[i * 2 + 1];
        }
    }
    return out;
}

}  // namespace

double evaluate(const model::EncoderParams& params, const Hypergraph& h,
                const std::vector<std::uint8_t>& mask) {
    if (!h.has_labels()) throw DataError("evaluate: hypergraph has no labels");
    return masked_accuracy(eval_forward(params, h).predictions, h.labels, mask);
}

std::vector<std::int64_t> predict(const model::EncoderParams& params, const Hypergraph& h) {
    return eval_forward(params, h).predictions;
}

std::pair<double, double> fairness_metrics(const std::vector<std::int64_t>& predictions,
                                           const std::vector<std::int64_t>& labels,
                                           const std::vector<std::int8_t>& sensitive) {
    if (predictions.size() != labels.size() || predictions.size() != sensitive.size()) {
        throw DataError("fairness_metrics: input lengths differ");
    }
    double n[2] = {0, 0}, pos_pred[2] = {0, 0};
    double n_y1[2] = {0, 0}, pos_pred_y1[2] = {0, 0};
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const int s = sensitive[i] ? 1 : 0;
        n[s] += 1.0;
        if (predictions[i] == 1) pos_pred[s] += 1.0;
        if (labels[i] == 1) {
            n_y1[s] += 1.0;
            if (predictions[i] == 1) pos_pred_y1[s] += 1.0;
        }
    }
    if (n[0] == 0.0 || n[1] == 0.0) {
        throw DataError("fairness_metrics: a sensitive group is empty");
    }
    if (n_y1[0] == 0.0 || n_y1[1] == 0.0) {
        throw DataError("fairness_metrics: a sensitive group has no positive labels (delta_eo undefined)");
    }
    const double sp = std::abs(pos_pred[0] / n[0] - pos_pred[1] / n[1]) * 100.0;
    const double eo = std::abs(pos_pred_y1[0] / n_y1[0] - pos_pred_y1[1] / n_y1[1]) * 100.0;
    return {sp, eo};
}

double f1_binary(const std::vector<std::int64_t>& predictions,
                 const std::vector<std::int64_t>& labels) {
    double tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        if (predictions[i] == 1 && labels[i] == 1) tp += 1;
        if (predictions[i] == 1 && labels[i] == 0) fp += 1;
        if (predictions[i] == 0 && labels[i] == 1) fn += 1;
    }
    const double denom = 2 * tp + fp + fn;
    return denom == 0.0 ? 0.0 : 100.0 * 2 * tp / denom;
}

double auroc_binary(const std::vector<double>& scores, const std::vector<std::int64_t>& labels) {
    // Mann-Whitney U with average ranks for ties.
    std::vector<std::size_t> order(scores.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
    std::vector<double> rank(scores.size(), 0.0);
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]]) ++j;
        const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) rank[order[k]] = avg;
        i = j + 1;
    }
    double pos = 0, neg = 0, rank_sum = 0;
    for (std::size_t k = 0; k < labels.size(); ++k) {
        if (labels[k] == 1) {
            pos += 1;
            rank_sum += rank[k];
        } else {
            neg += 1;
        }
    }
    if (pos == 0 || neg == 0) throw DataError("auroc: need both classes");
    const double u = rank_sum - pos * (pos + 1) / 2.0;
    return 100.0 * u / (pos * neg);
}

Hypergraph random_perturb_attack(const Hypergraph& h, double ratio, std::uint64_t seed) {
    if (!(ratio >= 0.0 && ratio <= 1.0)) throw DataError("attack ratio must be in [0,1]");
    const auto k = static_cast<std::size_t>(h.num_incidences());
    const auto count = static_cast<std::size_t>(
        std::llround(ratio * static_cast<double>(k)));
    Rng rng(seed);
    auto picks = rng.sample_without_replacement(k, count);
    std::vector<std::uint8_t> keep(k, 1);
    for (auto p : picks) keep[p] = 0;
    return augment::keep_incidences(h, keep);
}

// ---------------------------------------------------------------------------
// Training loops
// ---------------------------------------------------------------------------

namespace {

struct ViewData {
    const Hypergraph* graph = nullptr;      // borrowed when unmodified (A6)
    std::optional<Hypergraph> owned;        // fabricated structure
    std::optional<Tensor> weights;          // soft mask; may carry gradients
    double soft_keep = -1.0;
    double hard_keep = -1.0;

    const Hypergraph& get() const { return owned ? *owned : *graph; }
};

ViewData fabricated_view(const Hypergraph& h, const augment::AugmentationSpec& spec,
                         std::uint64_t seed) {
    ViewData v;
    v.owned = augment::apply_spec(h, spec, seed);
    return v;
}

// A6: encode the original structure, sample latents, decode incidence logits
// and draw a binary-concrete mask over the existing incidences. Differentiable
// when grads are enabled and the latents come from a live elbo sample.
ViewData generative_view_from(const Hypergraph& h, const Tensor& z_v, const Tensor& z_e,
                              double tau, std::uint64_t gumbel_seed) {
    Tensor w = gen::decode_logits(z_v, z_e, h.incidences);
    Tensor t = gen::gumbel_sample(w, tau, gumbel_seed);
    ViewData v;
    v.graph = &h;
    v.weights = t;
    v.soft_keep = gen::soft_keep_ratio(w);
    v.hard_keep = gen::hard_keep_ratio(t);
    return v;
}

ViewData generative_view_frozen(const Hypergraph& h, const gen::VhgaeParams& gp, double tau,
                                std::uint64_t reparam_seed, std::uint64_t gumbel_seed) {
    NoGradGuard no_grad;
    auto enc = gen::vhgae_encode(h, gp);
    auto [z_v, eps_v] = gen::reparam_sample(enc.mu_v, enc.logsig_v, derive_seed(reparam_seed, "v"));
    auto [z_e, eps_e] = gen::reparam_sample(enc.mu_e, enc.logsig_e, derive_seed(reparam_seed, "e"));
    return generative_view_from(h, z_v, z_e, tau, gumbel_seed);
}

struct LoopCtx {
    const Hypergraph* h;
    const SplitMasks* masks;
    const TrainConfig* cfg;
    std::uint64_t root;
    model::EncoderParams* enc;
    gen::VhgaeParams* gp;  // null unless an A6 view is configured
    Adam* model_opt;
    Adam* gen_opt;
};

std::vector<Tensor> view_dropout(const LoopCtx& c, std::int64_t num_vertices,
                                 std::string_view tag, std::int64_t epoch, std::uint64_t pass) {
    Rng rng(derive_seed(c.root, tag, static_cast<std::uint64_t>(epoch), pass));
    return model::dropout_masks(num_vertices, c.cfg->hidden, c.cfg->num_blocks, c.cfg->dropout,
                                rng);
}

Tensor encode_and_project(const LoopCtx& c, const ViewData& view,
                          const std::vector<Tensor>& masks,
                          const std::vector<std::int64_t>* anchors) {
    auto out = model::encode(view.get(), *c.enc, view.weights ? &*view.weights : nullptr, masks);
    Tensor z = anchors ? diff::gather_rows(out.z_v, *anchors) : out.z_v;
    return model::project(z, *c.enc);
}

Tensor contrast_loss(const LoopCtx& c, const ViewData& v1, const ViewData& v2,
                     const std::string& prefix, std::int64_t epoch, std::uint64_t pass) {
    std::vector<std::int64_t> anchor_store;
    const std::vector<std::int64_t>* anchors = nullptr;
    if (c.h->num_vertices > c.cfg->contrast_budget) {
        Rng rng(derive_seed(c.root, prefix + "anchors", static_cast<std::uint64_t>(epoch), pass));
        auto picks = rng.sample_without_replacement(
            static_cast<std::size_t>(c.h->num_vertices),
            static_cast<std::size_t>(c.cfg->contrast_budget));
        anchor_store.assign(picks.begin(), picks.end());
        anchors = &anchor_store;
    }
    Tensor p1 = encode_and_project(
        c, v1, view_dropout(c, c.h->num_vertices, prefix + "drop-v1", epoch, pass), anchors);
    Tensor p2 = encode_and_project(
        c, v2, view_dropout(c, c.h->num_vertices, prefix + "drop-v2", epoch, pass), anchors);
    return objectives::nt_xent(p1, p2, c.cfg->tau_c);
}

Tensor classification_loss(const LoopCtx& c, const std::string& prefix, std::int64_t epoch) {
    Rng rng(derive_seed(c.root, prefix + "drop-ce", static_cast<std::uint64_t>(epoch)));
    auto masks = model::dropout_masks(c.h->num_vertices, c.cfg->hidden, c.cfg->num_blocks,
                                      c.cfg->dropout, rng);
    auto out = model::encode(*c.h, *c.enc, nullptr, masks);
    return objectives::cross_entropy(model::classify(out.z_v, *c.enc), c.h->labels,
                                     c.masks->train);
}

double gumbel_tau_at(const TrainConfig& cfg, std::int64_t epoch, std::int64_t total) {
    if (!cfg.anneal_gumbel || total <= 1) return cfg.tau_gumbel;
    const double f = static_cast<double>(epoch) / static_cast<double>(total - 1);
    return cfg.tau_gumbel + (0.1 - cfg.tau_gumbel) * f;
}

struct LoopSpec {
    bool with_ce = true;
    bool with_contrast = false;
    std::int64_t epochs = 0;
    std::string prefix;  // RNG namespace for this loop's draws
    int stage = 0;
    bool select = true;  // validation-based model selection
};

void run_loop(const LoopCtx& c, const LoopSpec& spec, SeedResult& result) {
    const bool use_a6 = spec.with_contrast && c.gp != nullptr;
    const bool v1_generative = c.cfg->view1.kind == augment::Kind::generative;
    const bool have_val = c.masks->count(c.masks->val) > 0;

    for (std::int64_t epoch = 0; epoch < spec.epochs; ++epoch) {
        EpochLog log;
        log.epoch = epoch;
        log.stage = spec.stage;
        const double tau = gumbel_tau_at(*c.cfg, epoch, spec.epochs);
        const auto e64 = static_cast<std::uint64_t>(epoch);

        // Generator step: update only the generator on L_gen - beta * L_cl.
        if (use_a6) {
            auto elbo = gen::elbo_loss(*c.h, *c.gp,
                                       derive_seed(c.root, spec.prefix + "elbo", e64),
                                       c.cfg->neg_k);
            ViewData gv = generative_view_from(
                *c.h, elbo.sample.z_v, elbo.sample.z_e, tau,
                derive_seed(c.root, spec.prefix + "gumbel", e64, 0));
            ViewData fab = fabricated_view(
                *c.h, v1_generative ? c.cfg->view2 : c.cfg->view1,
                derive_seed(c.root, spec.prefix + "aug-partner", e64, 0));
            const ViewData& v1 = v1_generative ? gv : fab;
            const ViewData& v2 = v1_generative ? fab : gv;
            Tensor l_cl = contrast_loss(c, v1, v2, spec.prefix + "g-", epoch, 0);
            Tensor objective = objectives::generator_objective(elbo.loss, l_cl, c.cfg->beta);
            backward(objective);
            c.gen_opt->step();
            log.l_gen = elbo.loss.item();
            log.recon = elbo.recon.item();
            log.kl_v = elbo.kl_v.item();
            log.kl_e = elbo.kl_e.item();
        }

        // Model step: update only encoder/head/classifier. Views are rebuilt
        // with fresh seeds; the A6 mask is resampled with the generator frozen.
        Tensor total;
        if (spec.with_contrast) {
            ViewData v1;
            ViewData v2;
            if (use_a6) {
                ViewData gv = generative_view_frozen(
                    *c.h, *c.gp, tau, derive_seed(c.root, spec.prefix + "reparam", e64, 1),
                    derive_seed(c.root, spec.prefix + "gumbel", e64, 1));
                ViewData fab = fabricated_view(
                    *c.h, v1_generative ? c.cfg->view2 : c.cfg->view1,
                    derive_seed(c.root, spec.prefix + "aug-partner", e64, 1));
                log.soft_keep_ratio = gv.soft_keep;
                log.hard_keep_ratio = gv.hard_keep;
                if (v1_generative) {
                    v1 = std::move(gv);
                    v2 = std::move(fab);
                } else {
                    v1 = std::move(fab);
                    v2 = std::move(gv);
                }
            } else {
                v1 = fabricated_view(*c.h, c.cfg->view1,
                                     derive_seed(c.root, spec.prefix + "aug-v1", e64, 1));
                v2 = fabricated_view(*c.h, c.cfg->view2,
                                     derive_seed(c.root, spec.prefix + "aug-v2", e64, 1));
            }
            Tensor ntx = contrast_loss(c, v1, v2, spec.prefix, epoch, 1);
            log.ntxent = ntx.item();
            if (spec.with_ce) {
                Tensor ce = classification_loss(c, spec.prefix, epoch);
                log.ce = ce.item();
                total = objectives::mtl_loss(ce, ntx, c.cfg->lambda);
            } else {
                total = ntx;
            }
        } else {
            Tensor ce = classification_loss(c, spec.prefix, epoch);
            log.ce = ce.item();
            total = ce;
        }
        backward(total);
        c.model_opt->step();

        if (spec.select) {
            auto pass = eval_forward(*c.enc, *c.h);
            const double val_acc =
                have_val ? masked_accuracy(pass.predictions, c.h->labels, c.masks->val) : -1.0;
            if (have_val) log.val_acc = val_acc;
            const bool better = have_val ? val_acc > result.best_val_acc
                                         : true;  // no validation set: keep the last epoch
            if (result.selected_epoch < 0 || better) {
                result.best_val_acc = have_val ? val_acc : 0.0;
                result.selected_epoch = epoch;
                result.test_acc = masked_accuracy(pass.predictions, c.h->labels, c.masks->test);
                result.best_params = model::clone(*c.enc);
            }
        }
        result.logs.push_back(log);
    }
}

void finalize_selection(const LoopCtx& c, SeedResult& result) {
    if (result.selected_epoch < 0) {
        // nothing trained (epochs == 0): report the untrained model
        auto pass = eval_forward(*c.enc, *c.h);
        result.test_acc = masked_accuracy(pass.predictions, c.h->labels, c.masks->test);
        if (c.masks->count(c.masks->val) > 0) {
            result.best_val_acc = masked_accuracy(pass.predictions, c.h->labels, c.masks->val);
        }
        result.best_params = model::clone(*c.enc);
    }
    // fairness on the test split for binary tasks with a sensitive attribute
    if (c.h->num_classes() == 2 && c.h->has_sensitive() && result.best_params) {
        auto pass = eval_forward(*result.best_params, *c.h);
        std::vector<std::int64_t> pred, labels;
        std::vector<std::int8_t> sens;
        std::vector<double> scores;
        for (std::int64_t v = 0; v < c.h->num_vertices; ++v) {
            if (!c.masks->test[static_cast<std::size_t>(v)]) continue;
            pred.push_back(pass.predictions[static_cast<std::size_t>(v)]);
            labels.push_back(c.h->labels[static_cast<std::size_t>(v)]);
            sens.push_back(c.h->sensitive[static_cast<std::size_t>(v)]);
            scores.push_back(pass.positive_scores[static_cast<std::size_t>(v)]);
        }
        try {
            FairnessReport fr;
            std::tie(fr.delta_sp, fr.delta_eo) = fairness_metrics(pred, labels, sens);
            fr.f1 = f1_binary(pred, labels);
            fr.auroc = auroc_binary(scores, labels);
            result.fairness = fr;
        } catch (const DataError&) {
            // undefined for this split (an empty group); omit the report
        }
    }
}

SeedResult train_seed_impl(const Hypergraph& h, const SplitMasks& masks, const TrainConfig& cfg,
                           std::uint64_t seed) {
    if (!h.has_labels()) throw DataError("training requires labels");
    SeedResult result;
    result.seed = seed;

    Rng init_rng(derive_seed(seed, "init-enc"));
    model::EncoderDims dims;
    dims.in_dim = h.feature_dim;
    dims.hidden = cfg.hidden;
    dims.num_blocks = cfg.num_blocks;
    dims.num_classes = h.num_classes();
    dims.proj_dim = cfg.proj_dim;
    model::EncoderParams enc = model::init_encoder(dims, init_rng);

    std::optional<gen::VhgaeParams> gp;
    std::optional<Adam> gen_opt;
    if (cfg.uses_generator()) {
        Rng gen_rng(derive_seed(seed, "init-gen"));
        gp = gen::init_vhgae(h.feature_dim, cfg.latent_dim, cfg.num_blocks, gen_rng);
        gen_opt.emplace(gen::tensors(*gp), cfg.lr_generator, cfg.weight_decay);
    }

    Adam model_opt(model::tensors(enc), cfg.lr_model, cfg.weight_decay);
    LoopCtx ctx{&h, &masks, &cfg, seed, &enc, gp ? &*gp : nullptr, &model_opt,
                gen_opt ? &*gen_opt : nullptr};

    switch (cfg.mode) {
        case Mode::supervised: {
            LoopSpec spec;
            spec.with_ce = true;
            spec.with_contrast = false;
            spec.epochs = cfg.epochs;
            run_loop(ctx, spec, result);
            break;
        }
        case Mode::mtl: {
            LoopSpec spec;
            spec.with_ce = true;
            spec.with_contrast = true;
            spec.epochs = cfg.epochs;
            run_loop(ctx, spec, result);
            break;
        }
        case Mode::pretrain_linear:
        case Mode::pretrain_finetune: {
            LoopSpec stage1;
            stage1.with_ce = false;
            stage1.with_contrast = true;
            stage1.epochs = cfg.pretrain_epochs;
            stage1.prefix = "s1-";
            stage1.stage = 1;
            stage1.select = false;
            run_loop(ctx, stage1, result);

            if (cfg.mode == Mode::pretrain_finetune) {
                Adam stage2_opt(model::tensors(enc), cfg.lr_model, cfg.weight_decay);
                LoopCtx c2 = ctx;
                c2.model_opt = &stage2_opt;
                LoopSpec stage2;
                stage2.with_ce = true;
                stage2.with_contrast = false;
                stage2.epochs = cfg.epochs;
                run_loop(c2, stage2, result);
            } else {
                // Linear evaluation: the encoder is frozen, so representations
                // are fixed; train the classifier on them without dropout.
                Tensor z;
                {
                    NoGradGuard no_grad;
                    z = model::encode(h, enc).z_v;
                }
                Adam cls_opt({enc.w_cls, enc.b_cls}, cfg.lr_model, cfg.weight_decay);
                const bool have_val = masks.count(masks.val) > 0;
                for (std::int64_t epoch = 0; epoch < cfg.epochs; ++epoch) {
                    Tensor ce = objectives::cross_entropy(model::classify(z, enc), h.labels,
                                                          masks.train);
                    backward(ce);
                    cls_opt.step();
                    EpochLog log;
                    log.epoch = epoch;
                    log.ce = ce.item();
                    auto pass = eval_forward(enc, h);
                    const double val_acc =
                        have_val ? masked_accuracy(pass.predictions, h.labels, masks.val) : -1.0;
                    if (have_val) log.val_acc = val_acc;
                    const bool better = have_val ? val_acc > result.best_val_acc : true;
                    if (result.selected_epoch < 0 || better) {
                        result.best_val_acc = have_val ? val_acc : 0.0;
                        result.selected_epoch = epoch;
                        result.test_acc = masked_accuracy(pass.predictions, h.labels, masks.test);
                        result.best_params = model::clone(enc);
                    }
                    result.logs.push_back(log);
                }
            }
            break;
        }
    }
    finalize_selection(ctx, result);
    return result;
}

}  // namespace

SeedResult train_supervised(const Hypergraph& h, const SplitMasks& masks, const TrainConfig& cfg,
                            std::uint64_t seed) {
    TrainConfig c = cfg;
    c.mode = Mode::supervised;
    return train_seed_impl(h, masks, c, seed);
}

SeedResult train_mtl(const Hypergraph& h, const SplitMasks& masks, const TrainConfig& cfg,
                     std::uint64_t seed) {
    TrainConfig c = cfg;
    c.mode = Mode::mtl;
    return train_seed_impl(h, masks, c, seed);
}

SeedResult train_pretrain(const Hypergraph& h, const SplitMasks& masks, const TrainConfig& cfg,
                          std::uint64_t seed) {
    if (cfg.mode != Mode::pretrain_linear && cfg.mode != Mode::pretrain_finetune) {
        throw ConfigError("train_pretrain requires a pretrain mode");
    }
    return train_seed_impl(h, masks, cfg, seed);
}

SeedResult train_one_seed(const Hypergraph& h, const SplitMasks& masks, const TrainConfig& cfg,
                          std::uint64_t seed) {
    return train_seed_impl(h, masks, cfg, seed);
}

RunResult run_protocol(const Hypergraph& h, const TrainConfig& cfg) {
    cfg.validate();
    std::vector<std::uint64_t> seeds = cfg.seeds;
    std::sort(seeds.begin(), seeds.end());

    RunResult run;
    run.per_seed.resize(seeds.size());

    auto work = [&](std::size_t i) {
        const std::uint64_t seed = seeds[i];
        try {
            SplitMasks masks = split(h, cfg.train_frac, cfg.val_frac, derive_seed(seed, "split"));
            run.per_seed[i] = train_seed_impl(h, masks, cfg, seed);
        } catch (const std::exception& e) {
            run.per_seed[i] = SeedResult{};
            run.per_seed[i].seed = seed;
            run.per_seed[i].failed = true;
            run.per_seed[i].error = e.what();
        }
    };

    const std::size_t workers =
        std::min<std::size_t>(static_cast<std::size_t>(cfg.parallel), seeds.size());
    if (workers <= 1) {
        for (std::size_t i = 0; i < seeds.size(); ++i) work(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t i = next.fetch_add(1); i < seeds.size(); i = next.fetch_add(1)) {
                    work(i);
                }
            });
        }
        for (auto& t : pool) t.join();
    }

    double acc = 0.0;
    std::int64_t n = 0;
    for (const auto& r : run.per_seed) {
        if (!r.failed) {
            acc += r.test_acc;
            ++n;
        }
    }
    if (n > 0) {
        run.mean = acc / static_cast<double>(n);
        double var = 0.0;
        for (const auto& r : run.per_seed) {
            if (!r.failed) var += (r.test_acc - run.mean) * (r.test_acc - run.mean);
        }
        run.stddev = std::sqrt(var / static_cast<double>(n));
    }
    return run;
}

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------

namespace {

nlohmann::ordered_json tensor_entry(const std::string& name, const Tensor& t) {
    nlohmann::ordered_json e;
    e["name"] = name;
    e["shape"] = t.shape();
    e["data"] = std::vector<double>(t.data().begin(), t.data().end());
    return e;
}

using TensorMap = std::map<std::string, std::pair<diff::Shape, std::vector<double>>>;

void fill_tensor(const TensorMap& map, const std::string& name, Tensor& t) {
    auto it = map.find(name);
    if (it == map.end()) throw DataError("checkpoint: missing tensor '" + name + "'");
    if (it->second.first != t.shape()) {
        throw DataError("checkpoint: tensor '" + name + "' has shape mismatch");
    }
    auto dst = t.mutable_data();
    std::copy(it->second.second.begin(), it->second.second.end(), dst.begin());
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const model::EncoderParams& encoder,
                     const gen::VhgaeParams* generator) {
    nlohmann::ordered_json j;
    j["format"] = "hypergcl-checkpoint-v1";
    j["encoder"] = {{"in_dim", encoder.trunk.in_dim},
                    {"hidden", encoder.trunk.hidden},
                    {"num_blocks", static_cast<std::int64_t>(encoder.trunk.blocks.size())},
                    {"num_classes", encoder.num_classes},
                    {"proj_dim", encoder.proj_dim}};
    if (generator != nullptr) {
        j["generator"] = {{"in_dim", generator->mu_stack.in_dim},
                          {"latent_dim", generator->latent_dim},
                          {"num_blocks",
                           static_cast<std::int64_t>(generator->mu_stack.blocks.size())}};
    }
    nlohmann::ordered_json tensors = nlohmann::ordered_json::array();
    for (const auto& [name, t] : model::named_tensors(encoder)) {
        tensors.push_back(tensor_entry("encoder." + name, t));
    }
    if (generator != nullptr) {
        for (const auto& [name, t] : gen::named_tensors(*generator)) {
            tensors.push_back(tensor_entry("generator." + name, t));
        }
    }
    j["tensors"] = std::move(tensors);
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    out << j.dump(1) << '\n';
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
    if (j.value("format", "") != "hypergcl-checkpoint-v1") {
        throw DataError(path.string() + ": not a checkpoint file");
    }
    TensorMap map;
    for (const auto& e : j.at("tensors")) {
        map[e.at("name").get<std::string>()] = {e.at("shape").get<diff::Shape>(),
                                                e.at("data").get<std::vector<double>>()};
    }

    Checkpoint out;
    const auto& em = j.at("encoder");
    model::EncoderDims dims;
    dims.in_dim = em.at("in_dim").get<std::int64_t>();
    dims.hidden = em.at("hidden").get<std::int64_t>();
    dims.num_blocks = em.at("num_blocks").get<std::int64_t>();
    dims.num_classes = em.at("num_classes").get<std::int64_t>();
    dims.proj_dim = em.at("proj_dim").get<std::int64_t>();
    Rng scratch(0);
    out.encoder = model::init_encoder(dims, scratch);
    for (auto& [name, t] : model::named_tensors(out.encoder)) {
        fill_tensor(map, "encoder." + name, t);
    }

    if (j.contains("generator")) {
        const auto& gm = j.at("generator");
        out.generator = gen::init_vhgae(gm.at("in_dim").get<std::int64_t>(),
                                        gm.at("latent_dim").get<std::int64_t>(),
                                        gm.at("num_blocks").get<std::int64_t>(), scratch);
        for (auto& [name, t] : gen::named_tensors(*out.generator)) {
            fill_tensor(map, "generator." + name, t);
        }
    }
    return out;
}

}  // namespace hypergcl::train

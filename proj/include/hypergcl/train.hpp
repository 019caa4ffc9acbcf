#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "hypergcl/augment.hpp"
#include "hypergcl/generator.hpp"
#include "hypergcl/hypergraph.hpp"
#include "hypergcl/model.hpp"
#include "hypergcl/objectives.hpp"

namespace hypergcl::train {

class ConfigError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

enum class Mode {
    supervised,
    mtl,
    pretrain_linear,
    pretrain_finetune,
};

std::string_view mode_name(Mode m);
Mode mode_from_name(const std::string& name);

struct TrainConfig {
    Mode mode = Mode::mtl;
    augment::AugmentationSpec view1 = augment::parse_spec("A2:0.2");
    augment::AugmentationSpec view2 = augment::parse_spec("A2:0.2");
    std::int64_t epochs = 300;
    std::int64_t pretrain_epochs = 200;
    double lr_model = 1e-3;
    double lr_generator = 1e-3;
    double weight_decay = 0.0;
    double lambda = 1.0;       // MTL contrastive weight
    double beta = 1.0;         // adversarial tradeoff for the generator
    double tau_c = 0.5;        // contrastive temperature
    double tau_gumbel = 0.5;
    bool anneal_gumbel = false;  // linear anneal to 0.1 across the loop
    double dropout = 0.5;
    std::int64_t hidden = 64;
    std::int64_t proj_dim = 64;
    std::int64_t latent_dim = 32;
    std::int64_t num_blocks = 2;
    std::int64_t neg_k = 1;
    std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4};
    double train_frac = 0.1;
    double val_frac = 0.1;
    std::int64_t contrast_budget = 4096;  // anchor cap for the |V|^2 similarity matrix
    std::int64_t parallel = 1;

    bool uses_generator() const;
    void validate() const;  // throws ConfigError
};

struct EpochLog {
    std::int64_t epoch = 0;
    int stage = 0;  // 1 = contrastive pretraining stage, 0 = main/supervised stage
    std::optional<double> ce;
    std::optional<double> ntxent;
    std::optional<double> l_gen;
    std::optional<double> recon;
    std::optional<double> kl_v;
    std::optional<double> kl_e;
    std::optional<double> soft_keep_ratio;
    std::optional<double> hard_keep_ratio;
    std::optional<double> val_acc;
};

struct FairnessReport {
    double f1 = 0.0;
    double auroc = 0.0;
    double delta_sp = 0.0;
    double delta_eo = 0.0;
};

struct SeedResult {
    std::uint64_t seed = 0;
    bool failed = false;
    std::string error;
    double test_acc = 0.0;
    std::int64_t selected_epoch = -1;
    double best_val_acc = 0.0;
    std::vector<EpochLog> logs;
    std::optional<FairnessReport> fairness;
    std::optional<model::EncoderParams> best_params;
};

struct RunResult {
    std::vector<SeedResult> per_seed;
    double mean = 0.0;
    double stddev = 0.0;  // population std over succeeded seeds
};

// Adaptive moment estimation, beta1=0.9, beta2=0.999, eps=1e-8, bias-corrected.
// Parameters with no gradient from the last backward are treated as zero-grad.
class Adam {
  public:
    Adam(std::vector<Tensor> params, double lr, double weight_decay = 0.0);
    void step();

  private:
    std::vector<Tensor> params_;
    std::vector<std::vector<double>> m_;
    std::vector<std::vector<double>> v_;
    double lr_;
    double weight_decay_;
    std::int64_t t_ = 0;
};

// Argmax-logit accuracy (%) over the masked vertices; ties resolve to the
// lowest class index.
double evaluate(const model::EncoderParams& params, const Hypergraph& h,
                const std::vector<std::uint8_t>& mask);
std::vector<std::int64_t> predict(const model::EncoderParams& params, const Hypergraph& h);

// (delta_sp, delta_eo), both in percentage points:
//   delta_sp = |P(pred=1 | s=0) - P(pred=1 | s=1)| * 100
//   delta_eo = |P(pred=1 | y=1, s=0) - P(pred=1 | y=1, s=1)| * 100
// Throws DataError naming the empty group/condition.
std::pair<double, double> fairness_metrics(const std::vector<std::int64_t>& predictions,
                                           const std::vector<std::int64_t>& labels,
                                           const std::vector<std::int8_t>& sensitive);
double f1_binary(const std::vector<std::int64_t>& predictions,
                 const std::vector<std::int64_t>& labels);
double auroc_binary(const std::vector<double>& scores, const std::vector<std::int64_t>& labels);

// Removes exactly round(ratio * |incidences|) uniformly chosen incidence
// pairs; hyperedges left empty are dropped (test-time structure attack).
Hypergraph random_perturb_attack(const Hypergraph& h, double ratio, std::uint64_t seed);

SeedResult train_supervised(const Hypergraph& h, const SplitMasks& masks, const TrainConfig& cfg,
                            std::uint64_t seed);
SeedResult train_mtl(const Hypergraph& h, const SplitMasks& masks, const TrainConfig& cfg,
                     std::uint64_t seed);
SeedResult train_pretrain(const Hypergraph& h, const SplitMasks& masks, const TrainConfig& cfg,
                          std::uint64_t seed);
SeedResult train_one_seed(const Hypergraph& h, const SplitMasks& masks, const TrainConfig& cfg,
                          std::uint64_t seed);

// Per seed: fresh split, fresh init, chosen mode. Seeds are processed in
// ascending order (so the summary does not depend on how the list was
// spelled) and may run in parallel; failures are recorded per seed and do not
// abort the run.
RunResult run_protocol(const Hypergraph& h, const TrainConfig& cfg);

struct Checkpoint {
    model::EncoderParams encoder;
    std::optional<gen::VhgaeParams> generator;
};

// Flat list of named tensors (name, shape, row-major values) as JSON.
void save_checkpoint(const std::filesystem::path& path, const model::EncoderParams& encoder,
                     const gen::VhgaeParams* generator = nullptr);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace hypergcl::train

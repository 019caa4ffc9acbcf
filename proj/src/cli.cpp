#include "hypergcl/cli.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>

#include <CLI11.hpp>
#include <json.hpp>

#include "hypergcl/rng.hpp"

namespace hypergcl::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string spec_str(const augment::AugmentationSpec& spec) { return spec.str(); }

void add_data_flags(CLI::App* cmd, DataSource& src) {
    auto* bundle = cmd->add_option("--bundle", src.bundle, "JSON bundle file");
    auto* he = cmd->add_option("--hyperedges", src.hyperedges, "hyperedge text file");
    auto* ft = cmd->add_option("--features", src.features, "feature text file");
    cmd->add_option("--labels", src.labels, "label text file");
    cmd->add_option("--sensitive", src.sensitive, "sensitive attribute text file");
    auto* synth = cmd->add_option("--synth", src.synth_preset,
                                  "synthetic preset (default|benchmark)");
    bundle->excludes(he)->excludes(ft)->excludes(synth);
    he->needs(ft);
}

void check_one_source(const DataSource& src) {
    int sources = 0;
    if (src.bundle) ++sources;
    if (src.hyperedges || src.features) ++sources;
    if (src.synth_preset) ++sources;
    if (sources != 1) {
        throw UsageError("exactly one data source required: --bundle, --hyperedges/--features, "
                         "or --synth");
    }
}

SynthConfig preset_config(const std::string& name) {
    if (name == "default" || name == "benchmark") {
        return SynthConfig{};  // 400 vertices, 4 classes, 120 hyperedges, sizes 3-6, q=0.9
    }
    throw UsageError("unknown synthetic preset '" + name + "' (use default|benchmark)");
}

// JSON config file: defaults for train flags not given on the command line.
void apply_config_file(const std::string& path, CLI::App* cmd,
                       const std::map<std::string, std::function<void(const nlohmann::json&)>>&
                           appliers) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open config file " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw UsageError("config file " + path + ": " + e.what());
    }
    for (const auto& [key, value] : j.items()) {
        auto it = appliers.find(key);
        if (it == appliers.end()) throw UsageError("config file: unknown key '" + key + "'");
        const CLI::Option* opt = cmd->get_option("--" + key);
        if (opt != nullptr && opt->count() > 0) continue;  // flags override the file
        try {
            it->second(value);
        } catch (const nlohmann::json::exception& e) {
            throw UsageError("config file key '" + key + "': " + e.what());
        }
    }
}

ordered_json config_echo(const CliConfig& cfg) {
    const auto& t = cfg.train_cfg;
    ordered_json data;
    if (cfg.data.bundle) data["bundle"] = *cfg.data.bundle;
    if (cfg.data.hyperedges) data["hyperedges"] = *cfg.data.hyperedges;
    if (cfg.data.features) data["features"] = *cfg.data.features;
    if (cfg.data.labels) data["labels"] = *cfg.data.labels;
    if (cfg.data.sensitive) data["sensitive"] = *cfg.data.sensitive;
    if (cfg.data.synth_preset) data["synth"] = *cfg.data.synth_preset;
    ordered_json j{{"mode", std::string(train::mode_name(t.mode))},
                   {"view1", spec_str(t.view1)},
                   {"view2", spec_str(t.view2)},
                   {"epochs", t.epochs},
                   {"pretrain_epochs", t.pretrain_epochs},
                   {"lr_model", t.lr_model},
                   {"lr_generator", t.lr_generator},
                   {"weight_decay", t.weight_decay},
                   {"lambda", t.lambda},
                   {"beta", t.beta},
                   {"tau_c", t.tau_c},
                   {"tau_gumbel", t.tau_gumbel},
                   {"anneal_gumbel", t.anneal_gumbel},
                   {"dropout", t.dropout},
                   {"hidden", t.hidden},
                   {"proj_dim", t.proj_dim},
                   {"latent_dim", t.latent_dim},
                   {"blocks", t.num_blocks},
                   {"neg_k", t.neg_k},
                   {"seeds", t.seeds},
                   {"train_frac", t.train_frac},
                   {"val_frac", t.val_frac},
                   {"anchor_budget", t.contrast_budget},
                   {"parallel", t.parallel},
                   {"data", data},
                   {"out", cfg.out_dir},
                   {"save_checkpoints", cfg.save_checkpoints}};
    if (cfg.csv_path) j["csv"] = *cfg.csv_path;
    return j;
}

ordered_json epoch_json(const train::EpochLog& log) {
    ordered_json j;
    j["epoch"] = log.epoch;
    j["stage"] = log.stage;
    auto put = [&](const char* key, const std::optional<double>& v) {
        if (v) j[key] = *v;
    };
    put("ce", log.ce);
    put("ntxent", log.ntxent);
    put("l_gen", log.l_gen);
    put("recon", log.recon);
    put("kl_v", log.kl_v);
    put("kl_e", log.kl_e);
    put("soft_keep_ratio", log.soft_keep_ratio);
    put("hard_keep_ratio", log.hard_keep_ratio);
    put("val_acc", log.val_acc);
    return j;
}

std::string method_label(const train::TrainConfig& t) {
    if (t.mode == train::Mode::supervised) return "supervised";
    return std::string(train::mode_name(t.mode)) + ":" + spec_str(t.view1) + "+" +
           spec_str(t.view2);
}

int run_train(const CliConfig& cfg) {
    Hypergraph h = load_data(cfg.data);
    fs::create_directories(cfg.out_dir);
    train::RunResult rr = train::run_protocol(h, cfg.train_cfg);

    for (const auto& seed_result : rr.per_seed) {
        const fs::path log_path =
            fs::path(cfg.out_dir) / ("seed_" + std::to_string(seed_result.seed) + ".jsonl");
        std::ofstream out(log_path);
        if (!out) throw DataError("cannot write " + log_path.string());
        for (const auto& log : seed_result.logs) out << epoch_json(log).dump() << '\n';
        if (cfg.save_checkpoints && seed_result.best_params) {
            train::save_checkpoint(fs::path(cfg.out_dir) / ("checkpoint_seed_" +
                                                            std::to_string(seed_result.seed) +
                                                            ".json"),
                                   *seed_result.best_params);
        }
    }

    ordered_json summary;
    summary["config"] = config_echo(cfg);
    ordered_json per_seed = ordered_json::array();
    bool any_failed = false;
    for (const auto& r : rr.per_seed) {
        ordered_json s;
        s["seed"] = r.seed;
        s["failed"] = r.failed;
        if (r.failed) {
            s["error"] = r.error;
            any_failed = true;
        } else {
            s["test_acc"] = r.test_acc;
            s["selected_epoch"] = r.selected_epoch;
            s["best_val_acc"] = r.best_val_acc;
            if (r.fairness) {
                s["fairness"] = ordered_json{{"f1", r.fairness->f1},
                                             {"auroc", r.fairness->auroc},
                                             {"delta_sp", r.fairness->delta_sp},
                                             {"delta_eo", r.fairness->delta_eo}};
            }
        }
        per_seed.push_back(std::move(s));
    }
    summary["per_seed"] = std::move(per_seed);
    summary["mean"] = rr.mean;
    summary["std"] = rr.stddev;
    {
        const fs::path path = fs::path(cfg.out_dir) / "summary.json";
        std::ofstream out(path);
        if (!out) throw DataError("cannot write " + path.string());
        out << summary.dump(1) << '\n';
    }
    if (cfg.csv_path) {
        const bool fresh = !fs::exists(*cfg.csv_path);
        std::ofstream out(*cfg.csv_path, std::ios::app);
        if (!out) throw DataError("cannot write " + *cfg.csv_path);
        if (fresh) out << "method,mean,std\n";
        char buf[128];
        std::snprintf(buf, sizeof(buf), "%s,%.6f,%.6f\n", method_label(cfg.train_cfg).c_str(),
                      rr.mean, rr.stddev);
        out << buf;
    }

    std::printf("%s: mean=%.2f std=%.2f over %zu seed(s)%s\n",
                method_label(cfg.train_cfg).c_str(), rr.mean, rr.stddev, rr.per_seed.size(),
                any_failed ? " (with failures, see summary.json)" : "");
    return any_failed ? kExitRuntime : kExitOk;
}

int run_stats(const CliConfig& cfg) {
    Hypergraph h = load_data(cfg.data);
    std::string h_edge = "na", h_node = "na";
    if (h.has_labels()) {
        try {
            auto hom = homophily(h);
            char buf[32];
            std::snprintf(buf, sizeof(buf), "%.4f", hom.h_edge);
            h_edge = buf;
            std::snprintf(buf, sizeof(buf), "%.4f", hom.h_node);
            h_node = buf;
        } catch (const DataError&) {
            // singleton-only structures have no defined homophily
        }
    }
    std::printf("vertices=%lld hyperedges=%lld features=%lld classes=%lld h_edge=%s h_node=%s\n",
                static_cast<long long>(h.num_vertices), static_cast<long long>(h.num_hyperedges),
                static_cast<long long>(h.feature_dim), static_cast<long long>(h.num_classes()),
                h_edge.c_str(), h_node.c_str());
    return kExitOk;
}

int run_augment(const CliConfig& cfg) {
    Hypergraph h = load_data(cfg.data);
    Hypergraph out = augment::apply_spec(h, cfg.aug_spec, cfg.seed);
    save_text(cfg.out_dir, out);
    std::printf("%s: vertices=%lld hyperedges=%lld incidences=%lld -> %s\n",
                spec_str(cfg.aug_spec).c_str(), static_cast<long long>(out.num_vertices),
                static_cast<long long>(out.num_hyperedges),
                static_cast<long long>(out.num_incidences()), cfg.out_dir.c_str());
    return kExitOk;
}

int run_synth(const CliConfig& cfg) {
    Hypergraph h = synth_hypergraph(cfg.synth_cfg, cfg.seed);
    save_text(cfg.out_dir, h);
    auto hom = homophily(h);
    std::printf("vertices=%lld hyperedges=%lld features=%lld classes=%lld h_edge=%.4f "
                "h_node=%.4f -> %s\n",
                static_cast<long long>(h.num_vertices), static_cast<long long>(h.num_hyperedges),
                static_cast<long long>(h.feature_dim), static_cast<long long>(h.num_classes()),
                hom.h_edge, hom.h_node, cfg.out_dir.c_str());
    return kExitOk;
}

int evaluate_graph(const CliConfig& cfg, const Hypergraph& h, const char* tag) {
    train::Checkpoint ckpt = train::load_checkpoint(cfg.checkpoint_path);
    if (!h.has_labels()) throw DataError("evaluation requires labels");
    if (cfg.split_seed) {
        SplitMasks masks = split(h, cfg.train_cfg.train_frac, cfg.train_cfg.val_frac,
                                 derive_seed(*cfg.split_seed, "split"));
        std::printf("%s: train=%.2f val=%.2f test=%.2f\n", tag,
                    train::evaluate(ckpt.encoder, h, masks.train),
                    train::evaluate(ckpt.encoder, h, masks.val),
                    train::evaluate(ckpt.encoder, h, masks.test));
    } else {
        std::vector<std::uint8_t> all(static_cast<std::size_t>(h.num_vertices), 1);
        std::printf("%s: accuracy=%.2f\n", tag, train::evaluate(ckpt.encoder, h, all));
    }
    if (h.num_classes() == 2 && h.has_sensitive()) {
        try {
            auto pred = train::predict(ckpt.encoder, h);
            auto [sp, eo] = train::fairness_metrics(
                pred, h.labels, h.sensitive);
            std::printf("%s: f1=%.2f delta_sp=%.2f delta_eo=%.2f\n", tag,
                        train::f1_binary(pred, h.labels), sp, eo);
        } catch (const DataError&) {
            // fairness undefined for this data; skip the line
        }
    }
    return kExitOk;
}

int run_eval(const CliConfig& cfg) {
    Hypergraph h = load_data(cfg.data);
    return evaluate_graph(cfg, h, "eval");
}

int run_attack(const CliConfig& cfg) {
    Hypergraph h = load_data(cfg.data);
    evaluate_graph(cfg, h, "clean");
    Hypergraph attacked = train::random_perturb_attack(h, cfg.attack_ratio, cfg.seed);
    return evaluate_graph(cfg, attacked, "attacked");
}

}  // namespace

Hypergraph load_data(const DataSource& src) {
    if (src.bundle) return load_bundle(*src.bundle);
    if (src.synth_preset) return synth_hypergraph(preset_config(*src.synth_preset), 0);
    if (src.hyperedges && src.features) {
        std::optional<fs::path> labels;
        std::optional<fs::path> sensitive;
        if (src.labels) labels = *src.labels;
        if (src.sensitive) sensitive = *src.sensitive;
        return load_hypergraph(*src.hyperedges, *src.features, labels, sensitive);
    }
    throw UsageError("no data source configured");
}

ParseResult parse_args(const std::vector<std::string>& args) {
    CliConfig cfg;
    std::string view1 = "A2:0.2";
    std::string view2 = "A2:0.2";
    std::string mode = "mtl";
    std::string aug_spec = "A1:0.2";
    std::int64_t seed_count = -1;
    std::vector<std::uint64_t> seed_list;
    std::string config_file;

    CLI::App app{"hypergraph contrastive learning laboratory"};
    app.name("hypergcl");
    app.require_subcommand(1);

    auto& t = cfg.train_cfg;
    auto* tr = app.add_subcommand("train", "train with the chosen regime over seeds");
    add_data_flags(tr, cfg.data);
    tr->add_option("--config", config_file, "JSON config file (flags override it)");
    tr->add_option("--mode", mode, "supervised|mtl|pretrain_linear|pretrain_finetune")
        ->capture_default_str();
    tr->add_option("--view1", view1, "first view: A0..A5[:ratio] or A6")->capture_default_str();
    tr->add_option("--view2", view2, "second (fabricated) view")->capture_default_str();
    tr->add_option("--epochs", t.epochs, "training epochs")->capture_default_str();
    tr->add_option("--pretrain-epochs", t.pretrain_epochs, "stage-1 epochs for pretrain modes")
        ->capture_default_str();
    tr->add_option("--lr-model", t.lr_model, "encoder learning rate")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    tr->add_option("--lr-generator", t.lr_generator, "generator learning rate")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    tr->add_option("--weight-decay", t.weight_decay, "L2 penalty added to gradients")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    tr->add_option("--lambda", t.lambda, "contrastive weight in MTL")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    tr->add_option("--beta", t.beta, "adversarial tradeoff for the generator")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    tr->add_option("--tau-c", t.tau_c, "contrastive temperature")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    tr->add_option("--tau-gumbel", t.tau_gumbel, "concrete relaxation temperature")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    tr->add_flag("--anneal-gumbel", t.anneal_gumbel, "anneal tau linearly to 0.1");
    tr->add_option("--dropout", t.dropout, "dropout rate between blocks")
        ->check(CLI::Range(0.0, 0.999))
        ->capture_default_str();
    tr->add_option("--hidden", t.hidden, "hidden width")->check(CLI::PositiveNumber)
        ->capture_default_str();
    tr->add_option("--proj-dim", t.proj_dim, "projection head output width")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    tr->add_option("--latent-dim", t.latent_dim, "generator latent width")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    tr->add_option("--blocks", t.num_blocks, "message passing blocks")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    tr->add_option("--neg-k", t.neg_k, "sampled negatives per positive (large graphs)")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    auto* seeds_opt = tr->add_option("--seeds", seed_count, "number of seeds (0..N-1)");
    tr->add_option("--seed-list", seed_list, "explicit seed values")
        ->delimiter(',')
        ->excludes(seeds_opt);
    tr->add_option("--train-frac", t.train_frac, "train fraction")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    tr->add_option("--val-frac", t.val_frac, "validation fraction")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    tr->add_option("--anchor-budget", t.contrast_budget, "max anchors for the contrast matrix")
        ->capture_default_str();
    tr->add_option("--parallel", t.parallel, "concurrent seeds")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    tr->add_option("--out", cfg.out_dir, "output directory")->capture_default_str();
    tr->add_option("--csv", cfg.csv_path, "append method,mean,std to this CSV");
    tr->add_flag("--save-checkpoints", cfg.save_checkpoints,
                 "write checkpoint_seed_<s>.json for each seed");

    auto* ev = app.add_subcommand("eval", "evaluate a checkpoint");
    add_data_flags(ev, cfg.data);
    ev->add_option("--checkpoint", cfg.checkpoint_path, "checkpoint file")->required();
    ev->add_option("--split-seed", cfg.split_seed, "report per-split accuracy for this seed");
    ev->add_option("--train-frac", t.train_frac, "")->check(CLI::Range(0.0, 1.0));
    ev->add_option("--val-frac", t.val_frac, "")->check(CLI::Range(0.0, 1.0));

    auto* au = app.add_subcommand("augment", "apply a fabricated augmentation and write files");
    add_data_flags(au, cfg.data);
    au->add_option("--spec", aug_spec, "A0..A5[:ratio]")->capture_default_str();
    au->add_option("--seed", cfg.seed, "random seed")->capture_default_str();
    au->add_option("--out", cfg.out_dir, "output directory")->capture_default_str();

    auto* st = app.add_subcommand("stats", "print size and homophily statistics");
    add_data_flags(st, cfg.data);

    auto* sy = app.add_subcommand("synth", "generate a synthetic hypergraph");
    std::string synth_preset;
    sy->add_option("--preset", synth_preset, "default|benchmark");
    sy->add_option("--num-vertices", cfg.synth_cfg.num_vertices, "")->check(CLI::PositiveNumber);
    sy->add_option("--num-classes", cfg.synth_cfg.num_classes, "")->check(CLI::PositiveNumber);
    sy->add_option("--num-hyperedges", cfg.synth_cfg.num_hyperedges, "")
        ->check(CLI::PositiveNumber);
    sy->add_option("--min-size", cfg.synth_cfg.min_edge_size, "");
    sy->add_option("--max-size", cfg.synth_cfg.max_edge_size, "");
    sy->add_option("--q", cfg.synth_cfg.intra_class_probability, "intra-class probability")
        ->check(CLI::Range(0.0, 1.0));
    sy->add_option("--feature-dim", cfg.synth_cfg.feature_dim, "")->check(CLI::PositiveNumber);
    sy->add_option("--noise", cfg.synth_cfg.feature_noise, "feature noise scale")
        ->check(CLI::NonNegativeNumber);
    sy->add_option("--seed", cfg.seed, "random seed")->capture_default_str();
    sy->add_option("--out", cfg.out_dir, "output directory")->capture_default_str();

    auto* at = app.add_subcommand("attack", "perturb structure and re-evaluate a checkpoint");
    add_data_flags(at, cfg.data);
    at->add_option("--checkpoint", cfg.checkpoint_path, "checkpoint file")->required();
    at->add_option("--ratio", cfg.attack_ratio, "fraction of incidences to remove")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    at->add_option("--seed", cfg.seed, "random seed")->capture_default_str();
    at->add_option("--split-seed", cfg.split_seed, "report per-split accuracy for this seed");
    at->add_option("--train-frac", t.train_frac, "")->check(CLI::Range(0.0, 1.0));
    at->add_option("--val-frac", t.val_frac, "")->check(CLI::Range(0.0, 1.0));

    std::vector<const char*> argv;
    argv.push_back("hypergcl");
    for (const auto& a : args) argv.push_back(a.c_str());

    ParseResult result;
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());

        CLI::App* sub = app.get_subcommands().front();
        cfg.subcommand = sub->get_name();

        if (cfg.subcommand == "train" && !config_file.empty()) {
            std::map<std::string, std::function<void(const nlohmann::json&)>> appliers = {
                {"mode", [&](const nlohmann::json& v) { mode = v.get<std::string>(); }},
                {"view1", [&](const nlohmann::json& v) { view1 = v.get<std::string>(); }},
                {"view2", [&](const nlohmann::json& v) { view2 = v.get<std::string>(); }},
                {"epochs", [&](const nlohmann::json& v) { t.epochs = v.get<std::int64_t>(); }},
                {"pretrain-epochs",
                 [&](const nlohmann::json& v) { t.pretrain_epochs = v.get<std::int64_t>(); }},
                {"lr-model", [&](const nlohmann::json& v) { t.lr_model = v.get<double>(); }},
                {"lr-generator",
                 [&](const nlohmann::json& v) { t.lr_generator = v.get<double>(); }},
                {"weight-decay",
                 [&](const nlohmann::json& v) { t.weight_decay = v.get<double>(); }},
                {"lambda", [&](const nlohmann::json& v) { t.lambda = v.get<double>(); }},
                {"beta", [&](const nlohmann::json& v) { t.beta = v.get<double>(); }},
                {"tau-c", [&](const nlohmann::json& v) { t.tau_c = v.get<double>(); }},
                {"tau-gumbel", [&](const nlohmann::json& v) { t.tau_gumbel = v.get<double>(); }},
                {"anneal-gumbel",
                 [&](const nlohmann::json& v) { t.anneal_gumbel = v.get<bool>(); }},
                {"dropout", [&](const nlohmann::json& v) { t.dropout = v.get<double>(); }},
                {"hidden", [&](const nlohmann::json& v) { t.hidden = v.get<std::int64_t>(); }},
                {"proj-dim", [&](const nlohmann::json& v) { t.proj_dim = v.get<std::int64_t>(); }},
                {"latent-dim",
                 [&](const nlohmann::json& v) { t.latent_dim = v.get<std::int64_t>(); }},
                {"blocks", [&](const nlohmann::json& v) { t.num_blocks = v.get<std::int64_t>(); }},
                {"neg-k", [&](const nlohmann::json& v) { t.neg_k = v.get<std::int64_t>(); }},
                {"seeds", [&](const nlohmann::json& v) { seed_count = v.get<std::int64_t>(); }},
                {"seed-list",
                 [&](const nlohmann::json& v) {
                     seed_list = v.get<std::vector<std::uint64_t>>();
                 }},
                {"train-frac", [&](const nlohmann::json& v) { t.train_frac = v.get<double>(); }},
                {"val-frac", [&](const nlohmann::json& v) { t.val_frac = v.get<double>(); }},
                {"anchor-budget",
                 [&](const nlohmann::json& v) { t.contrast_budget = v.get<std::int64_t>(); }},
                {"parallel", [&](const nlohmann::json& v) { t.parallel = v.get<std::int64_t>(); }},
                {"out", [&](const nlohmann::json& v) { cfg.out_dir = v.get<std::string>(); }},
            };
            apply_config_file(config_file, tr, appliers);
        }

        if (cfg.subcommand == "train" || cfg.subcommand == "eval" || cfg.subcommand == "attack" ||
            cfg.subcommand == "stats" || cfg.subcommand == "augment") {
            check_one_source(cfg.data);
        }
        if (cfg.subcommand == "train") {
            t.mode = train::mode_from_name(mode);
            t.view1 = augment::parse_spec(view1);
            t.view2 = augment::parse_spec(view2);
            if (!seed_list.empty()) {
                t.seeds = seed_list;
            } else if (seed_count >= 0) {
                if (seed_count == 0) throw UsageError("--seeds must be at least 1");
                t.seeds.clear();
                for (std::int64_t s = 0; s < seed_count; ++s) {
                    t.seeds.push_back(static_cast<std::uint64_t>(s));
                }
            }
            t.validate();
        }
        if (cfg.subcommand == "augment") {
            cfg.aug_spec = augment::parse_spec(aug_spec);
            if (cfg.aug_spec.kind == augment::Kind::generative) {
                throw UsageError("augment applies fabricated operators only (A0..A5)");
            }
        }
        if (cfg.subcommand == "synth" && !synth_preset.empty()) {
            SynthConfig preset = preset_config(synth_preset);
            // explicit flags override the preset
            auto keep = [&](const char* flag, auto member, auto preset_value) {
                if (sy->get_option(flag)->count() == 0) cfg.synth_cfg.*member = preset_value;
            };
            keep("--num-vertices", &SynthConfig::num_vertices, preset.num_vertices);
            keep("--num-classes", &SynthConfig::num_classes, preset.num_classes);
            keep("--num-hyperedges", &SynthConfig::num_hyperedges, preset.num_hyperedges);
            keep("--min-size", &SynthConfig::min_edge_size, preset.min_edge_size);
            keep("--max-size", &SynthConfig::max_edge_size, preset.max_edge_size);
            keep("--q", &SynthConfig::intra_class_probability, preset.intra_class_probability);
            keep("--feature-dim", &SynthConfig::feature_dim, preset.feature_dim);
            keep("--noise", &SynthConfig::feature_noise, preset.feature_noise);
        }

        result.config = std::move(cfg);
        return result;
    } catch (const CLI::CallForHelp&) {
        result.exit_code = kExitOk;
        result.message = app.help();
        return result;
    } catch (const CLI::ParseError& e) {
        result.exit_code = kExitUsage;
        result.message = std::string("error: ") + e.what() + "\n";
        return result;
    } catch (const UsageError& e) {
        result.exit_code = kExitUsage;
        result.message = std::string("error: ") + e.what() + "\n";
        return result;
    } catch (const train::ConfigError& e) {
        result.exit_code = kExitUsage;
        result.message = std::string("error: ") + e.what() + "\n";
        return result;
    } catch (const DataError& e) {  // bad --view/--spec values
        result.exit_code = kExitUsage;
        result.message = std::string("error: ") + e.what() + "\n";
        return result;
    }
}

int dispatch(const CliConfig& cfg) {
    if (cfg.subcommand == "train") return run_train(cfg);
    if (cfg.subcommand == "stats") return run_stats(cfg);
    if (cfg.subcommand == "augment") return run_augment(cfg);
    if (cfg.subcommand == "synth") return run_synth(cfg);
    if (cfg.subcommand == "eval") return run_eval(cfg);
    if (cfg.subcommand == "attack") return run_attack(cfg);
    throw std::logic_error("unknown subcommand " + cfg.subcommand);
}

int run(int argc, const char* const* argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    ParseResult parsed = parse_args(args);
    if (!parsed.config) {
        (parsed.exit_code == kExitOk ? std::cout : std::cerr) << parsed.message;
        return parsed.exit_code;
    }
    try {
        return dispatch(*parsed.config);
    } catch (const ParseError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return kExitData;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return kExitData;
    } catch (const train::ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "failure: " << e.what() << '\n';
        return kExitRuntime;
    }
}

}  // namespace hypergcl::cli

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "hypergcl/augment.hpp"
#include "hypergcl/hypergraph.hpp"
#include "hypergcl/train.hpp"

namespace hypergcl::cli {

// Exit codes: 0 success, 1 usage, 2 data error, 3 runtime failure.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitRuntime = 3;

struct DataSource {
    std::optional<std::string> bundle;
    std::optional<std::string> hyperedges;
    std::optional<std::string> features;
    std::optional<std::string> labels;
    std::optional<std::string> sensitive;
    std::optional<std::string> synth_preset;
};

struct CliConfig {
    std::string subcommand;
    DataSource data;
    train::TrainConfig train_cfg;
    std::string out_dir = "out";
    std::optional<std::string> csv_path;
    bool save_checkpoints = false;

    // eval / attack
    std::string checkpoint_path;
    std::optional<std::uint64_t> split_seed;

    // augment / synth / attack
    augment::AugmentationSpec aug_spec;
    std::uint64_t seed = 0;
    double attack_ratio = 0.1;
    SynthConfig synth_cfg;
};

struct ParseResult {
    std::optional<CliConfig> config;  // set iff parsing succeeded
    int exit_code = kExitOk;          // meaningful when config is empty
    std::string message;              // help text or usage error
};

// Parses and validates; never prints. A JSON config file (--config) supplies
// defaults for any train flag not given on the command line.
ParseResult parse_args(const std::vector<std::string>& args);

// Runs the subcommand; throws DataError/ParseError for bad inputs and
// std::exception for runtime failures. Returns an exit code (a train run with
// failed seeds returns kExitRuntime).
int dispatch(const CliConfig& cfg);

// parse + dispatch + error-to-exit-code mapping; prints messages.
int run(int argc, const char* const* argv);

// Loads the configured data source (files, bundle or synthetic preset).
Hypergraph load_data(const DataSource& src);

}  // namespace hypergcl::cli

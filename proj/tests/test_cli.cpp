#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "hypergcl/cli.hpp"
#include "hypergcl/rng.hpp"

using namespace hypergcl;
using namespace hypergcl::cli;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        static int counter = 0;
        path = fs::temp_directory_path() /
               ("hypergcl_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string str(const char* name) const { return (path / name).string(); }
};

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

}  // namespace

TEST_CASE("parse: valid train invocation") {
    auto r = parse_args({"train", "--synth", "default", "--mode", "mtl", "--view1", "A6",
                         "--view2", "A2:0.2", "--seeds", "10"});
    REQUIRE(r.config.has_value());
    const auto& cfg = *r.config;
    CHECK(cfg.subcommand == "train");
    CHECK(cfg.train_cfg.mode == train::Mode::mtl);
    CHECK(cfg.train_cfg.view1.kind == augment::Kind::generative);
    CHECK(cfg.train_cfg.view2.kind == augment::Kind::incidence_removal);
    CHECK(cfg.train_cfg.seeds.size() == 10);
    CHECK(cfg.train_cfg.seeds[9] == 9);
}

TEST_CASE("parse: usage errors exit nonzero") {
    SUBCASE("two generative views") {
        auto r = parse_args({"train", "--synth", "default", "--view1", "A6", "--view2", "A6"});
        CHECK_FALSE(r.config.has_value());
        CHECK(r.exit_code == kExitUsage);
        CHECK(r.message.find("A6") != std::string::npos);
    }
    SUBCASE("tau-gumbel out of range") {
        auto r = parse_args({"train", "--synth", "default", "--tau-gumbel", "0"});
        CHECK_FALSE(r.config.has_value());
        CHECK(r.exit_code == kExitUsage);
    }
    SUBCASE("unknown flag") {
        auto r = parse_args({"train", "--synth", "default", "--frobnicate", "1"});
        CHECK(r.exit_code == kExitUsage);
    }
    SUBCASE("no data source") {
        auto r = parse_args({"train"});
        CHECK(r.exit_code == kExitUsage);
    }
    SUBCASE("two data sources") {
        auto r = parse_args({"stats", "--synth", "default", "--hyperedges", "x", "--features",
                             "y"});
        CHECK(r.exit_code == kExitUsage);
    }
    SUBCASE("augment rejects A6") {
        auto r = parse_args({"augment", "--synth", "default", "--spec", "A6"});
        CHECK(r.exit_code == kExitUsage);
    }
    SUBCASE("bad view grammar") {
        auto r = parse_args({"train", "--synth", "default", "--view1", "A9"});
        CHECK(r.exit_code == kExitUsage);
    }
}

TEST_CASE("parse: help is exit code zero") {
    auto r = parse_args({"--help"});
    CHECK_FALSE(r.config.has_value());
    CHECK(r.exit_code == kExitOk);
    CHECK(r.message.find("train") != std::string::npos);
    auto rt = parse_args({"train", "--help"});
    CHECK(rt.exit_code == kExitOk);
    CHECK(rt.message.find("--tau-gumbel") != std::string::npos);
}

TEST_CASE("parse: seed list and config file") {
    TempDir dir;
    SUBCASE("seed list wins over nothing") {
        auto r = parse_args({"train", "--synth", "default", "--seed-list", "5,3,8"});
        REQUIRE(r.config.has_value());
        CHECK(r.config->train_cfg.seeds == std::vector<std::uint64_t>{5, 3, 8});
    }
    SUBCASE("config file fills unset flags, command line overrides") {
        std::ofstream out(dir.path / "cfg.json");
        out << R"({"epochs": 17, "lambda": 0.25, "mode": "supervised"})";
        out.close();
        auto r = parse_args({"train", "--synth", "default", "--config", dir.str("cfg.json"),
                             "--epochs", "99"});
        REQUIRE(r.config.has_value());
        CHECK(r.config->train_cfg.epochs == 99);          // flag wins
        CHECK(r.config->train_cfg.lambda == 0.25);        // from file
        CHECK(r.config->train_cfg.mode == train::Mode::supervised);
    }
    SUBCASE("unknown config key is a usage error") {
        std::ofstream out(dir.path / "bad.json");
        out << R"({"epoch": 17})";
        out.close();
        auto r = parse_args({"train", "--synth", "default", "--config", dir.str("bad.json")});
        CHECK(r.exit_code == kExitUsage);
    }
}

TEST_CASE("dispatch: synth determinism, byte-identical files") {
    TempDir a, b;
    auto ra = parse_args({"synth", "--preset", "benchmark", "--seed", "7", "--out",
                          a.path.string()});
    auto rb = parse_args({"synth", "--preset", "benchmark", "--seed", "7", "--out",
                          b.path.string()});
    REQUIRE(ra.config.has_value());
    REQUIRE(rb.config.has_value());
    CHECK(dispatch(*ra.config) == kExitOk);
    CHECK(dispatch(*rb.config) == kExitOk);
    for (const char* name : {"hyperedges.txt", "features.txt", "labels.txt"}) {
        CAPTURE(name);
        CHECK(read_file(a.path / name) == read_file(b.path / name));
        CHECK(!read_file(a.path / name).empty());
    }
}

TEST_CASE("dispatch: augment with p=1 writes an empty hyperedge file") {
    TempDir data, out;
    auto synth = parse_args({"synth", "--num-vertices", "30", "--num-hyperedges", "10",
                             "--feature-dim", "4", "--seed", "3", "--out", data.path.string()});
    REQUIRE(synth.config.has_value());
    CHECK(dispatch(*synth.config) == kExitOk);

    auto aug = parse_args({"augment", "--hyperedges", data.str("hyperedges.txt"), "--features",
                           data.str("features.txt"), "--spec", "A1:1.0", "--seed", "1", "--out",
                           out.path.string()});
    REQUIRE(aug.config.has_value());
    CHECK(dispatch(*aug.config) == kExitOk);
    CHECK(read_file(out.path / "hyperedges.txt").empty());
}

TEST_CASE("dispatch: stats prints the table row") {
    TempDir data;
    auto synth = parse_args({"synth", "--preset", "default", "--seed", "2", "--out",
                             data.path.string()});
    REQUIRE(dispatch(*synth.config) == kExitOk);
    auto stats = parse_args({"stats", "--hyperedges", data.str("hyperedges.txt"), "--features",
                             data.str("features.txt"), "--labels", data.str("labels.txt")});
    REQUIRE(stats.config.has_value());
    CHECK(dispatch(*stats.config) == kExitOk);
}

TEST_CASE("dispatch: train writes logs, summary, checkpoints; eval and attack consume them") {
    TempDir out;
    auto tr = parse_args({"train", "--synth", "default", "--mode", "supervised", "--epochs", "30",
                          "--seeds", "2", "--save-checkpoints", "--csv", out.str("results.csv"),
                          "--out", out.path.string()});
    REQUIRE(tr.config.has_value());
    CHECK(dispatch(*tr.config) == kExitOk);
    CHECK(fs::exists(out.path / "seed_0.jsonl"));
    CHECK(fs::exists(out.path / "seed_1.jsonl"));
    CHECK(fs::exists(out.path / "summary.json"));
    CHECK(fs::exists(out.path / "checkpoint_seed_0.json"));
    const std::string csv = read_file(out.path / "results.csv");
    CHECK(csv.find("method,mean,std") == 0);
    CHECK(csv.find("supervised,") != std::string::npos);

    auto ev = parse_args({"eval", "--synth", "default", "--checkpoint",
                          out.str("checkpoint_seed_0.json"), "--split-seed", "0"});
    REQUIRE(ev.config.has_value());
    CHECK(dispatch(*ev.config) == kExitOk);

    auto at = parse_args({"attack", "--synth", "default", "--checkpoint",
                          out.str("checkpoint_seed_0.json"), "--ratio", "0.1", "--seed", "4"});
    REQUIRE(at.config.has_value());
    CHECK(dispatch(*at.config) == kExitOk);
}

TEST_CASE("dispatch: identical config and seed give byte-identical logs and summary") {
    TempDir out;
    const std::vector<std::string> argv = {
        "train", "--synth", "default", "--mode",  "mtl",  "--view1", "A1:0.3",
        "--view2", "A2:0.2", "--epochs", "12", "--seeds", "2", "--out", out.path.string()};
    auto first = parse_args(argv);
    REQUIRE(first.config.has_value());
    CHECK(dispatch(*first.config) == kExitOk);
    const std::string log0 = read_file(out.path / "seed_0.jsonl");
    const std::string log1 = read_file(out.path / "seed_1.jsonl");
    const std::string summary = read_file(out.path / "summary.json");

    auto second = parse_args(argv);
    CHECK(dispatch(*second.config) == kExitOk);
    CHECK(read_file(out.path / "seed_0.jsonl") == log0);
    CHECK(read_file(out.path / "seed_1.jsonl") == log1);
    CHECK(read_file(out.path / "summary.json") == summary);
    CHECK(!log0.empty());
    CHECK(log0 != log1);  // different seeds actually differ
}

TEST_CASE("dispatch: missing files are data errors") {
    auto r = parse_args({"stats", "--hyperedges", "/nonexistent/he.txt", "--features",
                         "/nonexistent/x.txt"});
    REQUIRE(r.config.has_value());
    CHECK_THROWS_AS(dispatch(*r.config), DataError);
}

TEST_CASE("run maps exceptions to exit codes") {
    const char* argv_bad_data[] = {"hypergcl", "stats", "--hyperedges", "/nonexistent/he.txt",
                                   "--features", "/nonexistent/x.txt"};
    CHECK(run(6, argv_bad_data) == kExitData);
    const char* argv_usage[] = {"hypergcl", "train"};
    CHECK(run(2, argv_usage) == kExitUsage);
    const char* argv_help[] = {"hypergcl", "--help"};
    CHECK(run(2, argv_help) == kExitOk);
}

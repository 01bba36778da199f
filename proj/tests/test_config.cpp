#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "depthsign/config.hpp"

using namespace depthsign;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        static int counter = 0;
        path = fs::temp_directory_path() /
               ("depthsign_cfg_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter++));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
};

} // namespace

TEST_CASE("built-in defaults carry the full-scale protocol", "[config]") {
    RunConfig cfg;
    CHECK(cfg.frac_train == 0.50);
    CHECK(cfg.frac_val == 0.25);
    CHECK(cfg.frac_test == 0.25);
    CHECK(cfg.pipeline.ae1.hidden == 100);
    CHECK(cfg.pipeline.ae1.epochs_max == 400);
    CHECK(cfg.pipeline.ae2.hidden == 50);
    CHECK(cfg.pipeline.ae2.epochs_max == 100);
    CHECK(cfg.pipeline.head.epochs_max == 400);
    CHECK(cfg.pipeline.ae1.learning_rate == 0.1);
    CHECK(cfg.pipeline.ae1.momentum == 0.9);
    CHECK(cfg.pipeline.ae1.batch_size == 64);
    CHECK(cfg.pipeline.ae1.l2_weight == 1e-4);
    CHECK(cfg.pipeline.ae1.sparsity_target == 0.05);
    CHECK(cfg.pipeline.ae1.sparsity_weight == 1.0);
    CHECK_FALSE(cfg.pipeline.fine_tune.enabled);
}

TEST_CASE("paper defaults reassert the protocol over overrides", "[config]") {
    RunConfig cfg;
    cfg.pipeline.ae1.hidden = 7;
    cfg.pipeline.ae2.epochs_max = 3;
    cfg.frac_train = 0.8;
    cfg.frac_val = 0.1;
    cfg.frac_test = 0.1;
    apply_paper_defaults(cfg);
    CHECK(cfg.pipeline.ae1.hidden == 100);
    CHECK(cfg.pipeline.ae2.hidden == 50);
    CHECK(cfg.pipeline.ae1.epochs_max == 400);
    CHECK(cfg.pipeline.ae2.epochs_max == 100);
    CHECK(cfg.pipeline.head.epochs_max == 400);
    CHECK(cfg.frac_train == 0.5);
    CHECK(cfg.frac_val == 0.25);
    CHECK(cfg.frac_test == 0.25);
}

TEST_CASE("config files parse key = value lines with comments", "[config]") {
    TempDir tmp;
    const fs::path file = tmp.path / "run.cfg";
    std::ofstream(file) << "# experiment configuration\n"
                        << "seed = 99\n"
                        << "ae1_hidden = 25   # desk scale\n"
                        << "\n"
                        << "ft_enabled = true\n"
                        << "head_lr = 0.5\n";
    const auto values = parse_config_file(file);
    RunConfig cfg;
    apply_config_values(cfg, values);
    CHECK(cfg.seed == 99);
    CHECK(cfg.pipeline.ae1.hidden == 25);
    CHECK(cfg.pipeline.fine_tune.enabled);
    CHECK(cfg.pipeline.head.learning_rate == 0.5);
}

TEST_CASE("unknown keys and malformed lines are rejected", "[config]") {
    TempDir tmp;
    const fs::path bad_key = tmp.path / "bad1.cfg";
    std::ofstream(bad_key) << "no_such_key = 5\n";
    CHECK_THROWS_AS(parse_config_file(bad_key), ParameterError);

    const fs::path bad_line = tmp.path / "bad2.cfg";
    std::ofstream(bad_line) << "seed 99\n";
    CHECK_THROWS_AS(parse_config_file(bad_line), FormatError);

    RunConfig cfg;
    CHECK_THROWS_AS(apply_config_values(cfg, {{"seed", "abc"}}), ParameterError);
    CHECK_THROWS_AS(apply_config_values(cfg, {{"ae1_lr", "fast"}}), ParameterError);
    CHECK_THROWS_AS(apply_config_values(cfg, {{"ft_enabled", "maybe"}}), ParameterError);
}

TEST_CASE("snapshots round-trip the full configuration", "[config]") {
    RunConfig cfg;
    cfg.seed = 123456789;
    cfg.manifest = "data/manifest.tsv";
    cfg.pipeline.ae1.hidden = 25;
    cfg.pipeline.ae2.hidden = 10;
    cfg.pipeline.head.learning_rate = 0.625;
    cfg.pipeline.fine_tune.enabled = true;
    cfg.subjects = "1,3";

    const std::string snapshot = config_snapshot(cfg);
    const RunConfig back = config_from_snapshot(snapshot);
    CHECK(back.seed == cfg.seed);
    CHECK(back.manifest == cfg.manifest);
    CHECK(back.pipeline.ae1.hidden == 25);
    CHECK(back.pipeline.ae2.hidden == 10);
    CHECK(back.pipeline.head.learning_rate == 0.625);
    CHECK(back.pipeline.fine_tune.enabled);
    CHECK(back.subjects == "1,3");
    // snapshot is stable: serializing again yields identical bytes
    CHECK(config_snapshot(back) == snapshot);
}

TEST_CASE("run config validation", "[config]") {
    RunConfig cfg;
    cfg.frac_train = 0.9;
    CHECK_THROWS_AS(validate_run_config(cfg), ParameterError);
    cfg = RunConfig{};
    cfg.parallel_subjects = 0;
    CHECK_THROWS_AS(validate_run_config(cfg), ParameterError);
    cfg = RunConfig{};
    CHECK_NOTHROW(validate_run_config(cfg));
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>

#include "enhance/config.hpp"
#include "test_util.hpp"

using namespace enhance;

TEST_CASE("kv parser handles comments, blanks, and whitespace trimming") {
    KvMap kv = parse_kv_text(
        "# header comment\n"
        "\n"
        "epochs = 12\n"
        "  batch=4   \n"
        "checkpoint_prefix = run/model  # trailing comment\n");
    REQUIRE(kv.size() == 3);
    CHECK(kv.at("epochs") == "12");
    CHECK(kv.at("batch") == "4");
    CHECK(kv.at("checkpoint_prefix") == "run/model");
}

TEST_CASE("kv parser rejects duplicates and lines without '='") {
    CHECK_THROWS_AS(parse_kv_text("a = 1\na = 2\n"), ConfigError);
    CHECK_THROWS_AS(parse_kv_text("justaword\n"), ConfigError);
    CHECK_THROWS_AS(parse_kv_text("= value\n"), ConfigError);
}

TEST_CASE("kv parser error messages carry origin and line number") {
    try {
        parse_kv_text("ok = 1\nbroken line\n", "settings.cfg");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        std::string msg = e.what();
        CHECK(msg.find("settings.cfg") != std::string::npos);
        CHECK(msg.find("2") != std::string::npos);
    }
}

TEST_CASE("kv file parsing reads from disk and flags missing files") {
    testutil::TempDir tmp("cfg");
    {
        std::ofstream f(tmp.str("a.cfg"));
        f << "seed = 7\n";
    }
    KvMap kv = parse_kv_file(tmp.str("a.cfg"));
    CHECK(kv.at("seed") == "7");
    CHECK_THROWS_AS(parse_kv_file(tmp.str("missing.cfg")), IoError);
}

TEST_CASE("scalar parsers are strict about trailing junk") {
    CHECK(config_int("k", "42") == 42);
    CHECK(config_int("k", "-3") == -3);
    CHECK_THROWS_AS(config_int("k", "42x"), ConfigError);
    CHECK_THROWS_AS(config_int("k", ""), ConfigError);
    CHECK_THROWS_AS(config_int("k", "1.5"), ConfigError);

    CHECK(config_double("k", "2.5e-3") == doctest::Approx(2.5e-3).epsilon(1e-15));
    CHECK_THROWS_AS(config_double("k", "abc"), ConfigError);
    CHECK_THROWS_AS(config_double("k", "1.0junk"), ConfigError);

    CHECK(config_bool("k", "true"));
    CHECK(config_bool("k", "1"));
    CHECK(config_bool("k", "Yes"));
    CHECK_FALSE(config_bool("k", "false"));
    CHECK_FALSE(config_bool("k", "0"));
    CHECK_FALSE(config_bool("k", "off"));
    CHECK_THROWS_AS(config_bool("k", "maybe"), ConfigError);
}

TEST_CASE("paired overlay maps every documented key onto the config") {
    KvMap kv = parse_kv_text(
        "epochs = 40\n"
        "batch = 16\n"
        "branches = 5\n"
        "branch_dropout = 0.4\n"
        "augment = false\n"
        "seed = 123\n"
        "resolution = 128\n"
        "checkpoint_interval = 10\n"
        "checkpoint_prefix = out/ck\n"
        "history_path = out/h.csv\n"
        "stop_below_loss = 0.75\n"
        "lr0 = 5e-4\n"
        "lr_end = 1e-6\n"
        "lr_step_epochs = 15\n"
        "lr_end_epoch = 150\n");
    TrainConfig cfg;
    apply_paired_config(kv, cfg);
    CHECK(cfg.epochs == 40);
    CHECK(cfg.batch == 16);
    CHECK(cfg.branches == 5);
    CHECK(cfg.branch_dropout == 0.4);
    CHECK_FALSE(cfg.augment);
    CHECK(cfg.seed == 123);
    CHECK(cfg.resolution == 128);
    CHECK(cfg.checkpoint_interval == 10);
    CHECK(cfg.checkpoint_prefix == "out/ck");
    CHECK(cfg.history_path == "out/h.csv");
    CHECK(cfg.stop_below_loss == 0.75);
    CHECK(cfg.lr.lr0 == 5e-4);
    CHECK(cfg.lr.lr_end == 1e-6);
    CHECK(cfg.lr.step_epochs == 15);
    CHECK(cfg.lr.end_epoch == 150);
}

TEST_CASE("unpaired overlay maps the phase-scoped keys") {
    KvMap kv = parse_kv_text(
        "seed = 5\n"
        "resolution = 64\n"
        "augment = true\n"
        "history_path = gan.csv\n"
        "phase1.epochs = 30\n"
        "phase1.batch = 8\n"
        "phase1.lr0 = 2e-4\n"
        "phase1.lr_hold_epochs = 10\n"
        "phase1.lr_total_epochs = 30\n"
        "phase1.disc_dropout = 0.2\n"
        "phase1.alpha = 0.05\n"
        "phase1.share_weights = false\n"
        "phase1.gen_dropout = 0.1\n"
        "phase2.enabled = true\n"
        "phase2.epochs = 12\n"
        "phase2.batch = 6\n"
        "phase2.lr0 = 1e-5\n"
        "phase2.lr_hold_epochs = 4\n"
        "phase2.lr_total_epochs = 12\n"
        "phase2.gen_dropout = 0.25\n");
    GanConfig cfg;
    apply_unpaired_config(kv, cfg);
    CHECK(cfg.seed == 5);
    CHECK(cfg.resolution == 64);
    CHECK(cfg.augment);
    CHECK(cfg.history_path == "gan.csv");
    CHECK(cfg.phase1.epochs == 30);
    CHECK(cfg.phase1.batch == 8);
    CHECK(cfg.phase1.lr.lr0 == 2e-4);
    CHECK(cfg.phase1.lr.hold_epochs == 10);
    CHECK(cfg.phase1.lr.total_epochs == 30);
    CHECK(cfg.phase1.disc_dropout == 0.2);
    CHECK(cfg.phase1.alpha == 0.05);
    CHECK_FALSE(cfg.phase1.share_weights);
    CHECK(cfg.phase1.gen_dropout == 0.1);
    CHECK(cfg.phase2.enabled);
    CHECK(cfg.phase2.epochs == 12);
    CHECK(cfg.phase2.batch == 6);
    CHECK(cfg.phase2.lr.lr0 == 1e-5);
    CHECK(cfg.phase2.lr.hold_epochs == 4);
    CHECK(cfg.phase2.lr.total_epochs == 12);
    CHECK(cfg.phase2.gen_dropout == 0.25);
}

TEST_CASE("unknown keys raise ConfigError naming the offender") {
    TrainConfig pcfg;
    try {
        apply_paired_config(parse_kv_text("learning_rate = 1\n"), pcfg);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("learning_rate") != std::string::npos);
    }
    GanConfig gcfg;
    CHECK_THROWS_AS(apply_unpaired_config(parse_kv_text("phase3.epochs = 1\n"), gcfg),
                    ConfigError);
}

TEST_CASE("overlay applies only the keys present and leaves the rest at defaults") {
    TrainConfig cfg;
    TrainConfig defaults = cfg;
    apply_paired_config(parse_kv_text("epochs = 9\n"), cfg);
    CHECK(cfg.epochs == 9);
    CHECK(cfg.batch == defaults.batch);
    CHECK(cfg.lr.lr0 == defaults.lr.lr0);
}

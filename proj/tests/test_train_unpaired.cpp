#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <fstream>

#include "enhance/dataset.hpp"
#include "enhance/losses.hpp"
#include "enhance/train_unpaired.hpp"
#include "enhance/transform.hpp"
#include "test_util.hpp"

using namespace enhance;

namespace {

UnpairedDataset tiny_dataset(int n_per_side, int side, uint64_t seed) {
    UnpairedDataset ds;
    Rng rng(seed);
    CoefficientMatrix star;
    star.at(0, 0) = 0.08;  // style: brighten via R
    star.at(9, 1) = 0.04;
    for (int i = 0; i < n_per_side; ++i) {
        ImageBuffer x = make_procedural_image(side, rng);
        for (double& v : x.data) v = 0.15 + 0.7 * v;
        ds.x_images.push_back(x);
    }
    for (int i = 0; i < n_per_side; ++i) {
        ImageBuffer y = make_procedural_image(side, rng);
        for (double& v : y.data) v = 0.15 + 0.7 * v;
        ds.y_images.push_back(apply_transform_unclamped(y, star));
    }
    return ds;
}

GanConfig tiny_config(uint64_t seed = 1) {
    GanConfig cfg;
    cfg.seed = seed;
    cfg.resolution = 16;
    cfg.augment = false;
    cfg.phase1.epochs = 2;
    cfg.phase1.batch = 4;
    cfg.phase1.lr = {1e-4, 2, 4};
    cfg.phase2.epochs = 1;
    cfg.phase2.batch = 4;
    cfg.phase2.lr = {5e-6, 1, 2};
    return cfg;
}

}  // namespace

TEST_CASE("GAN losses at zero logits equal 2 ln 2 and ln 2") {
    std::vector<double> z(4, 0.0);
    auto parts = gan_losses(z, z);
    CHECK(parts.disc_loss == doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-12));
    CHECK(parts.gen_loss == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    for (double g : parts.grad_real) CHECK(g == doctest::Approx(-0.5 / 4).epsilon(1e-12));
    for (double g : parts.grad_fake) CHECK(g == doctest::Approx(0.5 / 4).epsilon(1e-12));
    for (double g : parts.grad_gen_fake) CHECK(g == doctest::Approx(-0.5 / 4).epsilon(1e-12));
}

TEST_CASE("GAN losses follow the softplus closed form on asymmetric logits") {
    auto sp = [](double v) { return std::log1p(std::exp(-std::fabs(v))) + std::max(v, 0.0); };
    std::vector<double> zr = {2.0, -1.0};
    std::vector<double> zf = {0.5};
    auto parts = gan_losses(zr, zf);
    CHECK(parts.disc_loss ==
          doctest::Approx((sp(-2.0) + sp(1.0)) / 2.0 + sp(0.5)).epsilon(1e-12));
    CHECK(parts.gen_loss == doctest::Approx(sp(-0.5)).epsilon(1e-12));
    // perfect-discriminator saturation stays finite
    auto extreme = gan_losses({1000.0}, {-1000.0});
    CHECK(std::isfinite(extreme.disc_loss));
    CHECK(extreme.disc_loss < 1e-6);
    CHECK(std::isfinite(extreme.gen_loss));
}

TEST_CASE("phase-1 total combines cycle and adversarial terms with alpha") {
    CHECK(total_phase1_loss(2.0, 3.0, 0.5, 0.25, 0.02) ==
          doctest::Approx(0.02 * 5.0 + 0.75).epsilon(1e-12));
}

TEST_CASE("zero-initialized generators start as the identity: first-epoch cycle loss is 0") {
    auto ds = tiny_dataset(4, 16, 2);
    GanConfig cfg = tiny_config();
    cfg.phase1.epochs = 1;  // single batch per epoch -> all cycles before any update
    auto state = train_phase1(ds, cfg);
    REQUIRE(state.phase1_history.size() == 1);
    CHECK(state.phase1_history[0].cycle_x == 0.0);
    CHECK(state.phase1_history[0].cycle_y == 0.0);
}

TEST_CASE("weight sharing holds structurally after every phase-1 step") {
    auto ds = tiny_dataset(4, 16, 3);
    GanConfig cfg = tiny_config();
    auto state = train_phase1(ds, cfg);
    CHECK(state.pair.shared);
    CHECK(state.pair.shared_weights_equal());

    GanConfig noshare = cfg;
    noshare.phase1.share_weights = false;
    auto s2 = train_phase1(ds, noshare);
    CHECK_FALSE(s2.pair.shared);
}

TEST_CASE("phase 2 freezes G_Y and the discriminators, trains G_X unshared") {
    auto ds = tiny_dataset(4, 16, 4);
    GanConfig cfg = tiny_config();
    auto state = train_phase1(ds, cfg);
    uint64_t gy_before = nn::params_hash(state.pair.gy->params());
    uint64_t dx_before = nn::params_hash(state.disc_x->params());
    uint64_t dy_before = nn::params_hash(state.disc_y->params());
    uint64_t gx_before = nn::params_hash(state.pair.gx->params());

    train_phase2(state, ds, cfg);
    CHECK_FALSE(state.pair.shared);
    CHECK(nn::params_hash(state.pair.gy->params()) == gy_before);
    CHECK(nn::params_hash(state.disc_x->params()) == dx_before);
    CHECK(nn::params_hash(state.disc_y->params()) == dy_before);
    CHECK(nn::params_hash(state.pair.gx->params()) != gx_before);
    CHECK(state.phase2_history.size() == 1);
}

TEST_CASE("both phases are bit-deterministic in the seed") {
    auto ds = tiny_dataset(4, 16, 5);
    GanConfig cfg = tiny_config(9);
    auto a = train_phase1(ds, cfg);
    auto b = train_phase1(ds, cfg);
    REQUIRE(a.phase1_history.size() == b.phase1_history.size());
    for (size_t i = 0; i < a.phase1_history.size(); ++i) {
        CHECK(a.phase1_history[i].cycle_x == b.phase1_history[i].cycle_x);
        CHECK(a.phase1_history[i].disc_x == b.phase1_history[i].disc_x);
    }
    CHECK(nn::params_hash(a.pair.gx->params()) == nn::params_hash(b.pair.gx->params()));
    CHECK(nn::params_hash(a.pair.gy->params()) == nn::params_hash(b.pair.gy->params()));

    train_phase2(a, ds, cfg);
    train_phase2(b, ds, cfg);
    CHECK(nn::params_hash(a.pair.gx->params()) == nn::params_hash(b.pair.gx->params()));

    GanConfig other = tiny_config(10);
    auto c = train_phase1(ds, other);
    CHECK(nn::params_hash(a.pair.gy->params()) != nn::params_hash(c.pair.gy->params()));
}

TEST_CASE("shared convs still allow the private batchnorm stats to diverge") {
    auto ds = tiny_dataset(4, 16, 6);
    GanConfig cfg = tiny_config();
    auto state = train_phase1(ds, cfg);
    // same conv tensors...
    CHECK(state.pair.shared_weights_equal());
    // ...but the two generators are not parameter-identical overall
    CHECK(nn::params_hash(state.pair.gx->params()) != nn::params_hash(state.pair.gy->params()));
}

TEST_CASE("ablation names map 1:1 onto the arm flag tuples") {
    auto names = ablation_variant_names();
    REQUIRE(names.size() == 6);
    GanConfig base = tiny_config();

    auto complete = apply_ablation(base, AblationVariant::Complete);
    CHECK(complete.phase1.share_weights);
    CHECK(complete.phase2.enabled);

    auto noshare = apply_ablation(base, AblationVariant::NoSharedWeights);
    CHECK_FALSE(noshare.phase1.share_weights);
    CHECK(noshare.phase2.enabled);

    auto first = apply_ablation(base, AblationVariant::FirstPhaseOnly);
    CHECK_FALSE(first.phase2.enabled);
    CHECK(first.phase1.gen_dropout == 0.0);

    auto firstdrop = apply_ablation(base, AblationVariant::FirstPhaseOnlyWithDropout);
    CHECK_FALSE(firstdrop.phase2.enabled);
    CHECK(firstdrop.phase1.gen_dropout == base.phase2.gen_dropout);

    auto nodrop = apply_ablation(base, AblationVariant::CompleteWithoutDropout);
    CHECK(nodrop.phase2.enabled);
    CHECK(nodrop.phase2.gen_dropout == 0.0);

    auto raw = apply_ablation(base, AblationVariant::RawMethod);
    CHECK_FALSE(raw.phase1.share_weights);
    CHECK_FALSE(raw.phase2.enabled);

    for (const auto& n : names) CHECK_NOTHROW(ablation_variant_from_name(n));
    CHECK_THROWS_AS(ablation_variant_from_name("bogus"), UsageError);
}

TEST_CASE("ablation runs honor the phase-2 switch") {
    auto ds = tiny_dataset(4, 16, 7);
    GanConfig cfg = tiny_config();
    auto first = ablation_run(ds, cfg, AblationVariant::FirstPhaseOnly);
    CHECK(first.phase2_history.empty());
    auto complete = ablation_run(ds, cfg, AblationVariant::Complete);
    CHECK_FALSE(complete.phase2_history.empty());
}

TEST_CASE("config validation flags bad GAN settings") {
    GanConfig cfg = tiny_config();
    cfg.phase1.alpha = -1.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = tiny_config();
    cfg.phase1.disc_dropout = 1.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = tiny_config();
    cfg.phase2.epochs = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg.phase2.enabled = false;  // disabled phase 2 may carry zero epochs
    CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("gan history CSV has the documented columns") {
    testutil::TempDir tmp("ganhist");
    std::vector<GanEpochStats> hist(2);
    hist[1].epoch = 1;
    hist[1].cycle_x = 0.5;
    write_gan_history_csv(hist, tmp.str("h.csv"));
    std::ifstream f(tmp.str("h.csv"));
    std::string line;
    REQUIRE(std::getline(f, line));
    CHECK(line == "epoch,cycle_x,cycle_y,gan_gx,gan_gy,disc_x,disc_y,lr");
    int rows = 0;
    while (std::getline(f, line)) ++rows;
    CHECK(rows == 2);
}

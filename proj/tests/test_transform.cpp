#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <fstream>

#include "enhance/color.hpp"
#include "enhance/gradcheck.hpp"
#include "enhance/transform.hpp"
#include "test_util.hpp"

using namespace enhance;

namespace {

CoefficientMatrix random_theta(Rng& rng, double scale) {
    CoefficientMatrix theta;
    for (double& t : theta.theta) t = rng.uniform(-scale, scale);
    return theta;
}

}  // namespace

TEST_CASE("quadratic basis lays out [R,G,B,R2,G2,B2,RG,GB,BR,1]") {
    auto v = color_basis(0.5, 0.25, 1.0);
    const double expected[10] = {0.5, 0.25, 1.0, 0.25, 0.0625, 1.0, 0.125, 0.25, 0.5, 1.0};
    for (int i = 0; i < 10; ++i) CHECK(v[i] == doctest::Approx(expected[i]).epsilon(1e-15));

    auto zero = color_basis(0, 0, 0);
    for (int i = 0; i < 9; ++i) CHECK(zero[i] == 0.0);
    CHECK(zero[9] == 1.0);
}

TEST_CASE("zero theta is the identity transform, bit-exact") {
    Rng rng(1);
    ImageBuffer x = testutil::random_image(13, 17, rng);
    ImageBuffer y = apply_transform(x, CoefficientMatrix::zero());
    CHECK(y.data == x.data);
    ImageBuffer yu = apply_transform_unclamped(x, CoefficientMatrix::zero());
    CHECK(yu.data == x.data);
}

TEST_CASE("single coefficient moves one channel by the basis term") {
    ImageBuffer x(1, 1);
    x.pixel(0, 0)[0] = 0.5;
    x.pixel(0, 0)[1] = 0.25;
    x.pixel(0, 0)[2] = 0.125;
    CoefficientMatrix theta;
    theta.at(3, 1) = 0.4;  // R^2 feeds the G channel
    ImageBuffer y = apply_transform_unclamped(x, theta);
    CHECK(y.pixel(0, 0)[0] == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(y.pixel(0, 0)[1] == doctest::Approx(0.25 + 0.4 * 0.25).epsilon(1e-15));
    CHECK(y.pixel(0, 0)[2] == doctest::Approx(0.125).epsilon(1e-15));
}

TEST_CASE("apply_transform clamps, the training variant does not") {
    ImageBuffer x(1, 1);
    x.pixel(0, 0)[0] = 0.9;
    x.pixel(0, 0)[1] = 0.9;
    x.pixel(0, 0)[2] = 0.05;
    CoefficientMatrix theta;
    theta.at(9, 0) = 0.5;   // +0.5 to R
    theta.at(9, 2) = -0.5;  // -0.5 to B
    ImageBuffer c = apply_transform(x, theta);
    CHECK(c.pixel(0, 0)[0] == 1.0);
    CHECK(c.pixel(0, 0)[2] == 0.0);
    ImageBuffer u = apply_transform_unclamped(x, theta);
    CHECK(u.pixel(0, 0)[0] == doctest::Approx(1.4).epsilon(1e-15));
    CHECK(u.pixel(0, 0)[2] == doctest::Approx(-0.45).epsilon(1e-15));
}

TEST_CASE("transform commutes with cropping, bit-exact, 50 random triples") {
    Rng rng(7);
    for (int trial = 0; trial < 50; ++trial) {
        int h = 8 + static_cast<int>(rng.next_index(24));
        int w = 8 + static_cast<int>(rng.next_index(24));
        ImageBuffer x = testutil::random_image(h, w, rng);
        CoefficientMatrix theta = random_theta(rng, 0.2);
        int ch = 1 + static_cast<int>(rng.next_index(static_cast<uint64_t>(h)));
        int cw = 1 + static_cast<int>(rng.next_index(static_cast<uint64_t>(w)));
        int top = static_cast<int>(rng.next_index(static_cast<uint64_t>(h - ch + 1)));
        int left = static_cast<int>(rng.next_index(static_cast<uint64_t>(w - cw + 1)));

        ImageBuffer a = crop(apply_transform(x, theta), top, left, ch, cw);
        ImageBuffer b = apply_transform(crop(x, top, left, ch, cw), theta);
        REQUIRE(a.data == b.data);
    }
}

TEST_CASE("OpenMP kernel matches the serial reference bit-for-bit") {
    Rng rng(9);
    for (int trial = 0; trial < 20; ++trial) {
        int h = 1 + static_cast<int>(rng.next_index(50));
        int w = 1 + static_cast<int>(rng.next_index(50));
        ImageBuffer x = testutil::random_image(h, w, rng);
        CoefficientMatrix theta = random_theta(rng, 0.3);
        CHECK(apply_transform(x, theta).data ==
              detail::apply_transform_serial(x, theta, true).data);
        CHECK(apply_transform_unclamped(x, theta).data ==
              detail::apply_transform_serial(x, theta, false).data);
    }
}

TEST_CASE("theta gradient and input gradient pass finite differences") {
    for (uint64_t seed : {1ull, 2ull, 3ull}) {
        auto r1 = gradcheck_transform(seed, 100);
        CHECK(r1.passed(1e-4));
        auto r2 = gradcheck_transform_input(seed, 100);
        CHECK(r2.passed(1e-4));
    }
}

TEST_CASE("least squares recovers a planted theta to 1e-6 over 20 seeds") {
    for (uint64_t seed = 0; seed < 20; ++seed) {
        Rng rng(seed);
        ImageBuffer x(64, 64);
        for (double& v : x.data) v = rng.uniform(0.05, 0.95);
        CoefficientMatrix star = random_theta(rng, 0.05);
        ImageBuffer y = apply_transform_unclamped(x, star);
        CoefficientMatrix fit = fit_least_squares(x, y);
        double max_err = 0.0;
        for (int i = 0; i < 30; ++i)
            max_err = std::max(max_err, std::fabs(fit.theta[i] - star.theta[i]));
        CHECK(max_err < 1e-6);
    }
}

TEST_CASE("least squares matches a frozen NumPy lstsq solution") {
    // 16 pixels drawn once (uniform [0.1,0.9], NumPy RandomState(42)),
    // target = input^0.8 per channel; theta rows and residual frozen from
    // numpy.linalg.lstsq on the same system.
    const double xv[48] = {
        0.39963209507788999, 0.86057144512793293, 0.68559515344912403, 0.57892678735762926,
        0.22481491235394924, 0.22479561626896213, 0.14646688973455957, 0.79294091661994814,
        0.58089200939456709, 0.66645806223683635, 0.11646759543664197, 0.87592788172959546,
        0.76595411264033741, 0.26987128854262094, 0.24545997376568052, 0.24672360788274705,
        0.34339379436763018, 0.51980514530579025, 0.44555601491369268, 0.33298331215843358,
        0.58948231577790355, 0.21159508852163347, 0.33371571882817452, 0.39308947463495336,
        0.46485598737362877, 0.72814076911441095, 0.25973902572668783, 0.51138755073088926,
        0.57393165508963395, 0.13716033017599819, 0.58603588152115071, 0.23641929894983324,
        0.15204127438822362, 0.85910842980266666, 0.87250562645964747, 0.74671787849316895,
        0.34369101533869656, 0.17813769120510711, 0.64738642120972556, 0.45212199499168104,
        0.19763058787582308, 0.49614152808901613, 0.12751081689217472, 0.82745632166302563,
        0.30702398528001351, 0.63001782748318558, 0.34936886087152874, 0.51605441694224863};
    ImageBuffer x(4, 4);
    std::copy(std::begin(xv), std::end(xv), x.data.begin());
    ImageBuffer y(4, 4);
    for (size_t i = 0; i < x.data.size(); ++i) y.data[i] = std::pow(x.data[i], 0.8);

    CoefficientMatrix fit = fit_least_squares(x, y);
    CHECK(fit.at(0, 0) == doctest::Approx(0.143449645534).epsilon(1e-7));
    CHECK(fit.at(0, 1) == doctest::Approx(-0.005437262011).scale(1).epsilon(1e-7));
    CHECK(fit.at(0, 2) == doctest::Approx(-0.008679627954).scale(1).epsilon(1e-7));
    CHECK(fit.at(9, 0) == doctest::Approx(0.055033238358).epsilon(1e-7));
    CHECK(fit.at(9, 1) == doctest::Approx(0.058689217712).epsilon(1e-7));
    CHECK(fit.at(9, 2) == doctest::Approx(0.055321332070).epsilon(1e-7));

    ImageBuffer pred = apply_transform_unclamped(x, fit);
    double rms = 0.0;
    for (size_t i = 0; i < pred.data.size(); ++i) {
        double d = pred.data[i] - y.data[i];
        rms += d * d;
    }
    rms = std::sqrt(rms / static_cast<double>(pred.data.size()));
    CHECK(rms == doctest::Approx(8.945784659820e-04).epsilon(1e-6));
}

TEST_CASE("fit is a fixed point: refitting the fitted output returns the same theta") {
    Rng rng(77);
    ImageBuffer x(32, 32);
    for (double& v : x.data) v = rng.uniform(0.05, 0.95);
    CoefficientMatrix star = random_theta(rng, 0.04);
    ImageBuffer y = apply_transform_unclamped(x, star);
    CoefficientMatrix fit1 = fit_least_squares(x, y);
    CoefficientMatrix fit2 = fit_least_squares(x, apply_transform_unclamped(x, fit1));
    for (int i = 0; i < 30; ++i) CHECK(std::fabs(fit1.theta[i] - fit2.theta[i]) < 1e-9);
}

TEST_CASE("identical input and target fit to the zero matrix") {
    Rng rng(78);
    ImageBuffer x(16, 16);
    for (double& v : x.data) v = rng.uniform(0.05, 0.95);
    CoefficientMatrix fit = fit_least_squares(x, x);
    for (double t : fit.theta) CHECK(std::fabs(t) < 1e-9);
}

TEST_CASE("constant image makes the fit rank-deficient unless ridge is used") {
    ImageBuffer x(8, 8, 0.5);
    ImageBuffer y(8, 8, 0.6);
    CHECK_THROWS_AS(fit_least_squares(x, y), NumericError);
    CoefficientMatrix ridge = fit_least_squares(x, y, 1e-6);
    for (double t : ridge.theta) CHECK(std::isfinite(t));
    ImageBuffer pred = apply_transform_unclamped(x, ridge);
    CHECK(pred.pixel(3, 3)[0] == doctest::Approx(0.6).epsilon(1e-3));
}

TEST_CASE("well-spread images have a bounded basis Gram condition number") {
    Rng rng(80);
    ImageBuffer x(64, 64);
    for (double& v : x.data) v = rng.uniform(0.02, 0.98);
    double cond = basis_gram_condition(x);
    CHECK(cond > 1.0);
    CHECK(cond < 1e6);
}

TEST_CASE("theta save/load round trips through the text format") {
    testutil::TempDir tmp("theta-io");
    Rng rng(81);
    CoefficientMatrix theta = random_theta(rng, 0.7);
    save_theta(theta, tmp.str("t.theta"));
    CoefficientMatrix back = load_theta(tmp.str("t.theta"));
    for (int i = 0; i < 30; ++i)
        CHECK(back.theta[i] == doctest::Approx(theta.theta[i]).scale(1).epsilon(1e-10));
}

TEST_CASE("malformed theta files are rejected") {
    testutil::TempDir tmp("theta-bad");
    {
        std::ofstream f(tmp.str("short.theta"));
        f << "0.1 0.2 0.3\n0.4 0.5\n";
    }
    CHECK_THROWS_AS(load_theta(tmp.str("short.theta")), IoError);
    CHECK_THROWS_AS(load_theta(tmp.str("missing.theta")), IoError);
    {
        std::ofstream f(tmp.str("junk.theta"));
        for (int i = 0; i < 10; ++i) f << "a b c\n";
    }
    CHECK_THROWS_AS(load_theta(tmp.str("junk.theta")), IoError);
}

TEST_CASE("fit is resolution independent for a consistent planted pair") {
    Rng rng(90);
    CoefficientMatrix star = random_theta(rng, 0.04);
    for (int side : {16, 48}) {
        ImageBuffer x(side, side);
        for (double& v : x.data) v = rng.uniform(0.05, 0.95);
        ImageBuffer y = apply_transform_unclamped(x, star);
        CoefficientMatrix fit = fit_least_squares(x, y);
        for (int i = 0; i < 30; ++i) CHECK(std::fabs(fit.theta[i] - star.theta[i]) < 1e-6);
    }
}

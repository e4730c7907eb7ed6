#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "enhance/color.hpp"
#include "enhance/dataset.hpp"
#include "enhance/imageio.hpp"
#include "test_util.hpp"

using namespace enhance;

namespace {

std::vector<std::string> make_ids(int n) {
    std::vector<std::string> ids;
    for (int i = 0; i < n; ++i) ids.push_back("img" + std::to_string(i));
    return ids;
}

double stddev(const ImageBuffer& img) {
    double mean = 0.0;
    for (double v : img.data) mean += v;
    mean /= static_cast<double>(img.data.size());
    double var = 0.0;
    for (double v : img.data) var += (v - mean) * (v - mean);
    return std::sqrt(var / static_cast<double>(img.data.size()));
}

}  // namespace

TEST_CASE("paired split is deterministic, disjoint, and complete") {
    auto a = make_paired_split(make_ids(20), 15, 7);
    auto b = make_paired_split(make_ids(20), 15, 7);
    CHECK(a.train_ids == b.train_ids);
    CHECK(a.test_ids == b.test_ids);
    CHECK(a.train_ids.size() == 15);
    CHECK(a.test_ids.size() == 5);

    std::set<std::string> all(a.train_ids.begin(), a.train_ids.end());
    all.insert(a.test_ids.begin(), a.test_ids.end());
    CHECK(all.size() == 20);

    auto c = make_paired_split(make_ids(20), 15, 8);
    CHECK(a.train_ids != c.train_ids);  // different seed reshuffles
}

TEST_CASE("unpaired split keeps X and Y id-disjoint") {
    auto s = make_unpaired_split(make_ids(30), 20, 3);
    CHECK(s.x_ids.size() == 10);
    CHECK(s.y_ids.size() == 10);
    CHECK(s.test_ids.size() == 10);
    std::set<std::string> all(s.x_ids.begin(), s.x_ids.end());
    for (const auto& id : s.y_ids) CHECK(all.insert(id).second);
    for (const auto& id : s.test_ids) CHECK(all.insert(id).second);
    CHECK(all.size() == 30);
}

TEST_CASE("unpaired split demands an even sample count") {
    CHECK_THROWS_AS(make_unpaired_split(make_ids(10), 7, 1), UsageError);
    CHECK_THROWS_AS(make_unpaired_split(make_ids(4), 6, 1), UsageError);
}

TEST_CASE("split manifests carry one id<TAB>role line per id") {
    testutil::TempDir tmp("split");
    auto s = make_paired_split(make_ids(6), 4, 1);
    write_split_manifest(s, tmp.str("m.tsv"));
    std::ifstream f(tmp.str("m.tsv"));
    std::string line;
    int trains = 0, tests = 0, lines = 0;
    while (std::getline(f, line)) {
        ++lines;
        auto tab = line.find('\t');
        REQUIRE(tab != std::string::npos);
        std::string role = line.substr(tab + 1);
        if (role == "train") ++trains;
        else if (role == "test") ++tests;
        else FAIL("unexpected role ", role);
    }
    CHECK(lines == 6);
    CHECK(trains == 4);
    CHECK(tests == 2);
}

TEST_CASE("procedural images are in range, colorful, and seed-deterministic") {
    Rng r1(5), r2(5), r3(6);
    ImageBuffer a = make_procedural_image(64, r1);
    ImageBuffer b = make_procedural_image(64, r2);
    ImageBuffer c = make_procedural_image(64, r3);
    CHECK(a.data == b.data);
    CHECK(a.data != c.data);
    for (double v : a.data) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
    CHECK(stddev(a) > 0.15);  // enough spread to condition the basis fit
}

TEST_CASE("procedural images condition the quadratic basis well") {
    Rng rng(9);
    ImageBuffer img = make_procedural_image(64, rng);
    CHECK(basis_gram_condition(img) < 1e6);
}

TEST_CASE("synthetic corpus recovers its planted theta from disk") {
    testutil::TempDir tmp("corpus");
    Rng trng(10);
    CoefficientMatrix star;
    for (double& t : star.theta) t = trng.uniform(-0.03, 0.03);
    auto corpus = make_synthetic_corpus(4, 64, star, 0.0, 11, tmp.str("c"));
    REQUIRE(corpus.input_paths.size() == 4);

    for (int i = 0; i < 4; ++i) {
        ImageBuffer x = load_image(corpus.input_paths[i]);
        ImageBuffer y = load_image(corpus.target_paths[i]);
        CoefficientMatrix fit = fit_least_squares(x, y);
        // both sides pass through the 16-bit grid once
        for (int t = 0; t < 30; ++t) CHECK(std::fabs(fit.theta[t] - star.theta[t]) < 5e-4);
    }

    CoefficientMatrix sidecar = load_theta(corpus.theta_path);
    for (int t = 0; t < 30; ++t)
        CHECK(sidecar.theta[t] == doctest::Approx(star.theta[t]).scale(1).epsilon(1e-10));

    // manifest enumerates exactly the written pairs
    std::ifstream mf(tmp.str("c") + "/manifest.tsv");
    int lines = 0;
    std::string line;
    while (std::getline(mf, line)) ++lines;
    CHECK(lines == 4);
}

TEST_CASE("target noise perturbs the corpus measurably") {
    testutil::TempDir tmp("noisy");
    CoefficientMatrix star;  // zero: target == input without noise
    auto corpus = make_synthetic_corpus(1, 32, star, 0.02, 12, tmp.str("n"));
    ImageBuffer x = load_image(corpus.input_paths[0]);
    ImageBuffer y = load_image(corpus.target_paths[0]);
    double mad = 0.0;
    for (size_t i = 0; i < x.data.size(); ++i) mad += std::fabs(x.data[i] - y.data[i]);
    mad /= static_cast<double>(x.data.size());
    CHECK(mad > 0.005);
    CHECK(mad < 0.05);
}

TEST_CASE("over-strong planted thetas are rejected instead of silently clamped") {
    testutil::TempDir tmp("strong");
    CoefficientMatrix star;
    for (int i = 0; i < 10; ++i) star.at(i, 0) = 0.06;  // column abs-sum 0.6
    CHECK_THROWS_AS(make_synthetic_corpus(1, 16, star, 0.0, 1, tmp.str("s")), UsageError);
}

TEST_CASE("corpus generation is deterministic in the seed") {
    testutil::TempDir tmp("det");
    CoefficientMatrix star;
    star.at(0, 0) = 0.02;
    auto c1 = make_synthetic_corpus(2, 32, star, 0.01, 77, tmp.str("a"));
    auto c2 = make_synthetic_corpus(2, 32, star, 0.01, 77, tmp.str("b"));
    for (int i = 0; i < 2; ++i) {
        CHECK(load_image(c1.input_paths[i]).data == load_image(c2.input_paths[i]).data);
        CHECK(load_image(c1.target_paths[i]).data == load_image(c2.target_paths[i]).data);
    }
}

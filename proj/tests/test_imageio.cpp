#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <fstream>

#include "enhance/imageio.hpp"
#include "test_util.hpp"

using namespace enhance;

namespace {

void write_bytes(const std::string& path, const std::vector<uint8_t>& bytes) {
    std::ofstream f(path, std::ios::binary);
    f.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

}  // namespace

TEST_CASE("a hand-written 1x1 P6 decodes to the expected normalized pixel") {
    testutil::TempDir tmp("ppm1");
    // magic, dims, maxval 255, then one RGB pixel (255, 128, 0)
    write_bytes(tmp.str("p.ppm"), {'P', '6', '\n', '1', ' ', '1', '\n', '2', '5', '5', '\n',
                                   255, 128, 0});
    ImageBuffer img = load_image(tmp.str("p.ppm"));
    REQUIRE(img.height == 1);
    REQUIRE(img.width == 1);
    CHECK(img.pixel(0, 0)[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(img.pixel(0, 0)[1] == doctest::Approx(128.0 / 255.0).epsilon(1e-12));
    CHECK(img.pixel(0, 0)[2] == doctest::Approx(0.0).scale(1));
}

TEST_CASE("PPM headers may contain comments") {
    testutil::TempDir tmp("ppmc");
    std::ofstream f(tmp.str("c.ppm"), std::ios::binary);
    f << "P6\n# a comment\n2 1\n# another\n255\n";
    const uint8_t px[6] = {10, 20, 30, 40, 50, 60};
    f.write(reinterpret_cast<const char*>(px), 6);
    f.close();
    ImageBuffer img = load_image(tmp.str("c.ppm"));
    REQUIRE(img.width == 2);
    CHECK(img.pixel(0, 1)[2] == doctest::Approx(60.0 / 255.0).epsilon(1e-12));
}

TEST_CASE("8-bit PNG round trip is exact on the 8-bit grid") {
    testutil::TempDir tmp("png8");
    Rng rng(1);
    ImageBuffer img(9, 7);
    for (double& v : img.data)
        v = std::floor(rng.uniform() * 255.0 + 0.5) / 255.0;  // snap to 8-bit grid
    save_image(img, tmp.str("a.png"));
    ImageBuffer back = load_image(tmp.str("a.png"));
    REQUIRE(back.same_shape(img));
    for (size_t i = 0; i < img.data.size(); ++i)
        CHECK(std::fabs(back.data[i] - img.data[i]) < 1e-12);
}

TEST_CASE("16-bit PNG round trip resolves better than 1e-4") {
    testutil::TempDir tmp("png16");
    Rng rng(2);
    ImageBuffer img = testutil::random_image(8, 8, rng);
    save_image(img, tmp.str("a.png"), 16);
    ImageBuffer back = load_image(tmp.str("a.png"));
    for (size_t i = 0; i < img.data.size(); ++i)
        CHECK(std::fabs(back.data[i] - img.data[i]) <= 0.5 / 65535.0 + 1e-12);
}

TEST_CASE("PPM round trip quantizes with round-half-up to 8 bits") {
    testutil::TempDir tmp("ppmrt");
    ImageBuffer img(1, 2);
    img.pixel(0, 0)[0] = 0.5;         // 127.5 -> 128
    img.pixel(0, 0)[1] = 1.2;         // clamps to 1 -> 255
    img.pixel(0, 0)[2] = -0.3;        // clamps to 0
    img.pixel(0, 1)[0] = 100.0 / 255.0;
    img.pixel(0, 1)[1] = 0.0;
    img.pixel(0, 1)[2] = 1.0;
    save_image(img, tmp.str("q.ppm"));
    ImageBuffer back = load_image(tmp.str("q.ppm"));
    CHECK(back.pixel(0, 0)[0] == doctest::Approx(128.0 / 255.0).epsilon(1e-12));
    CHECK(back.pixel(0, 0)[1] == 1.0);
    CHECK(back.pixel(0, 0)[2] == 0.0);
    CHECK(back.pixel(0, 1)[0] == doctest::Approx(100.0 / 255.0).epsilon(1e-12));
}

TEST_CASE("PNG and PPM loaders agree on the same 8-bit content") {
    testutil::TempDir tmp("xfmt");
    Rng rng(3);
    ImageBuffer img(6, 5);
    for (double& v : img.data) v = std::floor(rng.uniform() * 255.0 + 0.5) / 255.0;
    save_image(img, tmp.str("a.png"));
    save_image(img, tmp.str("a.ppm"));
    ImageBuffer p1 = load_image(tmp.str("a.png"));
    ImageBuffer p2 = load_image(tmp.str("a.ppm"));
    CHECK(p1.data == p2.data);
}

TEST_CASE("alpha-carrying PNGs are rejected with the alpha category") {
    testutil::TempDir tmp("alpha");
    // pre-built valid 1x1 RGBA PNG (our writer never emits alpha)
    static const uint8_t rgba_png[] = {
        0x89, 0x50, 0x4e, 0x47, 0x0d, 0x0a, 0x1a, 0x0a, 0x00, 0x00, 0x00, 0x0d, 0x49, 0x48,
        0x44, 0x52, 0x00, 0x00, 0x00, 0x01, 0x00, 0x00, 0x00, 0x01, 0x08, 0x06, 0x00, 0x00,
        0x00, 0x1f, 0x15, 0xc4, 0x89, 0x00, 0x00, 0x00, 0x0d, 0x49, 0x44, 0x41, 0x54, 0x78,
        0x9c, 0x63, 0xf8, 0xcf, 0xc0, 0xd0, 0x00, 0x00, 0x04, 0x81, 0x01, 0x80, 0x2c, 0x55,
        0xce, 0xb0, 0x00, 0x00, 0x00, 0x00, 0x49, 0x45, 0x4e, 0x44, 0xae, 0x42, 0x60, 0x82};
    write_bytes(tmp.str("rgba.png"), {std::begin(rgba_png), std::end(rgba_png)});
    try {
        load_image(tmp.str("rgba.png"));
        FAIL("expected ImageIoError");
    } catch (const ImageIoError& e) {
        CHECK(e.category == ImageIoError::Category::AlphaUnsupported);
    }
}

TEST_CASE("error categories: missing file, junk bytes, unknown extension") {
    testutil::TempDir tmp("cats");
    try {
        load_image(tmp.str("absent.png"));
        FAIL("expected ImageIoError");
    } catch (const ImageIoError& e) {
        CHECK(e.category == ImageIoError::Category::FileSystem);
    }

    write_bytes(tmp.str("junk.png"), {'n', 'o', 't', 'a', 'p', 'n', 'g', '!'});
    try {
        load_image(tmp.str("junk.png"));
        FAIL("expected ImageIoError");
    } catch (const ImageIoError& e) {
        CHECK(e.category == ImageIoError::Category::UnsupportedFormat);
    }

    write_bytes(tmp.str("file.gif"), {'G', 'I', 'F'});
    try {
        load_image(tmp.str("file.gif"));
        FAIL("expected ImageIoError");
    } catch (const ImageIoError& e) {
        CHECK(e.category == ImageIoError::Category::UnsupportedFormat);
    }
}

TEST_CASE("truncated PPM data is reported as corrupt") {
    testutil::TempDir tmp("trunc");
    write_bytes(tmp.str("t.ppm"),
                {'P', '6', '\n', '2', ' ', '2', '\n', '2', '5', '5', '\n', 1, 2, 3});
    try {
        load_image(tmp.str("t.ppm"));
        FAIL("expected ImageIoError");
    } catch (const ImageIoError& e) {
        CHECK(e.category == ImageIoError::Category::Corrupt);
    }
}

TEST_CASE("supported-extension probe is case insensitive and extension based") {
    CHECK(has_supported_extension("x.png"));
    CHECK(has_supported_extension("x.PNG"));
    CHECK(has_supported_extension("dir/with.dots/y.ppm"));
    CHECK_FALSE(has_supported_extension("x.jpg"));
    CHECK_FALSE(has_supported_extension("noext"));
}

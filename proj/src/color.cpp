#include "enhance/color.hpp"

#include <algorithm>
#include <cmath>

namespace enhance {

namespace {

// D65 reference white (2-degree observer).
constexpr double kXn = 0.95047;
constexpr double kYn = 1.0;
constexpr double kZn = 1.08883;

// sRGB (linear) -> XYZ, IEC 61966-2-1.
constexpr double kM[9] = {
    0.4124564, 0.3575761, 0.1804375,
    0.2126729, 0.7151522, 0.0721750,
    0.0193339, 0.1191920, 0.9503041,
};

constexpr double kEps = 216.0 / 24389.0;   // (6/29)^3
constexpr double kKappa = 24389.0 / 27.0;  // (29/3)^3

double lab_f(double t) {
    return t > kEps ? std::cbrt(t) : (kKappa * t + 16.0) / 116.0;
}

// One-sided derivative from the cube-root branch at the breakpoint.
double lab_f_deriv(double t) {
    if (t >= kEps) {
        double c = std::cbrt(t);
        return 1.0 / (3.0 * c * c);
    }
    return kKappa / 116.0;
}

double srgb_decode_deriv(double c) {
    if (c >= 0.04045) {
        return (2.4 / 1.055) * std::pow((c + 0.055) / 1.055, 1.4);
    }
    return 1.0 / 12.92;
}

}  // namespace

double srgb_to_linear(double c) {
    if (c <= 0.04045) return c / 12.92;
    return std::pow((c + 0.055) / 1.055, 2.4);
}

double linear_to_srgb(double c) {
    if (c <= 0.0031308) return 12.92 * c;
    return 1.055 * std::pow(c, 1.0 / 2.4) - 0.055;
}

LabPixel srgb_to_lab(double r, double g, double b) {
    double lr = srgb_to_linear(r);
    double lg = srgb_to_linear(g);
    double lb = srgb_to_linear(b);
    double x = kM[0] * lr + kM[1] * lg + kM[2] * lb;
    double y = kM[3] * lr + kM[4] * lg + kM[5] * lb;
    double z = kM[6] * lr + kM[7] * lg + kM[8] * lb;
    double fx = lab_f(x / kXn);
    double fy = lab_f(y / kYn);
    double fz = lab_f(z / kZn);
    LabPixel out;
    out.l = 116.0 * fy - 16.0;
    out.a = 500.0 * (fx - fy);
    out.b = 200.0 * (fy - fz);
    return out;
}

double lab_delta_e(const LabPixel& x, const LabPixel& y) {
    double dl = x.l - y.l;
    double da = x.a - y.a;
    double db = x.b - y.b;
    return std::sqrt(dl * dl + da * da + db * db);
}

std::array<double, 9> srgb_to_lab_jacobian(double r, double g, double b) {
    double srgb[3] = {r, g, b};
    double lin[3];
    double dlin[3];
    for (int i = 0; i < 3; ++i) {
        lin[i] = srgb_to_linear(srgb[i]);
        dlin[i] = srgb_decode_deriv(srgb[i]);
    }
    double wn[3] = {kXn, kYn, kZn};
    double xyz[3] = {0, 0, 0};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) xyz[i] += kM[i * 3 + j] * lin[j];

    // d f_i / d rgb_j
    double df[9];
    for (int i = 0; i < 3; ++i) {
        double fp = lab_f_deriv(xyz[i] / wn[i]) / wn[i];
        for (int j = 0; j < 3; ++j) df[i * 3 + j] = fp * kM[i * 3 + j] * dlin[j];
    }

    std::array<double, 9> jac{};
    for (int j = 0; j < 3; ++j) {
        jac[0 * 3 + j] = 116.0 * df[1 * 3 + j];
        jac[1 * 3 + j] = 500.0 * (df[0 * 3 + j] - df[1 * 3 + j]);
        jac[2 * 3 + j] = 200.0 * (df[1 * 3 + j] - df[2 * 3 + j]);
    }
    return jac;
}

namespace detail {

double mean_lab_l2_serial(const ImageBuffer& a, const ImageBuffer& b) {
    if (!a.same_shape(b)) throw ShapeError("mean_lab_l2: image dimensions differ");
    // Same row-partial reduction order as the parallel kernel, so the two
    // agree bit-for-bit at any thread count.
    double sum = 0.0;
    for (int y = 0; y < a.height; ++y) {
        double s = 0.0;
        for (int x = 0; x < a.width; ++x) {
            const double* pa = a.pixel(y, x);
            const double* pb = b.pixel(y, x);
            s += lab_delta_e(srgb_to_lab(pa[0], pa[1], pa[2]),
                             srgb_to_lab(pb[0], pb[1], pb[2]));
        }
        sum += s;
    }
    return sum / static_cast<double>(a.pixel_count());
}

}  // namespace detail

double mean_lab_l2(const ImageBuffer& a, const ImageBuffer& b) {
    if (!a.same_shape(b)) throw ShapeError("mean_lab_l2: image dimensions differ");
    // Per-row partial sums accumulated in row order: bit-deterministic for
    // any thread count.
    std::vector<double> row_sums(a.height, 0.0);
#pragma omp parallel for schedule(static)
    for (int y = 0; y < a.height; ++y) {
        double s = 0.0;
        for (int x = 0; x < a.width; ++x) {
            const double* pa = a.pixel(y, x);
            const double* pb = b.pixel(y, x);
            s += lab_delta_e(srgb_to_lab(pa[0], pa[1], pa[2]),
                             srgb_to_lab(pb[0], pb[1], pb[2]));
        }
        row_sums[y] = s;
    }
    double sum = 0.0;
    for (double s : row_sums) sum += s;
    return sum / static_cast<double>(a.pixel_count());
}

}  // namespace enhance

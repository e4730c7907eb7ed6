#pragma once

#include <array>

#include "enhance/image.hpp"

namespace enhance {

struct LabPixel {
    double l = 0.0;  // [0,100]
    double a = 0.0;
    double b = 0.0;
};

// IEC 61966-2-1 piecewise transfer functions.
double srgb_to_linear(double c);
double linear_to_srgb(double c);

// sRGB [0,1] channels -> CIELab under D65 / 2-degree observer.
LabPixel srgb_to_lab(double r, double g, double b);

// CIE76 delta-E: Euclidean distance in Lab.
double lab_delta_e(const LabPixel& x, const LabPixel& y);

// Mean per-pixel delta-E between two same-shaped images.
double mean_lab_l2(const ImageBuffer& a, const ImageBuffer& b);

// Analytic Jacobian d(L,a,b)/d(r,g,b) of the full sRGB->Lab chain.
// At the piecewise breakpoints the power/cube-root branch is used.
// row-major: jac[row*3+col], row in {L,a,b}, col in {r,g,b}.
std::array<double, 9> srgb_to_lab_jacobian(double r, double g, double b);

namespace detail {
// Serial reference for mean_lab_l2; the public function uses a
// deterministic row-partitioned reduction.
double mean_lab_l2_serial(const ImageBuffer& a, const ImageBuffer& b);
}  // namespace detail

}  // namespace enhance

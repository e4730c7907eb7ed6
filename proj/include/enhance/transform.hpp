#pragma once

#include <array>
#include <string>

#include "enhance/image.hpp"

namespace enhance {

// Quadratic color basis: [R, G, B, R^2, G^2, B^2, R*G, G*B, B*R, 1].
inline constexpr int kBasisSize = 10;

using ColorBasisVector = std::array<double, kBasisSize>;

ColorBasisVector color_basis(double r, double g, double b);

// 10x3 coefficient matrix; row i = basis term i, column j = output channel j.
// The zero matrix is the identity element of the residual transform.
struct CoefficientMatrix {
    std::array<double, kBasisSize * 3> theta{};

    double& at(int row, int col) { return theta[row * 3 + col]; }
    double at(int row, int col) const { return theta[row * 3 + col]; }

    bool all_finite() const;
    static CoefficientMatrix zero() { return CoefficientMatrix{}; }
};

// p_out = theta^T V(p) + p, per pixel, clamped to [0,1].
ImageBuffer apply_transform(const ImageBuffer& x, const CoefficientMatrix& theta);

// Training-time variant: no final clamp.
ImageBuffer apply_transform_unclamped(const ImageBuffer& x, const CoefficientMatrix& theta);

// d(loss)/d(theta[i][j]) = sum over pixels grad_out[pixel][j] * V(pixel)[i].
CoefficientMatrix transform_gradients(const ImageBuffer& x, const ImageBuffer& grad_out);

// Gradient of the (unclamped) transform with respect to its input image:
// chains grad_out through d(p_out)/d(p_in) = I + theta^T dV/dp per pixel.
ImageBuffer transform_input_gradients(const ImageBuffer& x, const CoefficientMatrix& theta,
                                      const ImageBuffer& grad_out);

// Least-squares fit of theta minimizing ||theta^T V(p) + p - y(p)||^2 +
// ridge*||theta||_F^2 via normal equations on the 10x10 Gram matrix.
// Throws NumericError on a rank-deficient Gram matrix with ridge == 0,
// naming the deficient dimension count.
CoefficientMatrix fit_least_squares(const ImageBuffer& x, const ImageBuffer& y,
                                    double ridge = 0.0);

// Condition number estimate of the basis Gram matrix of an image.
double basis_gram_condition(const ImageBuffer& x);

// Plain-text serialization: 10 lines x 3 decimal floats, basis row order.
void save_theta(const CoefficientMatrix& theta, const std::string& path);
CoefficientMatrix load_theta(const std::string& path);

namespace detail {
// Serial reference implementations kept for testing; the public entry
// points run the OpenMP kernels and must match them bit-for-bit.
ImageBuffer apply_transform_serial(const ImageBuffer& x, const CoefficientMatrix& theta,
                                   bool clamp);
}  // namespace detail

}  // namespace enhance

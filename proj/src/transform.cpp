#include "enhance/transform.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "enhance/errors.hpp"

namespace enhance {

ColorBasisVector color_basis(double r, double g, double b) {
    return {r, g, b, r * r, g * g, b * b, r * g, g * b, b * r, 1.0};
}

bool CoefficientMatrix::all_finite() const {
    for (double v : theta)
        if (!std::isfinite(v)) return false;
    return true;
}

namespace {

// Hot loop body shared by the serial and parallel paths so both are
// bit-identical per pixel.
inline void transform_pixel(const double* p, const double* th, double* q, bool clamp) {
    double r = p[0], g = p[1], b = p[2];
    double v[kBasisSize] = {r, g, b, r * r, g * g, b * b, r * g, g * b, b * r, 1.0};
    double o0 = r, o1 = g, o2 = b;
    for (int i = 0; i < kBasisSize; ++i) {
        o0 += th[i * 3 + 0] * v[i];
        o1 += th[i * 3 + 1] * v[i];
        o2 += th[i * 3 + 2] * v[i];
    }
    if (clamp) {
        o0 = std::clamp(o0, 0.0, 1.0);
        o1 = std::clamp(o1, 0.0, 1.0);
        o2 = std::clamp(o2, 0.0, 1.0);
    }
    q[0] = o0;
    q[1] = o1;
    q[2] = o2;
}

ImageBuffer apply_impl(const ImageBuffer& x, const CoefficientMatrix& theta, bool clamp) {
    if (!theta.all_finite()) throw NumericError("apply_transform: non-finite coefficients");
    ImageBuffer out(x.height, x.width);
    const double* th = theta.theta.data();
#pragma omp parallel for schedule(static)
    for (int y = 0; y < x.height; ++y) {
        const double* src = x.pixel(y, 0);
        double* dst = out.pixel(y, 0);
        for (int col = 0; col < x.width; ++col)
            transform_pixel(src + col * 3, th, dst + col * 3, clamp);
    }
    return out;
}

}  // namespace

ImageBuffer apply_transform(const ImageBuffer& x, const CoefficientMatrix& theta) {
    return apply_impl(x, theta, true);
}

ImageBuffer apply_transform_unclamped(const ImageBuffer& x, const CoefficientMatrix& theta) {
    return apply_impl(x, theta, false);
}

namespace detail {
ImageBuffer apply_transform_serial(const ImageBuffer& x, const CoefficientMatrix& theta,
                                   bool clamp) {
    if (!theta.all_finite()) throw NumericError("apply_transform: non-finite coefficients");
    ImageBuffer out(x.height, x.width);
    const double* th = theta.theta.data();
    size_t n = x.pixel_count();
    for (size_t i = 0; i < n; ++i)
        transform_pixel(x.data.data() + i * 3, th, out.data.data() + i * 3, clamp);
    return out;
}
}  // namespace detail

CoefficientMatrix transform_gradients(const ImageBuffer& x, const ImageBuffer& grad_out) {
    if (!x.same_shape(grad_out)) throw ShapeError("transform_gradients: shape mismatch");
    CoefficientMatrix g;
    size_t n = x.pixel_count();
    for (size_t k = 0; k < n; ++k) {
        const double* p = x.data.data() + k * 3;
        const double* go = grad_out.data.data() + k * 3;
        ColorBasisVector v = color_basis(p[0], p[1], p[2]);
        for (int i = 0; i < kBasisSize; ++i)
            for (int j = 0; j < 3; ++j) g.theta[i * 3 + j] += go[j] * v[i];
    }
    return g;
}

ImageBuffer transform_input_gradients(const ImageBuffer& x, const CoefficientMatrix& theta,
                                      const ImageBuffer& grad_out) {
    if (!x.same_shape(grad_out)) throw ShapeError("transform_input_gradients: shape mismatch");
    ImageBuffer grad_in(x.height, x.width);
    size_t n = x.pixel_count();
    for (size_t k = 0; k < n; ++k) {
        const double* p = x.data.data() + k * 3;
        const double* go = grad_out.data.data() + k * 3;
        double r = p[0], g = p[1], b = p[2];
        // dV/dp rows follow the basis order.
        double dv[kBasisSize][3] = {
            {1, 0, 0}, {0, 1, 0}, {0, 0, 1},
            {2 * r, 0, 0}, {0, 2 * g, 0}, {0, 0, 2 * b},
            {g, r, 0}, {0, b, g}, {b, 0, r},
            {0, 0, 0},
        };
        double* gi = grad_in.data.data() + k * 3;
        for (int c = 0; c < 3; ++c) gi[c] = go[c];  // identity part of the residual
        for (int i = 0; i < kBasisSize; ++i) {
            double w = 0.0;
            for (int j = 0; j < 3; ++j) w += theta.at(i, j) * go[j];
            for (int c = 0; c < 3; ++c) gi[c] += w * dv[i][c];
        }
    }
    return grad_in;
}

namespace {

Eigen::Matrix<double, kBasisSize, kBasisSize> basis_gram(const ImageBuffer& x) {
    Eigen::Matrix<double, kBasisSize, kBasisSize> gram;
    gram.setZero();
    size_t n = x.pixel_count();
    for (size_t k = 0; k < n; ++k) {
        const double* p = x.data.data() + k * 3;
        ColorBasisVector v = color_basis(p[0], p[1], p[2]);
        for (int i = 0; i < kBasisSize; ++i)
            for (int j = i; j < kBasisSize; ++j) gram(i, j) += v[i] * v[j];
    }
    for (int i = 0; i < kBasisSize; ++i)
        for (int j = 0; j < i; ++j) gram(i, j) = gram(j, i);
    return gram;
}

}  // namespace

CoefficientMatrix fit_least_squares(const ImageBuffer& x, const ImageBuffer& y, double ridge) {
    if (!x.same_shape(y)) throw ShapeError("fit_least_squares: shape mismatch");
    auto gram = basis_gram(x);
    Eigen::Matrix<double, kBasisSize, 3> rhs;
    rhs.setZero();
    size_t n = x.pixel_count();
    for (size_t k = 0; k < n; ++k) {
        const double* p = x.data.data() + k * 3;
        const double* t = y.data.data() + k * 3;
        ColorBasisVector v = color_basis(p[0], p[1], p[2]);
        for (int i = 0; i < kBasisSize; ++i)
            for (int j = 0; j < 3; ++j) rhs(i, j) += v[i] * (t[j] - p[j]);
    }
    if (ridge == 0.0) {
        Eigen::FullPivLU<Eigen::Matrix<double, kBasisSize, kBasisSize>> lu(gram);
        lu.setThreshold(1e-10);
        int rank = static_cast<int>(lu.rank());
        if (rank < kBasisSize) {
            throw NumericError("fit_least_squares: rank-deficient basis Gram matrix (" +
                               std::to_string(kBasisSize - rank) +
                               " deficient dimensions); supply ridge > 0");
        }
        Eigen::Matrix<double, kBasisSize, 3> sol = lu.solve(rhs);
        CoefficientMatrix out;
        for (int i = 0; i < kBasisSize; ++i)
            for (int j = 0; j < 3; ++j) out.at(i, j) = sol(i, j);
        return out;
    }
    auto reg = gram;
    for (int i = 0; i < kBasisSize; ++i) reg(i, i) += ridge;
    Eigen::Matrix<double, kBasisSize, 3> sol = reg.ldlt().solve(rhs);
    CoefficientMatrix out;
    for (int i = 0; i < kBasisSize; ++i)
        for (int j = 0; j < 3; ++j) out.at(i, j) = sol(i, j);
    return out;
}

double basis_gram_condition(const ImageBuffer& x) {
    auto gram = basis_gram(x);
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, kBasisSize, kBasisSize>> es(gram);
    double lo = es.eigenvalues().minCoeff();
    double hi = es.eigenvalues().maxCoeff();
    if (lo <= 0.0) return std::numeric_limits<double>::infinity();
    return hi / lo;
}

void save_theta(const CoefficientMatrix& theta, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw IoError("save_theta: cannot open " + path);
    char buf[96];
    for (int i = 0; i < kBasisSize; ++i) {
        std::snprintf(buf, sizeof(buf), "%.12g %.12g %.12g\n", theta.at(i, 0), theta.at(i, 1),
                      theta.at(i, 2));
        f << buf;
    }
    if (!f) throw IoError("save_theta: write failed for " + path);
}

CoefficientMatrix load_theta(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("load_theta: cannot open " + path);
    CoefficientMatrix theta;
    for (int i = 0; i < kBasisSize; ++i) {
        std::string line;
        if (!std::getline(f, line))
            throw IoError("load_theta: expected 10 rows in " + path);
        std::istringstream ss(line);
        for (int j = 0; j < 3; ++j) {
            double v;
            if (!(ss >> v)) throw IoError("load_theta: malformed row " + std::to_string(i + 1));
            theta.at(i, j) = v;
        }
    }
    if (!theta.all_finite()) throw NumericError("load_theta: non-finite coefficient");
    return theta;
}

}  // namespace enhance

#pragma once

#include <cstdint>
#include <string>

#include "enhance/nn.hpp"

namespace enhance {

// Central finite-difference verification (h = 1e-5) of analytic gradients.
// The oracle only ever calls forward passes, so it is independent of the
// backward implementations it checks.
struct GradCheckResult {
    double max_rel_err = 0.0;
    int cases = 0;
    bool passed(double tol = 1e-4) const { return cases > 0 && max_rel_err < tol; }
};

GradCheckResult gradcheck_layer(nn::LayerKind kind, uint64_t seed, int cases);

// Tiny composed network: conv+bn+lrelu+conv+bn+lrelu+pool+linear on 4x4 input.
GradCheckResult gradcheck_network(uint64_t seed, int cases);

// d(loss)/d(theta) of the quadratic transform against finite differences.
GradCheckResult gradcheck_transform(uint64_t seed, int cases);
// d(transform)/d(input image) against finite differences.
GradCheckResult gradcheck_transform_input(uint64_t seed, int cases);

// Lab-loss gradient (paired_loss) against finite differences.
GradCheckResult gradcheck_lab_loss(uint64_t seed, int cases);

}  // namespace enhance

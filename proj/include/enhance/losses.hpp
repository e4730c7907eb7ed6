#pragma once

#include <utility>

#include "enhance/image.hpp"

namespace enhance {

// Mean per-pixel CIELab delta-E between pred (possibly out of [0,1]) and
// target, with the analytic gradient w.r.t. pred. Pixels with delta-E below
// 1e-8 contribute zero gradient (sqrt singularity guard).
struct LabLoss {
    double loss = 0.0;
    ImageBuffer grad;  // d loss / d pred
};
LabLoss paired_loss(const ImageBuffer& pred, const ImageBuffer& target);

// Non-saturating GAN objectives on raw discriminator logits.
// Per-sample means:
//   disc loss = mean softplus(-z_real) + mean softplus(z_fake)
//   gen  loss = mean softplus(-z_fake)
struct GanLossParts {
    double disc_loss = 0.0;
    double gen_loss = 0.0;
    std::vector<double> grad_real;      // d disc_loss / d z_real
    std::vector<double> grad_fake;      // d disc_loss / d z_fake
    std::vector<double> grad_gen_fake;  // d gen_loss / d z_fake
};
GanLossParts gan_losses(const std::vector<double>& real_logits,
                        const std::vector<double>& fake_logits);

// alpha*(L_cycleX + L_cycleY) + L_GAN(G_X) + L_GAN(G_Y); no identity term.
double total_phase1_loss(double cycle_x, double cycle_y, double gan_gx, double gan_gy,
                         double alpha);

}  // namespace enhance

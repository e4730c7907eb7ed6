#include "enhance/losses.hpp"

#include <cmath>

#include "enhance/color.hpp"
#include "enhance/errors.hpp"

namespace enhance {

LabLoss paired_loss(const ImageBuffer& pred, const ImageBuffer& target) {
    if (!pred.same_shape(target)) throw ShapeError("paired_loss: shape mismatch");
    LabLoss out;
    out.grad = ImageBuffer(pred.height, pred.width, 0.0);
    size_t n = pred.pixel_count();
    double inv_n = 1.0 / static_cast<double>(n);
    double total = 0.0;
    for (size_t k = 0; k < n; ++k) {
        const double* pp = pred.data.data() + k * 3;
        const double* pt = target.data.data() + k * 3;
        LabPixel lp = srgb_to_lab(pp[0], pp[1], pp[2]);
        LabPixel lt = srgb_to_lab(pt[0], pt[1], pt[2]);
        double d[3] = {lp.l - lt.l, lp.a - lt.a, lp.b - lt.b};
        double de = std::sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]);
        total += de;
        if (de < 1e-8) continue;
        auto jac = srgb_to_lab_jacobian(pp[0], pp[1], pp[2]);
        double* g = out.grad.data.data() + k * 3;
        // d de / d rgb = J^T (lab_diff / de)
        for (int c = 0; c < 3; ++c) {
            double acc = 0.0;
            for (int r = 0; r < 3; ++r) acc += jac[r * 3 + c] * d[r];
            g[c] = inv_n * acc / de;
        }
    }
    out.loss = total * inv_n;
    return out;
}

namespace {
double softplus(double z) {
    // stable: log(1 + e^z)
    if (z > 30.0) return z;
    if (z < -30.0) return std::exp(z);
    return std::log1p(std::exp(z));
}
double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }
}  // namespace

GanLossParts gan_losses(const std::vector<double>& real_logits,
                        const std::vector<double>& fake_logits) {
    GanLossParts out;
    size_t nr = real_logits.size();
    size_t nf = fake_logits.size();
    out.grad_real.resize(nr);
    out.grad_fake.resize(nf);
    out.grad_gen_fake.resize(nf);
    double inv_nr = nr ? 1.0 / static_cast<double>(nr) : 0.0;
    double inv_nf = nf ? 1.0 / static_cast<double>(nf) : 0.0;
    for (size_t i = 0; i < nr; ++i) {
        out.disc_loss += softplus(-real_logits[i]) * inv_nr;
        out.grad_real[i] = -(1.0 - sigmoid(real_logits[i])) * inv_nr;
    }
    for (size_t i = 0; i < nf; ++i) {
        out.disc_loss += softplus(fake_logits[i]) * inv_nf;
        out.grad_fake[i] = sigmoid(fake_logits[i]) * inv_nf;
        out.gen_loss += softplus(-fake_logits[i]) * inv_nf;
        out.grad_gen_fake[i] = -(1.0 - sigmoid(fake_logits[i])) * inv_nf;
    }
    return out;
}

double total_phase1_loss(double cycle_x, double cycle_y, double gan_gx, double gan_gy,
                         double alpha) {
    if (alpha < 0.0) throw NumericError("total_phase1_loss: alpha must be >= 0");
    return alpha * cycle_x + alpha * cycle_y + gan_gx + gan_gy;
}

}  // namespace enhance

#include "enhance/optim.hpp"

#include <cmath>
#include <unordered_set>

namespace enhance::nn {

void Adam::step(const std::vector<std::vector<ParamPtr>>& param_groups, double lr) {
    std::unordered_set<Param*> seen;
    for (const auto& group : param_groups) {
        for (const auto& p : group) {
            if (!p->trainable) continue;
            if (!seen.insert(p.get()).second) continue;  // shared tensor: update once
            auto& slot = slots_[p.get()];
            if (slot.m.values.empty()) {
                slot.m = Tensor(p->value.shape);
                slot.v = Tensor(p->value.shape);
            }
            slot.t += 1;
            double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(slot.t));
            double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(slot.t));
            for (size_t i = 0; i < p->value.values.size(); ++i) {
                double g = p->grad.values[i];
                slot.m.values[i] = beta1_ * slot.m.values[i] + (1.0 - beta1_) * g;
                slot.v.values[i] = beta2_ * slot.v.values[i] + (1.0 - beta2_) * g * g;
                double mhat = slot.m.values[i] / bc1;
                double vhat = slot.v.values[i] / bc2;
                p->value.values[i] -= lr * mhat / (std::sqrt(vhat) + eps_);
            }
        }
    }
}

void Adam::step(const std::vector<ParamPtr>& params, double lr) {
    step(std::vector<std::vector<ParamPtr>>{params}, lr);
}

double lr_schedule(const PairedLrSchedule& cfg, int epoch) {
    if (epoch >= cfg.end_epoch) return cfg.lr_end;
    int total_steps = cfg.end_epoch / cfg.step_epochs;
    int step = epoch / cfg.step_epochs;
    if (step >= total_steps) return cfg.lr_end;
    return cfg.lr0 - (cfg.lr0 - cfg.lr_end) * static_cast<double>(step) / total_steps;
}

double lr_schedule(const UnpairedLrSchedule& cfg, int epoch) {
    if (epoch < cfg.hold_epochs) return cfg.lr0;
    if (epoch >= cfg.total_epochs) return 0.0;
    double frac = static_cast<double>(epoch - cfg.hold_epochs) /
                  static_cast<double>(cfg.total_epochs - cfg.hold_epochs);
    return cfg.lr0 * (1.0 - frac);
}

}  // namespace enhance::nn

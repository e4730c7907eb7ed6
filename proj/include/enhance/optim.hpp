#pragma once

#include <unordered_map>
#include <vector>

#include "enhance/nn.hpp"

namespace enhance::nn {

// Standard Adam with bias correction. Non-trainable registry entries
// (batchnorm running stats) are never touched. Shared parameters that
// appear in several registries are updated exactly once per step.
class Adam {
public:
    explicit Adam(double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
        : beta1_(beta1), beta2_(beta2), eps_(eps) {}

    void step(const std::vector<ParamPtr>& params, double lr);
    void step(const std::vector<std::vector<ParamPtr>>& param_groups, double lr);

private:
    struct Slot {
        Tensor m, v;
        long t = 0;
    };
    double beta1_, beta2_, eps_;
    std::unordered_map<Param*, Slot> slots_;
};

struct PairedLrSchedule {
    double lr0 = 9e-4;
    double lr_end = 2e-6;
    int step_epochs = 30;
    int end_epoch = 300;
};

struct UnpairedLrSchedule {
    double lr0 = 1e-4;
    int hold_epochs = 100;
    int total_epochs = 200;
};

// Staircase: equal linear decrements every step_epochs, reaching lr_end at
// end_epoch and constant after.
double lr_schedule(const PairedLrSchedule& cfg, int epoch);
// Constant for hold_epochs, then linear to zero at total_epochs.
double lr_schedule(const UnpairedLrSchedule& cfg, int epoch);

}  // namespace enhance::nn

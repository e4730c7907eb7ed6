#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "enhance/image.hpp"
#include "enhance/nn.hpp"
#include "enhance/optim.hpp"

namespace enhance {

struct UnpairedDataset {
    std::vector<ImageBuffer> x_images;  // inputs
    std::vector<ImageBuffer> y_images;  // target-style images
};

// Two manifests, one path per line; every image resized to resolution.
UnpairedDataset load_unpaired_dataset(const std::string& manifest_x,
                                      const std::string& manifest_y, int resolution);

struct GanPhase1Config {
    int epochs = 200;
    int batch = 20;
    nn::UnpairedLrSchedule lr{1e-4, 100, 200};
    double disc_dropout = 0.12;
    double alpha = 0.02;
    bool share_weights = true;
    double gen_dropout = 0.0;  // phase 1 trains without generator dropout by default
};

struct GanPhase2Config {
    bool enabled = true;
    int epochs = 200;
    int batch = 50;
    nn::UnpairedLrSchedule lr{5e-6, 100, 200};
    double gen_dropout = 0.15;
};

struct GanConfig {
    GanPhase1Config phase1;
    GanPhase2Config phase2;
    uint64_t seed = 0;
    int resolution = 256;
    bool augment = true;
    std::string history_path;  // empty disables the CSV

    void validate() const;
};

// G_X (X->Y) and G_Y (Y->X). With sharing enabled the conv feature-extractor
// tensors are the same objects in both networks; batchnorm and linear
// parameters stay private.
struct GeneratorPair {
    std::unique_ptr<nn::Network> gx;
    std::unique_ptr<nn::Network> gy;
    bool shared = false;

    // True iff every conv parameter read through G_X equals the one read
    // through G_Y (trivially true while storage is shared; meaningful after
    // serialization round trips).
    bool shared_weights_equal() const;
};

struct GanEpochStats {
    int epoch = 0;
    double cycle_x = 0.0;
    double cycle_y = 0.0;
    double gan_gx = 0.0;
    double gan_gy = 0.0;
    double disc_x = 0.0;
    double disc_y = 0.0;
    double lr = 0.0;
};

struct UnpairedTrainResult {
    GeneratorPair pair;
    std::unique_ptr<nn::Network> disc_x;
    std::unique_ptr<nn::Network> disc_y;
    std::vector<GanEpochStats> phase1_history;
    std::vector<GanEpochStats> phase2_history;
};

// Optional per-epoch progress hook (CLI logging); never affects training.
using GanEpochCallback = std::function<void(const GanEpochStats&)>;

UnpairedTrainResult train_phase1(const UnpairedDataset& dataset, const GanConfig& config,
                                 const GanEpochCallback& on_epoch = {});

// Cycle-only refinement: unshares the generators, freezes G_Y and both
// discriminators, enables generator dropout, and trains G_X on the
// y'' reconstruction loss alone.
void train_phase2(UnpairedTrainResult& state, const UnpairedDataset& dataset,
                  const GanConfig& config, const GanEpochCallback& on_epoch = {});

enum class AblationVariant {
    Complete,
    NoSharedWeights,
    FirstPhaseOnly,
    FirstPhaseOnlyWithDropout,
    CompleteWithoutDropout,
    RawMethod,
};

AblationVariant ablation_variant_from_name(const std::string& name);
std::vector<std::string> ablation_variant_names();
GanConfig apply_ablation(GanConfig base, AblationVariant variant);

// Runs phase 1 (and phase 2 where the variant keeps it) with the variant's
// flag tuple applied to `base`.
UnpairedTrainResult ablation_run(const UnpairedDataset& dataset, const GanConfig& base,
                                 AblationVariant variant,
                                 const GanEpochCallback& on_epoch = {});

void write_gan_history_csv(const std::vector<GanEpochStats>& history, const std::string& path);

}  // namespace enhance

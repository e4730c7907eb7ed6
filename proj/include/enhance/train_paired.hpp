#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "enhance/image.hpp"
#include "enhance/nn.hpp"
#include "enhance/optim.hpp"
#include "enhance/transform.hpp"

namespace enhance {

struct PairedDataset {
    std::vector<ImageBuffer> inputs;
    std::vector<ImageBuffer> targets;

    size_t size() const { return inputs.size(); }
};

// Loads a `input<TAB>target` manifest, resizing every image to
// resolution x resolution.
PairedDataset load_paired_dataset(const std::string& manifest_path, int resolution);

struct TrainConfig {
    int epochs = 500;
    int batch = 50;
    nn::PairedLrSchedule lr;
    int branches = 5;
    double branch_dropout = 0.5;
    bool augment = true;
    uint64_t seed = 0;
    int resolution = 256;
    int checkpoint_interval = 25;
    std::string checkpoint_prefix;  // empty disables checkpoints
    std::string history_path;       // empty disables the CSV
    // Stops once the epoch-mean loss drops below this (0 disables).
    double stop_below_loss = 0.0;

    void validate() const;
};

struct EpochStats {
    int epoch = 0;
    double mean_loss = 0.0;
    double lr = 0.0;
};

// Optional per-epoch progress hook (CLI logging); never affects training.
using EpochCallback = std::function<void(const EpochStats&)>;

struct PairedTrainResult {
    std::unique_ptr<nn::Network> model;
    std::vector<EpochStats> history;
};

PairedTrainResult train_paired(const PairedDataset& dataset, const TrainConfig& config,
                               const EpochCallback& on_epoch = {});

// Predicts theta from a resized copy of the image and applies the clamped
// transform at the image's native resolution.
CoefficientMatrix predict_theta(const nn::Network& model, const ImageBuffer& image);
ImageBuffer enhance_image(const nn::Network& model, const ImageBuffer& image);

// History CSV: epoch,mean_loss,lr
void write_history_csv(const std::vector<EpochStats>& history, const std::string& path);

// [N,3,H,W] batch packing helpers shared by both trainers.
nn::Tensor pack_batch(const std::vector<const ImageBuffer*>& images);
CoefficientMatrix theta_from_output(const nn::Tensor& out, int sample);

}  // namespace enhance

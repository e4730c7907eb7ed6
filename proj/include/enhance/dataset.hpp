#pragma once

#include <string>
#include <utility>
#include <vector>

#include "enhance/image.hpp"
#include "enhance/transform.hpp"

namespace enhance {

struct PairedSplit {
    std::vector<std::string> train_ids;
    std::vector<std::string> test_ids;
};

struct UnpairedSplit {
    std::vector<std::string> x_ids;
    std::vector<std::string> y_ids;
    std::vector<std::string> test_ids;
};

// Seeded uniform shuffle then prefix split.
PairedSplit make_paired_split(std::vector<std::string> corpus_ids, size_t n_train, uint64_t seed);

// X takes inputs of the first n/2 shuffled ids, Y takes targets of the next
// n/2 (id-disjoint), rest is the test set. n must be even.
UnpairedSplit make_unpaired_split(std::vector<std::string> corpus_ids, size_t n, uint64_t seed);

// Split manifest: one `id<TAB>role` line per id.
void write_split_manifest(const PairedSplit& split, const std::string& path);
void write_split_manifest(const UnpairedSplit& split, const std::string& path);

// Seeded colorful procedural image: mixtures of channel gradients and random
// colored patches spanning the gamut.
ImageBuffer make_procedural_image(int size, Rng& rng);

struct SyntheticCorpus {
    std::vector<std::string> input_paths;
    std::vector<std::string> target_paths;
    std::string theta_path;
};

// Writes k input/target PNG pairs under out_dir: targets are
// apply_transform_unclamped(input, theta_star) plus Gaussian noise, clamped.
// theta_star is recorded in a sidecar file. Also writes a paired manifest
// (input<TAB>target lines) at out_dir/manifest.tsv.
SyntheticCorpus make_synthetic_corpus(int k, int size, const CoefficientMatrix& theta_star,
                                      double noise_sigma, uint64_t seed,
                                      const std::string& out_dir);

}  // namespace enhance

#include "enhance/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "enhance/errors.hpp"
#include "enhance/imageio.hpp"

namespace enhance {

PairedSplit make_paired_split(std::vector<std::string> corpus_ids, size_t n_train,
                              uint64_t seed) {
    if (n_train >= corpus_ids.size())
        throw UsageError("make_paired_split: n_train must be smaller than the corpus");
    Rng rng(seed);
    shuffle_in_place(corpus_ids, rng);
    PairedSplit out;
    out.train_ids.assign(corpus_ids.begin(), corpus_ids.begin() + static_cast<long>(n_train));
    out.test_ids.assign(corpus_ids.begin() + static_cast<long>(n_train), corpus_ids.end());
    return out;
}

UnpairedSplit make_unpaired_split(std::vector<std::string> corpus_ids, size_t n, uint64_t seed) {
    if (n % 2 != 0) throw UsageError("make_unpaired_split: n must be even");
    if (n > corpus_ids.size())
        throw UsageError("make_unpaired_split: n exceeds the corpus size");
    Rng rng(seed);
    shuffle_in_place(corpus_ids, rng);
    UnpairedSplit out;
    size_t half = n / 2;
    out.x_ids.assign(corpus_ids.begin(), corpus_ids.begin() + static_cast<long>(half));
    out.y_ids.assign(corpus_ids.begin() + static_cast<long>(half),
                     corpus_ids.begin() + static_cast<long>(n));
    out.test_ids.assign(corpus_ids.begin() + static_cast<long>(n), corpus_ids.end());
    return out;
}

namespace {
void write_lines(std::ofstream& f, const std::vector<std::string>& ids, const char* role) {
    for (const auto& id : ids) f << id << '\t' << role << '\n';
}
}  // namespace

void write_split_manifest(const PairedSplit& split, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw IoError("write_split_manifest: cannot open " + path);
    write_lines(f, split.train_ids, "train");
    write_lines(f, split.test_ids, "test");
}

void write_split_manifest(const UnpairedSplit& split, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw IoError("write_split_manifest: cannot open " + path);
    write_lines(f, split.x_ids, "train_x");
    write_lines(f, split.y_ids, "train_y");
    write_lines(f, split.test_ids, "test");
}

ImageBuffer make_procedural_image(int size, Rng& rng) {
    ImageBuffer img(size, size);
    // base: per-channel linear gradient with random direction and range
    for (int c = 0; c < 3; ++c) {
        double gx = rng.uniform(-1.0, 1.0);
        double gy = rng.uniform(-1.0, 1.0);
        double lo = rng.uniform(0.0, 0.4);
        double hi = rng.uniform(0.6, 1.0);
        for (int y = 0; y < size; ++y)
            for (int x = 0; x < size; ++x) {
                double t = 0.5 + 0.5 * (gx * (2.0 * x / size - 1.0) + gy * (2.0 * y / size - 1.0));
                img.pixel(y, x)[c] = lo + (hi - lo) * std::clamp(t, 0.0, 1.0);
            }
    }
    // random colored rectangles spanning the gamut
    int patches = 8 + static_cast<int>(rng.next_index(9));
    for (int p = 0; p < patches; ++p) {
        int pw = 1 + static_cast<int>(rng.next_index(static_cast<uint64_t>(size / 2)));
        int ph = 1 + static_cast<int>(rng.next_index(static_cast<uint64_t>(size / 2)));
        int px = static_cast<int>(rng.next_index(static_cast<uint64_t>(size - pw + 1)));
        int py = static_cast<int>(rng.next_index(static_cast<uint64_t>(size - ph + 1)));
        double col[3] = {rng.uniform(), rng.uniform(), rng.uniform()};
        double blend = rng.uniform(0.5, 1.0);
        for (int y = py; y < py + ph; ++y)
            for (int x = px; x < px + pw; ++x)
                for (int c = 0; c < 3; ++c)
                    img.pixel(y, x)[c] = (1.0 - blend) * img.pixel(y, x)[c] + blend * col[c];
    }
    clamp01(img);
    return img;
}

SyntheticCorpus make_synthetic_corpus(int k, int size, const CoefficientMatrix& theta_star,
                                      double noise_sigma, uint64_t seed,
                                      const std::string& out_dir) {
    if (k < 1) throw UsageError("make_synthetic_corpus: k must be >= 1");
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw IoError("make_synthetic_corpus: cannot create " + out_dir);

    SyntheticCorpus corpus;
    Rng rng(seed);
    std::ofstream manifest(out_dir + "/manifest.tsv");
    if (!manifest) throw IoError("make_synthetic_corpus: cannot write manifest");
    // Any residual magnitude is bounded by the largest column abs-sum of
    // theta (each basis term lies in [0,1]); squeezing the inputs into
    // [margin, 1-margin] keeps every unclamped target inside [0,1], so the
    // final clamp never destroys the planted relationship.
    double margin = 0.0;
    for (int col = 0; col < 3; ++col) {
        double s = 0.0;
        for (int row = 0; row < kBasisSize; ++row) s += std::fabs(theta_star.at(row, col));
        margin = std::max(margin, s);
    }
    if (margin >= 0.5)
        throw UsageError("make_synthetic_corpus: theta magnitude too large (column abs-sum >= 0.5)");
    for (int i = 0; i < k; ++i) {
        ImageBuffer input = make_procedural_image(size, rng);
        // Snap the input to the 16-bit grid before deriving the target so the
        // on-disk pair stays an (almost) exact planted-transform pair.
        for (double& v : input.data) {
            v = margin + v * (1.0 - 2.0 * margin);
            v = std::floor(v * 65535.0 + 0.5) / 65535.0;
        }
        ImageBuffer target = apply_transform_unclamped(input, theta_star);
        if (noise_sigma > 0.0)
            for (double& v : target.data) v += rng.normal(0.0, noise_sigma);
        clamp01(target);
        char name[64];
        std::snprintf(name, sizeof(name), "img_%04d", i);
        std::string in_path = out_dir + "/" + name + "_in.png";
        std::string tg_path = out_dir + "/" + name + "_tg.png";
        save_image(input, in_path, 16);
        save_image(target, tg_path, 16);
        corpus.input_paths.push_back(in_path);
        corpus.target_paths.push_back(tg_path);
        manifest << in_path << '\t' << tg_path << '\n';
    }
    corpus.theta_path = out_dir + "/theta_star.txt";
    save_theta(theta_star, corpus.theta_path);
    return corpus;
}

}  // namespace enhance

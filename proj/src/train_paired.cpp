#include "enhance/train_paired.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "enhance/errors.hpp"
#include "enhance/imageio.hpp"
#include "enhance/losses.hpp"
#include "enhance/model_io.hpp"

namespace enhance {

PairedDataset load_paired_dataset(const std::string& manifest_path, int resolution) {
    std::ifstream f(manifest_path);
    if (!f) throw IoError("cannot open manifest " + manifest_path);
    PairedDataset ds;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        auto tab = line.find('\t');
        if (tab == std::string::npos)
            throw IoError("manifest line missing tab separator: " + line);
        ImageBuffer in = load_image(line.substr(0, tab));
        ImageBuffer tg = load_image(line.substr(tab + 1));
        if (in.height != resolution || in.width != resolution)
            in = resize_bilinear(in, resolution, resolution);
        if (tg.height != resolution || tg.width != resolution)
            tg = resize_bilinear(tg, resolution, resolution);
        ds.inputs.push_back(std::move(in));
        ds.targets.push_back(std::move(tg));
    }
    if (ds.inputs.empty()) throw IoError("empty manifest " + manifest_path);
    return ds;
}

void TrainConfig::validate() const {
    if (epochs < 1 || batch < 1 || resolution < 8)
        throw ConfigError("train config: epochs, batch and resolution must be positive");
    if (!(lr.lr0 >= lr.lr_end && lr.lr_end > 0.0))
        throw ConfigError("train config: need lr0 >= lr_end > 0");
    if (branches != 1 && branches != 3 && branches != 5)
        throw ConfigError("train config: branches must be 1, 3 or 5");
}

nn::Tensor pack_batch(const std::vector<const ImageBuffer*>& images) {
    int n = static_cast<int>(images.size());
    int h = images[0]->height;
    int w = images[0]->width;
    nn::Tensor x({n, 3, h, w});
    size_t plane = static_cast<size_t>(h) * w;
    for (int ni = 0; ni < n; ++ni) {
        const ImageBuffer& img = *images[ni];
        for (int y = 0; y < h; ++y)
            for (int xx = 0; xx < w; ++xx)
                for (int c = 0; c < 3; ++c)
                    x.values[(static_cast<size_t>(ni) * 3 + c) * plane + y * w + xx] =
                        img.pixel(y, xx)[c];
    }
    return x;
}

CoefficientMatrix theta_from_output(const nn::Tensor& out, int sample) {
    CoefficientMatrix theta;
    for (int i = 0; i < kBasisSize * 3; ++i)
        theta.theta[i] = out.values[static_cast<size_t>(sample) * 30 + i];
    return theta;
}

PairedTrainResult train_paired(const PairedDataset& dataset, const TrainConfig& config,
                               const EpochCallback& on_epoch) {
    config.validate();
    if (dataset.size() == 0) throw UsageError("train_paired: empty dataset");

    Rng rng(config.seed);
    auto spec = nn::make_paired_generator_spec(config.branches, config.branch_dropout,
                                               config.resolution);
    auto model = std::make_unique<nn::Network>(spec, rng);
    nn::Adam adam;

    PairedTrainResult result;
    std::vector<size_t> order(dataset.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        double lr = nn::lr_schedule(config.lr, epoch);
        shuffle_in_place(order, rng);
        double epoch_loss = 0.0;
        size_t batches = 0;
        for (size_t start = 0; start < order.size(); start += config.batch) {
            size_t end = std::min(order.size(), start + config.batch);
            int n = static_cast<int>(end - start);

            std::vector<ImageBuffer> ins(n), tgs(n);
            for (int i = 0; i < n; ++i) {
                size_t idx = order[start + i];
                if (config.augment) {
                    AugmentChoice choice = sample_augment(rng);
                    ins[i] = apply_augment(dataset.inputs[idx], choice);
                    tgs[i] = apply_augment(dataset.targets[idx], choice);
                } else {
                    ins[i] = dataset.inputs[idx];
                    tgs[i] = dataset.targets[idx];
                }
            }
            std::vector<const ImageBuffer*> in_ptrs(n);
            for (int i = 0; i < n; ++i) in_ptrs[i] = &ins[i];
            nn::Tensor x = pack_batch(in_ptrs);

            nn::NetTrace trace;
            nn::Tensor thetas = model->forward(x, nn::Mode::Train, rng, trace);

            nn::Tensor grad_thetas({n, 30});
            double batch_loss = 0.0;
            for (int i = 0; i < n; ++i) {
                CoefficientMatrix theta = theta_from_output(thetas, i);
                ImageBuffer pred = apply_transform_unclamped(ins[i], theta);
                LabLoss ll = paired_loss(pred, tgs[i]);
                batch_loss += ll.loss;
                CoefficientMatrix gtheta = transform_gradients(ins[i], ll.grad);
                for (int t = 0; t < 30; ++t)
                    grad_thetas.values[static_cast<size_t>(i) * 30 + t] =
                        gtheta.theta[t] / static_cast<double>(n);
            }
            batch_loss /= n;
            if (!std::isfinite(batch_loss)) {
                std::ostringstream msg;
                msg << "train_paired: NaN loss at epoch " << epoch << " batch " << batches
                    << " lr " << lr;
                throw NumericError(msg.str());
            }

            model->zero_grad();
            model->backward(grad_thetas, trace);
            adam.step(model->params(), lr);

            epoch_loss += batch_loss;
            ++batches;
        }
        epoch_loss /= static_cast<double>(batches);
        result.history.push_back({epoch, epoch_loss, lr});
        if (on_epoch) on_epoch(result.history.back());

        if (!config.checkpoint_prefix.empty() && config.checkpoint_interval > 0 &&
            (epoch + 1) % config.checkpoint_interval == 0) {
            nn::save_model(*model, config.checkpoint_prefix + ".ep" + std::to_string(epoch + 1));
        }
        if (config.stop_below_loss > 0.0 && epoch_loss < config.stop_below_loss) break;
    }

    if (!config.history_path.empty()) write_history_csv(result.history, config.history_path);
    result.model = std::move(model);
    return result;
}

CoefficientMatrix predict_theta(const nn::Network& model, const ImageBuffer& image) {
    int side = model.spec().input_size;
    ImageBuffer resized = (image.height == side && image.width == side)
                              ? image
                              : resize_bilinear(image, side, side);
    std::vector<const ImageBuffer*> ptr{&resized};
    nn::Tensor x = pack_batch(ptr);
    Rng rng(0);  // eval mode draws nothing
    nn::Tensor out = model.forward(x, nn::Mode::Eval, rng);
    return theta_from_output(out, 0);
}

ImageBuffer enhance_image(const nn::Network& model, const ImageBuffer& image) {
    return apply_transform(image, predict_theta(model, image));
}

void write_history_csv(const std::vector<EpochStats>& history, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw IoError("cannot open history file " + path);
    f << "epoch,mean_loss,lr\n";
    char buf[96];
    for (const auto& e : history) {
        std::snprintf(buf, sizeof(buf), "%d,%.12g,%.12g\n", e.epoch, e.mean_loss, e.lr);
        f << buf;
    }
}

}  // namespace enhance

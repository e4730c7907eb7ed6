#include "enhance/train_unpaired.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "enhance/errors.hpp"
#include "enhance/imageio.hpp"
#include "enhance/losses.hpp"
#include "enhance/train_paired.hpp"
#include "enhance/transform.hpp"

namespace enhance {

namespace {

std::vector<ImageBuffer> load_manifest_images(const std::string& manifest, int resolution) {
    std::ifstream f(manifest);
    if (!f) throw IoError("cannot open manifest " + manifest);
    std::vector<ImageBuffer> out;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        ImageBuffer img = load_image(line);
        if (img.height != resolution || img.width != resolution)
            img = resize_bilinear(img, resolution, resolution);
        out.push_back(std::move(img));
    }
    if (out.empty()) throw IoError("empty manifest " + manifest);
    return out;
}

// Unpacks a [N,3,H,W] input-gradient tensor into per-sample images.
std::vector<ImageBuffer> unpack_grad(const nn::Tensor& g) {
    int n = g.dim(0), h = g.dim(2), w = g.dim(3);
    size_t plane = static_cast<size_t>(h) * w;
    std::vector<ImageBuffer> out(n, ImageBuffer(h, w));
    for (int ni = 0; ni < n; ++ni)
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                for (int c = 0; c < 3; ++c)
                    out[ni].pixel(y, x)[c] =
                        g.values[(static_cast<size_t>(ni) * 3 + c) * plane + y * w + x];
    return out;
}

// Stacks two [N,3,H,W] batches along the sample dimension.
nn::Tensor concat_batches(const nn::Tensor& a, const nn::Tensor& b) {
    nn::Tensor out({a.dim(0) + b.dim(0), a.dim(1), a.dim(2), a.dim(3)});
    std::copy(a.values.begin(), a.values.end(), out.values.begin());
    std::copy(b.values.begin(), b.values.end(), out.values.begin() + a.values.size());
    return out;
}

void check_finite(double v, const char* what, int epoch, int batch, double lr) {
    if (!std::isfinite(v)) {
        std::ostringstream msg;
        msg << "train_unpaired: NaN " << what << " at epoch " << epoch << " batch " << batch
            << " lr " << lr;
        throw NumericError(msg.str());
    }
}

}  // namespace

UnpairedDataset load_unpaired_dataset(const std::string& manifest_x,
                                      const std::string& manifest_y, int resolution) {
    UnpairedDataset ds;
    ds.x_images = load_manifest_images(manifest_x, resolution);
    ds.y_images = load_manifest_images(manifest_y, resolution);
    return ds;
}

void GanConfig::validate() const {
    if (phase1.epochs < 1 || phase1.batch < 1 || resolution < 8)
        throw ConfigError("gan config: phase1 epochs/batch/resolution must be positive");
    if (phase1.alpha < 0.0) throw ConfigError("gan config: alpha must be >= 0");
    auto rate_ok = [](double p) { return p >= 0.0 && p < 1.0; };
    if (!rate_ok(phase1.disc_dropout) || !rate_ok(phase1.gen_dropout) ||
        !rate_ok(phase2.gen_dropout))
        throw ConfigError("gan config: dropout rates must be in [0,1)");
    if (phase2.enabled && (phase2.epochs < 1 || phase2.batch < 1))
        throw ConfigError("gan config: phase2 epochs/batch must be positive");
}

bool GeneratorPair::shared_weights_equal() const {
    const auto& px = gx->params();
    const auto& py = gy->params();
    if (px.size() != py.size()) return false;
    for (size_t i = 0; i < px.size(); ++i) {
        // conv weights/biases live under ".../layerK/weight|bias" with the
        // kind encoded in the spec; identify them by tensor rank 4 (conv
        // weight) and pair position.
        if (px[i]->value.shape.size() == 4) {
            if (px[i]->value.values != py[i]->value.values) return false;
            // conv bias immediately follows the conv weight in the registry
            if (i + 1 < px.size() && px[i + 1]->value.values != py[i + 1]->value.values)
                return false;
        }
    }
    return true;
}

UnpairedTrainResult train_phase1(const UnpairedDataset& dataset, const GanConfig& config,
                                 const GanEpochCallback& on_epoch) {
    config.validate();
    if (dataset.x_images.empty() || dataset.y_images.empty())
        throw UsageError("train_phase1: both X and Y sets must be nonempty");

    Rng rng(config.seed);
    auto gen_spec = nn::make_unpaired_generator_spec(config.phase1.gen_dropout, config.resolution);
    gen_spec.name = "generator_x";
    UnpairedTrainResult state;
    state.pair.gx = std::make_unique<nn::Network>(gen_spec, rng);
    gen_spec.name = "generator_y";
    state.pair.gy = std::make_unique<nn::Network>(gen_spec, rng);
    if (config.phase1.share_weights) {
        state.pair.gy->share_conv_params_with(*state.pair.gx);
        state.pair.shared = true;
    }
    auto disc_spec = nn::make_discriminator_spec(config.phase1.disc_dropout, config.resolution);
    disc_spec.name = "disc_x";
    state.disc_x = std::make_unique<nn::Network>(disc_spec, rng);
    disc_spec.name = "disc_y";
    state.disc_y = std::make_unique<nn::Network>(disc_spec, rng);

    nn::Adam adam_gen, adam_disc;
    auto& gx = *state.pair.gx;
    auto& gy = *state.pair.gy;
    auto& dx = *state.disc_x;
    auto& dy = *state.disc_y;

    std::vector<size_t> order_x(dataset.x_images.size());
    std::vector<size_t> order_y(dataset.y_images.size());
    for (size_t i = 0; i < order_x.size(); ++i) order_x[i] = i;
    for (size_t i = 0; i < order_y.size(); ++i) order_y[i] = i;
    size_t per_epoch = std::min(order_x.size(), order_y.size());

    for (int epoch = 0; epoch < config.phase1.epochs; ++epoch) {
        double lr = nn::lr_schedule(config.phase1.lr, epoch);
        shuffle_in_place(order_x, rng);
        shuffle_in_place(order_y, rng);
        GanEpochStats stats;
        stats.epoch = epoch;
        stats.lr = lr;
        size_t batches = 0;

        for (size_t start = 0; start < per_epoch; start += config.phase1.batch) {
            size_t end = std::min(per_epoch, start + static_cast<size_t>(config.phase1.batch));
            int n = static_cast<int>(end - start);
            int bi = static_cast<int>(batches);

            std::vector<ImageBuffer> xs(n), ys(n);
            for (int i = 0; i < n; ++i) {
                if (config.augment) {
                    xs[i] = apply_augment(dataset.x_images[order_x[start + i]],
                                          sample_augment(rng));
                    ys[i] = apply_augment(dataset.y_images[order_y[start + i]],
                                          sample_augment(rng));
                } else {
                    xs[i] = dataset.x_images[order_x[start + i]];
                    ys[i] = dataset.y_images[order_y[start + i]];
                }
            }
            std::vector<const ImageBuffer*> xp(n), yp(n);
            for (int i = 0; i < n; ++i) {
                xp[i] = &xs[i];
                yp[i] = &ys[i];
            }
            nn::Tensor x_batch = pack_batch(xp);
            nn::Tensor y_batch = pack_batch(yp);

            // ---- discriminator update on real vs detached fakes ----
            {
                nn::Tensor tx = gx.forward(x_batch, nn::Mode::Train, rng);
                nn::Tensor ty = gy.forward(y_batch, nn::Mode::Train, rng);
                std::vector<ImageBuffer> fake_y(n), fake_x(n);
                for (int i = 0; i < n; ++i) {
                    fake_y[i] = apply_transform_unclamped(xs[i], theta_from_output(tx, i));
                    fake_x[i] = apply_transform_unclamped(ys[i], theta_from_output(ty, i));
                }
                std::vector<const ImageBuffer*> fyp(n), fxp(n);
                for (int i = 0; i < n; ++i) {
                    fyp[i] = &fake_y[i];
                    fxp[i] = &fake_x[i];
                }
                nn::Tensor fake_y_batch = pack_batch(fyp);
                nn::Tensor fake_x_batch = pack_batch(fxp);

                // Real and fake samples share one forward pass so the
                // discriminator's batch statistics cover both populations;
                // normalizing them separately would cancel exactly the global
                // color shift the discriminator needs to see.
                auto update_disc = [&](nn::Network& disc, const nn::Tensor& real,
                                       const nn::Tensor& fake) {
                    nn::Tensor both = concat_batches(real, fake);
                    nn::NetTrace tr;
                    nn::Tensor z = disc.forward(both, nn::Mode::Train, rng, tr);
                    std::vector<double> zr(z.values.begin(), z.values.begin() + n);
                    std::vector<double> zf(z.values.begin() + n, z.values.end());
                    GanLossParts parts = gan_losses(zr, zf);
                    disc.zero_grad();
                    nn::Tensor g({2 * n, 1});
                    for (int i = 0; i < n; ++i) {
                        g.values[i] = parts.grad_real[i];
                        g.values[n + i] = parts.grad_fake[i];
                    }
                    disc.backward(g, tr);
                    adam_disc.step(disc.params(), lr);
                    return parts.disc_loss;
                };
                double dly = update_disc(dy, y_batch, fake_y_batch);
                double dlx = update_disc(dx, x_batch, fake_x_batch);
                check_finite(dly + dlx, "discriminator loss", epoch, bi, lr);
                stats.disc_y += dly;
                stats.disc_x += dlx;
            }

            // ---- generator update on the full phase-1 objective ----
            {
                gx.zero_grad();
                gy.zero_grad();

                // forward chains
                nn::NetTrace tr_gx_x, tr_gy_yp, tr_gy_y, tr_gx_xp;
                nn::Tensor th1 = gx.forward(x_batch, nn::Mode::Train, rng, tr_gx_x);
                std::vector<ImageBuffer> y_fake(n);
                for (int i = 0; i < n; ++i)
                    y_fake[i] = apply_transform_unclamped(xs[i], theta_from_output(th1, i));
                std::vector<const ImageBuffer*> yfp(n);
                for (int i = 0; i < n; ++i) yfp[i] = &y_fake[i];
                nn::Tensor y_fake_batch = pack_batch(yfp);

                nn::Tensor th2 = gy.forward(y_fake_batch, nn::Mode::Train, rng, tr_gy_yp);
                std::vector<ImageBuffer> x_cycled(n);
                for (int i = 0; i < n; ++i)
                    x_cycled[i] = apply_transform_unclamped(y_fake[i], theta_from_output(th2, i));

                nn::Tensor th3 = gy.forward(y_batch, nn::Mode::Train, rng, tr_gy_y);
                std::vector<ImageBuffer> x_fake(n);
                for (int i = 0; i < n; ++i)
                    x_fake[i] = apply_transform_unclamped(ys[i], theta_from_output(th3, i));
                std::vector<const ImageBuffer*> xfp(n);
                for (int i = 0; i < n; ++i) xfp[i] = &x_fake[i];
                nn::Tensor x_fake_batch = pack_batch(xfp);

                nn::Tensor th4 = gx.forward(x_fake_batch, nn::Mode::Train, rng, tr_gx_xp);
                std::vector<ImageBuffer> y_cycled(n);
                for (int i = 0; i < n; ++i)
                    y_cycled[i] = apply_transform_unclamped(x_fake[i], theta_from_output(th4, i));

                // adversarial logits on fresh discriminator passes; fakes ride
                // alongside the real batch so batch normalization keeps the
                // color-shift signal (the real half receives zero out-grad)
                nn::NetTrace tr_dy, tr_dx;
                nn::Tensor zy = dy.forward(concat_batches(y_batch, y_fake_batch),
                                           nn::Mode::Train, rng, tr_dy);
                nn::Tensor zx = dx.forward(concat_batches(x_batch, x_fake_batch),
                                           nn::Mode::Train, rng, tr_dx);
                std::vector<double> zy_fake(zy.values.begin() + n, zy.values.end());
                std::vector<double> zx_fake(zx.values.begin() + n, zx.values.end());
                GanLossParts gan_y = gan_losses({}, zy_fake);  // G_X's adversarial term
                GanLossParts gan_x = gan_losses({}, zx_fake);  // G_Y's adversarial term

                // cycle losses and their gradients
                double inv_n = 1.0 / n;
                double alpha = config.phase1.alpha;
                double cyc_x = 0.0, cyc_y = 0.0;
                nn::Tensor g_th2({n, 30}), g_th4({n, 30});
                std::vector<ImageBuffer> d_yfake(n), d_xfake(n);
                for (int i = 0; i < n; ++i) {
                    LabLoss lx = paired_loss(x_cycled[i], xs[i]);
                    cyc_x += lx.loss * inv_n;
                    for (double& v : lx.grad.data) v *= alpha * inv_n;
                    CoefficientMatrix g2 = transform_gradients(y_fake[i], lx.grad);
                    for (int t = 0; t < 30; ++t)
                        g_th2.values[static_cast<size_t>(i) * 30 + t] = g2.theta[t];
                    d_yfake[i] = transform_input_gradients(y_fake[i], theta_from_output(th2, i),
                                                           lx.grad);

                    LabLoss ly = paired_loss(y_cycled[i], ys[i]);
                    cyc_y += ly.loss * inv_n;
                    for (double& v : ly.grad.data) v *= alpha * inv_n;
                    CoefficientMatrix g4 = transform_gradients(x_fake[i], ly.grad);
                    for (int t = 0; t < 30; ++t)
                        g_th4.values[static_cast<size_t>(i) * 30 + t] = g4.theta[t];
                    d_xfake[i] = transform_input_gradients(x_fake[i], theta_from_output(th4, i),
                                                           ly.grad);
                }
                double gen_total = total_phase1_loss(cyc_x, cyc_y, gan_y.gen_loss,
                                                     gan_x.gen_loss, alpha);
                check_finite(gen_total, "generator loss", epoch, bi, lr);
                stats.cycle_x += cyc_x;
                stats.cycle_y += cyc_y;
                stats.gan_gx += gan_y.gen_loss;
                stats.gan_gy += gan_x.gen_loss;

                // backward: inner generators first to collect input gradients
                nn::Tensor d_yfake_net = gy.backward(g_th2, tr_gy_yp);
                nn::Tensor d_xfake_net = gx.backward(g_th4, tr_gx_xp);

                // adversarial input gradients through the discriminators
                dy.zero_grad();
                dx.zero_grad();
                nn::Tensor gz_y({2 * n, 1}), gz_x({2 * n, 1});
                for (int i = 0; i < n; ++i) {
                    gz_y.values[n + i] = gan_y.grad_gen_fake[i];
                    gz_x.values[n + i] = gan_x.grad_gen_fake[i];
                }
                nn::Tensor d_yfake_disc = dy.backward(gz_y, tr_dy);
                nn::Tensor d_xfake_disc = dx.backward(gz_x, tr_dx);

                auto net_grads_y = unpack_grad(d_yfake_net);
                auto disc_grads_y_all = unpack_grad(d_yfake_disc);
                auto net_grads_x = unpack_grad(d_xfake_net);
                auto disc_grads_x_all = unpack_grad(d_xfake_disc);
                // fake-half slices of the combined discriminator batches
                auto disc_grads_y = std::vector<ImageBuffer>(disc_grads_y_all.begin() + n,
                                                             disc_grads_y_all.end());
                auto disc_grads_x = std::vector<ImageBuffer>(disc_grads_x_all.begin() + n,
                                                             disc_grads_x_all.end());

                nn::Tensor g_th1({n, 30}), g_th3({n, 30});
                for (int i = 0; i < n; ++i) {
                    ImageBuffer total_y = d_yfake[i];
                    for (size_t k = 0; k < total_y.data.size(); ++k)
                        total_y.data[k] += net_grads_y[i].data[k] + disc_grads_y[i].data[k];
                    CoefficientMatrix g1 = transform_gradients(xs[i], total_y);
                    for (int t = 0; t < 30; ++t)
                        g_th1.values[static_cast<size_t>(i) * 30 + t] = g1.theta[t];

                    ImageBuffer total_x = d_xfake[i];
                    for (size_t k = 0; k < total_x.data.size(); ++k)
                        total_x.data[k] += net_grads_x[i].data[k] + disc_grads_x[i].data[k];
                    CoefficientMatrix g3 = transform_gradients(ys[i], total_x);
                    for (int t = 0; t < 30; ++t)
                        g_th3.values[static_cast<size_t>(i) * 30 + t] = g3.theta[t];
                }
                gx.backward(g_th1, tr_gx_x);
                gy.backward(g_th3, tr_gy_y);

                // shared conv tensors carry the sum of both generators'
                // gradients and are stepped exactly once.
                adam_gen.step({gx.params(), gy.params()}, lr);
                dy.zero_grad();
                dx.zero_grad();
            }
            ++batches;
        }
        double inv_b = 1.0 / static_cast<double>(batches);
        stats.cycle_x *= inv_b;
        stats.cycle_y *= inv_b;
        stats.gan_gx *= inv_b;
        stats.gan_gy *= inv_b;
        stats.disc_x *= inv_b;
        stats.disc_y *= inv_b;
        state.phase1_history.push_back(stats);
        if (on_epoch) on_epoch(stats);
    }
    if (!config.history_path.empty())
        write_gan_history_csv(state.phase1_history, config.history_path);
    return state;
}

void train_phase2(UnpairedTrainResult& state, const UnpairedDataset& dataset,
                  const GanConfig& config, const GanEpochCallback& on_epoch) {
    config.validate();
    if (!state.pair.gx || !state.pair.gy)
        throw UsageError("train_phase2: phase-1 generators required");

    // generators stop sharing weights in this phase
    state.pair.gx->unshare_params();
    state.pair.gy->unshare_params();
    state.pair.shared = false;
    state.pair.gx->set_dropout(config.phase2.gen_dropout);
    state.pair.gy->set_dropout(config.phase2.gen_dropout);

    Rng rng(config.seed + 1);
    nn::Adam adam;
    auto& gx = *state.pair.gx;
    auto& gy = *state.pair.gy;

    std::vector<size_t> order(dataset.y_images.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (int epoch = 0; epoch < config.phase2.epochs; ++epoch) {
        double lr = nn::lr_schedule(config.phase2.lr, epoch);
        shuffle_in_place(order, rng);
        GanEpochStats stats;
        stats.epoch = epoch;
        stats.lr = lr;
        size_t batches = 0;
        for (size_t start = 0; start < order.size();
             start += static_cast<size_t>(config.phase2.batch)) {
            size_t end = std::min(order.size(), start + static_cast<size_t>(config.phase2.batch));
            int n = static_cast<int>(end - start);
            std::vector<ImageBuffer> ys(n);
            for (int i = 0; i < n; ++i) {
                ys[i] = config.augment
                            ? apply_augment(dataset.y_images[order[start + i]],
                                            sample_augment(rng))
                            : dataset.y_images[order[start + i]];
            }
            std::vector<const ImageBuffer*> yp(n);
            for (int i = 0; i < n; ++i) yp[i] = &ys[i];
            nn::Tensor y_batch = pack_batch(yp);

            // frozen G_Y: dropout active, running stats untouched
            nn::Tensor th3 = gy.forward(y_batch, nn::Mode::Sample, rng);
            std::vector<ImageBuffer> x_fake(n);
            for (int i = 0; i < n; ++i)
                x_fake[i] = apply_transform_unclamped(ys[i], theta_from_output(th3, i));
            std::vector<const ImageBuffer*> xfp(n);
            for (int i = 0; i < n; ++i) xfp[i] = &x_fake[i];
            nn::Tensor x_fake_batch = pack_batch(xfp);

            nn::NetTrace tr;
            nn::Tensor th4 = gx.forward(x_fake_batch, nn::Mode::Train, rng, tr);
            double inv_n = 1.0 / n;
            double batch_loss = 0.0;
            nn::Tensor g_th4({n, 30});
            for (int i = 0; i < n; ++i) {
                ImageBuffer y_rec = apply_transform_unclamped(x_fake[i],
                                                              theta_from_output(th4, i));
                LabLoss ll = paired_loss(y_rec, ys[i]);
                batch_loss += ll.loss * inv_n;
                for (double& v : ll.grad.data) v *= inv_n;
                CoefficientMatrix g = transform_gradients(x_fake[i], ll.grad);
                for (int t = 0; t < 30; ++t)
                    g_th4.values[static_cast<size_t>(i) * 30 + t] = g.theta[t];
            }
            check_finite(batch_loss, "phase-2 loss", epoch, static_cast<int>(batches), lr);
            gx.zero_grad();
            gx.backward(g_th4, tr);
            adam.step(gx.params(), lr);
            stats.cycle_y += batch_loss;
            ++batches;
        }
        stats.cycle_y /= static_cast<double>(batches);
        state.phase2_history.push_back(stats);
        if (on_epoch) on_epoch(stats);
    }
}

AblationVariant ablation_variant_from_name(const std::string& name) {
    if (name == "complete") return AblationVariant::Complete;
    if (name == "no-shared-weights") return AblationVariant::NoSharedWeights;
    if (name == "first-phase-only") return AblationVariant::FirstPhaseOnly;
    if (name == "first-phase-only-with-dropout") return AblationVariant::FirstPhaseOnlyWithDropout;
    if (name == "complete-without-dropout") return AblationVariant::CompleteWithoutDropout;
    if (name == "raw") return AblationVariant::RawMethod;
    throw UsageError("unknown ablation variant: " + name);
}

std::vector<std::string> ablation_variant_names() {
    return {"complete",
            "no-shared-weights",
            "first-phase-only",
            "first-phase-only-with-dropout",
            "complete-without-dropout",
            "raw"};
}

GanConfig apply_ablation(GanConfig cfg, AblationVariant variant) {
    switch (variant) {
        case AblationVariant::Complete:
            break;
        case AblationVariant::NoSharedWeights:
            cfg.phase1.share_weights = false;
            break;
        case AblationVariant::FirstPhaseOnly:
            cfg.phase2.enabled = false;
            break;
        case AblationVariant::FirstPhaseOnlyWithDropout:
            cfg.phase2.enabled = false;
            cfg.phase1.gen_dropout = cfg.phase2.gen_dropout;
            break;
        case AblationVariant::CompleteWithoutDropout:
            cfg.phase2.gen_dropout = 0.0;
            break;
        case AblationVariant::RawMethod:
            cfg.phase1.share_weights = false;
            cfg.phase2.enabled = false;
            cfg.phase1.gen_dropout = 0.0;
            break;
    }
    return cfg;
}

UnpairedTrainResult ablation_run(const UnpairedDataset& dataset, const GanConfig& base,
                                 AblationVariant variant, const GanEpochCallback& on_epoch) {
    GanConfig cfg = apply_ablation(base, variant);
    UnpairedTrainResult state = train_phase1(dataset, cfg, on_epoch);
    if (cfg.phase2.enabled) train_phase2(state, dataset, cfg, on_epoch);
    return state;
}

void write_gan_history_csv(const std::vector<GanEpochStats>& history, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw IoError("cannot open history file " + path);
    f << "epoch,cycle_x,cycle_y,gan_gx,gan_gy,disc_x,disc_y,lr\n";
    char buf[220];
    for (const auto& e : history) {
        std::snprintf(buf, sizeof(buf), "%d,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g\n", e.epoch,
                      e.cycle_x, e.cycle_y, e.gan_gx, e.gan_gy, e.disc_x, e.disc_y, e.lr);
        f << buf;
    }
}

}  // namespace enhance

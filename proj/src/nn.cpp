#include "enhance/nn.hpp"

#include <cmath>
#include <unordered_set>

namespace enhance::nn {

std::string layer_kind_name(LayerKind k) {
    switch (k) {
        case LayerKind::Conv2d: return "conv2d";
        case LayerKind::BatchNorm: return "batchnorm";
        case LayerKind::LeakyRelu: return "leaky_relu";
        case LayerKind::Dropout: return "dropout";
        case LayerKind::AvgPoolGlobal: return "avgpool_global";
        case LayerKind::Linear: return "linear";
    }
    return "?";
}

LayerKind layer_kind_from_name(const std::string& name) {
    if (name == "conv2d") return LayerKind::Conv2d;
    if (name == "batchnorm") return LayerKind::BatchNorm;
    if (name == "leaky_relu") return LayerKind::LeakyRelu;
    if (name == "dropout") return LayerKind::Dropout;
    if (name == "avgpool_global") return LayerKind::AvgPoolGlobal;
    if (name == "linear") return LayerKind::Linear;
    throw ShapeError("unknown layer kind: " + name);
}

LayerSpec LayerSpec::conv2d(int cin, int cout, int k, int s, int p) {
    LayerSpec l;
    l.kind = LayerKind::Conv2d;
    l.in_channels = cin;
    l.out_channels = cout;
    l.kernel = k;
    l.stride = s;
    l.pad = p;
    return l;
}
LayerSpec LayerSpec::batchnorm(int channels) {
    LayerSpec l;
    l.kind = LayerKind::BatchNorm;
    l.channels = channels;
    return l;
}
LayerSpec LayerSpec::leaky_relu(double slope) {
    LayerSpec l;
    l.kind = LayerKind::LeakyRelu;
    l.negative_slope = slope;
    return l;
}
LayerSpec LayerSpec::dropout(double p) {
    LayerSpec l;
    l.kind = LayerKind::Dropout;
    l.drop_prob = p;
    return l;
}
LayerSpec LayerSpec::avgpool_global() {
    LayerSpec l;
    l.kind = LayerKind::AvgPoolGlobal;
    return l;
}
LayerSpec LayerSpec::linear(int in_f, int out_f, bool zero) {
    LayerSpec l;
    l.kind = LayerKind::Linear;
    l.in_features = in_f;
    l.out_features = out_f;
    l.zero_init = zero;
    return l;
}

void LayerSpec::validate() const {
    switch (kind) {
        case LayerKind::Conv2d:
            if (in_channels < 1 || out_channels < 1 || kernel < 1 || stride < 1 || pad < 0)
                throw ShapeError("conv2d: invalid hyperparameters");
            break;
        case LayerKind::BatchNorm:
            if (channels < 1) throw ShapeError("batchnorm: invalid channel count");
            break;
        case LayerKind::Dropout:
            if (drop_prob < 0.0 || drop_prob >= 1.0)
                throw ShapeError("dropout: probability must be in [0,1)");
            break;
        case LayerKind::Linear:
            if (in_features < 1 || out_features < 1)
                throw ShapeError("linear: invalid feature counts");
            break;
        default:
            break;
    }
}

NetworkSpec make_paired_generator_spec(int branches, double branch_dropout, int input_size) {
    if (branches != 1 && branches != 3 && branches != 5)
        throw ShapeError("paired generator: branches must be 1, 3 or 5");
    NetworkSpec spec;
    spec.name = "paired_generator";
    spec.branches = branches;
    spec.input_size = input_size;
    spec.output_dim = 30;
    spec.branch_layers = {
        LayerSpec::conv2d(3, 16), LayerSpec::batchnorm(16), LayerSpec::leaky_relu(),
        LayerSpec::conv2d(16, 32), LayerSpec::batchnorm(32), LayerSpec::leaky_relu(),
        LayerSpec::conv2d(32, 64), LayerSpec::batchnorm(64), LayerSpec::leaky_relu(),
        LayerSpec::avgpool_global(),
        LayerSpec::linear(64, 64),
        LayerSpec::dropout(branch_dropout),
        LayerSpec::linear(64, 32),
    };
    spec.head_layers = {LayerSpec::linear(32 * branches, 30, /*zero=*/true)};
    return spec;
}

NetworkSpec make_unpaired_generator_spec(double dropout, int input_size) {
    NetworkSpec spec;
    spec.name = "unpaired_generator";
    spec.branches = 1;
    spec.input_size = input_size;
    spec.output_dim = 30;
    spec.branch_layers = {
        LayerSpec::conv2d(3, 16), LayerSpec::batchnorm(16), LayerSpec::leaky_relu(),
        LayerSpec::conv2d(16, 32), LayerSpec::batchnorm(32), LayerSpec::leaky_relu(),
        LayerSpec::conv2d(32, 64), LayerSpec::batchnorm(64), LayerSpec::leaky_relu(),
        LayerSpec::conv2d(64, 128), LayerSpec::batchnorm(128), LayerSpec::leaky_relu(),
        LayerSpec::conv2d(128, 256), LayerSpec::batchnorm(256), LayerSpec::leaky_relu(),
        LayerSpec::avgpool_global(),
        LayerSpec::linear(256, 64),
        LayerSpec::dropout(dropout),
    };
    spec.head_layers = {LayerSpec::linear(64, 30, /*zero=*/true)};
    return spec;
}

NetworkSpec make_discriminator_spec(double dropout, int input_size) {
    NetworkSpec spec;
    spec.name = "discriminator";
    spec.branches = 1;
    spec.input_size = input_size;
    spec.output_dim = 1;
    spec.branch_layers = {
        LayerSpec::conv2d(3, 32), LayerSpec::batchnorm(32), LayerSpec::leaky_relu(),
        LayerSpec::dropout(dropout),
        LayerSpec::conv2d(32, 64), LayerSpec::batchnorm(64), LayerSpec::leaky_relu(),
        LayerSpec::dropout(dropout),
        LayerSpec::conv2d(64, 128), LayerSpec::batchnorm(128), LayerSpec::leaky_relu(),
        LayerSpec::dropout(dropout),
        LayerSpec::conv2d(128, 256), LayerSpec::batchnorm(256), LayerSpec::leaky_relu(),
        LayerSpec::dropout(dropout),
        LayerSpec::avgpool_global(),
    };
    spec.head_layers = {LayerSpec::linear(256, 1)};
    return spec;
}

Layer::Layer(const LayerSpec& spec, const std::string& path) : spec_(spec), path_(path) {
    spec_.validate();
    switch (spec_.kind) {
        case LayerKind::Conv2d:
            params_.push_back(std::make_shared<Param>(
                path + "/weight",
                std::vector<int>{spec_.out_channels, spec_.in_channels, spec_.kernel,
                                 spec_.kernel}));
            params_.push_back(
                std::make_shared<Param>(path + "/bias", std::vector<int>{spec_.out_channels}));
            break;
        case LayerKind::BatchNorm:
            params_.push_back(
                std::make_shared<Param>(path + "/gamma", std::vector<int>{spec_.channels}));
            params_.push_back(
                std::make_shared<Param>(path + "/beta", std::vector<int>{spec_.channels}));
            params_.push_back(std::make_shared<Param>(
                path + "/running_mean", std::vector<int>{spec_.channels}, /*train=*/false));
            params_.push_back(std::make_shared<Param>(
                path + "/running_var", std::vector<int>{spec_.channels}, /*train=*/false));
            break;
        case LayerKind::Linear:
            params_.push_back(std::make_shared<Param>(
                path + "/weight", std::vector<int>{spec_.out_features, spec_.in_features}));
            params_.push_back(
                std::make_shared<Param>(path + "/bias", std::vector<int>{spec_.out_features}));
            break;
        default:
            break;
    }
}

void Layer::collect_params(std::vector<ParamPtr>& out) const {
    for (const auto& p : params_) out.push_back(p);
}

void Layer::adopt_params(const std::vector<ParamPtr>& params, size_t& cursor) {
    for (auto& p : params_) {
        if (cursor >= params.size()) throw ShapeError("adopt_params: registry too short");
        if (!params[cursor]->value.same_shape(p->value))
            throw ShapeError("adopt_params: shape mismatch at " + p->path);
        p = params[cursor++];
    }
}

void Layer::init_params(Rng& rng) {
    switch (spec_.kind) {
        case LayerKind::Conv2d: {
            int fan_in = spec_.in_channels * spec_.kernel * spec_.kernel;
            double bound = std::sqrt(6.0 / fan_in);
            for (double& v : params_[0]->value.values) v = rng.uniform(-bound, bound);
            params_[1]->value.zero();
            break;
        }
        case LayerKind::Linear: {
            if (spec_.zero_init) {
                params_[0]->value.zero();
                params_[1]->value.zero();
            } else {
                double bound = std::sqrt(6.0 / spec_.in_features);
                for (double& v : params_[0]->value.values) v = rng.uniform(-bound, bound);
                params_[1]->value.zero();
            }
            break;
        }
        case LayerKind::BatchNorm:
            for (double& v : params_[0]->value.values) v = 1.0;  // gamma
            params_[1]->value.zero();                            // beta
            params_[2]->value.zero();                            // running mean
            for (double& v : params_[3]->value.values) v = 1.0;  // running var
            break;
        default:
            break;
    }
}

namespace {

constexpr double kBnEps = 1e-5;
constexpr double kBnMomentum = 0.1;

void expect_rank(const Tensor& x, size_t rank, const std::string& where) {
    if (x.shape.size() != rank)
        throw ShapeError(where + ": expected rank-" + std::to_string(rank) + " input, got " +
                         shape_str(x.shape));
}

Tensor conv2d_forward(const LayerSpec& s, const Tensor& w, const Tensor& b, const Tensor& x,
                      const std::string& path) {
    expect_rank(x, 4, path);
    int n = x.dim(0), cin = x.dim(1), h = x.dim(2), wd = x.dim(3);
    if (cin != s.in_channels)
        throw ShapeError(path + ": channel mismatch, got " + shape_str(x.shape));
    int oh = (h + 2 * s.pad - s.kernel) / s.stride + 1;
    int ow = (wd + 2 * s.pad - s.kernel) / s.stride + 1;
    if (oh < 1 || ow < 1) throw ShapeError(path + ": input too small " + shape_str(x.shape));
    Tensor y({n, s.out_channels, oh, ow});
    const double* xp = x.values.data();
    const double* wp = w.values.data();
    double* yp = y.values.data();
    size_t x_n_stride = static_cast<size_t>(cin) * h * wd;
    size_t y_n_stride = static_cast<size_t>(s.out_channels) * oh * ow;
#pragma omp parallel for collapse(2) schedule(static)
    for (int ni = 0; ni < n; ++ni) {
        for (int oc = 0; oc < s.out_channels; ++oc) {
            const double* xn = xp + ni * x_n_stride;
            double* yo = yp + ni * y_n_stride + static_cast<size_t>(oc) * oh * ow;
            const double* wo =
                wp + static_cast<size_t>(oc) * s.in_channels * s.kernel * s.kernel;
            double bias = b.values[oc];
            for (int oy = 0; oy < oh; ++oy) {
                for (int ox = 0; ox < ow; ++ox) {
                    double acc = bias;
                    int iy0 = oy * s.stride - s.pad;
                    int ix0 = ox * s.stride - s.pad;
                    for (int ic = 0; ic < cin; ++ic) {
                        const double* xc = xn + static_cast<size_t>(ic) * h * wd;
                        const double* wc = wo + static_cast<size_t>(ic) * s.kernel * s.kernel;
                        for (int ky = 0; ky < s.kernel; ++ky) {
                            int iy = iy0 + ky;
                            if (iy < 0 || iy >= h) continue;
                            for (int kx = 0; kx < s.kernel; ++kx) {
                                int ix = ix0 + kx;
                                if (ix < 0 || ix >= wd) continue;
                                acc += wc[ky * s.kernel + kx] * xc[iy * wd + ix];
                            }
                        }
                    }
                    yo[oy * ow + ox] = acc;
                }
            }
        }
    }
    return y;
}

void conv2d_backward(const LayerSpec& s, const Tensor& w, const Tensor& x,
                     const Tensor& grad_out, Tensor& grad_w, Tensor& grad_b, Tensor& grad_in) {
    int n = x.dim(0), cin = x.dim(1), h = x.dim(2), wd = x.dim(3);
    int oh = grad_out.dim(2), ow = grad_out.dim(3);
    size_t x_n_stride = static_cast<size_t>(cin) * h * wd;
    size_t y_n_stride = static_cast<size_t>(s.out_channels) * oh * ow;

    // dW / db: one output channel per thread keeps each accumulator serial.
#pragma omp parallel for schedule(static)
    for (int oc = 0; oc < s.out_channels; ++oc) {
        double* gw = grad_w.values.data() +
                     static_cast<size_t>(oc) * s.in_channels * s.kernel * s.kernel;
        double gb = 0.0;
        for (int ni = 0; ni < n; ++ni) {
            const double* xn = x.values.data() + ni * x_n_stride;
            const double* go =
                grad_out.values.data() + ni * y_n_stride + static_cast<size_t>(oc) * oh * ow;
            for (int oy = 0; oy < oh; ++oy) {
                for (int ox = 0; ox < ow; ++ox) {
                    double g = go[oy * ow + ox];
                    if (g == 0.0) continue;
                    gb += g;
                    int iy0 = oy * s.stride - s.pad;
                    int ix0 = ox * s.stride - s.pad;
                    for (int ic = 0; ic < cin; ++ic) {
                        const double* xc = xn + static_cast<size_t>(ic) * h * wd;
                        double* gwc = gw + static_cast<size_t>(ic) * s.kernel * s.kernel;
                        for (int ky = 0; ky < s.kernel; ++ky) {
                            int iy = iy0 + ky;
                            if (iy < 0 || iy >= h) continue;
                            for (int kx = 0; kx < s.kernel; ++kx) {
                                int ix = ix0 + kx;
                                if (ix < 0 || ix >= wd) continue;
                                gwc[ky * s.kernel + kx] += g * xc[iy * wd + ix];
                            }
                        }
                    }
                }
            }
        }
        grad_b.values[oc] += gb;
    }

    // dX: gather form, one (sample, input channel) per thread.
#pragma omp parallel for collapse(2) schedule(static)
    for (int ni = 0; ni < n; ++ni) {
        for (int ic = 0; ic < cin; ++ic) {
            double* gx = grad_in.values.data() + ni * x_n_stride + static_cast<size_t>(ic) * h * wd;
            for (int iy = 0; iy < h; ++iy) {
                for (int ix = 0; ix < wd; ++ix) {
                    double acc = 0.0;
                    for (int oc = 0; oc < s.out_channels; ++oc) {
                        const double* go = grad_out.values.data() + ni * y_n_stride +
                                           static_cast<size_t>(oc) * oh * ow;
                        const double* wc =
                            w.values.data() +
                            (static_cast<size_t>(oc) * s.in_channels + ic) * s.kernel * s.kernel;
                        for (int ky = 0; ky < s.kernel; ++ky) {
                            int num = iy + s.pad - ky;
                            if (num < 0 || num % s.stride != 0) continue;
                            int oy = num / s.stride;
                            if (oy >= oh) continue;
                            for (int kx = 0; kx < s.kernel; ++kx) {
                                int numx = ix + s.pad - kx;
                                if (numx < 0 || numx % s.stride != 0) continue;
                                int ox = numx / s.stride;
                                if (ox >= ow) continue;
                                acc += go[oy * ow + ox] * wc[ky * s.kernel + kx];
                            }
                        }
                    }
                    gx[iy * wd + ix] = acc;
                }
            }
        }
    }
}

}  // namespace

Tensor Layer::forward(const Tensor& x, Mode mode, Rng& rng, LayerCache& cache) const {
    switch (spec_.kind) {
        case LayerKind::Conv2d: {
            cache.input = x;
            return conv2d_forward(spec_, params_[0]->value, params_[1]->value, x, path_);
        }
        case LayerKind::BatchNorm: {
            // Accepts [N,C,H,W] or [N,C].
            Tensor x4 = x;
            bool was_2d = x.shape.size() == 2;
            if (was_2d) x4.shape = {x.dim(0), x.dim(1), 1, 1};
            expect_rank(x4, 4, path_);
            int n = x4.dim(0), c = x4.dim(1), h = x4.dim(2), w = x4.dim(3);
            if (c != spec_.channels)
                throw ShapeError(path_ + ": channel mismatch, got " + shape_str(x.shape));
            const auto& gamma = params_[0]->value;
            const auto& beta = params_[1]->value;
            auto& run_mean = params_[2]->value;
            auto& run_var = params_[3]->value;
            cache.input = x;
            cache.mean.assign(c, 0.0);
            cache.inv_std.assign(c, 0.0);
            cache.bn_batch_stats = (mode == Mode::Train);
            Tensor y(x4.shape);
            cache.xhat = Tensor(x4.shape);
            size_t plane = static_cast<size_t>(h) * w;
            size_t n_stride = static_cast<size_t>(c) * plane;
            double count = static_cast<double>(n) * plane;
            for (int ci = 0; ci < c; ++ci) {
                double mean, var;
                if (mode == Mode::Train) {
                    double sum = 0.0, sq = 0.0;
                    for (int ni = 0; ni < n; ++ni) {
                        const double* p = x4.values.data() + ni * n_stride + ci * plane;
                        for (size_t i = 0; i < plane; ++i) {
                            sum += p[i];
                            sq += p[i] * p[i];
                        }
                    }
                    mean = sum / count;
                    var = sq / count - mean * mean;
                    if (var < 0.0) var = 0.0;
                    run_mean.values[ci] =
                        (1.0 - kBnMomentum) * run_mean.values[ci] + kBnMomentum * mean;
                    run_var.values[ci] =
                        (1.0 - kBnMomentum) * run_var.values[ci] + kBnMomentum * var;
                } else {
                    mean = run_mean.values[ci];
                    var = run_var.values[ci];
                }
                double inv_std = 1.0 / std::sqrt(var + kBnEps);
                cache.mean[ci] = mean;
                cache.inv_std[ci] = inv_std;
                double g = gamma.values[ci], b = beta.values[ci];
                for (int ni = 0; ni < n; ++ni) {
                    const double* p = x4.values.data() + ni * n_stride + ci * plane;
                    double* xh = cache.xhat.values.data() + ni * n_stride + ci * plane;
                    double* q = y.values.data() + ni * n_stride + ci * plane;
                    for (size_t i = 0; i < plane; ++i) {
                        xh[i] = (p[i] - mean) * inv_std;
                        q[i] = g * xh[i] + b;
                    }
                }
            }
            if (was_2d) y.shape = x.shape;
            return y;
        }
        case LayerKind::LeakyRelu: {
            cache.input = x;
            Tensor y(x.shape);
            double slope = spec_.negative_slope;
            for (size_t i = 0; i < x.values.size(); ++i)
                y.values[i] = x.values[i] >= 0.0 ? x.values[i] : slope * x.values[i];
            return y;
        }
        case LayerKind::Dropout: {
            if (mode == Mode::Eval || spec_.drop_prob == 0.0) {
                cache.mask = Tensor();
                return x;
            }
            double keep = 1.0 - spec_.drop_prob;
            cache.mask = Tensor(x.shape);
            Tensor y(x.shape);
            for (size_t i = 0; i < x.values.size(); ++i) {
                double m = rng.uniform() < keep ? 1.0 / keep : 0.0;
                cache.mask.values[i] = m;
                y.values[i] = x.values[i] * m;
            }
            return y;
        }
        case LayerKind::AvgPoolGlobal: {
            expect_rank(x, 4, path_);
            int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
            cache.spatial = {h, w};
            Tensor y({n, c});
            size_t plane = static_cast<size_t>(h) * w;
            for (int ni = 0; ni < n; ++ni)
                for (int ci = 0; ci < c; ++ci) {
                    const double* p = x.values.data() + (static_cast<size_t>(ni) * c + ci) * plane;
                    double s = 0.0;
                    for (size_t i = 0; i < plane; ++i) s += p[i];
                    y.values[static_cast<size_t>(ni) * c + ci] = s / static_cast<double>(plane);
                }
            return y;
        }
        case LayerKind::Linear: {
            expect_rank(x, 2, path_);
            int n = x.dim(0), f = x.dim(1);
            if (f != spec_.in_features)
                throw ShapeError(path_ + ": feature mismatch, got " + shape_str(x.shape));
            cache.input = x;
            const auto& w = params_[0]->value;
            const auto& b = params_[1]->value;
            Tensor y({n, spec_.out_features});
            for (int ni = 0; ni < n; ++ni) {
                const double* xp = x.values.data() + static_cast<size_t>(ni) * f;
                double* yp = y.values.data() + static_cast<size_t>(ni) * spec_.out_features;
                for (int o = 0; o < spec_.out_features; ++o) {
                    const double* wp = w.values.data() + static_cast<size_t>(o) * f;
                    double acc = b.values[o];
                    for (int i = 0; i < f; ++i) acc += wp[i] * xp[i];
                    yp[o] = acc;
                }
            }
            return y;
        }
    }
    throw ShapeError(path_ + ": unreachable layer kind");
}

Tensor Layer::backward(const Tensor& grad_out, const LayerCache& cache) const {
    switch (spec_.kind) {
        case LayerKind::Conv2d: {
            Tensor grad_in(cache.input.shape);
            conv2d_backward(spec_, params_[0]->value, cache.input, grad_out, params_[0]->grad,
                            params_[1]->grad, grad_in);
            return grad_in;
        }
        case LayerKind::BatchNorm: {
            Tensor go4 = grad_out;
            bool was_2d = grad_out.shape.size() == 2;
            if (was_2d) go4.shape = {grad_out.dim(0), grad_out.dim(1), 1, 1};
            int n = go4.dim(0), c = go4.dim(1), h = go4.dim(2), w = go4.dim(3);
            size_t plane = static_cast<size_t>(h) * w;
            size_t n_stride = static_cast<size_t>(c) * plane;
            double count = static_cast<double>(n) * plane;
            const auto& gamma = params_[0]->value;
            Tensor grad_in(go4.shape);
            for (int ci = 0; ci < c; ++ci) {
                double sum_dy = 0.0, sum_dy_xhat = 0.0;
                for (int ni = 0; ni < n; ++ni) {
                    const double* dy = go4.values.data() + ni * n_stride + ci * plane;
                    const double* xh = cache.xhat.values.data() + ni * n_stride + ci * plane;
                    for (size_t i = 0; i < plane; ++i) {
                        sum_dy += dy[i];
                        sum_dy_xhat += dy[i] * xh[i];
                    }
                }
                params_[0]->grad.values[ci] += sum_dy_xhat;  // d gamma
                params_[1]->grad.values[ci] += sum_dy;       // d beta
                double g = gamma.values[ci];
                double inv_std = cache.inv_std[ci];
                for (int ni = 0; ni < n; ++ni) {
                    const double* dy = go4.values.data() + ni * n_stride + ci * plane;
                    const double* xh = cache.xhat.values.data() + ni * n_stride + ci * plane;
                    double* dx = grad_in.values.data() + ni * n_stride + ci * plane;
                    for (size_t i = 0; i < plane; ++i) {
                        // batch-stat path; eval/sample-mode stats are constants
                        if (cache.bn_batch_stats) {
                            dx[i] = g * inv_std *
                                    (dy[i] - sum_dy / count - xh[i] * sum_dy_xhat / count);
                        } else {
                            dx[i] = g * inv_std * dy[i];
                        }
                    }
                }
            }
            if (was_2d) grad_in.shape = grad_out.shape;
            return grad_in;
        }
        case LayerKind::LeakyRelu: {
            Tensor grad_in(grad_out.shape);
            double slope = spec_.negative_slope;
            for (size_t i = 0; i < grad_out.values.size(); ++i)
                grad_in.values[i] =
                    cache.input.values[i] >= 0.0 ? grad_out.values[i] : slope * grad_out.values[i];
            return grad_in;
        }
        case LayerKind::Dropout: {
            if (cache.mask.values.empty()) return grad_out;
            Tensor grad_in(grad_out.shape);
            for (size_t i = 0; i < grad_out.values.size(); ++i)
                grad_in.values[i] = grad_out.values[i] * cache.mask.values[i];
            return grad_in;
        }
        case LayerKind::AvgPoolGlobal: {
            int n = grad_out.dim(0), c = grad_out.dim(1);
            int h = cache.spatial[0], w = cache.spatial[1];
            size_t plane = static_cast<size_t>(h) * w;
            Tensor grad_in({n, c, h, w});
            for (int ni = 0; ni < n; ++ni)
                for (int ci = 0; ci < c; ++ci) {
                    double g = grad_out.values[static_cast<size_t>(ni) * c + ci] /
                               static_cast<double>(plane);
                    double* p =
                        grad_in.values.data() + (static_cast<size_t>(ni) * c + ci) * plane;
                    for (size_t i = 0; i < plane; ++i) p[i] = g;
                }
            return grad_in;
        }
        case LayerKind::Linear: {
            int n = grad_out.dim(0);
            int f = spec_.in_features;
            int o = spec_.out_features;
            const auto& w = params_[0]->value;
            Tensor grad_in({n, f});
            for (int ni = 0; ni < n; ++ni) {
                const double* dy = grad_out.values.data() + static_cast<size_t>(ni) * o;
                const double* xp = cache.input.values.data() + static_cast<size_t>(ni) * f;
                double* dx = grad_in.values.data() + static_cast<size_t>(ni) * f;
                for (int oi = 0; oi < o; ++oi) {
                    double g = dy[oi];
                    params_[1]->grad.values[oi] += g;
                    double* gw = params_[0]->grad.values.data() + static_cast<size_t>(oi) * f;
                    const double* wp = w.values.data() + static_cast<size_t>(oi) * f;
                    for (int i = 0; i < f; ++i) {
                        gw[i] += g * xp[i];
                        dx[i] += g * wp[i];
                    }
                }
            }
            return grad_in;
        }
    }
    throw ShapeError(path_ + ": unreachable layer kind");
}

Network::Network(const NetworkSpec& spec, Rng& init_rng) : spec_(spec) {
    branches_.resize(spec_.branches);
    for (int b = 0; b < spec_.branches; ++b) {
        for (size_t li = 0; li < spec_.branch_layers.size(); ++li) {
            std::string path =
                spec_.name + "/branch" + std::to_string(b) + "/layer" + std::to_string(li);
            branches_[b].push_back(std::make_unique<Layer>(spec_.branch_layers[li], path));
        }
    }
    for (size_t li = 0; li < spec_.head_layers.size(); ++li) {
        std::string path = spec_.name + "/head/layer" + std::to_string(li);
        head_.push_back(std::make_unique<Layer>(spec_.head_layers[li], path));
    }
    for (auto& branch : branches_)
        for (auto& layer : branch) layer->init_params(init_rng);
    for (auto& layer : head_) layer->init_params(init_rng);
    rebuild_registry();
}

void Network::rebuild_registry() {
    params_.clear();
    for (auto& branch : branches_)
        for (auto& layer : branch) layer->collect_params(params_);
    for (auto& layer : head_) layer->collect_params(params_);
}

void Network::zero_grad() {
    for (auto& p : params_) p->grad.zero();
}

Tensor Network::forward(const Tensor& x, Mode mode, Rng& rng, NetTrace& trace) const {
    expect_rank(x, 4, spec_.name);
    trace.input_shape = x.shape;
    trace.branch_caches.assign(branches_.size(), {});
    trace.branch_outputs.clear();
    int n = x.dim(0);
    Tensor concat;
    for (size_t b = 0; b < branches_.size(); ++b) {
        Tensor cur = x;
        trace.branch_caches[b].resize(branches_[b].size());
        for (size_t li = 0; li < branches_[b].size(); ++li)
            cur = branches_[b][li]->forward(cur, mode, rng, trace.branch_caches[b][li]);
        expect_rank(cur, 2, spec_.name + "/branch output");
        trace.branch_outputs.push_back(cur);
    }
    int total_f = 0;
    for (const auto& t : trace.branch_outputs) total_f += t.dim(1);
    concat = Tensor({n, total_f});
    int off = 0;
    for (const auto& t : trace.branch_outputs) {
        int f = t.dim(1);
        for (int ni = 0; ni < n; ++ni)
            for (int i = 0; i < f; ++i)
                concat.values[static_cast<size_t>(ni) * total_f + off + i] =
                    t.values[static_cast<size_t>(ni) * f + i];
        off += f;
    }
    Tensor cur = std::move(concat);
    trace.head_caches.resize(head_.size());
    for (size_t li = 0; li < head_.size(); ++li)
        cur = head_[li]->forward(cur, mode, rng, trace.head_caches[li]);
    if (cur.shape.size() != 2 || cur.dim(1) != spec_.output_dim)
        throw ShapeError(spec_.name + ": head output has shape " + shape_str(cur.shape) +
                         ", expected [N," + std::to_string(spec_.output_dim) + "]");
    return cur;
}

Tensor Network::forward(const Tensor& x, Mode mode, Rng& rng) const {
    NetTrace trace;
    return forward(x, mode, rng, trace);
}

Tensor Network::backward(const Tensor& grad_out, const NetTrace& trace) const {
    if (trace.input_shape.empty())
        throw ShapeError(spec_.name + ": backward without a cached forward trace");
    Tensor cur = grad_out;
    for (size_t li = head_.size(); li-- > 0;)
        cur = head_[li]->backward(cur, trace.head_caches[li]);
    // split concat gradient back to branches
    int n = cur.dim(0);
    int total_f = cur.dim(1);
    Tensor grad_in(trace.input_shape);
    int off = 0;
    for (size_t b = 0; b < branches_.size(); ++b) {
        int f = trace.branch_outputs[b].dim(1);
        Tensor gb({n, f});
        for (int ni = 0; ni < n; ++ni)
            for (int i = 0; i < f; ++i)
                gb.values[static_cast<size_t>(ni) * f + i] =
                    cur.values[static_cast<size_t>(ni) * total_f + off + i];
        off += f;
        Tensor g = std::move(gb);
        for (size_t li = branches_[b].size(); li-- > 0;)
            g = branches_[b][li]->backward(g, trace.branch_caches[b][li]);
        for (size_t i = 0; i < grad_in.values.size(); ++i) grad_in.values[i] += g.values[i];
    }
    return grad_in;
}

void Network::share_conv_params_with(Network& other) {
    if (spec_.branches != other.spec_.branches ||
        spec_.branch_layers.size() != other.spec_.branch_layers.size())
        throw ShapeError("share_conv_params_with: incompatible network structures");
    for (size_t b = 0; b < branches_.size(); ++b) {
        for (size_t li = 0; li < branches_[b].size(); ++li) {
            if (spec_.branch_layers[li].kind != LayerKind::Conv2d) continue;
            std::vector<ParamPtr> donor;
            other.branches_[b][li]->collect_params(donor);
            size_t cursor = 0;
            branches_[b][li]->adopt_params(donor, cursor);
        }
    }
    rebuild_registry();
}

void Network::set_dropout(double p) {
    for (auto& branch : branches_)
        for (auto& layer : branch)
            if (layer->spec().kind == LayerKind::Dropout) layer->set_drop_prob(p);
    for (auto& layer : head_)
        if (layer->spec().kind == LayerKind::Dropout) layer->set_drop_prob(p);
    for (size_t b = 0; b < branches_.size(); ++b) {
        for (size_t li = 0; li < branches_[b].size(); ++li)
            if (spec_.branch_layers[li].kind == LayerKind::Dropout)
                spec_.branch_layers[li].drop_prob = p;
    }
    for (auto& l : spec_.head_layers)
        if (l.kind == LayerKind::Dropout) l.drop_prob = p;
}

void Network::unshare_params() {
    for (auto& branch : branches_) {
        for (auto& layer : branch) {
            std::vector<ParamPtr> own;
            layer->collect_params(own);
            std::vector<ParamPtr> copies;
            for (const auto& p : own) {
                auto c = std::make_shared<Param>(p->path, p->value.shape, p->trainable);
                c->value = p->value;
                copies.push_back(c);
            }
            size_t cursor = 0;
            layer->adopt_params(copies, cursor);
        }
    }
    rebuild_registry();
}

uint64_t params_hash(const std::vector<ParamPtr>& params) {
    uint64_t h = 1469598103934665603ull;
    auto mix = [&h](const void* data, size_t len) {
        const unsigned char* p = static_cast<const unsigned char*>(data);
        for (size_t i = 0; i < len; ++i) {
            h ^= p[i];
            h *= 1099511628211ull;
        }
    };
    for (const auto& p : params)
        mix(p->value.values.data(), p->value.values.size() * sizeof(double));
    return h;
}

}  // namespace enhance::nn

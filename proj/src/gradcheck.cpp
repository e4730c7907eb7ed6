#include "enhance/gradcheck.hpp"

#include <cmath>
#include <functional>

#include "enhance/errors.hpp"
#include "enhance/losses.hpp"
#include "enhance/transform.hpp"

namespace enhance {

namespace {

constexpr double kH = 1e-5;

void record(GradCheckResult& r, double analytic, double fd) {
    double denom = std::max({std::fabs(analytic), std::fabs(fd), 1e-6});
    r.max_rel_err = std::max(r.max_rel_err, std::fabs(analytic - fd) / denom);
    ++r.cases;
}

// Central difference of a scalar functional over every coordinate of `values`,
// compared against the matching analytic gradient.
void fd_sweep(std::vector<double>& values, const std::vector<double>& analytic,
              const std::function<double()>& eval, GradCheckResult& r, int max_coords) {
    int n = static_cast<int>(values.size());
    int stride = std::max(1, n / std::max(1, max_coords));
    for (int i = 0; i < n; i += stride) {
        double saved = values[i];
        values[i] = saved + kH;
        double jp = eval();
        values[i] = saved - kH;
        double jm = eval();
        values[i] = saved;
        record(r, analytic[i], (jp - jm) / (2.0 * kH));
    }
}

nn::Tensor random_tensor(std::vector<int> shape, Rng& rng, double scale = 1.0) {
    nn::Tensor t(std::move(shape));
    for (double& v : t.values) v = rng.normal(0.0, scale);
    return t;
}

double dot(const nn::Tensor& a, const nn::Tensor& b) {
    double s = 0.0;
    for (size_t i = 0; i < a.values.size(); ++i) s += a.values[i] * b.values[i];
    return s;
}

struct LayerCase {
    nn::LayerSpec spec;
    std::vector<int> input_shape;
    nn::Mode mode;
};

LayerCase layer_case(nn::LayerKind kind) {
    using nn::LayerSpec;
    switch (kind) {
        case nn::LayerKind::Conv2d:
            return {LayerSpec::conv2d(2, 3, 3, 2, 1), {2, 2, 4, 4}, nn::Mode::Train};
        case nn::LayerKind::BatchNorm:
            return {LayerSpec::batchnorm(3), {4, 3, 2, 2}, nn::Mode::Train};
        case nn::LayerKind::LeakyRelu:
            return {LayerSpec::leaky_relu(0.2), {2, 3, 2, 2}, nn::Mode::Train};
        case nn::LayerKind::Dropout:
            return {LayerSpec::dropout(0.3), {2, 3, 2, 2}, nn::Mode::Train};
        case nn::LayerKind::AvgPoolGlobal:
            return {LayerSpec::avgpool_global(), {2, 3, 4, 4}, nn::Mode::Train};
        case nn::LayerKind::Linear:
            return {LayerSpec::linear(4, 3), {2, 4}, nn::Mode::Train};
    }
    throw UsageError("unknown layer kind");
}

}  // namespace

GradCheckResult gradcheck_layer(nn::LayerKind kind, uint64_t seed, int cases) {
    LayerCase lc = layer_case(kind);
    Rng init_rng(seed);
    nn::Layer layer(lc.spec, "gc");
    layer.init_params(init_rng);
    std::vector<nn::ParamPtr> params;
    layer.collect_params(params);
    // Non-zero biases / perturbed gamma so their gradients are exercised
    // away from the initialization point.
    for (auto& p : params)
        if (p->trainable)
            for (double& v : p->value.values) v += init_rng.uniform(-0.05, 0.05);

    nn::Tensor x = random_tensor(lc.input_shape, init_rng);
    if (kind == nn::LayerKind::LeakyRelu)  // keep coordinates away from the kink
        for (double& v : x.values)
            if (std::fabs(v) < 0.05) v = (v < 0 ? -0.1 : 0.1);

    // Dropout masks must be identical across finite-difference evaluations,
    // so every forward call uses a freshly seeded generator.
    const uint64_t fwd_seed = seed + 17;
    auto fwd = [&](const nn::Tensor& in, nn::LayerCache& cache) {
        Rng r(fwd_seed);
        return layer.forward(in, lc.mode, r, cache);
    };

    nn::LayerCache cache;
    nn::Tensor out = fwd(x, cache);
    nn::Tensor cot = random_tensor(out.shape, init_rng);

    for (auto& p : params) p->grad.zero();
    nn::Tensor grad_in = layer.backward(cot, cache);

    GradCheckResult result;
    auto eval = [&]() {
        nn::LayerCache c;
        return dot(fwd(x, c), cot);
    };
    fd_sweep(x.values, grad_in.values, eval, result, cases);
    for (auto& p : params) {
        if (!p->trainable) continue;
        fd_sweep(p->value.values, p->grad.values, eval, result, cases);
    }
    return result;
}

GradCheckResult gradcheck_network(uint64_t seed, int cases) {
    using nn::LayerSpec;
    nn::NetworkSpec spec;
    spec.name = "gradcheck-tiny";
    spec.branches = 2;
    spec.branch_layers = {LayerSpec::conv2d(3, 4, 3, 2, 1), LayerSpec::batchnorm(4),
                          LayerSpec::leaky_relu(0.2), LayerSpec::avgpool_global(),
                          LayerSpec::linear(4, 5), LayerSpec::dropout(0.25)};
    spec.head_layers = {LayerSpec::linear(10, 6)};
    spec.input_size = 4;
    spec.output_dim = 6;

    Rng init_rng(seed);
    nn::Network net(spec, init_rng);
    for (auto& p : net.params())
        if (p->trainable)
            for (double& v : p->value.values) v += init_rng.uniform(-0.05, 0.05);

    nn::Tensor x = random_tensor({2, 3, 4, 4}, init_rng);
    const uint64_t fwd_seed = seed + 29;

    nn::NetTrace trace;
    {
        Rng r(fwd_seed);
        net.forward(x, nn::Mode::Train, r, trace);
    }
    nn::Tensor cot = random_tensor({2, 6}, init_rng);
    net.zero_grad();
    nn::Tensor grad_in = net.backward(cot, trace);

    GradCheckResult result;
    auto eval = [&]() {
        Rng r(fwd_seed);
        return dot(net.forward(x, nn::Mode::Train, r), cot);
    };
    fd_sweep(x.values, grad_in.values, eval, result, cases);
    for (auto& p : net.params()) {
        if (!p->trainable) continue;
        fd_sweep(p->value.values, p->grad.values, eval, result, cases);
    }
    return result;
}

GradCheckResult gradcheck_transform(uint64_t seed, int cases) {
    Rng rng(seed);
    ImageBuffer x(5, 5);
    for (double& v : x.data) v = rng.uniform(0.1, 0.9);
    CoefficientMatrix theta;
    for (double& t : theta.theta) t = rng.uniform(-0.05, 0.05);

    ImageBuffer cot(5, 5);
    for (double& v : cot.data) v = rng.normal(0.0, 1.0);

    CoefficientMatrix analytic = transform_gradients(x, cot);
    GradCheckResult result;
    std::vector<double> theta_v(theta.theta.begin(), theta.theta.end());
    std::vector<double> analytic_v(analytic.theta.begin(), analytic.theta.end());
    auto eval = [&]() {
        CoefficientMatrix th;
        std::copy(theta_v.begin(), theta_v.end(), th.theta.begin());
        ImageBuffer out = apply_transform_unclamped(x, th);
        double s = 0.0;
        for (size_t i = 0; i < out.data.size(); ++i) s += out.data[i] * cot.data[i];
        return s;
    };
    fd_sweep(theta_v, analytic_v, eval, result, cases);
    return result;
}

GradCheckResult gradcheck_transform_input(uint64_t seed, int cases) {
    Rng rng(seed);
    ImageBuffer x(4, 4);
    for (double& v : x.data) v = rng.uniform(0.1, 0.9);
    CoefficientMatrix theta;
    for (double& t : theta.theta) t = rng.uniform(-0.1, 0.1);

    ImageBuffer cot(4, 4);
    for (double& v : cot.data) v = rng.normal(0.0, 1.0);

    ImageBuffer analytic = transform_input_gradients(x, theta, cot);
    GradCheckResult result;
    auto eval = [&]() {
        ImageBuffer out = apply_transform_unclamped(x, theta);
        double s = 0.0;
        for (size_t i = 0; i < out.data.size(); ++i) s += out.data[i] * cot.data[i];
        return s;
    };
    fd_sweep(x.data, analytic.data, eval, result, cases);
    return result;
}

GradCheckResult gradcheck_lab_loss(uint64_t seed, int cases) {
    Rng rng(seed);
    ImageBuffer pred(4, 4), target(4, 4);
    for (double& v : pred.data) v = rng.uniform(0.1, 0.9);
    for (double& v : target.data) v = rng.uniform(0.1, 0.9);

    LabLoss ll = paired_loss(pred, target);
    GradCheckResult result;
    auto eval = [&]() { return paired_loss(pred, target).loss; };
    fd_sweep(pred.data, ll.grad.data, eval, result, cases);
    return result;
}

}  // namespace enhance

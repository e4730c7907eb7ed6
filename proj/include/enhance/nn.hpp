#pragma once

#include <memory>
#include <string>
#include <vector>

#include "enhance/rng.hpp"
#include "enhance/tensor.hpp"

namespace enhance::nn {

enum class LayerKind { Conv2d, BatchNorm, LeakyRelu, Dropout, AvgPoolGlobal, Linear };

std::string layer_kind_name(LayerKind k);
LayerKind layer_kind_from_name(const std::string& name);

struct LayerSpec {
    LayerKind kind = LayerKind::LeakyRelu;
    // conv2d
    int in_channels = 0;
    int out_channels = 0;
    int kernel = 3;
    int stride = 1;
    int pad = 1;
    // batchnorm
    int channels = 0;
    // leaky relu
    double negative_slope = 0.2;
    // dropout
    double drop_prob = 0.0;
    // linear
    int in_features = 0;
    int out_features = 0;
    bool zero_init = false;

    static LayerSpec conv2d(int cin, int cout, int k = 3, int s = 2, int p = 1);
    static LayerSpec batchnorm(int channels);
    static LayerSpec leaky_relu(double slope = 0.2);
    static LayerSpec dropout(double p);
    static LayerSpec avgpool_global();
    static LayerSpec linear(int in_f, int out_f, bool zero = false);

    void validate() const;
};

struct NetworkSpec {
    std::string name;
    int branches = 1;
    std::vector<LayerSpec> branch_layers;
    std::vector<LayerSpec> head_layers;
    int input_size = 256;  // spatial side expected by enhance(); forward accepts any size
    int output_dim = 30;
};

// Reference architectures. Exact layer stacks are fixed here; branch count 1/3/5
// selects the multi-branch ablation variants of the paired generator.
NetworkSpec make_paired_generator_spec(int branches = 5, double branch_dropout = 0.5,
                                       int input_size = 256);
NetworkSpec make_unpaired_generator_spec(double dropout = 0.0, int input_size = 256);
NetworkSpec make_discriminator_spec(double dropout = 0.12, int input_size = 256);

struct Param {
    std::string path;
    Tensor value;
    Tensor grad;
    bool trainable = true;  // false for batchnorm running stats

    explicit Param(std::string p, std::vector<int> shape, bool train = true)
        : path(std::move(p)), value(std::move(shape)), trainable(train) {
        grad = Tensor(value.shape);
    }
};
using ParamPtr = std::shared_ptr<Param>;

enum class Mode {
    Train,   // dropout active, batchnorm batch stats + running-stat update
    Eval,    // dropout off, batchnorm running stats
    Sample,  // dropout active, batchnorm running stats, no updates (frozen nets)
};

struct LayerCache {
    Tensor input;
    Tensor mask;      // dropout
    Tensor xhat;      // batchnorm normalized input
    std::vector<double> mean, inv_std;
    bool bn_batch_stats = false;
    std::vector<int> spatial;  // for avgpool backward
};

class Layer {
public:
    Layer(const LayerSpec& spec, const std::string& path);
    ~Layer() = default;

    const LayerSpec& spec() const { return spec_; }

    // Registers parameters (in creation order) into out.
    void collect_params(std::vector<ParamPtr>& out) const;

    // Replaces this layer's parameter storage with the given ones
    // (weight sharing across networks). Order must match collect_params.
    void adopt_params(const std::vector<ParamPtr>& params, size_t& cursor);

    void init_params(Rng& rng);

    void set_drop_prob(double p) { spec_.drop_prob = p; }

    Tensor forward(const Tensor& x, Mode mode, Rng& rng, LayerCache& cache) const;
    // Returns grad wrt input; accumulates into parameter grads.
    Tensor backward(const Tensor& grad_out, const LayerCache& cache) const;

private:
    LayerSpec spec_;
    std::string path_;
    // Conv/Linear: {weight, bias}. BatchNorm: {gamma, beta, running_mean, running_var}.
    std::vector<ParamPtr> params_;
};

struct NetTrace {
    std::vector<std::vector<LayerCache>> branch_caches;  // per branch
    std::vector<LayerCache> head_caches;
    std::vector<Tensor> branch_outputs;
    std::vector<int> input_shape;
};

class Network {
public:
    Network(const NetworkSpec& spec, Rng& init_rng);

    const NetworkSpec& spec() const { return spec_; }

    // Ordered parameter registry (branch order then head; includes
    // batchnorm running stats as non-trainable entries).
    const std::vector<ParamPtr>& params() const { return params_; }

    // Shares every conv weight/bias with `other` (feature-extractor sharing);
    // batchnorm and linear parameters stay private.
    void share_conv_params_with(Network& other);
    // Deep-copies any shared parameter storage so this network owns all of it.
    void unshare_params();

    // Sets the drop probability of every dropout layer (phase switches).
    void set_dropout(double p);

    void zero_grad();

    // x: [N,3,H,W] -> [N,output_dim]
    Tensor forward(const Tensor& x, Mode mode, Rng& rng, NetTrace& trace) const;
    Tensor forward(const Tensor& x, Mode mode, Rng& rng) const;  // no-trace convenience

    // grad_out: [N,output_dim] -> grad wrt input [N,3,H,W];
    // accumulates parameter gradients.
    Tensor backward(const Tensor& grad_out, const NetTrace& trace) const;

private:
    void rebuild_registry();

    NetworkSpec spec_;
    std::vector<std::vector<std::unique_ptr<Layer>>> branches_;
    std::vector<std::unique_ptr<Layer>> head_;
    std::vector<ParamPtr> params_;
};

// FNV-1a over the raw parameter bytes, registry order.
uint64_t params_hash(const std::vector<ParamPtr>& params);

}  // namespace enhance::nn

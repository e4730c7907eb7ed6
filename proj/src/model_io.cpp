#include "enhance/model_io.hpp"

#include <json.hpp>

#include <cstring>
#include <fstream>

#include "enhance/errors.hpp"

namespace enhance::nn {

namespace {

using nlohmann::json;

json layer_to_json(const LayerSpec& l) {
    json j;
    j["kind"] = layer_kind_name(l.kind);
    switch (l.kind) {
        case LayerKind::Conv2d:
            j["in_channels"] = l.in_channels;
            j["out_channels"] = l.out_channels;
            j["kernel"] = l.kernel;
            j["stride"] = l.stride;
            j["pad"] = l.pad;
            break;
        case LayerKind::BatchNorm:
            j["channels"] = l.channels;
            break;
        case LayerKind::LeakyRelu:
            j["negative_slope"] = l.negative_slope;
            break;
        case LayerKind::Dropout:
            j["drop_prob"] = l.drop_prob;
            break;
        case LayerKind::Linear:
            j["in_features"] = l.in_features;
            j["out_features"] = l.out_features;
            j["zero_init"] = l.zero_init;
            break;
        case LayerKind::AvgPoolGlobal:
            break;
    }
    return j;
}

LayerSpec layer_from_json(const json& j) {
    LayerSpec l;
    l.kind = layer_kind_from_name(j.at("kind").get<std::string>());
    switch (l.kind) {
        case LayerKind::Conv2d:
            l.in_channels = j.at("in_channels");
            l.out_channels = j.at("out_channels");
            l.kernel = j.at("kernel");
            l.stride = j.at("stride");
            l.pad = j.at("pad");
            break;
        case LayerKind::BatchNorm:
            l.channels = j.at("channels");
            break;
        case LayerKind::LeakyRelu:
            l.negative_slope = j.at("negative_slope");
            break;
        case LayerKind::Dropout:
            l.drop_prob = j.at("drop_prob");
            break;
        case LayerKind::Linear:
            l.in_features = j.at("in_features");
            l.out_features = j.at("out_features");
            l.zero_init = j.at("zero_init");
            break;
        case LayerKind::AvgPoolGlobal:
            break;
    }
    return l;
}

template <typename T>
void write_pod(std::ostream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in, const std::string& path) {
    T v;
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw IoError("load_model: truncated file " + path);
    return v;
}

constexpr char kMagic[4] = {'P', 'Q', 'C', 'M'};

}  // namespace

std::string network_spec_to_json(const NetworkSpec& spec) {
    json j;
    j["name"] = spec.name;
    j["branches"] = spec.branches;
    j["input_size"] = spec.input_size;
    j["output_dim"] = spec.output_dim;
    j["branch_layers"] = json::array();
    for (const auto& l : spec.branch_layers) j["branch_layers"].push_back(layer_to_json(l));
    j["head_layers"] = json::array();
    for (const auto& l : spec.head_layers) j["head_layers"].push_back(layer_to_json(l));
    return j.dump();
}

NetworkSpec network_spec_from_json(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw IoError(std::string("model spec JSON parse error: ") + e.what());
    }
    NetworkSpec spec;
    spec.name = j.at("name");
    spec.branches = j.at("branches");
    spec.input_size = j.at("input_size");
    spec.output_dim = j.at("output_dim");
    for (const auto& lj : j.at("branch_layers")) spec.branch_layers.push_back(layer_from_json(lj));
    for (const auto& lj : j.at("head_layers")) spec.head_layers.push_back(layer_from_json(lj));
    return spec;
}

void save_model(const Network& net, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("save_model: cannot open " + path);
    f.write(kMagic, 4);
    write_pod<uint32_t>(f, kModelFormatVersion);
    std::string spec_json = network_spec_to_json(net.spec());
    write_pod<uint32_t>(f, static_cast<uint32_t>(spec_json.size()));
    f.write(spec_json.data(), static_cast<std::streamsize>(spec_json.size()));
    const auto& params = net.params();
    write_pod<uint32_t>(f, static_cast<uint32_t>(params.size()));
    for (const auto& p : params) {
        write_pod<uint32_t>(f, static_cast<uint32_t>(p->path.size()));
        f.write(p->path.data(), static_cast<std::streamsize>(p->path.size()));
        write_pod<uint32_t>(f, static_cast<uint32_t>(p->value.shape.size()));
        for (int d : p->value.shape) write_pod<uint32_t>(f, static_cast<uint32_t>(d));
        for (double v : p->value.values) write_pod<float>(f, static_cast<float>(v));
    }
    if (!f) throw IoError("save_model: write failed for " + path);
}

std::unique_ptr<Network> load_model(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("load_model: cannot open " + path);
    char magic[4];
    f.read(magic, 4);
    if (!f || std::memcmp(magic, kMagic, 4) != 0)
        throw IoError("load_model: bad magic in " + path);
    uint32_t version = read_pod<uint32_t>(f, path);
    if (version != kModelFormatVersion)
        throw IoError("load_model: unsupported format version " + std::to_string(version) +
                      " in " + path);
    uint32_t json_len = read_pod<uint32_t>(f, path);
    std::string spec_json(json_len, '\0');
    f.read(spec_json.data(), json_len);
    if (!f) throw IoError("load_model: truncated file " + path);
    NetworkSpec spec = network_spec_from_json(spec_json);

    Rng dummy(0);
    auto net = std::make_unique<Network>(spec, dummy);
    uint32_t count = read_pod<uint32_t>(f, path);
    if (count != net->params().size())
        throw IoError("load_model: parameter count mismatch in " + path);
    for (const auto& p : net->params()) {
        uint32_t path_len = read_pod<uint32_t>(f, path);
        std::string ppath(path_len, '\0');
        f.read(ppath.data(), path_len);
        if (!f) throw IoError("load_model: truncated file " + path);
        if (ppath != p->path)
            throw IoError("load_model: parameter order mismatch at " + ppath);
        uint32_t ndims = read_pod<uint32_t>(f, path);
        std::vector<int> shape(ndims);
        for (uint32_t i = 0; i < ndims; ++i)
            shape[i] = static_cast<int>(read_pod<uint32_t>(f, path));
        if (shape != p->value.shape)
            throw IoError("load_model: parameter shape mismatch at " + ppath);
        for (double& v : p->value.values) v = read_pod<float>(f, path);
    }
    return net;
}

}  // namespace enhance::nn

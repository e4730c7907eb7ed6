#pragma once

#include <memory>
#include <string>

#include "enhance/nn.hpp"

namespace enhance::nn {

// Model file: little-endian binary. Magic "PQCM", u32 format version,
// u32 JSON length + JSON-serialized NetworkSpec, u32 parameter count, then
// per parameter: u32 path length + path, u32 ndims + dims, float32 data.
// Registry order; batchnorm running stats included.
inline constexpr uint32_t kModelFormatVersion = 1;

void save_model(const Network& net, const std::string& path);
std::unique_ptr<Network> load_model(const std::string& path);

std::string network_spec_to_json(const NetworkSpec& spec);
NetworkSpec network_spec_from_json(const std::string& json_text);

}  // namespace enhance::nn

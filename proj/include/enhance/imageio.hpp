#pragma once

#include <string>

#include "enhance/errors.hpp"
#include "enhance/image.hpp"

namespace enhance {

struct ImageIoError : IoError {
    enum class Category { UnsupportedFormat, Corrupt, AlphaUnsupported, FileSystem };
    Category category;
    ImageIoError(Category c, const std::string& msg) : IoError(msg), category(c) {}
};

// Loads an 8/16-bit RGB PNG or a binary PPM (P6); integer samples are
// normalized to [0,1] by the max sample value. Alpha channels are rejected.
ImageBuffer load_image(const std::string& path);

// Saves 8-bit PNG or P6 PPM, chosen by file extension. Values are clamped
// then quantized with round-half-up. PNG can optionally be written at
// 16 bits (used by the synthetic corpus to keep quantization negligible).
void save_image(const ImageBuffer& img, const std::string& path, int bit_depth = 8);

bool has_supported_extension(const std::string& path);

}  // namespace enhance

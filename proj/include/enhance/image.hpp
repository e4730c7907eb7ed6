#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "enhance/errors.hpp"
#include "enhance/rng.hpp"

namespace enhance {

// H x W x 3 interleaved RGB raster, values nominally in [0,1].
struct ImageBuffer {
    int height = 0;
    int width = 0;
    std::vector<double> data;  // size = height * width * 3

    ImageBuffer() = default;
    ImageBuffer(int h, int w, double fill = 0.0)
        : height(h), width(w), data(static_cast<size_t>(h) * w * 3, fill) {}

    double* pixel(int y, int x) { return data.data() + (static_cast<size_t>(y) * width + x) * 3; }
    const double* pixel(int y, int x) const {
        return data.data() + (static_cast<size_t>(y) * width + x) * 3;
    }
    size_t pixel_count() const { return static_cast<size_t>(height) * width; }
    bool same_shape(const ImageBuffer& o) const {
        return height == o.height && width == o.width;
    }
};

void clamp01(ImageBuffer& img);

// Bilinear resampling with half-pixel-centered sample positions.
ImageBuffer resize_bilinear(const ImageBuffer& img, int out_h, int out_w);

// Transpose of resize_bilinear as a linear map: scatters a gradient on the
// resized raster back to the source raster.
ImageBuffer resize_bilinear_backward(const ImageBuffer& grad_out, int in_h, int in_w);

ImageBuffer crop(const ImageBuffer& img, int top, int left, int h, int w);

// One of the 8 square-tile augmentations: rotation k*90 degrees composed with
// an optional vertical flip. Sampled uniformly from rng.
ImageBuffer augment(const ImageBuffer& img, Rng& rng);

// Deterministic form used when the same outcome must be applied to a pair.
struct AugmentChoice {
    int quarter_turns = 0;  // 0..3
    bool vflip = false;
};
AugmentChoice sample_augment(Rng& rng);
ImageBuffer apply_augment(const ImageBuffer& img, AugmentChoice c);

}  // namespace enhance

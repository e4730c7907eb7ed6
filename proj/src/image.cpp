#include "enhance/image.hpp"

#include <algorithm>
#include <cmath>

namespace enhance {

void clamp01(ImageBuffer& img) {
    for (double& v : img.data) v = std::clamp(v, 0.0, 1.0);
}

ImageBuffer resize_bilinear(const ImageBuffer& img, int out_h, int out_w) {
    if (out_h < 1 || out_w < 1) throw ShapeError("resize_bilinear: output dims must be >= 1");
    ImageBuffer out(out_h, out_w);
    double sy = static_cast<double>(img.height) / out_h;
    double sx = static_cast<double>(img.width) / out_w;
#pragma omp parallel for schedule(static)
    for (int oy = 0; oy < out_h; ++oy) {
        double fy = (oy + 0.5) * sy - 0.5;
        int y0 = static_cast<int>(std::floor(fy));
        double wy = fy - y0;
        int y0c = std::clamp(y0, 0, img.height - 1);
        int y1c = std::clamp(y0 + 1, 0, img.height - 1);
        for (int ox = 0; ox < out_w; ++ox) {
            double fx = (ox + 0.5) * sx - 0.5;
            int x0 = static_cast<int>(std::floor(fx));
            double wx = fx - x0;
            int x0c = std::clamp(x0, 0, img.width - 1);
            int x1c = std::clamp(x0 + 1, 0, img.width - 1);
            const double* p00 = img.pixel(y0c, x0c);
            const double* p01 = img.pixel(y0c, x1c);
            const double* p10 = img.pixel(y1c, x0c);
            const double* p11 = img.pixel(y1c, x1c);
            double* q = out.pixel(oy, ox);
            for (int c = 0; c < 3; ++c) {
                double top = p00[c] * (1.0 - wx) + p01[c] * wx;
                double bot = p10[c] * (1.0 - wx) + p11[c] * wx;
                q[c] = top * (1.0 - wy) + bot * wy;
            }
        }
    }
    return out;
}

ImageBuffer resize_bilinear_backward(const ImageBuffer& grad_out, int in_h, int in_w) {
    ImageBuffer grad_in(in_h, in_w, 0.0);
    double sy = static_cast<double>(in_h) / grad_out.height;
    double sx = static_cast<double>(in_w) / grad_out.width;
    for (int oy = 0; oy < grad_out.height; ++oy) {
        double fy = (oy + 0.5) * sy - 0.5;
        int y0 = static_cast<int>(std::floor(fy));
        double wy = fy - y0;
        int y0c = std::clamp(y0, 0, in_h - 1);
        int y1c = std::clamp(y0 + 1, 0, in_h - 1);
        for (int ox = 0; ox < grad_out.width; ++ox) {
            double fx = (ox + 0.5) * sx - 0.5;
            int x0 = static_cast<int>(std::floor(fx));
            double wx = fx - x0;
            int x0c = std::clamp(x0, 0, in_w - 1);
            int x1c = std::clamp(x0 + 1, 0, in_w - 1);
            const double* g = grad_out.pixel(oy, ox);
            for (int c = 0; c < 3; ++c) {
                grad_in.pixel(y0c, x0c)[c] += g[c] * (1.0 - wx) * (1.0 - wy);
                grad_in.pixel(y0c, x1c)[c] += g[c] * wx * (1.0 - wy);
                grad_in.pixel(y1c, x0c)[c] += g[c] * (1.0 - wx) * wy;
                grad_in.pixel(y1c, x1c)[c] += g[c] * wx * wy;
            }
        }
    }
    return grad_in;
}

ImageBuffer crop(const ImageBuffer& img, int top, int left, int h, int w) {
    if (top < 0 || left < 0 || h < 1 || w < 1 || top + h > img.height || left + w > img.width)
        throw ShapeError("crop: rectangle out of bounds");
    ImageBuffer out(h, w);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < 3; ++c) out.pixel(y, x)[c] = img.pixel(top + y, left + x)[c];
    return out;
}

AugmentChoice sample_augment(Rng& rng) {
    AugmentChoice c;
    c.quarter_turns = static_cast<int>(rng.next_index(4));
    c.vflip = rng.coin();
    return c;
}

ImageBuffer apply_augment(const ImageBuffer& img, AugmentChoice c) {
    if (img.height != img.width && (c.quarter_turns % 2) != 0)
        throw ShapeError("augment: 90/270 degree rotation requires a square image");
    ImageBuffer out(img.height, img.width);
    int h = img.height;
    int w = img.width;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            int sy = y;
            int sx = x;
            // inverse rotation: where does output (y,x) come from
            switch (c.quarter_turns) {
                case 0: break;
                case 1: sy = x; sx = h - 1 - y; break;          // 90 deg CCW output
                case 2: sy = h - 1 - y; sx = w - 1 - x; break;  // 180
                case 3: sy = w - 1 - x; sx = y; break;          // 270
                default: break;
            }
            if (c.vflip) sy = h - 1 - sy;
            for (int ch = 0; ch < 3; ++ch) out.pixel(y, x)[ch] = img.pixel(sy, sx)[ch];
        }
    }
    return out;
}

ImageBuffer augment(const ImageBuffer& img, Rng& rng) {
    return apply_augment(img, sample_augment(rng));
}

}  // namespace enhance

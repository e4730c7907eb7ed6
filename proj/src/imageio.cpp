#include "enhance/imageio.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <vector>

namespace enhance {

namespace {

using Cat = ImageIoError::Category;

std::string lower_ext(const std::string& path) {
    auto pos = path.rfind('.');
    if (pos == std::string::npos) return "";
    std::string ext = path.substr(pos + 1);
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return ext;
}

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

ImageBuffer load_png(const std::string& path) {
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) throw ImageIoError(Cat::FileSystem, "cannot open " + path);

    png_byte header[8];
    if (std::fread(header, 1, 8, fp.get()) != 8 || png_sig_cmp(header, 0, 8))
        throw ImageIoError(Cat::UnsupportedFormat, "not a PNG file: " + path);

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw ImageIoError(Cat::Corrupt, "libpng init failed");
    }
    std::vector<std::vector<png_byte>> rows;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw ImageIoError(Cat::Corrupt, "corrupt PNG: " + path);
    }
    png_init_io(png, fp.get());
    png_set_sig_bytes(png, 8);
    png_read_info(png, info);

    png_uint_32 w = png_get_image_width(png, info);
    png_uint_32 h = png_get_image_height(png, info);
    int bit_depth = png_get_bit_depth(png, info);
    int color_type = png_get_color_type(png, info);

    if (color_type == PNG_COLOR_TYPE_RGBA || color_type == PNG_COLOR_TYPE_GRAY_ALPHA ||
        png_get_valid(png, info, PNG_INFO_tRNS)) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw ImageIoError(Cat::AlphaUnsupported, "alpha channel not supported: " + path);
    }
    if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color_type == PNG_COLOR_TYPE_GRAY) {
        if (bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
        png_set_gray_to_rgb(png);
    }
    if (bit_depth == 16) png_set_swap(png);  // wire format is big-endian
    png_read_update_info(png, info);

    int channels = png_get_channels(png, info);
    if (channels != 3) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw ImageIoError(Cat::UnsupportedFormat, "expected 3-channel PNG: " + path);
    }
    size_t rowbytes = png_get_rowbytes(png, info);
    rows.assign(h, std::vector<png_byte>(rowbytes));
    std::vector<png_bytep> row_ptrs(h);
    for (png_uint_32 y = 0; y < h; ++y) row_ptrs[y] = rows[y].data();
    png_read_image(png, row_ptrs.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    ImageBuffer img(static_cast<int>(h), static_cast<int>(w));
    if (bit_depth == 16) {
        for (png_uint_32 y = 0; y < h; ++y) {
            const uint16_t* src = reinterpret_cast<const uint16_t*>(rows[y].data());
            for (png_uint_32 x = 0; x < w * 3; ++x)
                img.data[(static_cast<size_t>(y) * w * 3) + x] = src[x] / 65535.0;
        }
    } else {
        for (png_uint_32 y = 0; y < h; ++y)
            for (png_uint_32 x = 0; x < w * 3; ++x)
                img.data[(static_cast<size_t>(y) * w * 3) + x] = rows[y][x] / 255.0;
    }
    return img;
}

void save_png(const ImageBuffer& img, const std::string& path, int bit_depth) {
    FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) throw ImageIoError(Cat::FileSystem, "cannot open for writing: " + path);
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_write_struct(&png, &info);
        throw ImageIoError(Cat::Corrupt, "libpng init failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw ImageIoError(Cat::FileSystem, "PNG write failed: " + path);
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, img.width, img.height, bit_depth, PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    if (bit_depth == 16) png_set_swap(png);
    if (bit_depth == 16) {
        std::vector<uint16_t> row(static_cast<size_t>(img.width) * 3);
        for (int y = 0; y < img.height; ++y) {
            for (int x = 0; x < img.width * 3; ++x) {
                double v =
                    std::clamp(img.data[(static_cast<size_t>(y) * img.width * 3) + x], 0.0, 1.0);
                row[x] = static_cast<uint16_t>(std::floor(v * 65535.0 + 0.5));
            }
            png_write_row(png, reinterpret_cast<png_bytep>(row.data()));
        }
    } else {
        std::vector<png_byte> row(static_cast<size_t>(img.width) * 3);
        for (int y = 0; y < img.height; ++y) {
            for (int x = 0; x < img.width * 3; ++x) {
                double v =
                    std::clamp(img.data[(static_cast<size_t>(y) * img.width * 3) + x], 0.0, 1.0);
                row[x] = static_cast<png_byte>(std::floor(v * 255.0 + 0.5));
            }
            png_write_row(png, row.data());
        }
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

int read_pnm_token(std::istream& in) {
    // skips whitespace and '#' comments
    while (true) {
        int c = in.peek();
        if (c == '#') {
            std::string line;
            std::getline(in, line);
        } else if (std::isspace(c)) {
            in.get();
        } else {
            break;
        }
    }
    int v;
    if (!(in >> v)) throw ImageIoError(Cat::Corrupt, "malformed PPM header");
    return v;
}

ImageBuffer load_ppm(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ImageIoError(Cat::FileSystem, "cannot open " + path);
    char magic[2];
    f.read(magic, 2);
    if (!f || magic[0] != 'P' || magic[1] != '6')
        throw ImageIoError(Cat::UnsupportedFormat, "not a binary PPM (P6): " + path);
    int w = read_pnm_token(f);
    int h = read_pnm_token(f);
    int maxval = read_pnm_token(f);
    if (w < 1 || h < 1 || maxval < 1 || maxval > 65535)
        throw ImageIoError(Cat::Corrupt, "bad PPM header: " + path);
    f.get();  // single whitespace after maxval
    ImageBuffer img(h, w);
    size_t n = static_cast<size_t>(h) * w * 3;
    if (maxval < 256) {
        std::vector<unsigned char> buf(n);
        f.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(n));
        if (!f) throw ImageIoError(Cat::Corrupt, "truncated PPM: " + path);
        for (size_t i = 0; i < n; ++i) img.data[i] = buf[i] / static_cast<double>(maxval);
    } else {
        std::vector<unsigned char> buf(n * 2);
        f.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(n * 2));
        if (!f) throw ImageIoError(Cat::Corrupt, "truncated PPM: " + path);
        for (size_t i = 0; i < n; ++i) {
            int v = (buf[i * 2] << 8) | buf[i * 2 + 1];  // big-endian per spec
            img.data[i] = v / static_cast<double>(maxval);
        }
    }
    return img;
}

void save_ppm(const ImageBuffer& img, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ImageIoError(Cat::FileSystem, "cannot open for writing: " + path);
    f << "P6\n" << img.width << " " << img.height << "\n255\n";
    std::vector<unsigned char> buf(img.data.size());
    for (size_t i = 0; i < img.data.size(); ++i) {
        double v = std::clamp(img.data[i], 0.0, 1.0);
        buf[i] = static_cast<unsigned char>(std::floor(v * 255.0 + 0.5));
    }
    f.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!f) throw ImageIoError(Cat::FileSystem, "PPM write failed: " + path);
}

}  // namespace

bool has_supported_extension(const std::string& path) {
    std::string ext = lower_ext(path);
    return ext == "png" || ext == "ppm";
}

ImageBuffer load_image(const std::string& path) {
    std::string ext = lower_ext(path);
    if (ext == "png") return load_png(path);
    if (ext == "ppm") return load_ppm(path);
    throw ImageIoError(Cat::UnsupportedFormat, "unsupported image extension: " + path);
}

void save_image(const ImageBuffer& img, const std::string& path, int bit_depth) {
    if (bit_depth != 8 && bit_depth != 16)
        throw ImageIoError(Cat::UnsupportedFormat, "bit depth must be 8 or 16");
    std::string ext = lower_ext(path);
    if (ext == "png") return save_png(img, path, bit_depth);
    if (ext == "ppm") {
        if (bit_depth != 8)
            throw ImageIoError(Cat::UnsupportedFormat, "PPM output is 8-bit only");
        return save_ppm(img, path);
    }
    throw ImageIoError(Cat::UnsupportedFormat, "unsupported image extension: " + path);
}

}  // namespace enhance

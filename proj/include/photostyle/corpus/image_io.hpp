#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "photostyle/core/error.hpp"
#include "photostyle/core/tensor.hpp"

namespace photostyle {

// Images move through the toolkit as 8-bit RGB rasters on disk (binary PPM,
// maxval 255) and as normalized (3,H,W) double tensors in memory. PPM keeps
// the corpus bit-exact under re-generation, which the determinism contracts
// depend on.

struct RgbImage {
    int height = 0;
    int width = 0;
    std::vector<std::uint8_t> pixels;  // H*W*3, row-major, RGB interleaved

    std::uint8_t& at(int y, int x, int c) {
        return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + c];
    }
    std::uint8_t at(int y, int x, int c) const {
        return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + c];
    }
};

namespace detail {

inline int ppm_read_token(std::istream& in, const std::string& path) {
    // Skips whitespace and '#' comments between header fields.
    int c = in.get();
    while (c != EOF) {
        if (c == '#') {
            while (c != EOF && c != '\n') c = in.get();
        } else if (!std::isspace(c)) {
            break;
        }
        c = in.get();
    }
    if (c == EOF) throw RuntimeError("ppm: truncated header in " + path);
    int value = 0;
    bool any = false;
    while (c != EOF && std::isdigit(c)) {
        value = value * 10 + (c - '0');
        any = true;
        c = in.get();
    }
    if (!any) throw RuntimeError("ppm: malformed header in " + path);
    return value;
}

}  // namespace detail

inline RgbImage read_ppm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw RuntimeError("ppm: cannot open " + path);
    char m0 = 0, m1 = 0;
    in.get(m0);
    in.get(m1);
    if (m0 != 'P' || m1 != '6') throw RuntimeError("ppm: not a binary PPM (P6): " + path);
    RgbImage img;
    img.width = detail::ppm_read_token(in, path);
    img.height = detail::ppm_read_token(in, path);
    const int maxval = detail::ppm_read_token(in, path);
    if (img.width <= 0 || img.height <= 0)
        throw RuntimeError("ppm: bad dimensions in " + path);
    if (maxval != 255) throw RuntimeError("ppm: unsupported maxval in " + path);
    img.pixels.resize(static_cast<std::size_t>(img.width) * img.height * 3);
    in.read(reinterpret_cast<char*>(img.pixels.data()),
            static_cast<std::streamsize>(img.pixels.size()));
    if (static_cast<std::size_t>(in.gcount()) != img.pixels.size())
        throw RuntimeError("ppm: truncated pixel data in " + path);
    return img;
}

inline void write_ppm(const std::string& path, const RgbImage& img) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw RuntimeError("ppm: cannot write " + path);
    out << "P6\n" << img.width << ' ' << img.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.pixels.data()),
              static_cast<std::streamsize>(img.pixels.size()));
    if (!out) throw RuntimeError("ppm: short write to " + path);
}

// Bilinear resample, pixel-center aligned. Operates on [0,255] doubles.
inline RgbImage resize_bilinear(const RgbImage& src, int out_h, int out_w) {
    if (out_h <= 0 || out_w <= 0) throw ValidationError("resize: target size must be positive");
    if (src.height == out_h && src.width == out_w) return src;
    RgbImage dst;
    dst.height = out_h;
    dst.width = out_w;
    dst.pixels.resize(static_cast<std::size_t>(out_h) * out_w * 3);
    const double sy = static_cast<double>(src.height) / out_h;
    const double sx = static_cast<double>(src.width) / out_w;
    for (int y = 0; y < out_h; ++y) {
        double fy = (y + 0.5) * sy - 0.5;
        fy = std::clamp(fy, 0.0, static_cast<double>(src.height - 1));
        const int y0 = static_cast<int>(std::floor(fy));
        const int y1 = std::min(y0 + 1, src.height - 1);
        const double wy = fy - y0;
        for (int x = 0; x < out_w; ++x) {
            double fx = (x + 0.5) * sx - 0.5;
            fx = std::clamp(fx, 0.0, static_cast<double>(src.width - 1));
            const int x0 = static_cast<int>(std::floor(fx));
            const int x1 = std::min(x0 + 1, src.width - 1);
            const double wx = fx - x0;
            for (int c = 0; c < 3; ++c) {
                const double top = (1.0 - wx) * src.at(y0, x0, c) + wx * src.at(y0, x1, c);
                const double bot = (1.0 - wx) * src.at(y1, x0, c) + wx * src.at(y1, x1, c);
                const double v = (1.0 - wy) * top + wy * bot;
                dst.at(y, x, c) = static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 255.0)));
            }
        }
    }
    return dst;
}

// Per-channel normalization applied after scaling pixels to [0,1].
struct Normalization {
    std::array<double, 3> mean{0.5, 0.5, 0.5};
    std::array<double, 3> stddev{0.5, 0.5, 0.5};
};

struct ImageTensor {
    Tensor data;  // (3, H, W), normalized
    std::optional<int> label;
};

inline ImageTensor to_tensor(const RgbImage& img, const Normalization& norm,
                             std::optional<int> label = std::nullopt) {
    for (double s : norm.stddev)
        if (s <= 0.0) throw ValidationError("normalization stddev must be > 0");
    ImageTensor out;
    out.data = Tensor({3, img.height, img.width});
    out.label = label;
    std::size_t i = 0;
    for (int c = 0; c < 3; ++c) {
        const double m = norm.mean[c];
        const double inv = 1.0 / norm.stddev[c];
        for (int y = 0; y < img.height; ++y)
            for (int x = 0; x < img.width; ++x)
                out.data[i++] = (img.at(y, x, c) / 255.0 - m) * inv;
    }
    return out;
}

}  // namespace photostyle

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "posebank/errors.hpp"

namespace posebank {

// Dense raster with a per-pixel validity mask. Pixels are stored as doubles
// in [0, 255]; 8-bit quantization happens only at file boundaries.
struct ImageGrid {
    int width = 0;
    int height = 0;
    int channels = 0;
    std::vector<double> pixels;   // row-major, interleaved channels
    std::vector<std::uint8_t> valid;

    ImageGrid() = default;
    ImageGrid(int w, int h, int c, double fill = 0.0)
        : width(w), height(h), channels(c),
          pixels(static_cast<std::size_t>(w) * h * c, fill),
          valid(static_cast<std::size_t>(w) * h, 1) {}

    double& at(int x, int y, int c) {
        return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
    double at(int x, int y, int c) const {
        return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
    bool is_valid(int x, int y) const {
        return valid[static_cast<std::size_t>(y) * width + x] != 0;
    }
    void set_valid(int x, int y, bool ok) {
        valid[static_cast<std::size_t>(y) * width + x] = ok ? 1 : 0;
    }
    bool in_bounds(int x, int y) const {
        return x >= 0 && x < width && y >= 0 && y < height;
    }
    std::size_t invalid_count() const {
        std::size_t n = 0;
        for (auto v : valid) n += (v == 0);
        return n;
    }
};

// Bilinear sample at a continuous pixel-center coordinate. Out-of-range
// neighbors contribute `border`. Exact at integer coordinates.
inline double sample_bilinear(const ImageGrid& img, double x, double y, int c,
                              double border = 0.0) {
    const double fx = std::floor(x);
    const double fy = std::floor(y);
    const int x0 = static_cast<int>(fx);
    const int y0 = static_cast<int>(fy);
    const double ax = x - fx;
    const double ay = y - fy;
    auto fetch = [&](int px, int py) {
        return img.in_bounds(px, py) ? img.at(px, py, c) : border;
    };
    const double top = fetch(x0, y0) * (1.0 - ax) + fetch(x0 + 1, y0) * ax;
    const double bot = fetch(x0, y0 + 1) * (1.0 - ax) + fetch(x0 + 1, y0 + 1) * ax;
    return top * (1.0 - ay) + bot * ay;
}

// True when every input pixel the bilinear stencil touches with nonzero
// weight is a valid in-bounds pixel.
inline bool sample_region_valid(const ImageGrid& img, double x, double y) {
    const int x0 = static_cast<int>(std::floor(x));
    const int y0 = static_cast<int>(std::floor(y));
    const double ax = x - std::floor(x);
    const double ay = y - std::floor(y);
    auto ok = [&](int px, int py) { return img.in_bounds(px, py) && img.is_valid(px, py); };
    if (!ok(x0, y0)) return false;
    if (ax > 0.0 && !ok(x0 + 1, y0)) return false;
    if (ay > 0.0 && !ok(x0, y0 + 1)) return false;
    if (ax > 0.0 && ay > 0.0 && !ok(x0 + 1, y0 + 1)) return false;
    return true;
}

inline std::uint8_t quantize_pixel(double v) {
    return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

// ---- netpbm I/O (binary P5 grayscale / P6 color) ---------------------------

namespace detail {

inline int read_pnm_token(std::istream& in) {
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
    int value = 0;
    if (!(in >> value)) throw ParseError("pnm: malformed header token");
    return value;
}

}  // namespace detail

inline ImageGrid read_pnm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open image: " + path);
    std::string magic;
    in >> magic;
    int channels;
    if (magic == "P5") {
        channels = 1;
    } else if (magic == "P6") {
        channels = 3;
    } else {
        throw ParseError("pnm '" + path + "': unsupported magic '" + magic + "'");
    }
    const int w = detail::read_pnm_token(in);
    const int h = detail::read_pnm_token(in);
    const int maxval = detail::read_pnm_token(in);
    if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 255) {
        throw ParseError("pnm '" + path + "': bad dimensions or maxval");
    }
    in.get();  // single whitespace after maxval
    ImageGrid img(w, h, channels);
    std::vector<std::uint8_t> raw(static_cast<std::size_t>(w) * h * channels);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (in.gcount() != static_cast<std::streamsize>(raw.size())) {
        throw ParseError("pnm '" + path + "': truncated pixel data");
    }
    for (std::size_t i = 0; i < raw.size(); ++i) {
        img.pixels[i] = static_cast<double>(raw[i]);
    }
    return img;
}

inline void write_pnm(const ImageGrid& img, const std::string& path) {
    if (img.channels != 1 && img.channels != 3) {
        throw ParameterError("write_pnm: only 1- or 3-channel images supported");
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("cannot open image for writing: " + path);
    out << (img.channels == 1 ? "P5" : "P6") << "\n"
        << img.width << " " << img.height << "\n255\n";
    std::vector<std::uint8_t> raw(img.pixels.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        raw[i] = quantize_pixel(img.pixels[i]);
    }
    out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
}

}  // namespace posebank

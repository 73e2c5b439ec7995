#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <queue>
#include <tuple>
#include <vector>

#include "posebank/errors.hpp"
#include "posebank/image.hpp"

namespace posebank {

namespace detail {

enum class FmmFlag : std::uint8_t { known = 0, band = 1, inside = 2 };

struct FmmState {
    int width = 0;
    int height = 0;
    std::vector<FmmFlag> flags;
    std::vector<double> dist;

    FmmFlag flag(int x, int y) const {
        if (x < 0 || x >= width || y < 0 || y >= height) return FmmFlag::inside;
        return flags[static_cast<std::size_t>(y) * width + x];
    }
    double t(int x, int y) const {
        if (x < 0 || x >= width || y < 0 || y >= height) return 1e6;
        return dist[static_cast<std::size_t>(y) * width + x];
    }
    bool usable(int x, int y) const { return flag(x, y) != FmmFlag::inside; }
};

// One quadrant step of the eikonal update |grad T| = 1.
inline double fmm_solve(const FmmState& s, int x1, int y1, int x2, int y2) {
    const double t1 = s.t(x1, y1);
    const double t2 = s.t(x2, y2);
    const bool u1 = s.usable(x1, y1);
    const bool u2 = s.usable(x2, y2);
    if (u1 && u2) {
        if (std::fabs(t1 - t2) >= 1.0) return 1.0 + std::min(t1, t2);
        return 0.5 * (t1 + t2 + std::sqrt(2.0 - (t1 - t2) * (t1 - t2)));
    }
    if (u1) return 1.0 + t1;
    if (u2) return 1.0 + t2;
    return 1e6;
}

// Central/one-sided differences over usable pixels; zero when isolated.
inline void fmm_gradient(const FmmState& s, const std::vector<double>& field, int x, int y,
                         double& gx, double& gy) {
    auto value = [&](int px, int py) { return field[static_cast<std::size_t>(py) * s.width + px]; };
    const bool left = x > 0 && s.usable(x - 1, y);
    const bool right = x < s.width - 1 && s.usable(x + 1, y);
    if (left && right) {
        gx = 0.5 * (value(x + 1, y) - value(x - 1, y));
    } else if (right) {
        gx = value(x + 1, y) - value(x, y);
    } else if (left) {
        gx = value(x, y) - value(x - 1, y);
    } else {
        gx = 0.0;
    }
    const bool up = y > 0 && s.usable(x, y - 1);
    const bool down = y < s.height - 1 && s.usable(x, y + 1);
    if (up && down) {
        gy = 0.5 * (value(x, y + 1) - value(x, y - 1));
    } else if (down) {
        gy = value(x, y + 1) - value(x, y);
    } else if (up) {
        gy = value(x, y) - value(x, y - 1);
    } else {
        gy = 0.0;
    }
}

}  // namespace detail

// Telea fast-marching inpainting: fills masked pixels from the hole boundary
// inward; each pixel becomes a normalized weighted average of nearby known
// values, with weights combining propagation direction, geometric distance,
// and level-set proximity.
inline ImageGrid inpaint_telea(const ImageGrid& img, double radius = 3.0) {
    if (radius <= 0.0) {
        throw ParameterError("inpaint_telea: radius must be positive");
    }
    ImageGrid out = img;
    if (out.invalid_count() == 0) {
        return out;  // nothing to fill
    }

    detail::FmmState s;
    s.width = img.width;
    s.height = img.height;
    s.flags.assign(static_cast<std::size_t>(img.width) * img.height, detail::FmmFlag::known);
    s.dist.assign(s.flags.size(), 0.0);

    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            if (!img.is_valid(x, y)) {
                s.flags[static_cast<std::size_t>(y) * img.width + x] = detail::FmmFlag::inside;
                s.dist[static_cast<std::size_t>(y) * img.width + x] = 1e6;
            }
        }
    }

    // min-heap keyed by (T, y, x) so tie order is deterministic
    using HeapEntry = std::tuple<double, int, int>;
    std::priority_queue<HeapEntry, std::vector<HeapEntry>, std::greater<>> band;

    // initial band: known pixels bordering the hole
    const int dx4[] = {1, -1, 0, 0};
    const int dy4[] = {0, 0, 1, -1};
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            if (s.flag(x, y) != detail::FmmFlag::known) continue;
            for (int d = 0; d < 4; ++d) {
                if (s.flag(x + dx4[d], y + dy4[d]) == detail::FmmFlag::inside &&
                    img.in_bounds(x + dx4[d], y + dy4[d])) {
                    s.flags[static_cast<std::size_t>(y) * img.width + x] = detail::FmmFlag::band;
                    band.emplace(0.0, y, x);
                    break;
                }
            }
        }
    }
    if (band.empty()) {
        throw ParameterError("inpaint_telea: image has no known pixels to fill from");
    }

    const int window = static_cast<int>(std::ceil(radius));
    const double radius2 = radius * radius;

    auto inpaint_pixel = [&](int px, int py) {
        double grad_tx, grad_ty;
        detail::fmm_gradient(s, s.dist, px, py, grad_tx, grad_ty);
        std::vector<double> accum(static_cast<std::size_t>(img.channels), 0.0);
        double weight_sum = 0.0;
        for (int qy = py - window; qy <= py + window; ++qy) {
            for (int qx = px - window; qx <= px + window; ++qx) {
                if (!img.in_bounds(qx, qy) || (qx == px && qy == py)) continue;
                if (!s.usable(qx, qy)) continue;
                const double rx = static_cast<double>(px - qx);
                const double ry = static_cast<double>(py - qy);
                const double r2 = rx * rx + ry * ry;
                if (r2 > radius2) continue;
                const double rlen = std::sqrt(r2);

                double dir = (rx * grad_tx + ry * grad_ty) / rlen;
                if (std::fabs(dir) <= 1e-2) dir = 1e-6;
                const double dst = 1.0 / r2;
                const double lev = 1.0 / (1.0 + std::fabs(s.t(qx, qy) - s.t(px, py)));
                const double w = std::fabs(dir) * dst * lev;

                for (int c = 0; c < img.channels; ++c) {
                    accum[static_cast<std::size_t>(c)] += w * out.at(qx, qy, c);
                }
                weight_sum += w;
            }
        }
        for (int c = 0; c < img.channels; ++c) {
            out.at(px, py, c) = weight_sum > 0.0 ? accum[static_cast<std::size_t>(c)] / weight_sum
                                                 : 0.0;
        }
        out.set_valid(px, py, true);
    };

    while (!band.empty()) {
        auto [t, py, px] = band.top();
        band.pop();
        s.flags[static_cast<std::size_t>(py) * img.width + px] = detail::FmmFlag::known;
        for (int d = 0; d < 4; ++d) {
            const int qx = px + dx4[d];
            const int qy = py + dy4[d];
            if (!img.in_bounds(qx, qy)) continue;
            if (s.flag(qx, qy) != detail::FmmFlag::inside) continue;
            const double updated = std::min(
                std::min(detail::fmm_solve(s, qx - 1, qy, qx, qy - 1),
                         detail::fmm_solve(s, qx + 1, qy, qx, qy - 1)),
                std::min(detail::fmm_solve(s, qx - 1, qy, qx, qy + 1),
                         detail::fmm_solve(s, qx + 1, qy, qx, qy + 1)));
            s.dist[static_cast<std::size_t>(qy) * img.width + qx] = updated;
            inpaint_pixel(qx, qy);
            s.flags[static_cast<std::size_t>(qy) * img.width + qx] = detail::FmmFlag::band;
            band.emplace(updated, qy, qx);
        }
    }

    for (auto f : s.flags) {
        if (f == detail::FmmFlag::inside) {
            throw NumericError("inpaint_telea: masked region unreachable from known pixels");
        }
    }
    return out;
}

}  // namespace posebank

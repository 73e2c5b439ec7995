#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <numbers>

#include "posebank/errors.hpp"

namespace posebank {

enum class HeatmapNormalization {
    paper,      // 1/sqrt(2 pi sigma^2) peak factor
    unit_peak,  // peak value 1
};

// Per-keypoint 2-D Gaussian rendering. values(y, x) indexing.
struct Heatmap {
    int width = 0;
    int height = 0;
    Eigen::MatrixXd values;
    double key_x = 0.0;
    double key_y = 0.0;
    bool out_of_bounds = false;

    // Ties resolve to the highest linear index, matching round-half-up of
    // the source coordinate.
    std::pair<int, int> argmax() const {
        int bx = 0, by = 0;
        double best = values(0, 0);
        for (int y = 0; y < height; ++y) {
            for (int x = 0; x < width; ++x) {
                if (values(y, x) >= best) {
                    best = values(y, x);
                    bx = x;
                    by = y;
                }
            }
        }
        return {bx, by};
    }
};

inline Heatmap gaussian_heatmap(double key_x, double key_y, int width, int height, double sigma,
                                HeatmapNormalization normalization = HeatmapNormalization::paper) {
    if (sigma <= 0.0) {
        throw ParameterError("gaussian_heatmap: sigma must be positive");
    }
    if (width <= 0 || height <= 0) {
        throw ParameterError("gaussian_heatmap: dimensions must be positive");
    }
    Heatmap h;
    h.width = width;
    h.height = height;
    h.key_x = key_x;
    h.key_y = key_y;
    h.out_of_bounds = key_x < 0.0 || key_x > width - 1 || key_y < 0.0 || key_y > height - 1;
    const double peak = normalization == HeatmapNormalization::paper
                            ? 1.0 / std::sqrt(2.0 * std::numbers::pi * sigma * sigma)
                            : 1.0;
    const double inv_two_sigma2 = 1.0 / (2.0 * sigma * sigma);
    h.values.resize(height, width);
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            const double dx = static_cast<double>(x) - key_x;
            const double dy = static_cast<double>(y) - key_y;
            h.values(y, x) = peak * std::exp(-(dx * dx + dy * dy) * inv_two_sigma2);
        }
    }
    return h;
}

}  // namespace posebank

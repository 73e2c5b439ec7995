#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <vector>

#include "posebank/errors.hpp"
#include "posebank/image.hpp"

namespace posebank {

struct Point2 {
    double x = 0.0;
    double y = 0.0;
};

// Radial basis U(r) = r^2 log r^2 with U(0) = 0, expressed on the squared
// radius to avoid the square root.
inline double tps_basis_r2(double r2) {
    return r2 > 0.0 ? r2 * std::log(r2) : 0.0;
}

// Affine part plus per-control-point bending weights of a 2-D TPS map.
// The side conditions sum(w) = 0, sum(w x) = 0, sum(w y) = 0 hold per output
// dimension; with lambda = 0 the map interpolates the control points.
struct ThinPlateTransform {
    std::vector<Point2> control_src;
    std::vector<Point2> control_dst;
    Eigen::Matrix<double, 3, 2> affine;   // rows: constant, x, y; cols: out x, out y
    Eigen::MatrixXd bending_weights;      // n x 2
    double regularization = 0.0;

    Point2 apply(Point2 p) const {
        double ox = affine(0, 0) + affine(1, 0) * p.x + affine(2, 0) * p.y;
        double oy = affine(0, 1) + affine(1, 1) * p.x + affine(2, 1) * p.y;
        for (std::size_t i = 0; i < control_src.size(); ++i) {
            const double dx = p.x - control_src[i].x;
            const double dy = p.y - control_src[i].y;
            const double u = tps_basis_r2(dx * dx + dy * dy);
            ox += bending_weights(static_cast<Eigen::Index>(i), 0) * u;
            oy += bending_weights(static_cast<Eigen::Index>(i), 1) * u;
        }
        return {ox, oy};
    }

    double max_bending_weight() const {
        return bending_weights.size() > 0 ? bending_weights.cwiseAbs().maxCoeff() : 0.0;
    }
};

// Solves the standard TPS linear system
//   [K + lambda I, P; P^T, 0] [w; a] = [dst; 0]
// where K_ij = U(|src_i - src_j|) and P_i = (1, x_i, y_i). Collinear or
// duplicate control points make the system singular.
inline ThinPlateTransform tps_fit(const std::vector<Point2>& src, const std::vector<Point2>& dst,
                                  double lambda = 0.0) {
    const auto n = static_cast<Eigen::Index>(src.size());
    if (src.size() != dst.size()) {
        throw ShapeError("tps_fit: control point sets differ in size");
    }
    if (n < 3) {
        throw ParameterError("tps_fit: need at least 3 control points");
    }
    if (lambda < 0.0) {
        throw ParameterError("tps_fit: lambda must be nonnegative");
    }

    Eigen::MatrixXd system = Eigen::MatrixXd::Zero(n + 3, n + 3);
    Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(n + 3, 2);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto ui = static_cast<std::size_t>(i);
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const auto uj = static_cast<std::size_t>(j);
            const double dx = src[ui].x - src[uj].x;
            const double dy = src[ui].y - src[uj].y;
            const double u = tps_basis_r2(dx * dx + dy * dy);
            system(i, j) = u;
            system(j, i) = u;
        }
        system(i, i) = lambda;
        system(i, n) = 1.0;
        system(i, n + 1) = src[ui].x;
        system(i, n + 2) = src[ui].y;
        system(n, i) = 1.0;
        system(n + 1, i) = src[ui].x;
        system(n + 2, i) = src[ui].y;
        rhs(i, 0) = dst[ui].x;
        rhs(i, 1) = dst[ui].y;
    }

    Eigen::FullPivLU<Eigen::MatrixXd> lu(system);
    if (!lu.isInvertible()) {
        throw DegenerateGeometryError(
            "tps_fit: singular system (collinear or duplicate control points)");
    }
    const Eigen::MatrixXd solution = lu.solve(rhs);

    ThinPlateTransform t;
    t.control_src = src;
    t.control_dst = dst;
    t.bending_weights = solution.topRows(n);
    t.affine = solution.bottomRows(3);
    t.regularization = lambda;
    return t;
}

// Backward warp: output pixel (x, y) samples the input at T(x, y) with
// bilinear interpolation, so T must map output coordinates to input
// coordinates (fit it on reversed control points to realize a forward warp).
// Output pixels whose source falls outside the input are marked invalid.
inline ImageGrid warp_image(const ImageGrid& img, const ThinPlateTransform& transform) {
    // solver noise can push an in-bounds source a few ulps past the border
    constexpr double kEdgeSlack = 1e-6;
    ImageGrid out(img.width, img.height, img.channels);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            Point2 s = transform.apply({static_cast<double>(x), static_cast<double>(y)});
            if (s.x < -kEdgeSlack || s.x > img.width - 1 + kEdgeSlack || s.y < -kEdgeSlack ||
                s.y > img.height - 1 + kEdgeSlack) {
                out.set_valid(x, y, false);
                for (int c = 0; c < img.channels; ++c) out.at(x, y, c) = 0.0;
                continue;
            }
            s.x = std::clamp(s.x, 0.0, static_cast<double>(img.width - 1));
            s.y = std::clamp(s.y, 0.0, static_cast<double>(img.height - 1));
            if (!sample_region_valid(img, s.x, s.y)) {
                out.set_valid(x, y, false);
                for (int c = 0; c < img.channels; ++c) out.at(x, y, c) = 0.0;
                continue;
            }
            for (int c = 0; c < img.channels; ++c) {
                out.at(x, y, c) = sample_bilinear(img, s.x, s.y, c);
            }
        }
    }
    return out;
}

}  // namespace posebank

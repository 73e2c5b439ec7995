#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <utility>
#include <vector>

#include "posebank/errors.hpp"
#include "posebank/image.hpp"
#include "posebank/inpaint.hpp"
#include "posebank/pose.hpp"
#include "posebank/rng.hpp"
#include "posebank/tps.hpp"

namespace posebank {

inline Point2 rotate_about(Point2 p, Point2 center, double angle_deg) {
    const double rad = angle_deg * std::numbers::pi / 180.0;
    const double c = std::cos(rad);
    const double s = std::sin(rad);
    const double dx = p.x - center.x;
    const double dy = p.y - center.y;
    return {center.x + c * dx - s * dy, center.y + s * dx + c * dy};
}

// Control point pair for a limb warp. Rotated points come first (knee, paw
// per selected limb), then the anchors that pin the rest of the image.
struct ControlPoints {
    std::vector<Point2> src;
    std::vector<Point2> dst;

    bool empty() const { return src.empty(); }
    std::size_t size() const { return src.size(); }
};

namespace detail {

inline bool near_duplicate(const std::vector<Point2>& pts, Point2 p, double eps = 0.5) {
    for (const Point2& q : pts) {
        const double dx = q.x - p.x;
        const double dy = q.y - p.y;
        if (dx * dx + dy * dy < eps * eps) return true;
    }
    return false;
}

inline void push_unique(ControlPoints& cp, Point2 src, Point2 dst) {
    if (detail::near_duplicate(cp.src, src)) return;
    cp.src.push_back(src);
    cp.dst.push_back(dst);
}

inline bool limb_fully_visible(const PoseInstance& pose, const Limb& limb) {
    return pose.keypoints[static_cast<std::size_t>(limb.elbow)].v == 1 &&
           pose.keypoints[static_cast<std::size_t>(limb.knee)].v == 1 &&
           pose.keypoints[static_cast<std::size_t>(limb.paw)].v == 1;
}

// Shared control-set assembly; `warped` (when given) receives the rotated
// keypoint coordinates as the new ground truth.
inline ControlPoints build_limb_control_points(const PoseInstance& pose, const Skeleton& skeleton,
                                               const std::vector<int>& limbs,
                                               const std::vector<double>& angles, int image_width,
                                               int image_height, PoseInstance* warped) {
    ControlPoints cp;
    std::vector<bool> rotated_joint(pose.keypoints.size(), false);
    std::vector<bool> anchor_joint(pose.keypoints.size(), false);

    for (std::size_t m = 0; m < limbs.size(); ++m) {
        const int idx = limbs[m];
        if (idx < 0 || idx >= static_cast<int>(skeleton.limbs.size())) {
            throw ParameterError("limb control points: limb index out of range");
        }
        const Limb& limb = skeleton.limbs[static_cast<std::size_t>(idx)];
        if (!limb_fully_visible(pose, limb)) continue;
        const Keypoint& elbow = pose.keypoints[static_cast<std::size_t>(limb.elbow)];
        for (int joint : {limb.knee, limb.paw}) {
            const Keypoint& kp = pose.keypoints[static_cast<std::size_t>(joint)];
            const Point2 src{kp.x, kp.y};
            const Point2 dst = rotate_about(src, {elbow.x, elbow.y}, angles[m]);
            push_unique(cp, src, dst);
            rotated_joint[static_cast<std::size_t>(joint)] = true;
            if (warped) {
                warped->keypoints[static_cast<std::size_t>(joint)].x = dst.x;
                warped->keypoints[static_cast<std::size_t>(joint)].y = dst.y;
            }
        }
        anchor_joint[static_cast<std::size_t>(limb.elbow)] = true;
    }
    if (cp.empty()) {
        return cp;  // no fully visible selected limb; caller skips augmentation
    }

    for (std::size_t q = 0; q < pose.keypoints.size(); ++q) {
        if (rotated_joint[q]) continue;
        const Keypoint& kp = pose.keypoints[q];
        if (kp.v != 1 && !anchor_joint[q]) continue;
        push_unique(cp, {kp.x, kp.y}, {kp.x, kp.y});
    }
    const double w1 = static_cast<double>(image_width - 1);
    const double h1 = static_cast<double>(image_height - 1);
    for (const Point2 corner : {Point2{0, 0}, Point2{w1, 0}, Point2{0, h1}, Point2{w1, h1}}) {
        push_unique(cp, corner, corner);
    }
    return cp;
}

}  // namespace detail

// Builds the TPS control set for rotating the selected limbs' knee and paw
// keypoints about their elbow. Limbs with any invisible joint are excluded.
// Anchors (src = dst) are the selected limbs' elbows, every visible keypoint
// outside the selected limbs, and the four image corners, so the warp stays
// local to the rotated limbs. Returns an empty set when no selected limb is
// fully visible.
inline ControlPoints limb_control_points(const PoseInstance& pose, const Skeleton& skeleton,
                                         double angle_deg, const std::vector<int>& limb_mask,
                                         int image_width, int image_height) {
    const std::vector<double> angles(limb_mask.size(), angle_deg);
    return detail::build_limb_control_points(pose, skeleton, limb_mask, angles, image_width,
                                             image_height, nullptr);
}

struct WarpAugmentConfig {
    double max_angle_deg = 15.0;
    double inpaint_radius = 3.0;
    double tps_lambda = 0.0;
};

// Deterministic core of the warp augmentation: rotates the given limbs by the
// given per-limb angles, fits the backward TPS, warps, and inpaints whatever
// the warp could not source. Returns nothing when no control set exists.
inline std::optional<std::pair<ImageGrid, PoseInstance>> warp_pose_image_with(
    const ImageGrid& img, const PoseInstance& pose, const Skeleton& skeleton,
    const std::vector<int>& limbs, const std::vector<double>& angles,
    const WarpAugmentConfig& cfg = {}) {
    if (limbs.size() != angles.size()) {
        throw ShapeError("warp_pose_image_with: one angle per limb required");
    }
    PoseInstance warped = pose;
    const ControlPoints cp = detail::build_limb_control_points(pose, skeleton, limbs, angles,
                                                               img.width, img.height, &warped);
    if (cp.empty()) return std::nullopt;

    // backward map: output control points sample the original locations
    const ThinPlateTransform back = tps_fit(cp.dst, cp.src, cfg.tps_lambda);
    ImageGrid out = warp_image(img, back);
    if (out.invalid_count() > 0) {
        out = inpaint_telea(out, cfg.inpaint_radius);
    }
    return std::make_pair(std::move(out), std::move(warped));
}

// Random variant: each fully visible limb is selected with probability 1/2
// (at least one forced), each selected limb gets an independent angle uniform
// in [-max_angle, +max_angle].
inline std::optional<std::pair<ImageGrid, PoseInstance>> warp_pose_image(
    const ImageGrid& img, const PoseInstance& pose, const Skeleton& skeleton, Rng& rng,
    const WarpAugmentConfig& cfg = {}) {
    std::vector<int> candidates;
    for (std::size_t i = 0; i < skeleton.limbs.size(); ++i) {
        if (detail::limb_fully_visible(pose, skeleton.limbs[i])) {
            candidates.push_back(static_cast<int>(i));
        }
    }
    if (candidates.empty()) return std::nullopt;

    std::vector<int> chosen;
    for (int c : candidates) {
        if (rng.bernoulli(0.5)) chosen.push_back(c);
    }
    if (chosen.empty()) {
        chosen.push_back(candidates[rng.uniform_index(candidates.size())]);
    }
    std::vector<double> angles;
    angles.reserve(chosen.size());
    for (std::size_t i = 0; i < chosen.size(); ++i) {
        angles.push_back(rng.uniform(-cfg.max_angle_deg, cfg.max_angle_deg));
    }
    return warp_pose_image_with(img, pose, skeleton, chosen, angles, cfg);
}

// Extends the shorter bbox side symmetrically to a square, zero-pads past the
// image border, crops, resizes to out_size, and maps the keypoints through
// the same transform.
inline std::pair<ImageGrid, PoseInstance> square_crop(const ImageGrid& img, const BBox& bbox,
                                                      int out_size, const PoseInstance& pose) {
    if (bbox.width <= 0.0 || bbox.height <= 0.0) {
        throw ParameterError("square_crop: bbox must have positive area");
    }
    if (out_size <= 0) {
        throw ParameterError("square_crop: out_size must be positive");
    }
    if (bbox.x + bbox.width <= 0.0 || bbox.y + bbox.height <= 0.0 ||
        bbox.x >= static_cast<double>(img.width) || bbox.y >= static_cast<double>(img.height)) {
        throw ParameterError("square_crop: bbox does not overlap the image");
    }

    const double side = std::max(bbox.width, bbox.height);
    const double x0 = bbox.x - 0.5 * (side - bbox.width);
    const double y0 = bbox.y - 0.5 * (side - bbox.height);
    const double scale = side / static_cast<double>(out_size);

    ImageGrid out(out_size, out_size, img.channels);
    for (int y = 0; y < out_size; ++y) {
        for (int x = 0; x < out_size; ++x) {
            const double sx = x0 + (static_cast<double>(x) + 0.5) * scale - 0.5;
            const double sy = y0 + (static_cast<double>(y) + 0.5) * scale - 0.5;
            for (int c = 0; c < img.channels; ++c) {
                out.at(x, y, c) = sample_bilinear(img, sx, sy, c, 0.0);
            }
        }
    }

    PoseInstance mapped = pose;
    for (Keypoint& kp : mapped.keypoints) {
        kp.x = (kp.x - x0 + 0.5) / scale - 0.5;
        kp.y = (kp.y - y0 + 0.5) / scale - 0.5;
    }
    mapped.bbox = {0.0, 0.0, static_cast<double>(out_size), static_cast<double>(out_size)};
    return {std::move(out), std::move(mapped)};
}

enum class BasicAugmentKind {
    flip,
    rotate,
    noise,
};

// flip mirrors horizontally and swaps the skeleton's left/right labels;
// rotate turns image and keypoints about the crop center by `value` degrees;
// noise adds seeded Gaussian noise (stddev `value`) to pixels only.
inline std::pair<ImageGrid, PoseInstance> basic_augment(const ImageGrid& img,
                                                        const PoseInstance& pose,
                                                        const Skeleton& skeleton,
                                                        BasicAugmentKind kind, double value,
                                                        std::uint64_t seed) {
    ImageGrid out_img = img;
    PoseInstance out_pose = pose;
    switch (kind) {
        case BasicAugmentKind::flip: {
            for (int y = 0; y < img.height; ++y) {
                for (int x = 0; x < img.width; ++x) {
                    for (int c = 0; c < img.channels; ++c) {
                        out_img.at(x, y, c) = img.at(img.width - 1 - x, y, c);
                    }
                    out_img.set_valid(x, y, img.is_valid(img.width - 1 - x, y));
                }
            }
            for (Keypoint& kp : out_pose.keypoints) {
                kp.x = static_cast<double>(img.width - 1) - kp.x;
            }
            for (auto [a, b] : skeleton.flip_pairs) {
                std::swap(out_pose.keypoints[static_cast<std::size_t>(a)],
                          out_pose.keypoints[static_cast<std::size_t>(b)]);
            }
            break;
        }
        case BasicAugmentKind::rotate: {
            const Point2 center{0.5 * (img.width - 1), 0.5 * (img.height - 1)};
            for (int y = 0; y < img.height; ++y) {
                for (int x = 0; x < img.width; ++x) {
                    const Point2 s = rotate_about({static_cast<double>(x), static_cast<double>(y)},
                                                  center, -value);
                    const bool inside = s.x >= 0.0 && s.x <= img.width - 1 && s.y >= 0.0 &&
                                        s.y <= img.height - 1;
                    for (int c = 0; c < img.channels; ++c) {
                        out_img.at(x, y, c) = inside ? sample_bilinear(img, s.x, s.y, c) : 0.0;
                    }
                    out_img.set_valid(x, y, true);
                }
            }
            for (Keypoint& kp : out_pose.keypoints) {
                const Point2 p = rotate_about({kp.x, kp.y}, center, value);
                kp.x = p.x;
                kp.y = p.y;
            }
            break;
        }
        case BasicAugmentKind::noise: {
            if (value < 0.0) {
                throw ParameterError("basic_augment: noise stddev must be nonnegative");
            }
            Rng rng(mix64(seed, 0x6e6f697365ULL));
            if (value > 0.0) {
                for (double& px : out_img.pixels) {
                    px = std::clamp(px + rng.gaussian(0.0, value), 0.0, 255.0);
                }
            }
            break;
        }
    }
    return {std::move(out_img), std::move(out_pose)};
}

}  // namespace posebank

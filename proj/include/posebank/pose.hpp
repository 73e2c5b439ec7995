#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <string>
#include <utility>
#include <vector>

#include "posebank/errors.hpp"

namespace posebank {

struct Keypoint {
    double x = 0.0;
    double y = 0.0;
    int v = 0;  // visibility, 0 or 1
};

struct BBox {
    double x = 0.0;
    double y = 0.0;
    double width = 0.0;
    double height = 0.0;
};

// One animal crop: J keypoints plus bounding box and class label.
struct PoseInstance {
    std::string id;
    std::string class_label;
    std::vector<Keypoint> keypoints;
    BBox bbox;
    std::string image_ref;

    int joint_count() const { return static_cast<int>(keypoints.size()); }
};

// A limb chain rotates the knee and paw about the elbow.
struct Limb {
    int elbow = -1;
    int knee = -1;
    int paw = -1;
};

struct Skeleton {
    std::vector<std::string> keypoint_names;
    std::vector<Limb> limbs;
    std::vector<std::pair<int, int>> flip_pairs;

    int joint_count() const { return static_cast<int>(keypoint_names.size()); }

    void validate() const {
        const int j = joint_count();
        for (const Limb& limb : limbs) {
            if (limb.elbow < 0 || limb.elbow >= j || limb.knee < 0 || limb.knee >= j ||
                limb.paw < 0 || limb.paw >= j) {
                throw ParameterError("skeleton limb index out of range");
            }
            if (limb.elbow == limb.knee || limb.knee == limb.paw || limb.elbow == limb.paw) {
                throw ParameterError("skeleton limb indices must be distinct");
            }
        }
        // flip must be an involution: applying the pair swap twice is identity
        std::vector<int> image(j);
        for (int q = 0; q < j; ++q) image[q] = q;
        for (auto [a, b] : flip_pairs) {
            if (a < 0 || a >= j || b < 0 || b >= j || a == b) {
                throw ParameterError("flip pair index out of range");
            }
            image[a] = b;
            image[b] = a;
        }
        for (int q = 0; q < j; ++q) {
            if (image[image[q]] != q) {
                throw ParameterError("flip pairs do not form an involution");
            }
        }
    }
};

// 17-keypoint layout: eyes, earbases, nose, then four elbow/knee/paw limbs
// in left-front, right-front, left-back, right-back order.
inline Skeleton animal_pose_skeleton() {
    Skeleton s;
    s.keypoint_names = {
        "left_eye",        "right_eye",       "left_earbase",   "right_earbase",  "nose",
        "left_front_elbow", "right_front_elbow", "left_back_elbow", "right_back_elbow",
        "left_front_knee",  "right_front_knee",  "left_back_knee",  "right_back_knee",
        "left_front_paw",   "right_front_paw",   "left_back_paw",   "right_back_paw"};
    s.limbs = {
        {5, 9, 13},   // left front
        {6, 10, 14},  // right front
        {7, 11, 15},  // left back
        {8, 12, 16},  // right back
    };
    s.flip_pairs = {{0, 1}, {2, 3}, {5, 6}, {7, 8}, {9, 10}, {11, 12}, {13, 14}, {15, 16}};
    return s;
}

enum class FeatureScaling {
    pixel,
    bbox_normalized,
};

// Row i is the flattened (x, y, v) triples of instance i; D = 3 * J.
struct FeatureMatrix {
    Eigen::MatrixXd data;
    FeatureScaling scaling = FeatureScaling::bbox_normalized;
    int keypoints = 0;  // J

    Eigen::Index rows() const { return data.rows(); }
    Eigen::Index cols() const { return data.cols(); }
};

// Flattens pose labels into an (N, 3J) feature matrix. Under bbox-normalized
// scaling, coordinates are mapped into [0, 1] relative to each instance's box
// (clamped, so loose boxes cannot break the range invariant). When
// zero_invisible is set, keypoints with v = 0 contribute (0, 0, 0).
inline FeatureMatrix flatten_poses(const std::vector<PoseInstance>& instances,
                                   FeatureScaling scaling,
                                   bool zero_invisible = false) {
    if (instances.empty()) {
        throw ParameterError("flatten_poses: empty instance list");
    }
    const int j = instances.front().joint_count();
    if (j == 0) {
        throw ShapeError("flatten_poses: instances have no keypoints");
    }
    FeatureMatrix out;
    out.scaling = scaling;
    out.keypoints = j;
    out.data.resize(static_cast<Eigen::Index>(instances.size()), 3 * j);
    for (std::size_t i = 0; i < instances.size(); ++i) {
        const PoseInstance& inst = instances[i];
        if (inst.joint_count() != j) {
            throw ShapeError("flatten_poses: instance '" + inst.id + "' has " +
                             std::to_string(inst.joint_count()) + " keypoints, expected " +
                             std::to_string(j));
        }
        if (scaling == FeatureScaling::bbox_normalized &&
            (inst.bbox.width <= 0.0 || inst.bbox.height <= 0.0)) {
            throw ParameterError("flatten_poses: instance '" + inst.id +
                                 "' has a degenerate bbox");
        }
        for (int q = 0; q < j; ++q) {
            const Keypoint& kp = inst.keypoints[q];
            double x = kp.x;
            double y = kp.y;
            double v = kp.v != 0 ? 1.0 : 0.0;
            if (zero_invisible && kp.v == 0) {
                x = 0.0;
                y = 0.0;
            } else if (scaling == FeatureScaling::bbox_normalized) {
                x = std::clamp((x - inst.bbox.x) / inst.bbox.width, 0.0, 1.0);
                y = std::clamp((y - inst.bbox.y) / inst.bbox.height, 0.0, 1.0);
            }
            out.data(static_cast<Eigen::Index>(i), 3 * q) = x;
            out.data(static_cast<Eigen::Index>(i), 3 * q + 1) = y;
            out.data(static_cast<Eigen::Index>(i), 3 * q + 2) = v;
        }
    }
    return out;
}

}  // namespace posebank

#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "posebank/kernel.hpp"
#include "posebank/pose.hpp"
#include "posebank/rng.hpp"

namespace testutil {

// Generic random pose: coordinates and visibility both vary, so stacked
// features have full column rank min(N, 3J).
inline posebank::PoseInstance make_pose(posebank::Rng& rng, const std::string& class_label,
                                        const std::string& id, int joints = 17,
                                        double box = 128.0) {
    posebank::PoseInstance inst;
    inst.id = id;
    inst.class_label = class_label;
    inst.bbox = {0.0, 0.0, box, box};
    for (int q = 0; q < joints; ++q) {
        inst.keypoints.push_back(
            {rng.uniform(0.0, box), rng.uniform(0.0, box), rng.bernoulli(0.5) ? 1 : 0});
    }
    return inst;
}

inline std::vector<posebank::PoseInstance> make_poses(posebank::Rng& rng,
                                                      const std::string& class_label,
                                                      std::size_t count, int joints = 17,
                                                      double box = 128.0) {
    std::vector<posebank::PoseInstance> out;
    for (std::size_t i = 0; i < count; ++i) {
        out.push_back(make_pose(rng, class_label, class_label + "_" + std::to_string(i), joints, box));
    }
    return out;
}

// Poses drawn around `blobs` base poses with small jitter; instances cycle
// through the blobs in order so every blob gets count/blobs members.
inline std::vector<posebank::PoseInstance> make_blob_poses(posebank::Rng& rng,
                                                           const std::string& class_label,
                                                           std::size_t count, std::size_t blobs,
                                                           double jitter, int joints = 17,
                                                           double box = 128.0) {
    std::vector<posebank::PoseInstance> bases;
    for (std::size_t b = 0; b < blobs; ++b) {
        bases.push_back(make_pose(rng, class_label, "base", joints, box));
    }
    std::vector<posebank::PoseInstance> out;
    for (std::size_t i = 0; i < count; ++i) {
        const posebank::PoseInstance& base = bases[i % blobs];
        posebank::PoseInstance inst = base;
        inst.id = class_label + "_" + std::to_string(i);
        for (auto& kp : inst.keypoints) {
            kp.x = std::clamp(kp.x + rng.gaussian(0.0, jitter), 0.0, box);
            kp.y = std::clamp(kp.y + rng.gaussian(0.0, jitter), 0.0, box);
        }
        out.push_back(std::move(inst));
    }
    return out;
}

// Full-rank random PSD kernel, K = A A^T / n.
inline posebank::KernelMatrix random_psd_kernel(posebank::Rng& rng, int n) {
    Eigen::MatrixXd a(n, n);
    for (int r = 0; r < n; ++r) {
        for (int c = 0; c < n; ++c) a(r, c) = rng.gaussian();
    }
    posebank::KernelMatrix k;
    k.kind = posebank::KernelKind::linear;
    k.data.noalias() = a * a.transpose() / static_cast<double>(n);
    k.data = ((k.data + k.data.transpose()) / 2.0).eval();
    return k;
}

inline posebank::KernelMatrix diagonal_kernel(const std::vector<double>& entries) {
    posebank::KernelMatrix k;
    k.kind = posebank::KernelKind::linear;
    k.data = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(entries.size()),
                                   static_cast<Eigen::Index>(entries.size()));
    for (std::size_t i = 0; i < entries.size(); ++i) {
        k.data(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = entries[i];
    }
    return k;
}

// Independent rank oracle via SVD of the feature matrix (rank of F F^T equals
// the number of singular values of F above tol * largest).
inline Eigen::Index svd_rank(const Eigen::MatrixXd& features, double tol = 1e-10) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(features);
    const Eigen::VectorXd sv = svd.singularValues();
    if (sv.size() == 0 || sv[0] <= 0.0) return 0;
    Eigen::Index rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i) {
        // eigenvalues of F F^T are squared singular values
        if (sv[i] * sv[i] > tol * sv[0] * sv[0]) ++rank;
    }
    return rank;
}

// Exhaustive subset visitor: calls fn(indices) for every size-k subset of
// [0, n) in lexicographic order.
template <typename Fn>
void for_each_subset(std::size_t n, std::size_t k, Fn&& fn) {
    std::vector<Eigen::Index> subset(k);
    for (std::size_t i = 0; i < k; ++i) subset[i] = static_cast<Eigen::Index>(i);
    if (k > n) return;
    while (true) {
        fn(subset);
        std::size_t pos = k;
        bool advanced = false;
        while (pos > 0) {
            --pos;
            if (subset[pos] < static_cast<Eigen::Index>(n - k + pos)) {
                ++subset[pos];
                for (std::size_t q = pos + 1; q < k; ++q) subset[q] = subset[q - 1] + 1;
                advanced = true;
                break;
            }
        }
        if (!advanced) break;
        if (k == 0) break;
    }
}

inline double submatrix_det(const Eigen::MatrixXd& k, const std::vector<Eigen::Index>& indices) {
    const auto m = static_cast<Eigen::Index>(indices.size());
    if (m == 0) return 1.0;
    Eigen::MatrixXd sub(m, m);
    for (Eigen::Index r = 0; r < m; ++r) {
        for (Eigen::Index c = 0; c < m; ++c) {
            sub(r, c) = k(indices[static_cast<std::size_t>(r)], indices[static_cast<std::size_t>(c)]);
        }
    }
    return sub.determinant();
}

}  // namespace testutil

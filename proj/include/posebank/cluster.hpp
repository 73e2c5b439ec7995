#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "posebank/dpp.hpp"
#include "posebank/errors.hpp"
#include "posebank/kernel.hpp"
#include "posebank/pose.hpp"
#include "posebank/rng.hpp"

namespace posebank {

struct Clustering {
    std::vector<int> assignments;   // per point, in [0, h)
    Eigen::MatrixXd centroids;      // h x D
    double inertia = 0.0;
    int iterations = 0;
};

namespace detail {

inline double sq_dist(const Eigen::MatrixXd& points, Eigen::Index row,
                      const Eigen::MatrixXd& centers, Eigen::Index center) {
    return (points.row(row) - centers.row(center)).squaredNorm();
}

}  // namespace detail

// Lloyd's algorithm with k-means++ initialization. Stops when the largest
// centroid movement drops below 1e-6 or after 100 iterations. Empty clusters
// are reseeded to the point farthest from its assigned centroid. Bitwise
// reproducible for a fixed seed. When given, `inertia_trace` receives the
// post-assignment inertia of every iteration (a non-increasing sequence).
inline Clustering kmeans(const FeatureMatrix& features, std::size_t h, std::uint64_t seed,
                         std::vector<double>* inertia_trace = nullptr) {
    const auto n = static_cast<std::size_t>(features.rows());
    if (h < 1 || h > n) {
        throw ParameterError("kmeans: h must be in [1, N]");
    }
    const Eigen::MatrixXd& points = features.data;
    Clustering result;
    result.assignments.assign(n, 0);

    if (h == n) {
        result.centroids = points;
        for (std::size_t i = 0; i < n; ++i) result.assignments[i] = static_cast<int>(i);
        result.inertia = 0.0;
        return result;
    }

    Rng rng(mix64(seed, 0x6b6d65616e73ULL));
    Eigen::MatrixXd centers(static_cast<Eigen::Index>(h), points.cols());

    // k-means++ seeding
    centers.row(0) = points.row(static_cast<Eigen::Index>(rng.uniform_index(n)));
    Eigen::VectorXd min_d2 =
        (points.rowwise() - centers.row(0)).rowwise().squaredNorm();
    for (std::size_t c = 1; c < h; ++c) {
        const double total = min_d2.sum();
        Eigen::Index chosen;
        if (total <= 0.0) {
            chosen = static_cast<Eigen::Index>(rng.uniform_index(n));
        } else {
            double r = rng.next_double() * total;
            chosen = static_cast<Eigen::Index>(n) - 1;
            for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(n); ++i) {
                r -= min_d2[i];
                if (r <= 0.0) {
                    chosen = i;
                    break;
                }
            }
        }
        centers.row(static_cast<Eigen::Index>(c)) = points.row(chosen);
        min_d2 = min_d2.cwiseMin(
            (points.rowwise() - centers.row(static_cast<Eigen::Index>(c))).rowwise().squaredNorm());
    }

    std::vector<Eigen::Index> counts(h, 0);
    for (int iter = 0; iter < 100; ++iter) {
        result.iterations = iter + 1;
        // assignment, ties to the lowest cluster id
        for (std::size_t i = 0; i < n; ++i) {
            int best = 0;
            double best_d2 = detail::sq_dist(points, static_cast<Eigen::Index>(i), centers, 0);
            for (std::size_t c = 1; c < h; ++c) {
                const double d2 = detail::sq_dist(points, static_cast<Eigen::Index>(i), centers,
                                                  static_cast<Eigen::Index>(c));
                if (d2 < best_d2) {
                    best_d2 = d2;
                    best = static_cast<int>(c);
                }
            }
            result.assignments[i] = best;
        }

        // reseed empty clusters with the point farthest from its centroid
        std::fill(counts.begin(), counts.end(), 0);
        for (std::size_t i = 0; i < n; ++i) ++counts[static_cast<std::size_t>(result.assignments[i])];
        for (std::size_t c = 0; c < h; ++c) {
            if (counts[c] > 0) continue;
            Eigen::Index farthest = -1;
            double far_d2 = -1.0;
            for (std::size_t i = 0; i < n; ++i) {
                const auto a = static_cast<std::size_t>(result.assignments[i]);
                if (counts[a] <= 1) continue;  // do not empty another cluster
                const double d2 = detail::sq_dist(points, static_cast<Eigen::Index>(i), centers,
                                                  static_cast<Eigen::Index>(a));
                if (d2 > far_d2) {
                    far_d2 = d2;
                    farthest = static_cast<Eigen::Index>(i);
                }
            }
            if (farthest >= 0) {
                --counts[static_cast<std::size_t>(result.assignments[static_cast<std::size_t>(farthest)])];
                result.assignments[static_cast<std::size_t>(farthest)] = static_cast<int>(c);
                ++counts[c];
                centers.row(static_cast<Eigen::Index>(c)) = points.row(farthest);
            }
        }

        if (inertia_trace) {
            double inertia = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                inertia += detail::sq_dist(points, static_cast<Eigen::Index>(i), centers,
                                           result.assignments[i]);
            }
            inertia_trace->push_back(inertia);
        }

        // centroid update
        Eigen::MatrixXd next = Eigen::MatrixXd::Zero(centers.rows(), centers.cols());
        for (std::size_t i = 0; i < n; ++i) {
            next.row(result.assignments[i]) += points.row(static_cast<Eigen::Index>(i));
        }
        double movement = 0.0;
        for (std::size_t c = 0; c < h; ++c) {
            if (counts[c] > 0) {
                next.row(static_cast<Eigen::Index>(c)) /= static_cast<double>(counts[c]);
            } else {
                next.row(static_cast<Eigen::Index>(c)) = centers.row(static_cast<Eigen::Index>(c));
            }
            movement = std::max(
                movement,
                (next.row(static_cast<Eigen::Index>(c)) - centers.row(static_cast<Eigen::Index>(c)))
                    .norm());
        }
        centers = next;
        if (movement < 1e-6) break;
    }

    result.centroids = centers;
    result.inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        result.inertia += detail::sq_dist(points, static_cast<Eigen::Index>(i), centers,
                                          result.assignments[i]);
    }
    return result;
}

// "k-DPP w/ clustering": partitions the data into h = ceil(quota / 3J)
// clusters to stay under the linear kernel's rank ceiling, then greedy-MAP
// selects from each cluster's linear kernel, largest cluster first, capping
// every per-cluster request at 3J. Rank-deficient clusters are topped up by
// lowest index so the result always has exactly `quota` indices.
inline std::vector<Eigen::Index> clustered_kdpp_select(const FeatureMatrix& features,
                                                       std::size_t quota, std::uint64_t seed) {
    const auto n = static_cast<std::size_t>(features.rows());
    if (quota > n) {
        throw ParameterError("clustered_kdpp_select: quota exceeds the number of instances");
    }
    std::vector<Eigen::Index> selected;
    if (quota == 0) return selected;
    if (quota == n) {
        selected.resize(n);
        std::iota(selected.begin(), selected.end(), 0);
        return selected;
    }

    const auto rank_ceiling = static_cast<std::size_t>(features.cols());  // 3J
    const std::size_t h = std::max<std::size_t>(1, (quota + rank_ceiling - 1) / rank_ceiling);
    const Clustering clusters = kmeans(features, std::min(h, n), seed);

    const std::size_t cluster_count = static_cast<std::size_t>(clusters.centroids.rows());
    std::vector<std::vector<Eigen::Index>> members(cluster_count);
    for (std::size_t i = 0; i < n; ++i) {
        members[static_cast<std::size_t>(clusters.assignments[i])].push_back(
            static_cast<Eigen::Index>(i));
    }
    std::vector<std::size_t> order(cluster_count);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return members[a].size() > members[b].size();
    });

    std::vector<bool> taken(n, false);
    std::size_t remaining = quota;
    for (std::size_t c : order) {
        if (remaining == 0) break;
        const auto& rows = members[c];
        if (rows.empty()) continue;
        const std::size_t want = std::min({rank_ceiling, rows.size(), remaining});

        FeatureMatrix sub;
        sub.scaling = features.scaling;
        sub.keypoints = features.keypoints;
        sub.data.resize(static_cast<Eigen::Index>(rows.size()), features.cols());
        for (std::size_t r = 0; r < rows.size(); ++r) {
            sub.data.row(static_cast<Eigen::Index>(r)) = features.data.row(rows[r]);
        }
        const KernelMatrix local = build_kernel(sub, KernelKind::linear);
        std::vector<Eigen::Index> picks = detail::greedy_map_core(local.data, want);

        std::vector<bool> used(rows.size(), false);
        for (Eigen::Index p : picks) used[static_cast<std::size_t>(p)] = true;
        for (std::size_t r = 0; picks.size() < want && r < rows.size(); ++r) {
            if (!used[r]) {
                picks.push_back(static_cast<Eigen::Index>(r));
                used[r] = true;
            }
        }
        for (Eigen::Index p : picks) {
            const Eigen::Index global = rows[static_cast<std::size_t>(p)];
            taken[static_cast<std::size_t>(global)] = true;
            selected.push_back(global);
        }
        remaining -= picks.size();
    }

    // Skewed cluster sizes can leave a shortfall after every cluster is
    // capped at 3J; top up by lowest index to honor the exact-quota contract.
    for (std::size_t i = 0; i < n && remaining > 0; ++i) {
        if (!taken[i]) {
            selected.push_back(static_cast<Eigen::Index>(i));
            taken[i] = true;
            --remaining;
        }
    }

    std::sort(selected.begin(), selected.end());
    return selected;
}

}  // namespace posebank

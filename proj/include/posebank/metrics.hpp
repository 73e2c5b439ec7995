#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "posebank/dpp.hpp"
#include "posebank/errors.hpp"
#include "posebank/heatmap.hpp"
#include "posebank/kernel.hpp"
#include "posebank/pose.hpp"

namespace posebank {

struct PckResult {
    std::map<std::string, double> per_class;
    double overall = 0.0;
    std::size_t total_visible = 0;
    std::size_t total_correct = 0;
    std::size_t missing_predictions = 0;
};

// PCK@tau: a visible keypoint counts as correct when its Euclidean error is
// at most tau * max(bbox width, bbox height). Invisible keypoints are
// excluded; instances without a prediction count all their visible keypoints
// as incorrect and bump the warning counter.
inline PckResult pck_score(const std::map<std::string, std::vector<Keypoint>>& predictions,
                           const std::vector<PoseInstance>& ground_truth, double tau) {
    if (tau <= 0.0) {
        throw ParameterError("pck_score: tau must be positive");
    }
    struct Tally {
        std::size_t visible = 0;
        std::size_t correct = 0;
    };
    std::map<std::string, Tally> per_class;
    PckResult result;

    for (const PoseInstance& gt : ground_truth) {
        Tally& tally = per_class[gt.class_label];
        const double reference = std::max(gt.bbox.width, gt.bbox.height);
        auto pred_it = predictions.find(gt.id);
        if (pred_it != predictions.end() &&
            pred_it->second.size() != gt.keypoints.size()) {
            throw ShapeError("pck_score: prediction for '" + gt.id +
                             "' has a different keypoint count");
        }
        for (std::size_t q = 0; q < gt.keypoints.size(); ++q) {
            if (gt.keypoints[q].v != 1) continue;
            ++tally.visible;
            if (pred_it == predictions.end()) continue;
            const double dx = pred_it->second[q].x - gt.keypoints[q].x;
            const double dy = pred_it->second[q].y - gt.keypoints[q].y;
            if (std::sqrt(dx * dx + dy * dy) <= tau * reference) {
                ++tally.correct;
            }
        }
        if (pred_it == predictions.end()) {
            ++result.missing_predictions;
        }
    }

    for (const auto& [label, tally] : per_class) {
        result.per_class[label] =
            tally.visible > 0 ? static_cast<double>(tally.correct) / tally.visible : 0.0;
        result.total_visible += tally.visible;
        result.total_correct += tally.correct;
    }
    result.overall = result.total_visible > 0
                         ? static_cast<double>(result.total_correct) / result.total_visible
                         : 0.0;
    return result;
}

// alpha * MSE(student, teacher) + (1 - alpha) * MSE(student, ground truth),
// averaged over every value of every heatmap in the set.
inline double distillation_loss(const std::vector<Heatmap>& student,
                                const std::vector<Heatmap>& teacher,
                                const std::vector<Heatmap>& ground_truth, double alpha) {
    if (alpha < 0.0 || alpha > 1.0) {
        throw ParameterError("distillation_loss: alpha must be in [0, 1]");
    }
    if (student.size() != teacher.size() || student.size() != ground_truth.size()) {
        throw ShapeError("distillation_loss: heatmap sets differ in size");
    }
    double sq_teacher = 0.0;
    double sq_gt = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < student.size(); ++i) {
        const auto& s = student[i].values;
        const auto& t = teacher[i].values;
        const auto& g = ground_truth[i].values;
        if (s.rows() != t.rows() || s.cols() != t.cols() || s.rows() != g.rows() ||
            s.cols() != g.cols()) {
            throw ShapeError("distillation_loss: heatmap shapes differ");
        }
        sq_teacher += (s - t).squaredNorm();
        sq_gt += (s - g).squaredNorm();
        count += static_cast<std::size_t>(s.size());
    }
    if (count == 0) return 0.0;
    return (alpha * sq_teacher + (1.0 - alpha) * sq_gt) / static_cast<double>(count);
}

struct DiversityReport {
    double log_det = 0.0;
    bool degenerate = false;
    double mean_pairwise_distance = 0.0;
    double min_pairwise_distance = 0.0;
    std::size_t size = 0;
};

// Quantifies how spread out a selection is: log-det of the selected principal
// submatrix under the stated kernel plus pairwise feature distances.
inline DiversityReport diversity_report(const FeatureMatrix& features,
                                        const std::vector<Eigen::Index>& selection,
                                        KernelKind kind, double gamma = 50.0) {
    if (selection.empty()) {
        throw ParameterError("diversity_report: empty selection");
    }
    for (Eigen::Index idx : selection) {
        if (idx < 0 || idx >= features.rows()) {
            throw ParameterError("diversity_report: selection index out of range");
        }
    }
    DiversityReport report;
    report.size = selection.size();

    FeatureMatrix sub;
    sub.scaling = features.scaling;
    sub.keypoints = features.keypoints;
    sub.data.resize(static_cast<Eigen::Index>(selection.size()), features.cols());
    for (std::size_t i = 0; i < selection.size(); ++i) {
        sub.data.row(static_cast<Eigen::Index>(i)) = features.data.row(selection[i]);
    }
    const KernelMatrix k = build_kernel(sub, kind, kind == KernelKind::rbf ? gamma : 0.0);
    std::vector<Eigen::Index> all(selection.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<Eigen::Index>(i);
    report.log_det = detail::logdet_submatrix(k.data, all);
    report.degenerate = !std::isfinite(report.log_det);

    if (selection.size() > 1) {
        double total = 0.0;
        double smallest = std::numeric_limits<double>::infinity();
        std::size_t pairs = 0;
        for (std::size_t a = 0; a < selection.size(); ++a) {
            for (std::size_t b = a + 1; b < selection.size(); ++b) {
                const double d = (sub.data.row(static_cast<Eigen::Index>(a)) -
                                  sub.data.row(static_cast<Eigen::Index>(b)))
                                     .norm();
                total += d;
                smallest = std::min(smallest, d);
                ++pairs;
            }
        }
        report.mean_pairwise_distance = total / static_cast<double>(pairs);
        report.min_pairwise_distance = smallest;
    }
    return report;
}

}  // namespace posebank

#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>

#include "posebank/errors.hpp"
#include "posebank/pose.hpp"

namespace posebank {

enum class KernelKind {
    linear,
    rbf,
};

inline std::string to_string(KernelKind k) {
    return k == KernelKind::linear ? "linear" : "rbf";
}

// Dense symmetric PSD L-ensemble. Symmetry is exact by construction: only one
// triangle is computed and mirrored.
struct KernelMatrix {
    Eigen::MatrixXd data;
    KernelKind kind = KernelKind::linear;
    double gamma = 0.0;  // rbf only

    Eigen::Index size() const { return data.rows(); }
};

inline constexpr double kDefaultRankTol = 1e-10;

// linear: K = F F^T.  rbf: K(i,j) = exp(-gamma * |row_i - row_j|^2), unit
// diagonal exactly.
inline KernelMatrix build_kernel(const FeatureMatrix& features, KernelKind kind,
                                 double gamma = 0.0) {
    const Eigen::Index n = features.rows();
    if (n < 1) {
        throw ParameterError("build_kernel: need at least one row");
    }
    KernelMatrix k;
    k.kind = kind;
    k.gamma = gamma;
    k.data.resize(n, n);
    if (kind == KernelKind::linear) {
        k.data.setZero();
        k.data.selfadjointView<Eigen::Lower>().rankUpdate(features.data);
        k.data.triangularView<Eigen::StrictlyUpper>() =
            k.data.triangularView<Eigen::StrictlyLower>().transpose();
    } else {
        if (gamma < 0.0) {
            throw ParameterError("build_kernel: rbf gamma must be nonnegative");
        }
        for (Eigen::Index i = 0; i < n; ++i) {
            k.data(i, i) = 1.0;
            for (Eigen::Index j = i + 1; j < n; ++j) {
                const double d2 = (features.data.row(i) - features.data.row(j)).squaredNorm();
                const double val = std::exp(-gamma * d2);
                k.data(i, j) = val;
                k.data(j, i) = val;
            }
        }
    }
    return k;
}

inline Eigen::VectorXd kernel_eigenvalues(const KernelMatrix& k) {
    if (!k.data.allFinite()) {
        throw NumericError("kernel has non-finite entries");
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(k.data, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) {
        throw NumericError("eigenvalue computation failed");
    }
    return solver.eigenvalues();
}

// Number of eigenvalues above tol * largest eigenvalue.
inline Eigen::Index numerical_rank(const KernelMatrix& k, double tol = kDefaultRankTol) {
    if (tol <= 0.0) {
        throw ParameterError("numerical_rank: tol must be positive");
    }
    const Eigen::VectorXd eigvals = kernel_eigenvalues(k);
    const double largest = eigvals.maxCoeff();
    if (largest <= 0.0) {
        return 0;
    }
    const double cutoff = tol * largest;
    Eigen::Index rank = 0;
    for (Eigen::Index i = 0; i < eigvals.size(); ++i) {
        if (eigvals[i] > cutoff) ++rank;
    }
    return rank;
}

}  // namespace posebank

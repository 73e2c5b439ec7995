#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "posebank/errors.hpp"
#include "posebank/kernel.hpp"

namespace posebank {

// A size-k subset of kernel indices together with the log-determinant of the
// selected principal submatrix. Degenerate (singular) selections carry
// log_det = -inf and the flag set instead of failing silently.
struct SubsetSelection {
    std::vector<Eigen::Index> indices;
    double log_det = 0.0;
    bool degenerate = false;

    std::size_t k() const { return indices.size(); }
};

// Candidates whose conditional variance falls below this are unavailable to
// the greedy selector; exhausting them before k picks means k > rank(L).
inline constexpr double kGreedyGainFloor = 1e-12;

namespace detail {

// Greedy conditional-variance selection (incremental Cholesky). Returns as
// many indices as the floor allows, up to k; the caller decides whether a
// short result is an error. Per-step gains (log of conditional variance) are
// appended to `gains` when provided.
inline std::vector<Eigen::Index> greedy_map_core(const Eigen::MatrixXd& kernel, std::size_t k,
                                                 std::vector<double>* gains = nullptr) {
    const Eigen::Index n = kernel.rows();
    std::vector<Eigen::Index> picked;
    if (k == 0 || n == 0) return picked;
    picked.reserve(k);

    // cholesky_rows.row(t)[i] is the t-th Cholesky coefficient of candidate i
    // conditioned on the first t selections.
    Eigen::MatrixXd cholesky_rows(static_cast<Eigen::Index>(k), n);
    Eigen::VectorXd cond_var = kernel.diagonal();
    std::vector<bool> available(static_cast<std::size_t>(n), true);

    for (std::size_t step = 0; step < k; ++step) {
        Eigen::Index best = -1;
        double best_var = kGreedyGainFloor;
        for (Eigen::Index i = 0; i < n; ++i) {
            if (available[static_cast<std::size_t>(i)] && cond_var[i] > best_var) {
                best_var = cond_var[i];
                best = i;
            }
        }
        if (best < 0) break;  // remaining candidates are numerically dependent

        picked.push_back(best);
        available[static_cast<std::size_t>(best)] = false;
        if (gains) gains->push_back(std::log(cond_var[best]));

        if (step + 1 == k) break;
        const double pivot = std::sqrt(cond_var[best]);
        const auto prior = cholesky_rows.topRows(static_cast<Eigen::Index>(step));
        Eigen::VectorXd update =
            (kernel.col(best) - prior.transpose() * prior.col(best)) / pivot;
        cholesky_rows.row(static_cast<Eigen::Index>(step)) = update.transpose();
        cond_var -= update.cwiseProduct(update);
    }
    return picked;
}

// log det of a principal submatrix of a PSD kernel; -inf when singular.
inline double logdet_submatrix(const Eigen::MatrixXd& kernel,
                               const std::vector<Eigen::Index>& indices) {
    const auto m = static_cast<Eigen::Index>(indices.size());
    if (m == 0) return 0.0;  // det of the empty matrix is 1
    Eigen::MatrixXd sub(m, m);
    for (Eigen::Index r = 0; r < m; ++r) {
        for (Eigen::Index c = 0; c < m; ++c) {
            sub(r, c) = kernel(indices[static_cast<std::size_t>(r)],
                               indices[static_cast<std::size_t>(c)]);
        }
    }
    Eigen::LLT<Eigen::MatrixXd> llt(sub);
    if (llt.info() != Eigen::Success) {
        return -std::numeric_limits<double>::infinity();
    }
    double log_det = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
        const double d = llt.matrixL()(i, i);
        if (!(d > 0.0)) return -std::numeric_limits<double>::infinity();
        log_det += 2.0 * std::log(d);
    }
    return log_det;
}

inline void check_indices(const KernelMatrix& kernel, const std::vector<Eigen::Index>& indices) {
    std::vector<bool> seen(static_cast<std::size_t>(kernel.size()), false);
    for (Eigen::Index idx : indices) {
        if (idx < 0 || idx >= kernel.size()) {
            throw ParameterError("subset index out of range");
        }
        if (seen[static_cast<std::size_t>(idx)]) {
            throw ParameterError("subset indices must be distinct");
        }
        seen[static_cast<std::size_t>(idx)] = true;
    }
}

}  // namespace detail

// Greedy MAP approximation of the k-DPP mode: at each of k steps, pick the
// index with the largest incremental log-det gain (ties to the lowest index).
// Deterministic. Raises RankError when k exceeds the kernel's numerical rank.
inline SubsetSelection greedy_map_kdpp(const KernelMatrix& kernel, std::size_t k,
                                       std::vector<double>* gains = nullptr) {
    const auto n = static_cast<std::size_t>(kernel.size());
    if (k < 1 || k > n) {
        throw ParameterError("greedy_map_kdpp: k must be in [1, N]");
    }
    if (static_cast<Eigen::Index>(k) > numerical_rank(kernel)) {
        throw RankError("greedy_map_kdpp: k exceeds the kernel rank (k <= rank(L) required)");
    }
    std::vector<double> local_gains;
    std::vector<double>* gain_sink = gains ? gains : &local_gains;
    SubsetSelection sel;
    sel.indices = detail::greedy_map_core(kernel.data, k, gain_sink);
    if (sel.indices.size() < k) {
        throw RankError("greedy_map_kdpp: conditional variance exhausted before k picks");
    }
    sel.log_det = 0.0;
    for (double g : *gain_sink) sel.log_det += g;
    return sel;
}

// Exhaustive MAP over all size-k subsets. Guarded to C(N, k) <= 10^6
// enumerated subsets; ties resolve to the lexicographically smallest index
// list (automatic: enumeration is lexicographic and comparisons are strict).
inline SubsetSelection brute_force_map(const KernelMatrix& kernel, std::size_t k) {
    const auto n = static_cast<std::size_t>(kernel.size());
    if (k > n) {
        throw ParameterError("brute_force_map: k must be at most N");
    }
    double combos = 1.0;
    for (std::size_t i = 0; i < k; ++i) {
        combos *= static_cast<double>(n - i) / static_cast<double>(i + 1);
        if (combos > 1e6) {
            throw ParameterError("brute_force_map: C(N, k) exceeds the 10^6 guard");
        }
    }

    SubsetSelection best;
    if (k == 0) {
        best.log_det = 0.0;
        return best;
    }
    std::vector<Eigen::Index> subset(k);
    for (std::size_t i = 0; i < k; ++i) subset[i] = static_cast<Eigen::Index>(i);
    double best_log_det = -std::numeric_limits<double>::infinity();
    bool have_best = false;
    while (true) {
        const double log_det = detail::logdet_submatrix(kernel.data, subset);
        if (!have_best || log_det > best_log_det) {
            best_log_det = log_det;
            best.indices = subset;
            have_best = true;
        }
        // advance to the next combination in lexicographic order
        std::size_t pos = k;
        while (pos > 0) {
            --pos;
            if (subset[pos] < static_cast<Eigen::Index>(n - k + pos)) {
                ++subset[pos];
                for (std::size_t q = pos + 1; q < k; ++q) subset[q] = subset[q - 1] + 1;
                pos = k + 1;
                break;
            }
        }
        if (pos != k + 1) break;
    }
    best.log_det = best_log_det;
    best.degenerate = !std::isfinite(best_log_det);
    return best;
}

// e_k of the eigenvalues via the stable one-pass recurrence
// e_k^(n) = e_k^(n-1) + lambda_n * e_{k-1}^(n-1); e_0 = 1; k > N yields 0.
inline double elementary_symmetric(const std::vector<double>& eigvals, std::size_t k) {
    if (k > eigvals.size()) return 0.0;
    std::vector<double> e(k + 1, 0.0);
    e[0] = 1.0;
    for (double lambda : eigvals) {
        for (std::size_t j = std::min(k, eigvals.size()); j >= 1; --j) {
            e[j] += lambda * e[j - 1];
        }
    }
    return e[k];
}

// k-DPP log-probability (cardinality-k normalizer): log det(L_S) - log e_k.
// Computed with eigenvalues scaled by the largest one so e_k stays in range.
inline double kdpp_log_prob(const KernelMatrix& kernel, const SubsetSelection& selection) {
    detail::check_indices(kernel, selection.indices);
    const std::size_t k = selection.k();
    const Eigen::VectorXd eigvals = kernel_eigenvalues(kernel);
    const double largest = eigvals.maxCoeff();
    if (largest <= 0.0 && k > 0) {
        throw RankError("kdpp_log_prob: kernel has rank 0");
    }
    double log_norm = 0.0;
    if (k > 0) {
        std::vector<double> scaled(static_cast<std::size_t>(eigvals.size()));
        for (Eigen::Index i = 0; i < eigvals.size(); ++i) {
            scaled[static_cast<std::size_t>(i)] = std::max(eigvals[i], 0.0) / largest;
        }
        const double ek = elementary_symmetric(scaled, k);
        if (!(ek > 0.0)) {
            throw RankError("kdpp_log_prob: k exceeds the kernel rank");
        }
        log_norm = std::log(ek) + static_cast<double>(k) * std::log(largest);
    }
    return detail::logdet_submatrix(kernel.data, selection.indices) - log_norm;
}

// Unconstrained DPP log-probability: log det(L_S) - log det(I + L).
inline double unconstrained_dpp_log_prob(const KernelMatrix& kernel,
                                         const SubsetSelection& selection) {
    detail::check_indices(kernel, selection.indices);
    Eigen::MatrixXd shifted = kernel.data;
    shifted.diagonal().array() += 1.0;
    Eigen::LLT<Eigen::MatrixXd> llt(shifted);
    if (llt.info() != Eigen::Success) {
        throw NumericError("unconstrained_dpp_log_prob: I + L is not positive definite");
    }
    double log_norm = 0.0;
    for (Eigen::Index i = 0; i < shifted.rows(); ++i) {
        log_norm += 2.0 * std::log(llt.matrixL()(i, i));
    }
    return detail::logdet_submatrix(kernel.data, selection.indices) - log_norm;
}

}  // namespace posebank

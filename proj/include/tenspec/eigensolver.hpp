#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "tenspec/errors.hpp"

namespace tenspec {

/// Dense n x n real symmetric matrix, row-major.
class SymmetricMatrix {
public:
    static constexpr double kSymmetryTol = 1e-10;

    /// Rejects inputs whose asymmetry exceeds kSymmetryTol * max|a_ij|.
    SymmetricMatrix(std::size_t n, std::vector<double> values) : n_(n), values_(std::move(values)) {
        if (values_.size() != n_ * n_)
            throw NotSymmetric("expected " + std::to_string(n_ * n_) + " entries, got " +
                               std::to_string(values_.size()));
        double max_abs = 0.0;
        for (double v : values_) max_abs = std::max(max_abs, std::abs(v));
        double asym = 0.0;
        for (std::size_t i = 0; i < n_; ++i)
            for (std::size_t j = i + 1; j < n_; ++j)
                asym = std::max(asym, std::abs(values_[i * n_ + j] - values_[j * n_ + i]));
        if (asym > kSymmetryTol * max_abs)
            throw NotSymmetric("matrix asymmetry " + std::to_string(asym) + " exceeds tolerance");
    }

    static SymmetricMatrix identity(std::size_t n) {
        std::vector<double> v(n * n, 0.0);
        for (std::size_t i = 0; i < n; ++i) v[i * n + i] = 1.0;
        return {n, std::move(v)};
    }

    [[nodiscard]] std::size_t dim() const noexcept { return n_; }
    [[nodiscard]] double operator()(std::size_t i, std::size_t j) const { return values_[i * n_ + j]; }
    [[nodiscard]] std::span<const double> values() const noexcept { return values_; }

private:
    std::size_t n_;
    std::vector<double> values_;
};

struct EigenOptions {
    /// Relative threshold on lambda_1 below which eigenvalues do not count
    /// toward the numerical rank.
    double rank_tol = 1e-10;
    /// Stop once off(A) <= convergence_tol * ||A||_F.
    double convergence_tol = 1e-12;
    int max_sweeps = 50;
};

struct EigenResult {
    std::vector<double> eigenvalues;  ///< full spectrum, non-increasing
    std::vector<double> vectors;      ///< column-major: eigenvector p at [p*n, (p+1)*n)
    std::size_t n = 0;
    std::size_t rank = 0;
    int sweeps = 0;

    [[nodiscard]] std::span<const double> vector(std::size_t p) const {
        return std::span<const double>(vectors).subspan(p * n, n);
    }
};

inline std::size_t numerical_rank(std::span<const double> eigenvalues, double rank_tol = 1e-10) {
    for (std::size_t p = 1; p < eigenvalues.size(); ++p)
        if (eigenvalues[p] > eigenvalues[p - 1])
            throw NotSorted("eigenvalues not sorted non-increasing at position " + std::to_string(p));
    if (eigenvalues.empty() || eigenvalues.front() <= 0.0) return 0;
    const double threshold = rank_tol * eigenvalues.front();
    std::size_t r = 0;
    while (r < eigenvalues.size() && eigenvalues[r] > threshold) ++r;
    return r;
}

/// Flips v so that its entry of largest magnitude (lowest index on ties) is
/// positive.
inline void fix_sign(std::span<double> v) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < v.size(); ++k)
        if (std::abs(v[k]) > std::abs(v[best])) best = k;
    if (!v.empty() && v[best] < 0.0)
        for (auto& x : v) x = -x;
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
inline EigenResult sym_eig(const SymmetricMatrix& input, const EigenOptions& opts = {}) {
    const std::size_t n = input.dim();
    std::vector<double> a(input.values().begin(), input.values().end());
    // Rows of vt are the eigenvectors, so rotations touch contiguous memory.
    std::vector<double> vt(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) vt[i * n + i] = 1.0;

    double frob2 = 0.0;
    for (double v : a) frob2 += v * v;
    const double target = opts.convergence_tol * std::sqrt(frob2);

    auto off_norm = [&] {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) s += a[i * n + j] * a[i * n + j];
        return std::sqrt(2.0 * s);
    };

    int sweep = 0;
    double off = off_norm();
    while (off > target) {
        if (sweep == opts.max_sweeps)
            throw NoConvergence("sym_eig: no convergence after " + std::to_string(sweep) +
                                    " sweeps, off-diagonal norm " + std::to_string(off),
                                off);
        ++sweep;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a[p * n + q];
                if (apq == 0.0) continue;
                const double app = a[p * n + p];
                const double aqq = a[q * n + q];
                const double theta = (aqq - app) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;

                double* row_p = a.data() + p * n;
                double* row_q = a.data() + q * n;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = row_p[k];
                    const double akq = row_q[k];
                    row_p[k] = c * akp - s * akq;
                    row_q[k] = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    a[k * n + p] = row_p[k];
                    a[k * n + q] = row_q[k];
                }
                row_p[p] = app - t * apq;
                row_q[q] = aqq + t * apq;
                row_p[q] = row_q[p] = 0.0;

                double* vp = vt.data() + p * n;
                double* vq = vt.data() + q * n;
                for (std::size_t k = 0; k < n; ++k) {
                    const double x = vp[k];
                    const double y = vq[k];
                    vp[k] = c * x - s * y;
                    vq[k] = s * x + c * y;
                }
            }
        }
        off = off_norm();
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t i, std::size_t j) { return a[i * n + i] > a[j * n + j]; });

    EigenResult result;
    result.n = n;
    result.sweeps = sweep;
    result.eigenvalues.reserve(n);
    result.vectors.resize(n * n);
    for (std::size_t p = 0; p < n; ++p) {
        result.eigenvalues.push_back(a[order[p] * n + order[p]]);
        std::copy_n(vt.begin() + static_cast<std::ptrdiff_t>(order[p] * n), n,
                    result.vectors.begin() + static_cast<std::ptrdiff_t>(p * n));
        fix_sign(std::span<double>(result.vectors).subspan(p * n, n));
    }
    result.rank = numerical_rank(result.eigenvalues, opts.rank_tol);
    return result;
}

}  // namespace tenspec

#pragma once

// Brute-force references for testing and the `verify` command. Nothing here
// calls into the eigensolver or the decomposition algorithms.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "tenspec/decomposition.hpp"
#include "tenspec/tensor.hpp"

namespace tenspec::oracle {

struct Tolerances {
    double singular = 1e-8;        ///< per-value relative deviation
    double reconstruction = 1e-8;  ///< relative Frobenius error
};

struct OracleReport {
    std::vector<double> singulars_reference;
    double max_singular_deviation = 0.0;
    double max_reconstruction_error = 0.0;
    bool passed = false;
};

/// Singular values of an n_rows x n_cols row-major matrix by one-sided
/// (Hestenes) Jacobi. Values with sigma^2 <= rank_tol * sigma_1^2 are
/// dropped, so a zero matrix gives an empty result.
inline std::vector<double> one_sided_jacobi_singulars(std::span<const double> matrix, std::size_t n_rows,
                                                      std::size_t n_cols, double rank_tol = 1e-10,
                                                      int max_sweeps = 60) {
    // Orthogonalize the shorter side: store it as `count` contiguous vectors of `len` entries.
    const bool by_rows = n_cols > n_rows;
    const std::size_t count = by_rows ? n_rows : n_cols;
    const std::size_t len = by_rows ? n_cols : n_rows;
    std::vector<double> b(count * len);
    for (std::size_t r = 0; r < n_rows; ++r)
        for (std::size_t c = 0; c < n_cols; ++c) {
            const double v = matrix[r * n_cols + c];
            if (by_rows) b[r * len + c] = v;
            else b[c * len + r] = v;
        }

    auto dot = [&](std::size_t x, std::size_t y) {
        double s = 0.0;
        for (std::size_t k = 0; k < len; ++k) s += b[x * len + k] * b[y * len + k];
        return s;
    };

    const double eps = std::numeric_limits<double>::epsilon();
    bool rotated = true;
    int sweep = 0;
    double worst = 0.0;
    while (rotated) {
        if (sweep++ == max_sweeps)
            throw NoConvergence("one-sided Jacobi: no convergence, max column cosine " + std::to_string(worst), worst);
        rotated = false;
        worst = 0.0;
        for (std::size_t x = 0; x + 1 < count; ++x)
            for (std::size_t y = x + 1; y < count; ++y) {
                const double alpha = dot(x, x);
                const double beta = dot(y, y);
                const double gamma = dot(x, y);
                if (alpha == 0.0 || beta == 0.0) continue;
                const double cosine = std::abs(gamma) / std::sqrt(alpha * beta);
                worst = std::max(worst, cosine);
                if (cosine <= static_cast<double>(len) * eps) continue;
                rotated = true;
                const double zeta = (beta - alpha) / (2.0 * gamma);
                const double t = (zeta >= 0.0 ? 1.0 : -1.0) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                for (std::size_t k = 0; k < len; ++k) {
                    const double u = b[x * len + k];
                    const double v = b[y * len + k];
                    b[x * len + k] = c * u - s * v;
                    b[y * len + k] = s * u + c * v;
                }
            }
    }

    std::vector<double> sigma(count);
    for (std::size_t x = 0; x < count; ++x) sigma[x] = std::sqrt(dot(x, x));
    std::sort(sigma.begin(), sigma.end(), std::greater<>());
    if (sigma.empty() || sigma.front() == 0.0) return {};
    const double cut = rank_tol * sigma.front() * sigma.front();
    std::size_t r = 0;
    while (r < sigma.size() && sigma[r] * sigma[r] > cut) ++r;
    sigma.resize(r);
    return sigma;
}

/// Singular values of A unfolded between its first group and the rest.
inline std::vector<double> matricized_singulars(const GroupedTensor& a, double rank_tol = 1e-10) {
    const std::size_t rows = a.group_shape(0).element_count();
    const std::size_t cols = a.tensor().size() / rows;
    return one_sided_jacobi_singulars(a.tensor().values(), rows, cols, rank_tol);
}

/// Contraction by explicit loops over the output box and the summed box.
inline DenseTensor naive_contract(const DenseTensor& x, const DenseTensor& y, std::span<const std::size_t> axes_x,
                                  std::span<const std::size_t> axes_y) {
    if (axes_x.size() != axes_y.size()) throw InvalidAxis("naive_contract: axis lists differ in length");
    auto validate = [](const DenseTensor& t, std::span<const std::size_t> axes) {
        for (std::size_t k = 0; k < axes.size(); ++k) {
            if (axes[k] >= t.order()) throw InvalidAxis("naive_contract: axis out of range");
            for (std::size_t l = 0; l < k; ++l)
                if (axes[l] == axes[k]) throw InvalidAxis("naive_contract: repeated axis");
        }
    };
    validate(x, axes_x);
    validate(y, axes_y);
    std::vector<std::size_t> summed;
    for (std::size_t k = 0; k < axes_x.size(); ++k) {
        if (x.shape()[axes_x[k]] != y.shape()[axes_y[k]]) throw ShapeMismatch("naive_contract: paired extents differ");
        summed.push_back(x.shape()[axes_x[k]]);
    }
    auto is_axis = [](std::span<const std::size_t> axes, std::size_t m) {
        return std::find(axes.begin(), axes.end(), m) != axes.end();
    };
    std::vector<std::size_t> free_x, free_y, out_dims;
    for (std::size_t m = 0; m < x.order(); ++m)
        if (!is_axis(axes_x, m)) free_x.push_back(m), out_dims.push_back(x.shape()[m]);
    for (std::size_t m = 0; m < y.order(); ++m)
        if (!is_axis(axes_y, m)) free_y.push_back(m), out_dims.push_back(y.shape()[m]);
    const bool scalar = out_dims.empty();
    if (scalar) out_dims.push_back(1);
    DenseTensor out{Shape(out_dims)};

    MultiIndex oi(out_dims.size(), 0);
    MultiIndex xi(x.order()), yi(y.order());
    do {
        if (!scalar) {
            for (std::size_t k = 0; k < free_x.size(); ++k) xi[free_x[k]] = oi[k];
            for (std::size_t k = 0; k < free_y.size(); ++k) yi[free_y[k]] = oi[free_x.size() + k];
        }
        double sum = 0.0;
        MultiIndex si(summed.size(), 0);
        do {
            for (std::size_t k = 0; k < summed.size(); ++k) {
                xi[axes_x[k]] = si[k];
                yi[axes_y[k]] = si[k];
            }
            sum += x.at(xi) * y.at(yi);
        } while (!summed.empty() && next_index(si, summed));
        out.at(oi) = sum;
    } while (next_index(oi, out_dims));
    return out;
}

namespace detail {

/// Replays sum_m w_m * prod_g F_{g,m}[index restricted to group g] one output
/// element at a time.
inline DenseTensor naive_sum(const Shape& shape, std::span<const double> weights,
                             const std::vector<const std::vector<DenseTensor>*>& families) {
    DenseTensor out(shape);
    std::vector<std::size_t> group_sizes;
    for (const auto* f : families) group_sizes.push_back(f->empty() ? 1 : f->front().size());
    for (std::size_t n = 0; n < out.size(); ++n) {
        std::vector<std::size_t> part(families.size());
        std::size_t rest = n;
        for (std::size_t g = families.size(); g-- > 0;) {
            part[g] = rest % group_sizes[g];
            rest /= group_sizes[g];
        }
        double sum = 0.0;
        for (std::size_t m = 0; m < weights.size(); ++m) {
            double term = weights[m];
            for (std::size_t g = 0; g < families.size(); ++g) term *= (*families[g])[m][part[g]];
            sum += term;
        }
        out[n] = sum;
    }
    return out;
}

inline double max_relative_deviation(std::span<const double> got, std::span<const double> reference) {
    if (got.size() != reference.size()) return std::numeric_limits<double>::infinity();
    double worst = 0.0;
    for (std::size_t p = 0; p < got.size(); ++p)
        worst = std::max(worst, std::abs(got[p] - reference[p]) / reference[p]);
    return worst;
}

inline OracleReport finish(const GroupedTensor& a, const DenseTensor& replay, std::span<const double> singulars,
                           std::vector<double> reference, const Tolerances& tol) {
    OracleReport report;
    report.max_reconstruction_error = relative_error(a.tensor(), replay);
    report.max_singular_deviation = max_relative_deviation(singulars, reference);
    report.singulars_reference = std::move(reference);
    report.passed = report.max_reconstruction_error <= tol.reconstruction &&
                    report.max_singular_deviation <= tol.singular;
    return report;
}

}  // namespace detail

inline OracleReport verify_decomposition(const GroupedTensor& a, const OperatorDecomposition& d,
                                         const Tolerances& tol = {}) {
    const DenseTensor replay =
        detail::naive_sum(a.tensor().shape(), d.eigenvalues, {&d.eigentensors, &d.eigentensors});
    // For a non-negative definite operator the eigenvalues are its singular values.
    return detail::finish(a, replay, d.eigenvalues, matricized_singulars(a), tol);
}

inline OracleReport verify_decomposition(const GroupedTensor& a, const TransformDecomposition& d,
                                         const Tolerances& tol = {}) {
    const DenseTensor replay = detail::naive_sum(a.tensor().shape(), d.singulars, {&d.left, &d.right});
    return detail::finish(a, replay, d.singulars, matricized_singulars(a), tol);
}

/// The first-stage sigma values are compared against the singular values of
/// the (I | J x K) unfolding.
inline OracleReport verify_decomposition(const GroupedTensor& a, const TripleDecomposition& d,
                                         const Tolerances& tol = {}) {
    const DenseTensor replay =
        detail::naive_sum(a.tensor().shape(), d.lambdas, {&d.factors_u, &d.factors_z, &d.factors_w});
    return detail::finish(a, replay, d.stages.sigma, matricized_singulars(a), tol);
}

}  // namespace tenspec::oracle

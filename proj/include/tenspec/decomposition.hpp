#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tenspec/eigensolver.hpp"
#include "tenspec/tensor.hpp"

namespace tenspec {

/// A tensor whose modes are partitioned into 2 or 3 contiguous groups
/// (i | j) or (i | j | k). groups() holds the mode count of each group.
class GroupedTensor {
public:
    GroupedTensor(DenseTensor tensor, std::vector<std::size_t> groups)
        : tensor_(std::move(tensor)), groups_(std::move(groups)) {
        if (groups_.size() != 2 && groups_.size() != 3)
            throw GroupingMismatch("expected 2 or 3 mode groups, got " + std::to_string(groups_.size()));
        std::size_t total = 0;
        for (auto g : groups_) {
            if (g == 0) throw GroupingMismatch("mode groups must be nonempty");
            total += g;
        }
        if (total != tensor_.order())
            throw GroupingMismatch("groups cover " + std::to_string(total) + " modes but tensor has order " +
                                   std::to_string(tensor_.order()));
    }

    [[nodiscard]] const DenseTensor& tensor() const noexcept { return tensor_; }
    [[nodiscard]] const std::vector<std::size_t>& groups() const noexcept { return groups_; }
    [[nodiscard]] std::size_t group_count() const noexcept { return groups_.size(); }

    [[nodiscard]] std::size_t group_offset(std::size_t g) const {
        return std::accumulate(groups_.begin(), groups_.begin() + static_cast<std::ptrdiff_t>(g), std::size_t{0});
    }
    [[nodiscard]] Shape group_shape(std::size_t g) const {
        return tensor_.shape().slice(group_offset(g), groups_.at(g));
    }
    /// Mode positions belonging to group g.
    [[nodiscard]] std::vector<std::size_t> group_modes(std::size_t g) const {
        std::vector<std::size_t> modes(groups_.at(g));
        std::iota(modes.begin(), modes.end(), group_offset(g));
        return modes;
    }

private:
    DenseTensor tensor_;
    std::vector<std::size_t> groups_;
};

struct DecompositionOptions {
    EigenOptions eigen{};
    /// Relative asymmetry accepted by decompose_sa_nnd.
    double symmetry_tol = 1e-10;
};

/// A = sum_p lambda_p U_p (x) U_p with orthonormal eigentensors U_p.
struct OperatorDecomposition {
    Shape space;                            ///< I
    std::vector<double> eigenvalues;        ///< retained, non-increasing
    std::vector<DenseTensor> eigentensors;  ///< shape I each
    std::vector<double> spectrum;           ///< full spectrum before truncation

    [[nodiscard]] std::size_t rank() const noexcept { return eigenvalues.size(); }
    [[nodiscard]] std::size_t component_count() const noexcept { return rank(); }
    [[nodiscard]] Shape full_shape() const { return concat(space, space); }
    [[nodiscard]] std::span<const double> weights() const noexcept { return eigenvalues; }
};

/// A = sum_p sigma_p U_p (x) V_p.
struct TransformDecomposition {
    Shape left_shape;   ///< I
    Shape right_shape;  ///< J
    std::vector<double> singulars;
    std::vector<DenseTensor> left;
    std::vector<DenseTensor> right;
    /// Eigenvalues of the right Gram operator, full spectrum.
    std::vector<double> gram_spectrum;

    [[nodiscard]] std::size_t rank() const noexcept { return singulars.size(); }
    [[nodiscard]] std::size_t component_count() const noexcept { return rank(); }
    [[nodiscard]] Shape full_shape() const { return concat(left_shape, right_shape); }
    [[nodiscard]] std::span<const double> weights() const noexcept { return singulars; }
};

/// A = sum_m lambda_m U_m (x) Z_m (x) W_m, assembled from a two-stage
/// reduction A = sum_p sigma_p Uhat_p (x) Vhat_p and
/// Vhat_p = sum_r gamma_r Zhat_r (x) What_{p,r}.
struct TripleDecomposition {
    struct Stages {
        std::vector<double> sigma;         ///< r1 values
        std::vector<double> gamma;         ///< r2 values
        std::vector<DenseTensor> u_hat;    ///< r1 tensors, shape I
        std::vector<DenseTensor> v_hat;    ///< r1 tensors, shape J ++ K
        std::vector<DenseTensor> z_hat;    ///< r2 tensors, shape J
        std::vector<DenseTensor> w_hat;    ///< r1*r2 tensors, shape K; (p, r) at p*r2 + r
        /// pair_map[m] = (p, r), zero-based, after sorting by weight.
        std::vector<std::pair<std::size_t, std::size_t>> pair_map;

        [[nodiscard]] const DenseTensor& w(std::size_t p, std::size_t r) const { return w_hat[p * gamma.size() + r]; }
    };

    Shape shape_i;
    Shape shape_j;
    Shape shape_k;
    std::vector<double> lambdas;
    std::vector<DenseTensor> factors_u;
    std::vector<DenseTensor> factors_z;
    std::vector<DenseTensor> factors_w;
    Stages stages;

    [[nodiscard]] std::size_t component_count() const noexcept { return lambdas.size(); }
    [[nodiscard]] Shape full_shape() const { return concat(concat(shape_i, shape_j), shape_k); }
    [[nodiscard]] std::span<const double> weights() const noexcept { return lambdas; }
};

// ---------------------------------------------------------------------------
// Operators

/// Y_i = A_{i,j} X_j
inline DenseTensor apply_operator(const GroupedTensor& a, const DenseTensor& x) {
    if (a.group_count() != 2) throw GroupingMismatch("apply_operator needs a two-group tensor");
    const Shape j = a.group_shape(1);
    if (!(x.shape() == j))
        throw ShapeMismatch("apply_operator: argument shape " + x.shape().to_string() + " vs operator domain " +
                            j.to_string());
    std::vector<std::size_t> all(x.order());
    std::iota(all.begin(), all.end(), 0);
    const auto modes = a.group_modes(1);
    return contract(a.tensor(), x, modes, all).reshaped(a.group_shape(0));
}

enum class GramSide {
    left,   ///< G'_{i,l} = A_{i,k} A_{l,k}, over I x I
    right,  ///< G_{l,j} = A_{i,l} A_{i,j}, over J x J
};

inline GroupedTensor gram_operator(const GroupedTensor& a, GramSide side) {
    if (a.group_count() != 2) throw GroupingMismatch("gram_operator needs a two-group tensor");
    const std::size_t summed = side == GramSide::right ? 0 : 1;
    const auto modes = a.group_modes(summed);
    DenseTensor g = contract(a.tensor(), a.tensor(), modes, modes);
    const std::size_t half = a.groups()[1 - summed];
    return {std::move(g), {half, half}};
}

struct SelfAdjointCheck {
    bool self_adjoint = false;
    double max_asymmetry = 0.0;  ///< max |A[i,j] - A[j,i]|
    std::string reason;

    explicit operator bool() const noexcept { return self_adjoint; }
};

inline SelfAdjointCheck is_self_adjoint(const GroupedTensor& a, double tol = 1e-10) {
    SelfAdjointCheck check;
    if (a.group_count() != 2) {
        check.reason = "operator must have exactly two mode groups";
        return check;
    }
    if (!(a.group_shape(0) == a.group_shape(1))) {
        check.reason = "domain " + a.group_shape(1).to_string() + " differs from codomain " +
                       a.group_shape(0).to_string();
        return check;
    }
    const std::size_t n = a.group_shape(0).element_count();
    const double* v = a.tensor().data();
    double max_abs = 0.0;
    for (std::size_t k = 0; k < n * n; ++k) max_abs = std::max(max_abs, std::abs(v[k]));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            check.max_asymmetry = std::max(check.max_asymmetry, std::abs(v[i * n + j] - v[j * n + i]));
    check.self_adjoint = check.max_asymmetry <= tol * max_abs;
    if (!check.self_adjoint)
        check.reason = "max asymmetry " + std::to_string(check.max_asymmetry) + " exceeds tolerance";
    return check;
}

// ---------------------------------------------------------------------------
// Algorithms

/// Eigentensor decomposition of a self-adjoint non-negative definite
/// operator A over I x I.
inline OperatorDecomposition decompose_sa_nnd(const GroupedTensor& a, const DecompositionOptions& opts = {}) {
    const auto check = is_self_adjoint(a, opts.symmetry_tol);
    if (!check) throw NotSelfAdjoint("decompose_sa_nnd: " + check.reason, check.max_asymmetry);

    const Shape space = a.group_shape(0);
    const std::size_t n = space.element_count();
    const double* v = a.tensor().data();
    std::vector<double> sym(n * n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) sym[i * n + j] = 0.5 * (v[i * n + j] + v[j * n + i]);

    const EigenResult eig = sym_eig(SymmetricMatrix(n, std::move(sym)), opts.eigen);

    double scale = 0.0;
    for (double lambda : eig.eigenvalues) scale = std::max(scale, std::abs(lambda));
    if (!eig.eigenvalues.empty() && eig.eigenvalues.back() < -opts.eigen.rank_tol * scale)
        throw NotNND("decompose_sa_nnd: negative eigenvalue " + std::to_string(eig.eigenvalues.back()) +
                     " (largest magnitude " + std::to_string(scale) + ")");

    OperatorDecomposition out{space, {}, {}, eig.eigenvalues};
    for (std::size_t p = 0; p < eig.rank; ++p) {
        out.eigenvalues.push_back(eig.eigenvalues[p]);
        const auto col = eig.vector(p);
        out.eigentensors.emplace_back(space, std::vector<double>(col.begin(), col.end()));
    }
    return out;
}

namespace detail {

/// Shared step of the transform and triple algorithms: eigen-decompose the
/// Gram operator that sums out the `summed` group, then map the eigentensors
/// through A and scale by 1/sigma to obtain the partner family.
struct GramReduction {
    std::vector<double> sigma;
    std::vector<DenseTensor> kept;     ///< eigentensors of the Gram operator
    std::vector<DenseTensor> partner;  ///< A contracted with kept[p], divided by sigma_p
    std::vector<double> spectrum;
};

inline GramReduction reduce_via_gram(const GroupedTensor& a, GramSide side, const DecompositionOptions& opts) {
    GramReduction red;
    const OperatorDecomposition op = decompose_sa_nnd(gram_operator(a, side), opts);
    red.spectrum = op.spectrum;
    const std::size_t kept_group = side == GramSide::right ? 1 : 0;
    const std::size_t partner_group = 1 - kept_group;
    const auto modes = a.group_modes(kept_group);
    const Shape partner_shape = a.group_shape(partner_group);
    for (std::size_t p = 0; p < op.rank(); ++p) {
        const double s = std::sqrt(op.eigenvalues[p]);
        std::vector<std::size_t> all(op.eigentensors[p].order());
        std::iota(all.begin(), all.end(), 0);
        DenseTensor y = contract(a.tensor(), op.eigentensors[p], modes, all).reshaped(partner_shape);
        y *= 1.0 / s;
        red.sigma.push_back(s);
        red.kept.push_back(op.eigentensors[p]);
        red.partner.push_back(std::move(y));
    }
    return red;
}

}  // namespace detail

/// A_{i,j} = sigma_p U_{i,p} V_{j,p} for an arbitrary two-group tensor.
/// Components whose Gram eigenvalue sigma_p^2 falls at or below
/// rank_tol * sigma_1^2 are dropped before the 1/sigma scaling.
inline TransformDecomposition decompose_transform(const GroupedTensor& a, const DecompositionOptions& opts = {}) {
    if (a.group_count() != 2) throw GroupingMismatch("decompose_transform needs a two-group tensor");
    TransformDecomposition out{a.group_shape(0), a.group_shape(1), {}, {}, {}, {}};
    if (norm(a.tensor()) == 0.0) return out;
    auto red = detail::reduce_via_gram(a, GramSide::right, opts);
    out.singulars = std::move(red.sigma);
    out.right = std::move(red.kept);
    out.left = std::move(red.partner);
    out.gram_spectrum = std::move(red.spectrum);
    return out;
}

/// A_{i,j,k} = lambda_m U_{i,m} Z_{j,m} W_{k,m}, m = 1..r1*r2.
inline TripleDecomposition decompose_triple(const GroupedTensor& a, const DecompositionOptions& opts = {}) {
    if (a.group_count() != 3) throw GroupingMismatch("decompose_triple needs a three-group tensor");
    TripleDecomposition out{a.group_shape(0), a.group_shape(1), a.group_shape(2), {}, {}, {}, {}, {}};
    if (norm(a.tensor()) == 0.0) return out;
    const auto& g = a.groups();
    auto& st = out.stages;

    // Stage 1: A as a map from J x K to I, eigenproblem over I.
    const GroupedTensor a_ijk(a.tensor(), {g[0], g[1] + g[2]});
    auto first = detail::reduce_via_gram(a_ijk, GramSide::left, opts);
    st.sigma = std::move(first.sigma);
    st.u_hat = std::move(first.kept);
    st.v_hat = std::move(first.partner);
    const std::size_t r1 = st.sigma.size();

    // Stage 2: stack Vhat into B[j,k,p] and reduce over J, summing k and p.
    std::vector<std::size_t> stacked_dims = concat(out.shape_j, out.shape_k).dims();
    stacked_dims.push_back(r1);
    DenseTensor stacked{Shape(stacked_dims)};
    const std::size_t jk = out.shape_j.element_count() * out.shape_k.element_count();
    for (std::size_t p = 0; p < r1; ++p)
        for (std::size_t n = 0; n < jk; ++n) stacked[n * r1 + p] = st.v_hat[p][n];
    const GroupedTensor b(std::move(stacked), {g[1], g[2] + 1});
    auto second = detail::reduce_via_gram(b, GramSide::left, opts);
    st.gamma = std::move(second.sigma);
    st.z_hat = std::move(second.kept);
    const std::size_t r2 = st.gamma.size();

    // second.partner[r] has shape K ++ (r1); split it into What_{k,p,r}.
    const std::size_t nk = out.shape_k.element_count();
    st.w_hat.assign(r1 * r2, DenseTensor(out.shape_k));
    for (std::size_t r = 0; r < r2; ++r)
        for (std::size_t k = 0; k < nk; ++k)
            for (std::size_t p = 0; p < r1; ++p) st.w_hat[p * r2 + r][k] = second.partner[r][k * r1 + p];

    // Flatten (p, r) row-major, then sort by weight; stable sort keeps the
    // lexicographic (p, r) order among ties.
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    pairs.reserve(r1 * r2);
    for (std::size_t p = 0; p < r1; ++p)
        for (std::size_t r = 0; r < r2; ++r) pairs.emplace_back(p, r);
    std::stable_sort(pairs.begin(), pairs.end(), [&](const auto& x, const auto& y) {
        return st.sigma[x.first] * st.gamma[x.second] > st.sigma[y.first] * st.gamma[y.second];
    });
    st.pair_map = pairs;
    for (const auto& [p, r] : pairs) {
        out.lambdas.push_back(st.sigma[p] * st.gamma[r]);
        out.factors_u.push_back(st.u_hat[p]);
        out.factors_z.push_back(st.z_hat[r]);
        out.factors_w.push_back(st.w(p, r));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Reconstruction

namespace detail {

inline void add_outer(DenseTensor& out, double w, const DenseTensor& x, const DenseTensor& y) {
    const std::size_t ny = y.size();
    double* dst = out.data();
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double wx = w * x[i];
        double* row = dst + i * ny;
        for (std::size_t j = 0; j < ny; ++j) row[j] += wx * y[j];
    }
}

inline void add_outer(DenseTensor& out, double w, const DenseTensor& x, const DenseTensor& y, const DenseTensor& z) {
    const std::size_t ny = y.size();
    const std::size_t nz = z.size();
    double* dst = out.data();
    for (std::size_t i = 0; i < x.size(); ++i)
        for (std::size_t j = 0; j < ny; ++j) {
            const double wxy = w * x[i] * y[j];
            double* row = dst + (i * ny + j) * nz;
            for (std::size_t k = 0; k < nz; ++k) row[k] += wxy * z[k];
        }
}

inline void add_term(DenseTensor& out, const OperatorDecomposition& d, std::size_t m) {
    add_outer(out, d.eigenvalues[m], d.eigentensors[m], d.eigentensors[m]);
}
inline void add_term(DenseTensor& out, const TransformDecomposition& d, std::size_t m) {
    add_outer(out, d.singulars[m], d.left[m], d.right[m]);
}
inline void add_term(DenseTensor& out, const TripleDecomposition& d, std::size_t m) {
    add_outer(out, d.lambdas[m], d.factors_u[m], d.factors_z[m], d.factors_w[m]);
}

}  // namespace detail

/// Partial sum of the first `keep` components in stored order.
template <typename Decomposition>
DenseTensor reconstruct(const Decomposition& d, std::size_t keep) {
    if (keep > d.component_count())
        throw InvalidKeep("keep " + std::to_string(keep) + " exceeds component count " +
                          std::to_string(d.component_count()));
    DenseTensor out(d.full_shape());
    for (std::size_t m = 0; m < keep; ++m) detail::add_term(out, d, m);
    return out;
}

template <typename Decomposition>
DenseTensor reconstruct(const Decomposition& d) {
    return reconstruct(d, d.component_count());
}

struct ResidualPoint {
    std::size_t keep = 0;
    double relative_error = 0.0;
};

/// Relative Frobenius error of every truncation keep = 0..count.
template <typename Decomposition>
std::vector<ResidualPoint> residual_curve(const GroupedTensor& a, const Decomposition& d) {
    if (!(a.tensor().shape() == d.full_shape()))
        throw ShapeMismatch("residual_curve: tensor " + a.tensor().shape().to_string() + " vs decomposition " +
                            d.full_shape().to_string());
    std::vector<ResidualPoint> curve;
    DenseTensor partial(d.full_shape());
    curve.push_back({0, relative_error(a.tensor(), partial)});
    for (std::size_t m = 0; m < d.component_count(); ++m) {
        detail::add_term(partial, d, m);
        curve.push_back({m + 1, relative_error(a.tensor(), partial)});
    }
    return curve;
}

// ---------------------------------------------------------------------------
// Verification predicates

/// max_{p,q} |<X_p, X_q> - delta_pq|
inline double orthonormality_deviation(std::span<const DenseTensor> family) {
    double dev = 0.0;
    for (std::size_t p = 0; p < family.size(); ++p)
        for (std::size_t q = p; q < family.size(); ++q)
            dev = std::max(dev, std::abs(inner(family[p], family[q]) - (p == q ? 1.0 : 0.0)));
    return dev;
}

/// max_p ||A U_p - lambda_p U_p|| / max(1, lambda_1)
inline double eigentensor_residual(const GroupedTensor& a, const OperatorDecomposition& d) {
    double worst = 0.0;
    const double scale = std::max(1.0, d.eigenvalues.empty() ? 0.0 : d.eigenvalues.front());
    for (std::size_t p = 0; p < d.rank(); ++p) {
        DenseTensor r = apply_operator(a, d.eigentensors[p]);
        r.axpy(-d.eigenvalues[p], d.eigentensors[p]);
        worst = std::max(worst, norm(r));
    }
    return worst / scale;
}

/// max_p |<U_p, A V_p> - sigma_p| / sigma_1
inline double singular_consistency(const GroupedTensor& a, const TransformDecomposition& d) {
    if (d.rank() == 0) return 0.0;
    double worst = 0.0;
    for (std::size_t p = 0; p < d.rank(); ++p)
        worst = std::max(worst, std::abs(inner(d.left[p], apply_operator(a, d.right[p])) - d.singulars[p]));
    return worst / d.singulars.front();
}

/// max_{r,s} |sum_{k,p} What_{k,p,r} What_{k,p,s} - delta_rs|
inline double joint_w_deviation(const TripleDecomposition& d) {
    const auto& st = d.stages;
    const std::size_t r1 = st.sigma.size();
    const std::size_t r2 = st.gamma.size();
    double dev = 0.0;
    for (std::size_t r = 0; r < r2; ++r)
        for (std::size_t s = r; s < r2; ++s) {
            double sum = 0.0;
            for (std::size_t p = 0; p < r1; ++p) sum += inner(st.w(p, r), st.w(p, s));
            dev = std::max(dev, std::abs(sum - (r == s ? 1.0 : 0.0)));
        }
    return dev;
}

/// Relative error of A = sum_p sigma_p Uhat_p (x) Vhat_p.
inline double first_stage_residual(const GroupedTensor& a, const TripleDecomposition& d) {
    DenseTensor approx(d.full_shape());
    const auto& st = d.stages;
    for (std::size_t p = 0; p < st.sigma.size(); ++p) detail::add_outer(approx, st.sigma[p], st.u_hat[p], st.v_hat[p]);
    return relative_error(a.tensor(), approx);
}

/// Relative error, over the stacked family, of
/// Vhat_p = sum_r gamma_r Zhat_r (x) What_{p,r}.
inline double second_stage_residual(const TripleDecomposition& d) {
    const auto& st = d.stages;
    double err2 = 0.0;
    double ref2 = 0.0;
    for (std::size_t p = 0; p < st.sigma.size(); ++p) {
        DenseTensor approx(st.v_hat[p].shape());
        for (std::size_t r = 0; r < st.gamma.size(); ++r)
            detail::add_outer(approx, st.gamma[r], st.z_hat[r], st.w(p, r));
        const DenseTensor diff = st.v_hat[p] - approx;
        err2 += inner(diff, diff);
        ref2 += inner(st.v_hat[p], st.v_hat[p]);
    }
    if (ref2 == 0.0) return err2 == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    return std::sqrt(err2 / ref2);
}

}  // namespace tenspec

#include <gtest/gtest.h>

#include "tenspec/eigensolver.hpp"
#include "test_helpers.hpp"

using namespace tenspec;
using tenspec::testing::from_spectrum;
using tenspec::testing::random_orthogonal;
using tenspec::testing::to_vector;

namespace {

double column_dot(const EigenResult& r, std::size_t p, std::size_t q) {
    double s = 0.0;
    for (std::size_t k = 0; k < r.n; ++k) s += r.vector(p)[k] * r.vector(q)[k];
    return s;
}

void expect_invariants(const SymmetricMatrix& a, const EigenResult& r) {
    const std::size_t n = a.dim();
    ASSERT_EQ(r.eigenvalues.size(), n);
    for (std::size_t p = 1; p < n; ++p) EXPECT_GE(r.eigenvalues[p - 1], r.eigenvalues[p]);
    for (std::size_t p = 0; p < n; ++p)
        for (std::size_t q = p; q < n; ++q) EXPECT_NEAR(column_dot(r, p, q), p == q ? 1.0 : 0.0, 1e-10);
    const double scale = std::max(1.0, std::abs(r.eigenvalues.front()));
    for (std::size_t p = 0; p < n; ++p) {
        double res2 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double av = 0.0;
            for (std::size_t j = 0; j < n; ++j) av += a(i, j) * r.vector(p)[j];
            const double d = av - r.eigenvalues[p] * r.vector(p)[i];
            res2 += d * d;
        }
        EXPECT_LE(std::sqrt(res2), 1e-8 * scale);
    }
}

SymmetricMatrix random_symmetric(std::size_t n, std::uint64_t seed) {
    auto v = to_vector(random_tensor(Shape{n, n}, seed));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < i; ++j) v[i * n + j] = v[j * n + i];
    return {n, std::move(v)};
}

}  // namespace

TEST(SymEig, Identity) {
    const auto a = SymmetricMatrix::identity(5);
    const auto r = sym_eig(a);
    for (double l : r.eigenvalues) EXPECT_EQ(l, 1.0);
    EXPECT_EQ(r.rank, 5u);
    expect_invariants(a, r);
}

TEST(SymEig, Diagonal) {
    const SymmetricMatrix a(3, {3, 0, 0, 0, 1, 0, 0, 0, 0});
    const auto r = sym_eig(a);
    EXPECT_EQ(r.eigenvalues, (std::vector<double>{3, 1, 0}));
    EXPECT_EQ(r.rank, 2u);
}

TEST(SymEig, RecoversConstructedSpectrum) {
    const auto q = random_orthogonal(3, 2024);
    const SymmetricMatrix a(3, from_spectrum(q, {5.0, 2.0, 1e-14}));
    const auto r = sym_eig(a);
    EXPECT_NEAR(r.eigenvalues[0], 5.0, 1e-9);
    EXPECT_NEAR(r.eigenvalues[1], 2.0, 1e-9);
    EXPECT_NEAR(r.eigenvalues[2], 0.0, 1e-9);
    EXPECT_EQ(r.rank, 2u);
    expect_invariants(a, r);
}

TEST(SymEig, SignConvention) {
    const auto r = sym_eig(random_symmetric(12, 5));
    for (std::size_t p = 0; p < r.n; ++p) {
        const auto v = r.vector(p);
        std::size_t best = 0;
        for (std::size_t k = 1; k < v.size(); ++k)
            if (std::abs(v[k]) > std::abs(v[best])) best = k;
        EXPECT_GT(v[best], 0.0);
    }
}

TEST(SymEig, DegenerateSpectrumProjector) {
    // Double eigenvalue 4: only the projector onto its eigenspace is unique.
    const auto q = random_orthogonal(4, 77);
    const SymmetricMatrix a(4, from_spectrum(q, {4.0, 4.0, 1.0, 0.5}));
    const auto r = sym_eig(a);
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j) {
            const double got = r.vector(0)[i] * r.vector(0)[j] + r.vector(1)[i] * r.vector(1)[j];
            const double want = q[i * 4 + 0] * q[j * 4 + 0] + q[i * 4 + 1] * q[j * 4 + 1];
            EXPECT_NEAR(got, want, 1e-10);
        }
}

TEST(SymEig, RejectsAsymmetric) {
    EXPECT_THROW(SymmetricMatrix(2, {1, 2, 3, 4}), NotSymmetric);
    EXPECT_NO_THROW(SymmetricMatrix(2, {1, 2, 2 + 1e-12, 4}));
}

TEST(SymEig, NoConvergenceReportsResidual) {
    EigenOptions opts;
    opts.max_sweeps = 1;
    try {
        sym_eig(random_symmetric(30, 3), opts);
        FAIL() << "expected NoConvergence";
    } catch (const NoConvergence& e) {
        EXPECT_GT(e.residual(), 0.0);
    }
}

TEST(NumericalRank, ThresholdSemantics) {
    EXPECT_EQ(numerical_rank(std::vector<double>{4, 2, 1e-16}, 1e-12), 2u);
    EXPECT_EQ(numerical_rank(std::vector<double>{0, 0, 0}), 0u);
    EXPECT_EQ(numerical_rank(std::vector<double>{-1, -2}), 0u);
    EXPECT_THROW(numerical_rank(std::vector<double>{1, 2}), NotSorted);
}

TEST(NumericalRank, GramOfDependentVectors) {
    // v3 = v1 + 2 v2, so the three vectors span a plane.
    const std::vector<std::vector<double>> v{{1, 0, 2, -1}, {0, 1, 1, 3}, {1, 2, 4, 5}};
    std::vector<double> g(9);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j) g[i * 3 + j] = tenspec::testing::flat_dot(v[i], v[j]);
    const auto r = sym_eig(SymmetricMatrix(3, g));
    EXPECT_EQ(numerical_rank(r.eigenvalues), 2u);
    EXPECT_EQ(r.rank, 2u);
}

TEST(SymEigProperties, RandomMatricesUpTo200) {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const std::size_t n = 1 + (seed * 37) % 200;
        const auto a = random_symmetric(n, 1000 + seed);
        const auto r = sym_eig(a);
        expect_invariants(a, r);

        double trace = 0.0, sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) trace += a(i, i);
        for (double l : r.eigenvalues) sum += l;
        EXPECT_NEAR(sum, trace, 1e-9 * std::max(1.0, std::abs(trace)));
    }
}

TEST(SymEigProperties, ReconstructionAndScaling) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const std::size_t n = 5 + seed;
        const auto a = random_symmetric(n, 500 + seed);
        const auto r = sym_eig(a);
        double err2 = 0.0, ref2 = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                double s = 0.0;
                for (std::size_t p = 0; p < n; ++p) s += r.eigenvalues[p] * r.vector(p)[i] * r.vector(p)[j];
                err2 += (s - a(i, j)) * (s - a(i, j));
                ref2 += a(i, j) * a(i, j);
            }
        EXPECT_LE(std::sqrt(err2), 1e-8 * std::sqrt(ref2));

        const double c = 3.5;
        std::vector<double> scaled(a.values().begin(), a.values().end());
        for (auto& x : scaled) x *= c;
        const auto rs = sym_eig(SymmetricMatrix(n, scaled));
        EXPECT_EQ(rs.rank, r.rank);
        for (std::size_t p = 0; p < n; ++p)
            EXPECT_NEAR(rs.eigenvalues[p], c * r.eigenvalues[p], 1e-10 * c * std::abs(r.eigenvalues.front()));
    }
}

#include <gtest/gtest.h>

#include <set>

#include "tenspec/tensor.hpp"
#include "test_helpers.hpp"

using namespace tenspec;
using tenspec::testing::flat_dot;
using tenspec::testing::to_vector;

TEST(Shape, RejectsEmptyAndZeroExtents) {
    EXPECT_THROW(Shape(std::vector<std::size_t>{}), InvalidShape);
    EXPECT_THROW((Shape{2, 0, 3}), InvalidShape);
    EXPECT_EQ((Shape{16, 16, 3}).element_count(), 768u);
}

TEST(Shape, DetectsOverflow) {
    const std::size_t big = std::size_t{1} << 32;
    EXPECT_THROW((Shape{big, big}), OverflowError);
}

TEST(Inner, OnesAndDisjointSupports) {
    const auto ones = DenseTensor::filled(Shape{2, 3}, 1.0);
    EXPECT_EQ(inner(ones, ones), 6.0);

    DenseTensor x(Shape{2, 2}), y(Shape{2, 2});
    x.at({0, 0}) = 3.0;
    x.at({1, 0}) = -1.0;
    y.at({0, 1}) = 5.0;
    y.at({1, 1}) = 2.0;
    EXPECT_EQ(inner(x, y), 0.0);
}

TEST(Inner, MatchesFlatLoop) {
    const auto x = random_tensor(Shape{3, 3, 3}, 11);
    const auto y = random_tensor(Shape{3, 3, 3}, 12);
    EXPECT_DOUBLE_EQ(inner(x, y), flat_dot(to_vector(x), to_vector(y)));
}

TEST(Inner, ShapeMismatch) {
    EXPECT_THROW(inner(DenseTensor(Shape{2, 3}), DenseTensor(Shape{3, 2})), ShapeMismatch);
}

TEST(Norm, SmallCases) {
    EXPECT_EQ(norm(DenseTensor(Shape{4, 5, 2})), 0.0);
    EXPECT_EQ(norm(DenseTensor(Shape{1}, {-3.0})), 3.0);
    EXPECT_EQ(norm(DenseTensor::filled(Shape{4, 4}, 1.0)), 4.0);
}

TEST(Outer, HandExample) {
    const DenseTensor x(Shape{2}, {1, 2});
    const DenseTensor y(Shape{2}, {3, 4});
    const auto z = outer(x, y);
    EXPECT_EQ(z.shape(), (Shape{2, 2}));
    EXPECT_EQ(to_vector(z), (std::vector<double>{3, 4, 6, 8}));
}

TEST(Outer, ScalarLikeFactorScales) {
    const DenseTensor c(Shape{1}, {2.5});
    const auto y = random_tensor(Shape{3, 2}, 3);
    const auto z = outer(c, y);
    EXPECT_EQ(z.shape(), (Shape{1, 3, 2}));
    for (std::size_t n = 0; n < y.size(); ++n) EXPECT_EQ(z[n], 2.5 * y[n]);
}

TEST(Outer, EveryFiberProportionalToSecondFactor) {
    const auto x = random_tensor(Shape{2, 2}, 21);
    const auto y = random_tensor(Shape{3}, 22);
    const auto z = outer(x, y);
    for (std::size_t a = 0; a < 2; ++a)
        for (std::size_t b = 0; b < 2; ++b) {
            const double ratio = z.at({a, b, 0}) / y[0];
            for (std::size_t c = 0; c < 3; ++c) EXPECT_NEAR(z.at({a, b, c}), ratio * y[c], 1e-15);
            EXPECT_NEAR(ratio, x.at({a, b}), 1e-15);
        }
}

TEST(Contract, IdentityAction) {
    const DenseTensor id(Shape{2, 2}, {1, 0, 0, 1});
    const DenseTensor v(Shape{2}, {5, 7});
    const auto r = contract(id, v, {1}, {0});
    EXPECT_EQ(to_vector(r), (std::vector<double>{5, 7}));
}

TEST(Contract, FullContractionIsInner) {
    const auto ones = DenseTensor::filled(Shape{2, 2}, 1.0);
    const auto r = contract(ones, ones, {0, 1}, {0, 1});
    EXPECT_EQ(r.shape(), (Shape{1}));
    EXPECT_EQ(r[0], 4.0);
    EXPECT_EQ(r[0], inner(ones, ones));
}

TEST(Contract, MatchesTripleLoopMatrixProduct) {
    const auto a = random_tensor(Shape{3, 4}, 31);
    const auto b = random_tensor(Shape{4, 5}, 32);
    const auto c = contract(a, b, {1}, {0});
    const auto ref = tenspec::testing::matmul(to_vector(a), to_vector(b), 3, 4, 5);
    ASSERT_EQ(c.shape(), (Shape{3, 5}));
    for (std::size_t n = 0; n < ref.size(); ++n) EXPECT_NEAR(c[n], ref[n], 1e-14);
}

TEST(Contract, KeepsFreeModeOrder) {
    // X (2,3,4) with mode 1 summed against Y (5,3): result (2,4,5).
    const auto x = random_tensor(Shape{2, 3, 4}, 41);
    const auto y = random_tensor(Shape{5, 3}, 42);
    const auto r = contract(x, y, {1}, {1});
    ASSERT_EQ(r.shape(), (Shape{2, 4, 5}));
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t k = 0; k < 4; ++k)
            for (std::size_t l = 0; l < 5; ++l) {
                double s = 0.0;
                for (std::size_t j = 0; j < 3; ++j) s += x.at({i, j, k}) * y.at({l, j});
                EXPECT_NEAR(r.at({i, k, l}), s, 1e-14);
            }
}

TEST(Contract, Errors) {
    const auto x = random_tensor(Shape{2, 3}, 1);
    const auto y = random_tensor(Shape{3, 2}, 2);
    EXPECT_THROW(contract(x, y, {0}, {0}), ShapeMismatch);
    EXPECT_THROW(contract(x, y, {2}, {0}), InvalidAxis);
    EXPECT_THROW(contract(x, y, {1, 1}, {0, 0}), InvalidAxis);
    EXPECT_THROW(contract(x, y, {1}, {0, 1}), InvalidAxis);
}

TEST(Contract, Bilinear) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto x1 = random_tensor(Shape{3, 4, 2}, 100 + seed);
        const auto x2 = random_tensor(Shape{3, 4, 2}, 200 + seed);
        const auto y = random_tensor(Shape{2, 5, 4}, 300 + seed);
        const double a = 1.7, b = -0.3;
        const auto lhs = contract(a * x1 + b * x2, y, {1, 2}, {2, 0});
        const auto rhs = a * contract(x1, y, {1, 2}, {2, 0}) + b * contract(x2, y, {1, 2}, {2, 0});
        EXPECT_LE(norm(lhs - rhs), 1e-10 * norm(rhs));
    }
}

TEST(IndexMap, RowMajorEnumeration) {
    const auto m = build_index_map(Shape{2, 2});
    const std::vector<MultiIndex> expected{{0, 0}, {0, 1}, {1, 0}, {1, 1}};
    EXPECT_EQ(m.rows, expected);
    const auto m1 = build_index_map(Shape{3});
    EXPECT_EQ(m1.rows, (std::vector<MultiIndex>{{0}, {1}, {2}}));
}

TEST(IndexMap, ExhaustiveBijection) {
    for (const Shape& shape : {Shape{2, 3, 2}, Shape{4, 1, 5, 3}, Shape{7}, Shape{10, 10, 10}}) {
        const auto m = build_index_map(shape);
        ASSERT_EQ(m.size(), shape.element_count());
        std::set<MultiIndex> distinct(m.rows.begin(), m.rows.end());
        EXPECT_EQ(distinct.size(), m.size());
        for (std::size_t n = 0; n < m.size(); ++n) {
            EXPECT_EQ(m.linear(m.rows[n]), n);
            EXPECT_EQ(delinearize(shape, n), m.rows[n]);
            for (std::size_t k = 0; k < shape.order(); ++k) EXPECT_LT(m.rows[n][k], shape[k]);
        }
    }
}

TEST(Unfold, OrderTwoIsIdentity) {
    const auto x = random_tensor(Shape{2, 3}, 5);
    EXPECT_EQ(unfold(x, 1), x);
}

TEST(Unfold, OuterProductBecomesRankOneMatrix) {
    const auto u = random_tensor(Shape{2, 2}, 6);
    const auto v = random_tensor(Shape{3}, 7);
    const auto m = unfold(outer(u, v), 2);
    ASSERT_EQ(m.shape(), (Shape{4, 3}));
    for (std::size_t r = 0; r < 4; ++r)
        for (std::size_t c = 0; c < 3; ++c) EXPECT_EQ(m.at({r, c}), u[r] * v[c]);
}

TEST(Unfold, EntriesFollowIndexMaps) {
    const auto x = random_tensor(Shape{2, 3, 4}, 8);
    const auto m = unfold(x, 2);
    const auto rows = build_index_map(Shape{2, 3});
    const auto cols = build_index_map(Shape{4});
    for (std::size_t n = 0; n < rows.size(); ++n)
        for (std::size_t c = 0; c < cols.size(); ++c)
            EXPECT_EQ(m.at({n, c}), x.at({rows.rows[n][0], rows.rows[n][1], cols.rows[c][0]}));
}

TEST(Unfold, FoldRoundTripIsExact) {
    for (std::size_t s = 1; s < 3; ++s) {
        const auto x = random_tensor(Shape{2, 3, 4}, 9 + s);
        EXPECT_EQ(fold(unfold(x, s), x.shape(), s), x);
    }
}

TEST(Unfold, InvalidSplit) {
    const auto x = random_tensor(Shape{2, 3, 4}, 1);
    EXPECT_THROW(unfold(x, 0), InvalidSplit);
    EXPECT_THROW(unfold(x, 3), InvalidSplit);
    EXPECT_THROW(fold(unfold(x, 1), x.shape(), 2), ShapeMismatch);
}

TEST(RandomTensor, DeterministicPerSeed) {
    const Shape s{4, 5};
    EXPECT_EQ(random_tensor(s, 99), random_tensor(s, 99));
    EXPECT_NE(random_tensor(s, 99), random_tensor(s, 100));
}

TEST(RandomTensor, FrozenLeadingValues) {
    // First four entries from an independent MT19937-64 implementation.
    const auto t42 = random_tensor(Shape{4}, 42);
    EXPECT_EQ(to_vector(t42),
              (std::vector<double>{0.5103110659090779, 0.27806278770939485, 0.5042904014960532, -0.7274546327351259}));
    const auto t7 = random_tensor(Shape{2, 2}, 7);
    EXPECT_EQ(to_vector(t7),
              (std::vector<double>{0.508770608305716, 0.8986024057852884, -0.765171437930964, 0.7838263534249525}));
}

TEST(RandomTensor, ExperimentShapeNonDegenerate) {
    const auto t = random_tensor(Shape{16, 16, 3}, 42);
    EXPECT_EQ(t.size(), 768u);
    EXPECT_GT(norm(t), 0.0);
    for (double v : t.values()) {
        EXPECT_GE(v, -1.0);
        EXPECT_LT(v, 1.0);
    }
}

TEST(DenseTensor, RejectsNonFiniteInput) {
    EXPECT_THROW(DenseTensor(Shape{2}, {1.0, std::nan("")}), NonFiniteValue);
    EXPECT_THROW(DenseTensor(Shape{2}, {1.0, INFINITY}), NonFiniteValue);
    EXPECT_THROW(DenseTensor(Shape{3}, {1.0, 2.0}), ShapeMismatch);
}

// Properties over seeded random instances.
TEST(TensorProperties, InnerSymmetricAndCauchySchwarz) {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const Shape s{2 + seed % 3, 3, 1 + seed % 4};
        const auto x = random_tensor(s, 2 * seed);
        const auto y = random_tensor(s, 2 * seed + 1);
        EXPECT_EQ(inner(x, y), inner(y, x));
        EXPECT_LE(std::abs(inner(x, y)), norm(x) * norm(y) * (1.0 + 1e-9));
    }
}

TEST(TensorProperties, OuterNormFactorizes) {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const auto x = random_tensor(Shape{1 + seed % 4, 3}, 3 * seed);
        const auto y = random_tensor(Shape{2, 1 + seed % 5}, 3 * seed + 1);
        const auto z = outer(x, y);
        const double ref = inner(x, x) * inner(y, y);
        EXPECT_NEAR(inner(z, z), ref, 1e-10 * ref);
    }
}

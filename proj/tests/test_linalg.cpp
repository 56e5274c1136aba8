#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "krylovmp/linalg.hpp"
#include "test_support.hpp"

namespace km = krylovmp;

namespace {

km::Matrix mat2(double a, double b, double c, double d) {
    km::Matrix m(2);
    m(0, 0) = a;
    m(0, 1) = b;
    m(1, 0) = c;
    m(1, 1) = d;
    return m;
}

}  // namespace

TEST(Kernels, DotMatvecNorm) {
    EXPECT_EQ(km::dot(std::vector<double>{1, 2, 3}, std::vector<double>{1, 1, 1}), 6.0);
    EXPECT_EQ(km::norm2(std::vector<double>{3, 4}), 5.0);
    const auto a = km::SpdMatrix::diagonal({1, 2, 3, 4});
    EXPECT_EQ(km::matvec(a, std::vector<double>(4, 1.0)), (km::Vector{1, 2, 3, 4}));
    EXPECT_EQ(km::axpy(2.0, std::vector<double>{1, 1}, std::vector<double>{3, 4}), (km::Vector{5, 6}));
    EXPECT_EQ(km::subtract(std::vector<double>{3, 4}, std::vector<double>{1, 1}), (km::Vector{2, 3}));
}

TEST(Kernels, DotAccumulatesLeftToRight) {
    // (1e16 + 1) + (-1e16) = 0 in binary64 when summed in index order.
    EXPECT_EQ(km::dot(std::vector<double>{1e16, 1, -1e16}, std::vector<double>{1, 1, 1}), 0.0);
}

TEST(Kernels, DenseMatvecMatchesDiagonal) {
    const auto d = km::SpdMatrix::diagonal({2, 5, 7});
    const auto m = km::SpdMatrix::dense(d.to_dense());
    const km::Vector v{0.3, -1.25, 4.5};
    EXPECT_EQ(km::matvec(d, v), km::matvec(m, v));
}

TEST(ANorm, Examples) {
    const km::Vector v{1.5, -2.0, 0.25};
    EXPECT_EQ(km::a_norm(km::SpdMatrix::identity(3), v), km::norm2(v));
    EXPECT_EQ(km::a_norm(km::SpdMatrix::diagonal({4}), std::vector<double>{3}), 6.0);
    EXPECT_DOUBLE_EQ(km::a_norm(km::SpdMatrix::diagonal({1, 100}), std::vector<double>{1, 1}), std::sqrt(101.0));
}

TEST(SpdMatrix, RejectsInvalidInput) {
    EXPECT_THROW(km::SpdMatrix::diagonal({1, 0}), km::NotPositiveDefinite);
    EXPECT_THROW(km::SpdMatrix::diagonal({1, -2}), km::NotPositiveDefinite);
    EXPECT_THROW(km::SpdMatrix::dense(mat2(1, 2, 2, 1)), km::NotPositiveDefinite);
}

TEST(Cholesky, Examples) {
    const auto ld = km::cholesky(km::SpdMatrix::diagonal({4, 9}));
    ASSERT_TRUE(ld.is_diagonal());
    EXPECT_EQ(ld(0, 0), 2.0);
    EXPECT_EQ(ld(1, 1), 3.0);

    const auto l = km::cholesky(km::SpdMatrix::dense(mat2(4, 2, 2, 5)));
    EXPECT_EQ(l(0, 0), 2.0);
    EXPECT_EQ(l(0, 1), 0.0);
    EXPECT_EQ(l(1, 0), 1.0);
    EXPECT_EQ(l(1, 1), 2.0);
}

TEST(Cholesky, ReproducesRandomDenseMatrices) {
    std::mt19937_64 rng(41);
    for (int trial = 0; trial < 10; ++trial) {
        const km::Matrix a = km::testing::random_spd(12, 1e4, rng);
        const auto spd = km::SpdMatrix::dense(a);
        const km::Matrix l = km::cholesky(spd).to_dense();
        const km::Matrix llt = l * l.transposed();
        const km::Matrix sym = spd.dense_entries();
        for (std::size_t i = 0; i < 12; ++i)
            for (std::size_t j = 0; j < 12; ++j) EXPECT_NEAR(llt(i, j), sym(i, j), 1e-12 * sym.frobenius_norm());
    }
}

TEST(TriangularSolve, IdentityRoundsTheInput) {
    const km::Vector y{1.0 / 3.0, 70000.0, 1e-10, -2.5};
    for (const auto& fmt : km::builtin_formats) {
        const auto l = km::LowerTriangular::identity(4);
        EXPECT_EQ(km::solve_lower(l, y, fmt), km::round_vector(y, fmt));
        EXPECT_EQ(km::solve_upper(l, y, fmt), km::round_vector(y, fmt));
        EXPECT_EQ(km::solve_spd(l, y, fmt), km::round_vector(y, fmt));
    }
}

TEST(TriangularSolve, SmallOracles) {
    const auto d = km::LowerTriangular::diagonal({2, 4});
    EXPECT_EQ(km::solve_lower(d, std::vector<double>{1, 2}, km::fp64), (km::Vector{0.5, 0.5}));
    EXPECT_EQ(km::solve_upper(d, std::vector<double>{1, 2}, km::fp64), (km::Vector{0.5, 0.5}));

    const auto l = km::cholesky(km::SpdMatrix::dense(mat2(4, 2, 2, 5)));
    EXPECT_EQ(km::solve_lower(l, std::vector<double>{2, 3}, km::fp64), (km::Vector{1.0, 1.0}));
    const km::Vector x = km::solve_upper(l, std::vector<double>{2, 2}, km::fp64);
    EXPECT_EQ(x, (km::Vector{0.5, 1.0}));
    // Lᵀx = y
    EXPECT_LT(std::abs(2 * x[0] + 1 * x[1] - 2), 1e-14);
    EXPECT_LT(std::abs(2 * x[1] - 2), 1e-14);

    EXPECT_EQ(km::solve_spd(km::cholesky(km::SpdMatrix::diagonal({4})), std::vector<double>{8}, km::fp64),
              (km::Vector{2.0}));
    EXPECT_EQ(km::solve_spd(l, std::vector<double>{6, 7}, km::fp64), (km::Vector{1.0, 1.0}));
}

TEST(TriangularSolve, DenseStorageOfDiagonalFactorMatchesBitwise) {
    const km::Vector dvals{1.7, 3.1, 0.37, 12.5};
    const auto d = km::LowerTriangular::diagonal(dvals);
    const auto dd = km::LowerTriangular::dense(d.to_dense());
    const km::Vector y{0.1, -3.7, 2.2, 1e-3};
    for (const auto& fmt : km::builtin_formats) {
        EXPECT_EQ(km::solve_lower(d, y, fmt), km::solve_lower(dd, y, fmt));
        EXPECT_EQ(km::solve_upper(d, y, fmt), km::solve_upper(dd, y, fmt));
    }
}

TEST(TriangularSolve, LowPrecisionResultsAreRepresentable) {
    std::mt19937_64 rng(42);
    const auto l = km::cholesky(km::SpdMatrix::dense(km::testing::random_spd(8, 100, rng)));
    std::normal_distribution<double> g;
    km::Vector y(8);
    for (auto& v : y) v = g(rng);
    for (const auto& fmt : {km::fp32, km::fp16, km::bfloat16}) {
        const km::Vector x = km::solve_spd(l, y, fmt);
        EXPECT_EQ(x, km::round_vector(x, fmt));
        const km::Vector exact = km::solve_spd(l, y, km::fp64);
        EXPECT_LT(km::norm2(km::subtract(x, exact)), 100 * 8 * fmt.unit_roundoff() * 100 * km::norm2(exact));
    }
}

TEST(Spectral, ConditionNumbers) {
    EXPECT_EQ(km::cond2(km::SpdMatrix::identity(6)), 1.0);
    EXPECT_NEAR(km::cond2(km::SpdMatrix::dense(mat2(2, 1, 1, 2))), 3.0, 1e-14);
    EXPECT_EQ(km::spectral_norm(km::SpdMatrix::diagonal({3, 9, 1})), 9.0);
    EXPECT_EQ(km::inverse_spectral_norm(km::SpdMatrix::diagonal({4, 9, 2})), 0.5);
}

TEST(Spectral, JacobiMatchesKnownSpectrum) {
    std::mt19937_64 rng(43);
    const km::Matrix a = km::testing::random_spd(15, 1e3, rng);
    const auto eig = km::symmetric_eigen(a);
    ASSERT_EQ(eig.values.size(), 15u);
    EXPECT_NEAR(eig.values.front(), 1.0, 1e-9);
    EXPECT_NEAR(eig.values.back(), 1e3, 1e-9);
    for (std::size_t i = 1; i < eig.values.size(); ++i) EXPECT_LE(eig.values[i - 1], eig.values[i]);
    // A v = λ v for the extreme pair
    for (std::size_t idx : {std::size_t{0}, std::size_t{14}}) {
        km::Vector v(15), av(15, 0.0);
        for (std::size_t i = 0; i < 15; ++i) v[i] = eig.vectors(i, idx);
        for (std::size_t i = 0; i < 15; ++i)
            for (std::size_t j = 0; j < 15; ++j) av[i] += a(i, j) * v[j];
        for (std::size_t i = 0; i < 15; ++i) EXPECT_NEAR(av[i], eig.values[idx] * v[i], 1e-9);
    }
}

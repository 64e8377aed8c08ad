#include <gtest/gtest.h>

#include <random>

#include "simba/errors.hpp"
#include "simba/linalg.hpp"
#include "test_util.hpp"

namespace simba {
namespace {

using test::randn;

TEST(Solve, IdentityReturnsRhs) {
    std::mt19937_64 rng(1);
    const Matrix r = randn(3, 4, rng);
    EXPECT_EQ(solve(Matrix::Identity(3, 3), r).solution, r);
}

TEST(Solve, DiagonalInverse) {
    Matrix m(2, 2);
    m << 2, 0, 0, 4;
    Matrix expected(2, 2);
    expected << 0.5, 0, 0, 0.25;
    EXPECT_TRUE(solve(m, Matrix::Identity(2, 2)).solution.isApprox(expected, 1e-15));
    EXPECT_TRUE(inverse(m).isApprox(expected, 1e-15));
}

TEST(Solve, SingularMatrixThrows) {
    Matrix m(2, 2);
    m << 1, 1, 1, 1;
    EXPECT_THROW(solve(m, Matrix::Identity(2, 2)), SingularMatrixError);
}

TEST(Solve, ShapeMismatchThrows) {
    EXPECT_THROW(solve(Matrix::Identity(3, 3), Matrix::Zero(2, 1)), DimensionError);
    EXPECT_THROW(solve(Matrix::Zero(2, 3), Matrix::Zero(2, 1)), DimensionError);
}

TEST(Solve, ResidualOnWellConditionedMatrices) {
    std::mt19937_64 rng(7);
    int checked = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const Index n = 1 + trial % 8;
        const Matrix m = randn(n, n, rng);
        const Matrix r = randn(n, 3, rng);
        SolveResult s;
        try {
            s = solve(m, r);
        } catch (const SingularMatrixError&) {
            continue;
        }
        if (1.0 / s.rcond >= 1e6) continue;
        ++checked;
        const double residual = (m * s.solution - r).cwiseAbs().rowwise().sum().maxCoeff();
        const double scale = 1.0 + r.cwiseAbs().rowwise().sum().maxCoeff();
        EXPECT_LE(residual, 1e-9 * scale) << "trial " << trial;
    }
    EXPECT_GT(checked, 150);
}

TEST(SpectralRadius, Diagonal) {
    Matrix m = Matrix::Zero(2, 2);
    m(0, 0) = 0.5;
    m(1, 1) = -0.2;
    EXPECT_NEAR(spectral_radius(m), 0.5, 1e-15);
}

TEST(SpectralRadius, RotationHasUnitRadius) {
    Matrix m(2, 2);
    m << 0, 1, -1, 0;
    EXPECT_NEAR(spectral_radius(m), 1.0, 1e-14);
}

TEST(SpectralRadius, TriangularWithLargeOffDiagonal) {
    Matrix m(2, 2);
    m << 0.9, 1000, 0, 0.1;
    EXPECT_NEAR(spectral_radius(m), 0.9, 1e-10);
}

TEST(SpectralRadius, RandomTriangularEqualsMaxDiagonal) {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 100; ++trial) {
        const Index n = 1 + trial % 10;
        Matrix m = randn(n, n, rng).triangularView<Eigen::Upper>();
        if (trial % 2) m.transposeInPlace();
        EXPECT_NEAR(spectral_radius(m), m.diagonal().cwiseAbs().maxCoeff(), 1e-10) << "trial " << trial;
    }
}

TEST(SpectralRadius, ComplexPairDominates) {
    // Rotation by 0.3 rad scaled to 0.95 plus a small real eigenvalue: power iteration would oscillate.
    Matrix m = Matrix::Zero(3, 3);
    m(0, 0) = m(1, 1) = 0.95 * std::cos(0.3);
    m(0, 1) = -0.95 * std::sin(0.3);
    m(1, 0) = 0.95 * std::sin(0.3);
    m(2, 2) = 0.2;
    std::mt19937_64 rng(4);
    const Matrix t = randn(3, 3, rng) + 3.0 * Matrix::Identity(3, 3);
    EXPECT_NEAR(spectral_radius(t * m * inverse(t)), 0.95, 1e-12);
}

TEST(MinSymmetricEigenvalue, UsesSymmetricPart) {
    Matrix m(2, 2);
    m << 1, 4, -4, 1;  // symmetric part is the identity
    EXPECT_NEAR(min_symmetric_eigenvalue(m), 1.0, 1e-15);
}

}  // namespace
}  // namespace simba

#pragma once

#include <complex>

#include "simba/matrix.hpp"

namespace simba {

/// Pivots smaller than this fraction of max|M| are treated as singular.
inline constexpr double kSingularPivotRatio = 1e-12;

struct SolveResult {
    Matrix solution;
    /// Reciprocal condition estimate (1-norm) of the factored matrix.
    double rcond = 0.0;
};

/// Solves M·X = R with a partially pivoted LU factorization.
///
/// Throws DimensionError on shape mismatch and SingularMatrixError when a
/// pivot falls below kSingularPivotRatio × max|M_ij|.
SolveResult solve(const Matrix& m, const Matrix& r);

/// M⁻¹ via solve(M, I).
Matrix inverse(const Matrix& m);

/// All (complex) eigenvalues of a square matrix.
///
/// Hessenberg reduction followed by shifted QR sweeps to real Schur form.
/// Throws ConvergenceError (with the largest magnitude found so far) when the
/// iteration budget is exhausted.
Eigen::VectorXcd eigenvalues(const Matrix& m);

/// max |λ_i(M)|.
double spectral_radius(const Matrix& m);

/// Smallest eigenvalue of the symmetric part ½(M + Mᵀ).
double min_symmetric_eigenvalue(const Matrix& m);

}  // namespace simba

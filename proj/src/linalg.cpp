#include "simba/linalg.hpp"

#include <cmath>
#include <sstream>

#include "simba/errors.hpp"

namespace simba {

bool all_finite(const Matrix& m) { return m.allFinite(); }

void require_finite(const Matrix& m, std::string_view what) {
    if (!m.allFinite()) {
        throw ContractError(std::string(what) + ": matrix has non-finite entries");
    }
}

void require_shape(const Matrix& m, Index rows, Index cols, std::string_view what) {
    if (m.rows() != rows || m.cols() != cols) {
        std::ostringstream os;
        os << what << ": expected " << rows << "x" << cols << ", got " << m.rows() << "x" << m.cols();
        throw DimensionError(os.str());
    }
}

Index count_observed(const Mask& mask) { return (mask != 0).count(); }

SolveResult solve(const Matrix& m, const Matrix& r) {
    if (m.rows() != m.cols()) {
        throw DimensionError("solve: matrix is not square");
    }
    if (r.rows() != m.rows()) {
        throw DimensionError("solve: right-hand side row count does not match");
    }
    const double scale = m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
    if (!(scale > 0.0) || !std::isfinite(scale)) {
        throw SingularMatrixError("solve: matrix is zero or non-finite");
    }
    Eigen::PartialPivLU<Matrix> lu(m);
    const double min_pivot = lu.matrixLU().diagonal().cwiseAbs().minCoeff();
    if (min_pivot < kSingularPivotRatio * scale) {
        std::ostringstream os;
        os << "solve: matrix is singular to working precision (pivot " << min_pivot << ", scale " << scale << ")";
        throw SingularMatrixError(os.str());
    }
    return {lu.solve(r), lu.rcond()};
}

Matrix inverse(const Matrix& m) { return solve(m, Matrix::Identity(m.rows(), m.cols())).solution; }

Eigen::VectorXcd eigenvalues(const Matrix& m) {
    if (m.rows() != m.cols()) {
        throw DimensionError("eigenvalues: matrix is not square");
    }
    if (!m.allFinite()) {
        throw ContractError("eigenvalues: matrix has non-finite entries");
    }
    // EigenSolver: Hessenberg reduction + Francis double-shift QR.
    Eigen::EigenSolver<Matrix> solver(m, /*computeEigenvectors=*/false);
    if (solver.info() != Eigen::Success) {
        // The real Schur form computed so far still bounds the converged part.
        const Matrix t = solver.pseudoEigenvalueMatrix();
        throw ConvergenceError("eigenvalues: QR iteration did not converge", t.diagonal().cwiseAbs().maxCoeff());
    }
    return solver.eigenvalues();
}

double spectral_radius(const Matrix& m) {
    if (m.size() == 0) {
        return 0.0;
    }
    return eigenvalues(m).cwiseAbs().maxCoeff();
}

double min_symmetric_eigenvalue(const Matrix& m) {
    if (m.rows() != m.cols()) {
        throw DimensionError("min_symmetric_eigenvalue: matrix is not square");
    }
    const Matrix sym = 0.5 * (m + m.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> solver(sym, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) {
        throw ConvergenceError("min_symmetric_eigenvalue: did not converge", 0.0);
    }
    return solver.eigenvalues().minCoeff();
}

}  // namespace simba

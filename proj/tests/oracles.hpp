#pragma once

// Independent long-double re-implementations used as test oracles. They share
// no code with the library: plain Eigen arithmetic at higher precision.

#include <Eigen/Dense>
#include <cmath>

#include "simba/matrix.hpp"

namespace simba::test {

using LMatrix = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;

/// A = S12 · G⁻¹ with S = WᵀW + e^ε̃ I and G = ½(S11/γ² + S22) + V − Vᵀ.
inline LMatrix schur_A(const LMatrix& W, const LMatrix& V, long double eps_tilde, long double gamma) {
    const Eigen::Index n = V.rows();
    LMatrix S = W.transpose() * W;
    S.diagonal().array() += std::exp(eps_tilde);
    const LMatrix G = (S.topLeftCorner(n, n) / (gamma * gamma) + S.bottomRightCorner(n, n)) / 2 + V - V.transpose();
    // S12·G⁻¹ = (G⁻ᵀ S12ᵀ)ᵀ
    return G.transpose().fullPivLu().solve(S.topRightCorner(n, n).transpose()).transpose();
}

/// Outputs y_k = C x_k + D u_k with x_{k+1} = A x_k + B u_k; inputs are l × m, returns l × p.
inline LMatrix simulate(const LMatrix& A, const LMatrix& B, const LMatrix& C, const LMatrix& D, const LMatrix& u,
                        const LMatrix& x0) {
    LMatrix y(u.rows(), C.rows());
    LMatrix x = x0;
    for (Eigen::Index k = 0; k < u.rows(); ++k) {
        y.row(k) = (C * x + D * u.row(k).transpose()).transpose();
        x = A * x + B * u.row(k).transpose();
    }
    return y;
}

/// Σ over mask of squared errors divided by `denominator`.
inline long double masked_sse(const LMatrix& predicted, const Matrix& observed, const Mask& mask,
                              long double denominator) {
    long double total = 0;
    for (Eigen::Index j = 0; j < predicted.cols(); ++j)
        for (Eigen::Index i = 0; i < predicted.rows(); ++i)
            if (mask(i, j)) {
                const long double e = predicted(i, j) - static_cast<long double>(observed(i, j));
                total += e * e;
            }
    return total / denominator;
}

}  // namespace simba::test

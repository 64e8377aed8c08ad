#pragma once

#include <cstddef>
#include <random>

#include "simba/matrix.hpp"
#include "simba/tape.hpp"

namespace simba {

/// Free parameters of a Schur matrix with spectral radius below `gamma`.
///
/// With S = WᵀW + exp(eps_tilde)·I (2n×2n, positive definite for every W) and
/// G = ½(S₁₁/γ² + S₂₂) + V − Vᵀ, the matrix A = S₁₂·G⁻¹ always satisfies
/// |λ_i(A)| < γ. Every Schur matrix is reachable for γ = 1.
struct SchurParams {
    Matrix W;                 // 2n × 2n
    Matrix V;                 // n × n
    double eps_tilde = 0.0;   // ε = exp(eps_tilde)
    double gamma = 1.0;       // 0 < gamma ≤ 1

    Index n() const noexcept { return V.rows(); }

    /// Throws ConfigError when gamma is out of (0, 1] or the shapes disagree.
    void validate() const;
};

/// Default starting point: W = I + 0.1·N(0,1), V = 0.1·N(0,1), eps_tilde = ln(1e-3).
SchurParams default_schur_params(Index n, double gamma, std::mt19937_64& rng);

/// Tape handles of the trainable parameters.
struct SchurVars {
    Var W;
    Var V;
    Var eps_tilde;  // 1×1; may be a constant when ε̃ is frozen
};

/// Records A = S₁₂·G⁻¹ on `tape` so gradients reach W, V and ε̃.
Var build_A(Tape& tape, const SchurVars& vars, double gamma);

/// Value-only construction of A. Throws OverflowError when exp(eps_tilde) overflows.
Matrix build_A(const SchurParams& params);

/// S = WᵀW + εI.
Matrix schur_S(const SchurParams& params);

/// G = ½(S₁₁/γ² + S₂₂) + V − Vᵀ.
Matrix schur_G(const SchurParams& params);

/// Block matrix [[γQ, A·G], [GᵀAᵀ, Gᵀ + G − Qᵀ/γ]] with Q = S₁₁/γ.
///
/// Positive definiteness of its symmetric part certifies |λ_i(A)| < γ.
/// For A produced by build_A the certificate reproduces S.
Matrix lmi_certificate(const SchurParams& params, const Matrix& A);

struct PerturbReport {
    double base_radius = 0.0;
    double max_radius = 0.0;
    std::size_t samples = 0;
    std::size_t violations = 0;  // samples with radius ≥ gamma
};

/// Adds i.i.d. N(0, noise_scale²) noise to W, V and eps_tilde `samples` times,
/// rebuilds A each time and records the spectral radii.
PerturbReport perturb_check(const SchurParams& params, double noise_scale, std::size_t samples,
                            std::mt19937_64& rng);

}  // namespace simba

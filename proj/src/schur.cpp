#include "simba/schur.hpp"

#include <algorithm>
#include <cmath>

#include "simba/errors.hpp"
#include "simba/linalg.hpp"

namespace simba {

void SchurParams::validate() const {
    if (!(gamma > 0.0 && gamma <= 1.0)) {
        throw ConfigError("schur: gamma must lie in (0, 1]");
    }
    const Index dim = V.rows();
    if (dim < 1 || V.cols() != dim) {
        throw ConfigError("schur: V must be square and non-empty");
    }
    if (W.rows() != 2 * dim || W.cols() != 2 * dim) {
        throw ConfigError("schur: W must be 2n x 2n");
    }
    if (!std::isfinite(eps_tilde) || !W.allFinite() || !V.allFinite()) {
        throw ConfigError("schur: parameters must be finite");
    }
}

SchurParams default_schur_params(Index n, double gamma, std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    SchurParams p;
    p.W = Matrix::Identity(2 * n, 2 * n);
    for (Index j = 0; j < p.W.cols(); ++j)
        for (Index i = 0; i < p.W.rows(); ++i) p.W(i, j) += 0.1 * normal(rng);
    p.V.resize(n, n);
    for (Index j = 0; j < n; ++j)
        for (Index i = 0; i < n; ++i) p.V(i, j) = 0.1 * normal(rng);
    p.eps_tilde = std::log(1e-3);
    p.gamma = gamma;
    return p;
}

Var build_A(Tape& tape, const SchurVars& vars, double gamma) {
    if (!(gamma > 0.0 && gamma <= 1.0)) {
        throw ConfigError("schur: gamma must lie in (0, 1]");
    }
    const Index two_n = tape.value(vars.W).rows();
    const Index n = two_n / 2;
    const Var eps = tape.exp(vars.eps_tilde);
    const Var gram = tape.matmul(tape.transpose(vars.W), vars.W);
    const Var s = tape.add(gram, tape.scale_by(tape.constant(Matrix::Identity(two_n, two_n)), eps));
    const Var s11 = tape.block(s, 0, 0, n, n);
    const Var s12 = tape.block(s, 0, n, n, n);
    const Var s22 = tape.block(s, n, n, n, n);
    const Var skew = tape.sub(vars.V, tape.transpose(vars.V));
    const Var g = tape.add(tape.add(tape.scale(s11, 0.5 / (gamma * gamma)), tape.scale(s22, 0.5)), skew);
    // A = S₁₂·G⁻¹ = (G⁻ᵀ·S₁₂ᵀ)ᵀ
    return tape.transpose(tape.solve(tape.transpose(g), tape.transpose(s12)));
}

Matrix schur_S(const SchurParams& params) {
    params.validate();
    const double eps = std::exp(params.eps_tilde);
    if (!std::isfinite(eps)) {
        throw OverflowError("schur: exp(eps_tilde) overflowed");
    }
    Matrix s = params.W.transpose() * params.W;
    s.diagonal().array() += eps;
    if (!s.allFinite()) {
        throw OverflowError("schur: S has non-finite entries");
    }
    return s;
}

namespace {

Matrix g_from_S(const Matrix& s, const SchurParams& params) {
    const Index n = params.n();
    const double inv_g2 = 1.0 / (params.gamma * params.gamma);
    return 0.5 * (s.topLeftCorner(n, n) * inv_g2 + s.bottomRightCorner(n, n)) + params.V - params.V.transpose();
}

}  // namespace

Matrix schur_G(const SchurParams& params) { return g_from_S(schur_S(params), params); }

Matrix build_A(const SchurParams& params) {
    const Matrix s = schur_S(params);
    const Index n = params.n();
    const Matrix g = g_from_S(s, params);
    const Matrix s12 = s.topRightCorner(n, n);
    return solve(g.transpose(), s12.transpose()).solution.transpose();
}

Matrix lmi_certificate(const SchurParams& params, const Matrix& A) {
    const Index n = params.n();
    require_shape(A, n, n, "lmi_certificate: A");
    const Matrix s = schur_S(params);
    const Matrix g = g_from_S(s, params);
    const double gamma = params.gamma;
    const Matrix q = s.topLeftCorner(n, n) / gamma;
    Matrix cert(2 * n, 2 * n);
    cert.topLeftCorner(n, n) = gamma * q;
    cert.topRightCorner(n, n) = A * g;
    cert.bottomLeftCorner(n, n) = g.transpose() * A.transpose();
    cert.bottomRightCorner(n, n) = g.transpose() + g - q.transpose() / gamma;
    return cert;
}

PerturbReport perturb_check(const SchurParams& params, double noise_scale, std::size_t samples,
                            std::mt19937_64& rng) {
    if (!(noise_scale >= 0.0)) {
        throw ConfigError("perturb_check: noise_scale must be non-negative");
    }
    PerturbReport report;
    report.base_radius = spectral_radius(build_A(params));
    report.max_radius = report.base_radius;
    std::normal_distribution<double> normal(0.0, 1.0);
    for (std::size_t s = 0; s < samples; ++s) {
        SchurParams q = params;
        if (noise_scale > 0.0) {
            q.W += noise_scale * Matrix::NullaryExpr(q.W.rows(), q.W.cols(), [&] { return normal(rng); });
            q.V += noise_scale * Matrix::NullaryExpr(q.V.rows(), q.V.cols(), [&] { return normal(rng); });
            q.eps_tilde += noise_scale * normal(rng);
        }
        const double r = spectral_radius(build_A(q));
        report.max_radius = std::max(report.max_radius, r);
        if (!(r < q.gamma)) ++report.violations;
        ++report.samples;
    }
    return report;
}

}  // namespace simba

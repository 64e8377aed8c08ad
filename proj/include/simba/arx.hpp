#pragma once

#include <optional>
#include <span>
#include <vector>

#include "simba/dataset.hpp"
#include "simba/matrix.hpp"

namespace simba {

/// y(k) = Σ_{i=1..na} a_i y(k−i) + Σ_{j=1..nb} b_j u(k−j) [+ b_0 u(k)].
struct ArxModel {
    int na = 1;
    int nb = 1;
    std::vector<Matrix> a;     // na blocks, p × p
    std::vector<Matrix> b;     // nb blocks, p × m; b[j-1] multiplies u(k−j)
    std::optional<Matrix> b0;  // direct feedthrough, when fitted with feedthrough

    Index p() const { return a.empty() ? 0 : a.front().rows(); }
    Index m() const { return b.empty() ? 0 : b.front().cols(); }
    void validate() const;
};

struct ArxOptions {
    int na = 1;
    int nb = 1;
    bool feedthrough = false;
    double ridge = 1e-8;  // used only when the regressor is rank deficient
};

/// Exact one-step least squares over every time step whose current and lagged
/// outputs are fully observed. Falls back to a ridge-regularized solve (with a
/// logged warning) when the regressor is rank deficient.
ArxModel fit_arx_ls(std::span<const Trajectory* const> trajectories, const ArxOptions& options);

/// Fits on the training split.
ArxModel fit_arx_ls(const Dataset& dataset, const ArxOptions& options);

/// One-step training MSE (mean over used rows and channels).
double arx_one_step_mse(const ArxModel& model, std::span<const Trajectory* const> trajectories);

/// Free-run simulation feeding predictions back. `warmup` holds the na outputs
/// preceding k = 0, oldest first (empty means zeros); inputs before k = 0 are zero.
/// Throws DivergenceError beyond kDivergenceBound.
Matrix simulate_arx(const ArxModel& model, const Matrix& inputs, const Matrix& warmup = Matrix());

}  // namespace simba

#include "simba/state_space.hpp"

#include <algorithm>
#include <cmath>

#include "simba/errors.hpp"
#include "simba/linalg.hpp"
#include "simba/tape.hpp"

namespace simba {

const char* stability_name(StabilityMode mode) { return mode == StabilityMode::schur ? "schur" : "free"; }

StabilityMode parse_stability(const std::string& name) {
    if (name == "schur") return StabilityMode::schur;
    if (name == "free") return StabilityMode::free;
    throw ConfigError("unknown stability mode '" + name + "' (expected schur or free)");
}

void StateSpaceModel::validate() const {
    const Index nn = A.rows();
    if (nn < 1 || A.cols() != nn) throw DimensionError("model: A must be square and non-empty");
    if (B.rows() != nn) throw DimensionError("model: B must have n rows");
    if (C.cols() != nn) throw DimensionError("model: C must have n columns");
    if (D.rows() != C.rows() || D.cols() != B.cols()) throw DimensionError("model: D must be p x m");
    for (const auto& [id, x0] : x0_table) {
        if (x0.size() != nn) throw DimensionError("model: initial state for '" + id + "' has wrong length");
    }
    if (stability == StabilityMode::schur && !(spectral_radius(A) < gamma)) {
        throw ContractError("model: schur-mode A has spectral radius not below gamma");
    }
}

Matrix simulate_states(const StateSpaceModel& model, const Matrix& inputs, const Vector& x0) {
    const Index n = model.n();
    if (inputs.cols() != model.m()) throw DimensionError("simulate: input dimension differs from model");
    if (x0.size() != n) throw DimensionError("simulate: x0 length differs from state dimension");
    if (!inputs.allFinite() || !x0.allFinite()) throw ContractError("simulate: inputs and x0 must be finite");
    const Index steps = inputs.rows();
    Matrix states(n, steps);
    if (steps == 0) return states.transpose();
    const Matrix drive = model.B * inputs.transpose();
    states.col(0) = x0;
    for (Index k = 1; k < steps; ++k) {
        states.col(k).noalias() = model.A * states.col(k - 1);
        states.col(k) += drive.col(k - 1);
        const double peak = states.col(k).cwiseAbs().maxCoeff();
        if (!std::isfinite(peak) || peak > kDivergenceBound) {
            throw DivergenceError("simulation diverged at step " + std::to_string(k), static_cast<std::size_t>(k));
        }
    }
    return states.transpose();
}

Matrix simulate(const StateSpaceModel& model, const Matrix& inputs, const Vector& x0) {
    const Matrix states = simulate_states(model, inputs, x0);
    return states * model.C.transpose() + inputs * model.D.transpose();
}

Vector estimate_x0(const StateSpaceModel& model, const Matrix& inputs, const Matrix& outputs, const Mask& mask,
                   Index horizon) {
    const Index n = model.n();
    const Index p = model.p();
    if (outputs.rows() != inputs.rows() || outputs.cols() != p) {
        throw DimensionError("estimate_x0: outputs do not match inputs/model");
    }
    if (mask.rows() != outputs.rows() || mask.cols() != outputs.cols()) {
        throw DimensionError("estimate_x0: mask shape differs from outputs");
    }
    const Index h = std::clamp<Index>(horizon, 0, inputs.rows());
    if (h == 0) return Vector::Zero(n);

    const Matrix head_inputs = inputs.topRows(h);
    const Matrix zero_response = simulate(model, head_inputs, Vector::Zero(n));

    // Rows: observed cells (k, j); y_kj − ŷ_kj(x0=0) = (C A^k)_j · x0.
    const Index rows = [&] {
        Index r = 0;
        for (Index k = 0; k < h; ++k)
            for (Index j = 0; j < p; ++j) r += mask(k, j) != 0;
        return r;
    }();
    if (rows == 0) return Vector::Zero(n);
    Matrix design(rows, n);
    Vector rhs(rows);
    Matrix ca = model.C;
    Index r = 0;
    for (Index k = 0; k < h; ++k) {
        for (Index j = 0; j < p; ++j) {
            if (mask(k, j) == 0) continue;
            design.row(r) = ca.row(j);
            rhs(r) = outputs(k, j) - zero_response(k, j);
            ++r;
        }
        ca = ca * model.A;
    }
    return design.completeOrthogonalDecomposition().solve(rhs);
}

Vector estimate_x0(const StateSpaceModel& model, const Trajectory& t, Index horizon) {
    return estimate_x0(model, t.inputs, t.outputs, t.mask, horizon);
}

}  // namespace simba

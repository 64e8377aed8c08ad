#pragma once

#include <map>
#include <optional>
#include <string>

#include "simba/dataset.hpp"
#include "simba/matrix.hpp"
#include "simba/schur.hpp"

namespace simba {

enum class StabilityMode { free, schur };

const char* stability_name(StabilityMode mode);
StabilityMode parse_stability(const std::string& name);

/// x_{k+1} = A x_k + B u_k,  y_k = C x_k + D u_k.
struct StateSpaceModel {
    Matrix A, B, C, D;
    /// Initial states keyed by trajectory id (learned or supplied).
    std::map<std::string, Vector> x0_table;
    StabilityMode stability = StabilityMode::free;
    double gamma = 1.0;
    /// Set when the model was identified on standardized data; simulate() works in those units.
    std::optional<Scaler> scaler;
    /// Free parameters A was built from (schur mode, when known).
    std::optional<SchurParams> params;

    Index n() const noexcept { return A.rows(); }
    Index m() const noexcept { return B.cols(); }
    Index p() const noexcept { return C.rows(); }

    /// Shape checks; in schur mode also checks spectral_radius(A) < gamma.
    void validate() const;
};

/// Noise-free simulation from x0. `inputs` is l × m; returns the l × p outputs.
///
/// Throws DivergenceError (with the step index) once a state entry is
/// non-finite or exceeds kDivergenceBound.
Matrix simulate(const StateSpaceModel& model, const Matrix& inputs, const Vector& x0);

/// Same as simulate(), also returning the l × n state sequence.
Matrix simulate_states(const StateSpaceModel& model, const Matrix& inputs, const Vector& x0);

/// Least-squares initial state from the first `horizon` samples: minimizes the
/// squared simulation error over observed cells with the model held fixed.
/// The problem is linear in x0 and solved exactly (minimum-norm if unobservable).
Vector estimate_x0(const StateSpaceModel& model, const Matrix& inputs, const Matrix& outputs, const Mask& mask,
                   Index horizon);

Vector estimate_x0(const StateSpaceModel& model, const Trajectory& t, Index horizon);

}  // namespace simba

#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "simba/matrix.hpp"

namespace simba {

/// One input-output record. Rows are time steps.
struct Trajectory {
    std::string id;
    Matrix inputs;   // l × m
    Matrix outputs;  // l × p; missing cells hold NaN
    Mask mask;       // l × p; 0 for missing or excluded cells
    std::optional<Vector> known_x0;
    double t0 = 0.0;  // time of the first sample, recorded
    double dt = 1.0;  // recorded, unused

    Index length() const noexcept { return outputs.rows(); }
    Index input_dim() const noexcept { return inputs.cols(); }
    Index output_dim() const noexcept { return outputs.cols(); }

    /// Throws ConfigError when lengths disagree, l < 1, or a non-finite output is unmasked.
    void validate() const;

    /// Output matrix with every masked cell replaced by zero.
    Matrix observed_outputs() const;
};

/// Builds a trajectory with a full mask, masking any non-finite output cells.
Trajectory make_trajectory(std::string id, Matrix inputs, Matrix outputs);

enum class Split { train, val, test };

const char* split_name(Split s);
Split parse_split(const std::string& name);

/// Per-channel affine maps x ↦ (x − mean)/std for inputs and outputs.
struct Scaler {
    Vector u_mean, u_std;
    Vector y_mean, y_std;

    Matrix transform_inputs(const Matrix& u) const;
    Matrix transform_outputs(const Matrix& y) const;
    Matrix inverse_inputs(const Matrix& u) const;
    Matrix inverse_outputs(const Matrix& y) const;
    /// Applies the forward map to inputs and outputs; masked cells are left as they are.
    Trajectory apply(const Trajectory& t) const;
    Trajectory invert(const Trajectory& t) const;
};

struct Dataset {
    std::vector<Trajectory> trajectories;
    std::map<std::string, Split> split;
    std::optional<Scaler> scaler;

    void add(Trajectory t, Split s);
    std::vector<const Trajectory*> in_split(Split s) const;
    const Trajectory& find(const std::string& id) const;

    Index input_dim() const;
    Index output_dim() const;

    /// Checks ids are unique, every id has a split, and all trajectories share m and p.
    void validate() const;
};

/// Standardizes every channel using population statistics of the training
/// split (observed samples only) and applies the same map to all splits.
///
/// Throws ConfigError when a channel has no observed training sample or zero variance.
std::pair<Dataset, Scaler> standardize(const Dataset& dataset);

/// Computes the scaler only.
Scaler fit_scaler(const Dataset& dataset);

}  // namespace simba

#pragma once

#include <span>
#include <string>

#include "simba/dataset.hpp"
#include "simba/generators.hpp"
#include "simba/matrix.hpp"
#include "simba/state_space.hpp"
#include "simba/tape.hpp"

namespace simba {

enum class LossTag { mse, mae };
enum class LossRole { train, validation, init };

struct LossKind {
    LossTag tag = LossTag::mse;
    LossRole role = LossRole::train;
};

/// per_step divides the masked sum by l·p (every time step counts, observed or
/// not); per_observed divides by the number of observed cells.
enum class Normalization { per_step, per_observed };

const char* loss_name(LossTag tag);
LossTag parse_loss(const std::string& name);
const char* normalization_name(Normalization n);
Normalization parse_normalization(const std::string& name);

/// Masked loss between l × p sequences. Cells with mask 0 are never read, so
/// their contents (including NaN) cannot affect the result. Returns 0 when
/// nothing is observed and logs a warning.
double masked_loss(const Matrix& predicted, const Matrix& observed, const Mask& mask, LossTag tag,
                   Normalization normalization);

/// Zeroes whole time steps of `mask`, each independently with probability p.
/// One Bernoulli draw per step, in time order; p = 0 consumes no randomness.
Mask apply_dropout(const Mask& mask, double p, Rng& rng);

struct ObjectiveOptions {
    LossTag loss = LossTag::mse;
    Normalization normalization = Normalization::per_observed;
    double dropout = 0.0;
};

/// Model matrices as tape variables (leaves, constants or derived nodes).
struct ModelVars {
    Var A, B, C, D;
};

/// Simulates `t` on the tape from `x0` and records its masked loss against `mask`.
Var trajectory_loss(Tape& tape, const ModelVars& model, const Trajectory& t, Var x0, const Mask& mask,
                    LossTag tag, Normalization normalization);

/// (1/|Z|) Σ_{s∈Z} masked loss of trajectory s, with dropout applied to each
/// trajectory's mask in batch order. `x0[s]` is the initial state of batch[s].
Var batch_objective(Tape& tape, const ModelVars& model, std::span<const Trajectory* const> batch,
                    std::span<const Var> x0, const ObjectiveOptions& options, Rng& rng);

/// Value-only batch objective for a concrete model.
double batch_objective(const StateSpaceModel& model, std::span<const Trajectory* const> batch,
                       std::span<const Vector> x0, const ObjectiveOptions& options, Rng& rng);

}  // namespace simba

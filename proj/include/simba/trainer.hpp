#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "simba/dataset.hpp"
#include "simba/loss.hpp"
#include "simba/optimizer.hpp"
#include "simba/schur.hpp"
#include "simba/state_space.hpp"

namespace simba {

/// Initial-state policy for trajectories with neither a known nor a learned x0.
enum class X0Policy {
    automatic,  // estimate when learn_x0 is on, zero otherwise
    zero,
    estimate,   // least squares over the first x0_horizon samples
};

const char* x0_policy_name(X0Policy policy);
X0Policy parse_x0_policy(const std::string& name);

struct TrainConfig {
    Index state_dim = 0;  // n
    int max_epochs = 1000;
    int batch_size = 4;
    double learning_rate = 1e-3;
    double init_learning_rate = 1e-3;
    int init_epochs = 20000;
    double dropout = 0.0;
    bool learn_x0 = true;
    bool learn_eps_tilde = true;
    double gamma = 1.0;
    StabilityMode stability = StabilityMode::schur;
    std::optional<double> grad_clip = 100.0;
    std::optional<double> init_grad_clip = 0.1;
    LossTag train_loss = LossTag::mse;
    LossTag val_loss = LossTag::mse;
    Normalization normalization = Normalization::per_observed;
    OptimizerKind optimizer = OptimizerKind::adam;
    X0Policy eval_x0 = X0Policy::automatic;
    Index x0_horizon = 20;
    std::uint64_t seed = 0;

    /// Throws ConfigError when a field is out of range.
    void validate() const;
};

struct EpochRecord {
    int epoch = 0;
    double train_loss = 0.0;
    double val_loss = 0.0;
    double spectral_radius = 0.0;
    double wall_time = 0.0;  // seconds since the fit started
};

/// Everything the optimizer moves.
struct ModelLeaves {
    std::optional<SchurParams> schur;  // stability = schur
    Matrix A;                          // stability = free
    Matrix B, C, D;
    /// Initial states of training trajectories, keyed by id.
    std::map<std::string, Vector> x0;
};

struct FitResult {
    StateSpaceModel best_model;
    std::optional<SchurParams> best_params;
    double best_val_loss = 0.0;
    int best_epoch = 0;  // 0 is the initial model
    std::vector<EpochRecord> history;
    int epochs_run = 0;
    double wall_time = 0.0;
    bool aborted = false;
    std::string diagnostic;
};

/// Random starting point for the configured dimensions.
ModelLeaves random_leaves(Index n, Index m, Index p, const TrainConfig& config, Rng& rng);

/// Concrete model for a set of leaves (A rebuilt from the parametrization in schur mode).
StateSpaceModel model_from_leaves(const ModelLeaves& leaves, const TrainConfig& config);

/// Minimizes the multi-step simulation loss over the training split.
///
/// Each epoch visits a seeded shuffle of the training trajectories in batches
/// of batch_size, taking one clipped optimizer step per batch. After every
/// epoch the validation loss is evaluated (dropout off, per-observed
/// normalization) and the best snapshot so far is kept; the result carries
/// that snapshot, never simply the last iterate. Divergence or a non-finite
/// loss stops the loop with aborted = true and the last good snapshot.
FitResult fit(const Dataset& dataset, const TrainConfig& config, const std::optional<ModelLeaves>& init = std::nullopt);

/// Initial state used to evaluate `t` under `model`.
Vector evaluation_x0(const StateSpaceModel& model, const Trajectory& t, const TrainConfig& config);

/// Mean per-trajectory masked loss (per-observed normalization) over `trajectories`.
double evaluate(const StateSpaceModel& model, const std::vector<const Trajectory*>& trajectories, LossTag tag,
                const TrainConfig& config);

struct InitConfig {
    int epochs = 20000;
    double learning_rate = 1e-3;
    std::optional<double> grad_clip = 0.1;
    bool learn_eps_tilde = true;
    OptimizerKind optimizer = OptimizerKind::adam;
    std::uint64_t seed = 0;
    /// Stop once ‖A − A*‖_F drops below this (0 runs every epoch).
    double tolerance = 0.0;
};

struct InitFitResult {
    SchurParams params;
    Matrix A;
    double loss = 0.0;              // mean squared entrywise error
    double frobenius_error = 0.0;   // ‖A − A*‖_F
    int epochs_run = 0;
};

/// Gradient descent on the mean squared error between build_A(W, V, ε̃, γ) and
/// A_star. Returns the parameters with the lowest error seen. Any target is
/// accepted; the returned A always has spectral radius below gamma.
InitFitResult fit_A_init(const Matrix& A_star, double gamma, const InitConfig& config);

/// Starting leaves from a previously identified model: B, C, D copied, A
/// copied (free) or matched through fit_A_init (schur), x0 copied for training
/// ids it knows and zero otherwise. Throws ConfigError on dimension mismatch.
ModelLeaves init_from_model(const StateSpaceModel& model, const Dataset& dataset, const TrainConfig& config);

}  // namespace simba

#include "simba/loss.hpp"

#include <cmath>

#include "simba/errors.hpp"
#include "simba/log.hpp"

namespace simba {

const char* loss_name(LossTag tag) { return tag == LossTag::mae ? "mae" : "mse"; }

LossTag parse_loss(const std::string& name) {
    if (name == "mse") return LossTag::mse;
    if (name == "mae") return LossTag::mae;
    throw ConfigError("unknown loss '" + name + "' (expected mse or mae)");
}

const char* normalization_name(Normalization n) {
    return n == Normalization::per_observed ? "per-observed" : "per-step";
}

Normalization parse_normalization(const std::string& name) {
    if (name == "per-step" || name == "per_step") return Normalization::per_step;
    if (name == "per-observed" || name == "per_observed") return Normalization::per_observed;
    throw ConfigError("unknown normalization '" + name + "' (expected per-step or per-observed)");
}

namespace {

double denominator(const Mask& mask, Normalization normalization) {
    if (normalization == Normalization::per_step) {
        return static_cast<double>(mask.rows() * mask.cols());
    }
    return static_cast<double>(count_observed(mask));
}

}  // namespace

double masked_loss(const Matrix& predicted, const Matrix& observed, const Mask& mask, LossTag tag,
                   Normalization normalization) {
    if (predicted.rows() != observed.rows() || predicted.cols() != observed.cols()) {
        throw DimensionError("masked_loss: predicted and observed shapes differ");
    }
    if (mask.rows() != observed.rows() || mask.cols() != observed.cols()) {
        throw DimensionError("masked_loss: mask shape differs");
    }
    if (count_observed(mask) == 0) {
        log_warning("masked_loss: trajectory has no observed samples; loss is 0");
        return 0.0;
    }
    double total = 0.0;
    for (Index k = 0; k < observed.rows(); ++k) {
        for (Index j = 0; j < observed.cols(); ++j) {
            if (mask(k, j) == 0) continue;
            const double e = predicted(k, j) - observed(k, j);
            total += tag == LossTag::mse ? e * e : std::abs(e);
        }
    }
    return total / denominator(mask, normalization);
}

Mask apply_dropout(const Mask& mask, double p, Rng& rng) {
    if (!(p >= 0.0 && p < 1.0)) {
        throw ConfigError("dropout probability must lie in [0, 1)");
    }
    Mask out = mask;
    if (p == 0.0) return out;
    std::bernoulli_distribution drop(p);
    for (Index k = 0; k < out.rows(); ++k) {
        if (drop(rng)) out.row(k).setZero();
    }
    return out;
}

Var trajectory_loss(Tape& tape, const ModelVars& model, const Trajectory& t, Var x0, const Mask& mask,
                    LossTag tag, Normalization normalization) {
    if (mask.rows() != t.length() || mask.cols() != t.output_dim()) {
        throw DimensionError("trajectory_loss: mask shape differs from outputs of '" + t.id + "'");
    }
    const Var inputs = tape.constant(t.inputs.transpose());  // m × l
    const Var drive = tape.matmul(model.B, inputs);
    const Var states = tape.recurrence(model.A, drive, x0);  // n × l
    const Var predicted = tape.add(tape.matmul(model.C, states), tape.matmul(model.D, inputs));
    // Masked cells are zeroed before entering the tape so garbage never reaches a product.
    const Var observed = tape.constant(t.observed_outputs().transpose());
    const Var residual = tape.sub(predicted, observed);
    const Var pointwise = tag == LossTag::mse ? tape.square(residual) : tape.abs(residual);
    const Mask mask_t = mask.transpose();
    if (count_observed(mask) == 0) {
        log_warning("trajectory '" + t.id + "' has no observed samples in this pass; its loss is 0");
        return tape.masked_mean(pointwise, mask_t, 0.0);
    }
    return tape.masked_mean(pointwise, mask_t, denominator(mask, normalization));
}

Var batch_objective(Tape& tape, const ModelVars& model, std::span<const Trajectory* const> batch,
                    std::span<const Var> x0, const ObjectiveOptions& options, Rng& rng) {
    if (batch.empty()) {
        throw ContractError("batch_objective: empty batch");
    }
    if (x0.size() != batch.size()) {
        throw DimensionError("batch_objective: one initial state per trajectory is required");
    }
    Var total;
    for (std::size_t s = 0; s < batch.size(); ++s) {
        const Mask mask = apply_dropout(batch[s]->mask, options.dropout, rng);
        const Var loss = trajectory_loss(tape, model, *batch[s], x0[s], mask, options.loss, options.normalization);
        total = s == 0 ? loss : tape.add(total, loss);
    }
    return tape.scale(total, 1.0 / static_cast<double>(batch.size()));
}

double batch_objective(const StateSpaceModel& model, std::span<const Trajectory* const> batch,
                       std::span<const Vector> x0, const ObjectiveOptions& options, Rng& rng) {
    if (batch.empty()) {
        throw ContractError("batch_objective: empty batch");
    }
    if (x0.size() != batch.size()) {
        throw DimensionError("batch_objective: one initial state per trajectory is required");
    }
    double total = 0.0;
    for (std::size_t s = 0; s < batch.size(); ++s) {
        const Mask mask = apply_dropout(batch[s]->mask, options.dropout, rng);
        const Matrix predicted = simulate(model, batch[s]->inputs, x0[s]);
        total += masked_loss(predicted, batch[s]->outputs, mask, options.loss, options.normalization);
    }
    return total / static_cast<double>(batch.size());
}

}  // namespace simba

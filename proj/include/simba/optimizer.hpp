#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "simba/matrix.hpp"

namespace simba {

enum class OptimizerKind { adam, sgd };

const char* optimizer_name(OptimizerKind kind);
OptimizerKind parse_optimizer(const std::string& name);

/// Adam (β₁ = 0.9, β₂ = 0.999, ε = 1e-8) or plain gradient descent over a
/// fixed set of parameter slots. Each slot keeps its own step count, so slots
/// that receive no gradient in a step are left untouched.
class Optimizer {
   public:
    Optimizer(OptimizerKind kind, double learning_rate, std::size_t slots);

    /// Applies one update to `param` using `grad` for the given slot.
    void update(std::size_t slot, Matrix& param, const Matrix& grad);

    double learning_rate() const noexcept { return lr_; }

    static constexpr double beta1 = 0.9;
    static constexpr double beta2 = 0.999;
    static constexpr double epsilon = 1e-8;

   private:
    struct Slot {
        Matrix m, v;
        long steps = 0;
    };
    OptimizerKind kind_;
    double lr_;
    std::vector<Slot> slots_;
};

/// Rescales all gradients so their joint Frobenius norm is at most max_norm.
/// Returns the norm before clipping.
double clip_global_norm(std::vector<Matrix*>& grads, double max_norm);

}  // namespace simba

#include "simba/optimizer.hpp"

#include <cmath>

#include "simba/errors.hpp"

namespace simba {

const char* optimizer_name(OptimizerKind kind) { return kind == OptimizerKind::sgd ? "sgd" : "adam"; }

OptimizerKind parse_optimizer(const std::string& name) {
    if (name == "adam") return OptimizerKind::adam;
    if (name == "sgd") return OptimizerKind::sgd;
    throw ConfigError("unknown optimizer '" + name + "' (expected adam or sgd)");
}

Optimizer::Optimizer(OptimizerKind kind, double learning_rate, std::size_t slots)
    : kind_(kind), lr_(learning_rate), slots_(slots) {
    if (!(learning_rate > 0.0)) throw ConfigError("optimizer: learning rate must be positive");
}

void Optimizer::update(std::size_t slot, Matrix& param, const Matrix& grad) {
    if (param.rows() != grad.rows() || param.cols() != grad.cols()) {
        throw DimensionError("optimizer: gradient shape differs from parameter");
    }
    if (kind_ == OptimizerKind::sgd) {
        param -= lr_ * grad;
        return;
    }
    Slot& s = slots_.at(slot);
    if (s.steps == 0) {
        s.m = Matrix::Zero(param.rows(), param.cols());
        s.v = Matrix::Zero(param.rows(), param.cols());
    }
    ++s.steps;
    s.m = beta1 * s.m + (1.0 - beta1) * grad;
    s.v = beta2 * s.v + (1.0 - beta2) * grad.cwiseProduct(grad);
    const double c1 = 1.0 - std::pow(beta1, static_cast<double>(s.steps));
    const double c2 = 1.0 - std::pow(beta2, static_cast<double>(s.steps));
    const double step = lr_ / c1;
    param.array() -= step * s.m.array() / ((s.v.array() / c2).sqrt() + epsilon);
}

double clip_global_norm(std::vector<Matrix*>& grads, double max_norm) {
    double sq = 0.0;
    for (const Matrix* g : grads) sq += g->squaredNorm();
    const double norm = std::sqrt(sq);
    if (norm > max_norm && norm > 0.0) {
        const double factor = max_norm / norm;
        for (Matrix* g : grads) *g *= factor;
    }
    return norm;
}

}  // namespace simba

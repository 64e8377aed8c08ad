#include "simba/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

#include "simba/errors.hpp"
#include "simba/linalg.hpp"
#include "simba/log.hpp"

namespace simba {

const char* x0_policy_name(X0Policy policy) {
    switch (policy) {
        case X0Policy::automatic: return "auto";
        case X0Policy::zero: return "zero";
        case X0Policy::estimate: return "estimate";
    }
    return "?";
}

X0Policy parse_x0_policy(const std::string& name) {
    if (name == "auto") return X0Policy::automatic;
    if (name == "zero") return X0Policy::zero;
    if (name == "estimate") return X0Policy::estimate;
    throw ConfigError("unknown x0 policy '" + name + "' (expected auto, zero or estimate)");
}

void TrainConfig::validate() const {
    if (state_dim < 1) throw ConfigError("config: state_dim must be at least 1");
    if (max_epochs < 0) throw ConfigError("config: max_epochs must be non-negative");
    if (batch_size < 1) throw ConfigError("config: batch_size must be at least 1");
    if (!(learning_rate > 0.0)) throw ConfigError("config: learning_rate must be positive");
    if (!(init_learning_rate > 0.0)) throw ConfigError("config: init_learning_rate must be positive");
    if (init_epochs < 0) throw ConfigError("config: init_epochs must be non-negative");
    if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("config: dropout must lie in [0, 1)");
    if (!(gamma > 0.0 && gamma <= 1.0)) throw ConfigError("config: gamma must lie in (0, 1]");
    if (grad_clip && !(*grad_clip > 0.0)) throw ConfigError("config: grad_clip must be positive");
    if (init_grad_clip && !(*init_grad_clip > 0.0)) throw ConfigError("config: init_grad_clip must be positive");
    if (x0_horizon < 0) throw ConfigError("config: x0_horizon must be non-negative");
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

Matrix gaussian(Index rows, Index cols, double scale, Rng& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix x(rows, cols);
    for (Index j = 0; j < cols; ++j)
        for (Index i = 0; i < rows; ++i) x(i, j) = scale * normal(rng);
    return x;
}

// Flat view of the leaves as optimizer slots:
//   schur: W, V, ε̃ (1×1) | free: A ;  then B, C, D, then one n×1 slot per learned x0.
struct Params {
    StabilityMode mode = StabilityMode::schur;
    double gamma = 1.0;
    std::vector<Matrix> slots;
    std::size_t b = 0, c = 0, d = 0;
    std::map<std::string, std::size_t> x0_slot;
    std::map<std::string, Vector> fixed_x0;  // known or otherwise not learned

    static constexpr std::size_t w = 0, v = 1, eps = 2, a_free = 0;

    Matrix A() const {
        if (mode == StabilityMode::free) return slots[a_free];
        return build_A(schur());
    }

    SchurParams schur() const {
        SchurParams sp;
        sp.W = slots[w];
        sp.V = slots[v];
        sp.eps_tilde = slots[eps](0, 0);
        sp.gamma = gamma;
        return sp;
    }
};

Params pack(const ModelLeaves& leaves, const TrainConfig& config, const std::vector<const Trajectory*>& train) {
    Params p;
    p.mode = config.stability;
    p.gamma = config.gamma;
    if (p.mode == StabilityMode::schur) {
        if (!leaves.schur) throw ConfigError("fit: schur mode requires parametrization leaves");
        p.slots.push_back(leaves.schur->W);
        p.slots.push_back(leaves.schur->V);
        p.slots.push_back(Matrix::Constant(1, 1, leaves.schur->eps_tilde));
    } else {
        p.slots.push_back(leaves.A);
    }
    p.b = p.slots.size();
    p.slots.push_back(leaves.B);
    p.c = p.slots.size();
    p.slots.push_back(leaves.C);
    p.d = p.slots.size();
    p.slots.push_back(leaves.D);
    const Index n = config.state_dim;
    for (const auto* t : train) {
        auto it = leaves.x0.find(t->id);
        Vector start = it != leaves.x0.end() ? it->second : Vector::Zero(n);
        if (t->known_x0) {
            p.fixed_x0[t->id] = *t->known_x0;
        } else if (config.learn_x0) {
            p.x0_slot[t->id] = p.slots.size();
            p.slots.push_back(start);
        } else {
            p.fixed_x0[t->id] = start;
        }
    }
    return p;
}

StateSpaceModel to_model(const Params& p, const Dataset& dataset) {
    StateSpaceModel model;
    model.A = p.A();
    model.B = p.slots[p.b];
    model.C = p.slots[p.c];
    model.D = p.slots[p.d];
    model.stability = p.mode;
    model.gamma = p.gamma;
    if (p.mode == StabilityMode::schur) model.params = p.schur();
    for (const auto& t : dataset.trajectories) {
        if (t.known_x0) model.x0_table[t.id] = *t.known_x0;
    }
    for (const auto& [id, x0] : p.fixed_x0) model.x0_table[id] = x0;
    for (const auto& [id, slot] : p.x0_slot) model.x0_table[id] = p.slots[slot];
    return model;
}

void check_dimensions(const ModelLeaves& leaves, const TrainConfig& config, Index m, Index p) {
    const Index n = config.state_dim;
    const auto expect = [](const Matrix& x, Index r, Index c, const char* what) {
        if (x.rows() != r || x.cols() != c) {
            throw ConfigError(std::string("fit: initial ") + what + " has shape " + std::to_string(x.rows()) + "x" +
                              std::to_string(x.cols()) + ", expected " + std::to_string(r) + "x" + std::to_string(c));
        }
    };
    if (config.stability == StabilityMode::schur) {
        if (!leaves.schur) throw ConfigError("fit: schur mode requires parametrization leaves");
        expect(leaves.schur->W, 2 * n, 2 * n, "W");
        expect(leaves.schur->V, n, n, "V");
    } else {
        expect(leaves.A, n, n, "A");
    }
    expect(leaves.B, n, m, "B");
    expect(leaves.C, p, n, "C");
    expect(leaves.D, p, m, "D");
    for (const auto& [id, x0] : leaves.x0) {
        if (x0.size() != n) throw ConfigError("fit: initial state for '" + id + "' has wrong length");
    }
}

}  // namespace

ModelLeaves random_leaves(Index n, Index m, Index p, const TrainConfig& config, Rng& rng) {
    ModelLeaves leaves;
    if (config.stability == StabilityMode::schur) {
        leaves.schur = default_schur_params(n, config.gamma, rng);
    } else {
        leaves.A = gaussian(n, n, 0.1 / std::sqrt(static_cast<double>(n)), rng);
    }
    leaves.B = gaussian(n, m, 1.0 / std::sqrt(static_cast<double>(m)), rng);
    leaves.C = gaussian(p, n, 1.0 / std::sqrt(static_cast<double>(n)), rng);
    leaves.D = gaussian(p, m, 1.0 / std::sqrt(static_cast<double>(m)), rng);
    return leaves;
}

StateSpaceModel model_from_leaves(const ModelLeaves& leaves, const TrainConfig& config) {
    StateSpaceModel model;
    model.A = config.stability == StabilityMode::schur ? build_A(*leaves.schur) : leaves.A;
    model.B = leaves.B;
    model.C = leaves.C;
    model.D = leaves.D;
    model.x0_table = leaves.x0;
    model.stability = config.stability;
    model.gamma = config.gamma;
    if (config.stability == StabilityMode::schur) model.params = leaves.schur;
    return model;
}

Vector evaluation_x0(const StateSpaceModel& model, const Trajectory& t, const TrainConfig& config) {
    if (t.known_x0) return *t.known_x0;
    if (auto it = model.x0_table.find(t.id); it != model.x0_table.end()) return it->second;
    X0Policy policy = config.eval_x0;
    if (policy == X0Policy::automatic) policy = config.learn_x0 ? X0Policy::estimate : X0Policy::zero;
    if (policy == X0Policy::estimate) return estimate_x0(model, t, config.x0_horizon);
    return Vector::Zero(model.n());
}

double evaluate(const StateSpaceModel& model, const std::vector<const Trajectory*>& trajectories, LossTag tag,
                const TrainConfig& config) {
    if (trajectories.empty()) return 0.0;
    double total = 0.0;
    for (const auto* t : trajectories) {
        const Matrix predicted = simulate(model, t->inputs, evaluation_x0(model, *t, config));
        total += masked_loss(predicted, t->outputs, t->mask, tag, Normalization::per_observed);
    }
    return total / static_cast<double>(trajectories.size());
}

FitResult fit(const Dataset& dataset, const TrainConfig& config, const std::optional<ModelLeaves>& init) {
    const auto start = Clock::now();
    config.validate();
    dataset.validate();
    const auto train = dataset.in_split(Split::train);
    const auto val = dataset.in_split(Split::val);
    if (train.empty()) throw ConfigError("fit: the training split is empty");
    if (val.empty()) throw ConfigError("fit: the validation split is empty");
    const Index n = config.state_dim;
    const Index m = dataset.input_dim();
    const Index p = dataset.output_dim();
    for (const auto& t : dataset.trajectories) {
        if (t.known_x0 && t.known_x0->size() != n) {
            throw ConfigError("fit: known x0 of '" + t.id + "' does not match state_dim");
        }
    }

    Rng init_rng(derive_seed(config.seed, 0, SeedRole::init));
    Rng fit_rng(derive_seed(config.seed, 0, SeedRole::fit));
    const ModelLeaves leaves = init ? *init : random_leaves(n, m, p, config, init_rng);
    check_dimensions(leaves, config, m, p);

    Params params = pack(leaves, config, train);
    Optimizer optimizer(config.optimizer, config.learning_rate, params.slots.size());
    const ObjectiveOptions objective{config.train_loss, config.normalization, config.dropout};
    const std::size_t batch_size = std::min<std::size_t>(config.batch_size, train.size());

    FitResult result;
    StateSpaceModel current = to_model(params, dataset);
    result.best_model = current;
    if (params.mode == StabilityMode::schur) result.best_params = params.schur();
    try {
        result.best_val_loss = evaluate(current, val, config.val_loss, config);
    } catch (const DivergenceError& e) {
        throw ConfigError(std::string("fit: initial model diverges on validation data: ") + e.what());
    }
    if (!std::isfinite(result.best_val_loss)) {
        throw ConfigError("fit: initial validation loss is not finite");
    }

    std::vector<std::size_t> order(train.size());
    for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::shuffle(order.begin(), order.end(), fit_rng);

        double loss_sum = 0.0;
        int batches = 0;
        try {
            for (std::size_t first = 0; first < order.size(); first += batch_size) {
                const std::size_t last = std::min(order.size(), first + batch_size);
                std::vector<const Trajectory*> batch;
                for (std::size_t k = first; k < last; ++k) batch.push_back(train[order[k]]);

                Tape tape;
                std::vector<std::size_t> leaf_slot;
                const auto leaf = [&](std::size_t slot, const char* name) {
                    leaf_slot.push_back(slot);
                    return tape.leaf(params.slots[slot], name);
                };
                ModelVars vars;
                if (params.mode == StabilityMode::schur) {
                    SchurVars sv;
                    sv.W = leaf(Params::w, "W");
                    sv.V = leaf(Params::v, "V");
                    sv.eps_tilde = config.learn_eps_tilde ? leaf(Params::eps, "eps_tilde")
                                                          : tape.constant(params.slots[Params::eps]);
                    vars.A = build_A(tape, sv, params.gamma);
                } else {
                    vars.A = leaf(Params::a_free, "A");
                }
                vars.B = leaf(params.b, "B");
                vars.C = leaf(params.c, "C");
                vars.D = leaf(params.d, "D");
                std::vector<Var> x0_vars;
                for (const auto* t : batch) {
                    if (auto it = params.x0_slot.find(t->id); it != params.x0_slot.end()) {
                        x0_vars.push_back(leaf(it->second, "x0"));
                    } else {
                        x0_vars.push_back(tape.constant(params.fixed_x0.at(t->id)));
                    }
                }
                const Var loss = batch_objective(tape, vars, batch, x0_vars, objective, fit_rng);
                const double value = tape.scalar(loss);
                if (!std::isfinite(value)) {
                    throw DivergenceError("training loss is not finite", 0);
                }
                auto grads = tape.backward(loss);
                std::vector<Matrix*> grad_ptrs;
                for (auto& g : grads.per_leaf) grad_ptrs.push_back(&g);
                if (config.grad_clip) clip_global_norm(grad_ptrs, *config.grad_clip);
                for (std::size_t i = 0; i < leaf_slot.size(); ++i) {
                    optimizer.update(leaf_slot[i], params.slots[leaf_slot[i]], grads.per_leaf[i]);
                }
                loss_sum += value;
                ++batches;
            }

            current = to_model(params, dataset);
            EpochRecord rec;
            rec.epoch = epoch;
            rec.train_loss = loss_sum / std::max(batches, 1);
            rec.val_loss = evaluate(current, val, config.val_loss, config);
            rec.spectral_radius = spectral_radius(current.A);
            rec.wall_time = seconds_since(start);
            if (!std::isfinite(rec.val_loss) || !current.A.allFinite()) {
                throw DivergenceError("validation loss is not finite", 0);
            }
            result.history.push_back(rec);
            result.epochs_run = epoch;
            if (rec.val_loss < result.best_val_loss) {
                result.best_val_loss = rec.val_loss;
                result.best_epoch = epoch;
                result.best_model = current;
                if (params.mode == StabilityMode::schur) result.best_params = params.schur();
            }
        } catch (const Error& e) {
            // DivergenceError, SingularMatrixError, OverflowError, ... : keep the best snapshot.
            result.aborted = true;
            result.diagnostic = "epoch " + std::to_string(epoch) + ": " + e.what();
            log_warning("fit aborted at " + result.diagnostic);
            break;
        }
    }
    result.wall_time = seconds_since(start);
    return result;
}

InitFitResult fit_A_init(const Matrix& A_star, double gamma, const InitConfig& config) {
    if (A_star.rows() != A_star.cols() || A_star.rows() < 1) {
        throw DimensionError("fit_A_init: target must be square and non-empty");
    }
    require_finite(A_star, "fit_A_init target");
    if (config.epochs < 0) throw ConfigError("fit_A_init: epochs must be non-negative");
    const Index n = A_star.rows();
    Rng rng(derive_seed(config.seed, 0, SeedRole::init));
    const SchurParams start = default_schur_params(n, gamma, rng);

    std::vector<Matrix> slots{start.W, start.V, Matrix::Constant(1, 1, start.eps_tilde)};
    Optimizer optimizer(config.optimizer, config.learning_rate, slots.size());
    const Mask all = Mask::Ones(n, n);
    const double cells = static_cast<double>(n * n);

    InitFitResult best;
    best.loss = std::numeric_limits<double>::infinity();
    const auto record = [&](double loss, const Matrix& a, int epochs_run) {
        if (loss < best.loss) {
            best.loss = loss;
            best.params.W = slots[0];
            best.params.V = slots[1];
            best.params.eps_tilde = slots[2](0, 0);
            best.params.gamma = gamma;
            best.A = a;
        }
        best.epochs_run = epochs_run;
    };

    for (int epoch = 0; epoch <= config.epochs; ++epoch) {
        Tape tape;
        SchurVars sv;
        sv.W = tape.leaf(slots[0], "W");
        sv.V = tape.leaf(slots[1], "V");
        sv.eps_tilde = config.learn_eps_tilde ? tape.leaf(slots[2], "eps_tilde") : tape.constant(slots[2]);
        const Var a = build_A(tape, sv, gamma);
        const Var loss = tape.masked_mean(tape.square(tape.sub(a, tape.constant(A_star))), all, cells);
        const double value = tape.scalar(loss);
        record(value, tape.value(a), epoch);
        if (epoch == config.epochs) break;
        if (config.tolerance > 0.0 && std::sqrt(best.loss * cells) < config.tolerance) break;

        auto grads = tape.backward(loss);
        std::vector<Matrix*> grad_ptrs;
        for (auto& g : grads.per_leaf) grad_ptrs.push_back(&g);
        if (config.grad_clip) clip_global_norm(grad_ptrs, *config.grad_clip);
        for (std::size_t i = 0; i < grads.per_leaf.size(); ++i) optimizer.update(i, slots[i], grads.per_leaf[i]);
    }
    best.frobenius_error = (best.A - A_star).norm();
    return best;
}

ModelLeaves init_from_model(const StateSpaceModel& model, const Dataset& dataset, const TrainConfig& config) {
    const Index n = config.state_dim;
    if (model.n() != n) {
        throw ConfigError("init model has state dimension " + std::to_string(model.n()) + " but the configuration asks for " +
                          std::to_string(n));
    }
    if (model.m() != dataset.input_dim() || model.p() != dataset.output_dim()) {
        throw ConfigError("init model input/output dimensions do not match the dataset");
    }
    model.validate();
    ModelLeaves leaves;
    leaves.B = model.B;
    leaves.C = model.C;
    leaves.D = model.D;
    if (config.stability == StabilityMode::schur) {
        InitConfig ic;
        ic.epochs = config.init_epochs;
        ic.learning_rate = config.init_learning_rate;
        ic.grad_clip = config.init_grad_clip;
        ic.learn_eps_tilde = config.learn_eps_tilde;
        ic.optimizer = config.optimizer;
        ic.seed = config.seed;
        const InitFitResult r = fit_A_init(model.A, config.gamma, ic);
        leaves.schur = r.params;
    } else {
        leaves.A = model.A;
    }
    for (const auto* t : dataset.in_split(Split::train)) {
        auto it = model.x0_table.find(t->id);
        leaves.x0[t->id] = it != model.x0_table.end() ? it->second : Vector::Zero(n);
    }
    return leaves;
}

}  // namespace simba

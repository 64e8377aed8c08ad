#include "simba/tape.hpp"

#include <cmath>
#include <sstream>
#include <utility>

#include "simba/errors.hpp"
#include "simba/linalg.hpp"

namespace simba {

namespace {

void accumulate(Matrix& slot, const Matrix& contribution) {
    if (slot.size() == 0) {
        slot = contribution;
    } else {
        slot += contribution;
    }
}

}  // namespace

const char* Tape::op_name(Op op) {
    switch (op) {
        case Op::leaf: return "leaf";
        case Op::constant: return "constant";
        case Op::matmul: return "matmul";
        case Op::add: return "add";
        case Op::sub: return "sub";
        case Op::scale: return "scale";
        case Op::scale_by: return "scale_by";
        case Op::transpose: return "transpose";
        case Op::block: return "block";
        case Op::solve: return "solve";
        case Op::exp: return "exp";
        case Op::square: return "square";
        case Op::abs: return "abs";
        case Op::masked_mean: return "masked_mean";
        case Op::recurrence: return "recurrence";
    }
    return "unknown";
}

std::string Tape::describe(std::size_t index) const {
    std::ostringstream os;
    os << "node #" << index << " (" << op_name(nodes_[index].op);
    if (!nodes_[index].name.empty()) {
        os << " '" << nodes_[index].name << "'";
    }
    os << ")";
    return os.str();
}

const Tape::Node& Tape::node(Var v) const {
    if (v.id_ >= nodes_.size()) {
        throw ContractError("tape: variable does not belong to this tape");
    }
    return nodes_[v.id_];
}

Var Tape::push(Node n) {
    for (int i = 0; i < n.arity; ++i) {
        if (n.in[i] >= nodes_.size()) {
            throw ContractError("tape: operand does not belong to this tape");
        }
        n.needs_grad = n.needs_grad || nodes_[n.in[i]].needs_grad;
    }
    nodes_.push_back(std::move(n));
    const std::size_t index = nodes_.size() - 1;
    try {
        evaluate(index);
    } catch (...) {
        nodes_.pop_back();
        throw;
    }
    return Var(index);
}

Var Tape::leaf(Matrix value, std::string name) {
    require_finite(value, "tape leaf '" + name + "'");
    Node n;
    n.op = Op::leaf;
    n.needs_grad = true;
    n.value = std::move(value);
    n.leaf_ordinal = leaves_.size();
    n.name = std::move(name);
    nodes_.push_back(std::move(n));
    leaves_.push_back(nodes_.size() - 1);
    return Var(nodes_.size() - 1);
}

Var Tape::constant(Matrix value) {
    Node n;
    n.op = Op::constant;
    n.value = std::move(value);
    nodes_.push_back(std::move(n));
    return Var(nodes_.size() - 1);
}

Var Tape::matmul(Var a, Var b) {
    Node n;
    n.op = Op::matmul;
    n.in[0] = a.id_;
    n.in[1] = b.id_;
    n.arity = 2;
    return push(std::move(n));
}

Var Tape::add(Var a, Var b) {
    Node n;
    n.op = Op::add;
    n.in[0] = a.id_;
    n.in[1] = b.id_;
    n.arity = 2;
    return push(std::move(n));
}

Var Tape::sub(Var a, Var b) {
    Node n;
    n.op = Op::sub;
    n.in[0] = a.id_;
    n.in[1] = b.id_;
    n.arity = 2;
    return push(std::move(n));
}

Var Tape::scale(Var a, double factor) {
    Node n;
    n.op = Op::scale;
    n.in[0] = a.id_;
    n.arity = 1;
    n.factor = factor;
    return push(std::move(n));
}

Var Tape::scale_by(Var a, Var s) {
    Node n;
    n.op = Op::scale_by;
    n.in[0] = a.id_;
    n.in[1] = s.id_;
    n.arity = 2;
    return push(std::move(n));
}

Var Tape::transpose(Var a) {
    Node n;
    n.op = Op::transpose;
    n.in[0] = a.id_;
    n.arity = 1;
    return push(std::move(n));
}

Var Tape::block(Var a, Index row, Index col, Index rows, Index cols) {
    Node n;
    n.op = Op::block;
    n.in[0] = a.id_;
    n.arity = 1;
    n.r0 = row;
    n.c0 = col;
    n.rows = rows;
    n.cols = cols;
    return push(std::move(n));
}

Var Tape::solve(Var m, Var r) {
    Node n;
    n.op = Op::solve;
    n.in[0] = m.id_;
    n.in[1] = r.id_;
    n.arity = 2;
    return push(std::move(n));
}

Var Tape::inverse(Var m) {
    const Index size = node(m).value.rows();
    return solve(m, constant(Matrix::Identity(size, size)));
}

Var Tape::exp(Var a) {
    Node n;
    n.op = Op::exp;
    n.in[0] = a.id_;
    n.arity = 1;
    return push(std::move(n));
}

Var Tape::square(Var a) {
    Node n;
    n.op = Op::square;
    n.in[0] = a.id_;
    n.arity = 1;
    return push(std::move(n));
}

Var Tape::abs(Var a) {
    Node n;
    n.op = Op::abs;
    n.in[0] = a.id_;
    n.arity = 1;
    return push(std::move(n));
}

Var Tape::masked_mean(Var a, const Mask& mask, double denominator) {
    Node n;
    n.op = Op::masked_mean;
    n.in[0] = a.id_;
    n.arity = 1;
    n.mask = mask;
    n.factor = denominator;
    return push(std::move(n));
}

Var Tape::recurrence(Var a, Var drive, Var x0) {
    Node n;
    n.op = Op::recurrence;
    n.in[0] = a.id_;
    n.in[1] = drive.id_;
    n.in[2] = x0.id_;
    n.arity = 3;
    return push(std::move(n));
}

void Tape::evaluate(std::size_t index) {
    Node& n = nodes_[index];
    const auto in = [&](int k) -> const Matrix& { return nodes_[n.in[k]].value; };
    const auto fail = [&](const std::string& why) {
        throw DimensionError("tape: " + describe(index) + ": " + why);
    };
    switch (n.op) {
        case Op::leaf:
        case Op::constant:
            return;
        case Op::matmul:
            if (in(0).cols() != in(1).rows()) fail("inner dimensions differ");
            n.value.noalias() = in(0) * in(1);
            return;
        case Op::add:
        case Op::sub:
            if (in(0).rows() != in(1).rows() || in(0).cols() != in(1).cols()) fail("operand shapes differ");
            if (n.op == Op::add) {
                n.value = in(0) + in(1);
            } else {
                n.value = in(0) - in(1);
            }
            return;
        case Op::scale:
            n.value = in(0) * n.factor;
            return;
        case Op::scale_by:
            if (in(1).rows() != 1 || in(1).cols() != 1) fail("scale factor is not 1x1");
            n.value = in(0) * in(1)(0, 0);
            return;
        case Op::transpose:
            n.value = in(0).transpose();
            return;
        case Op::block:
            if (n.r0 < 0 || n.c0 < 0 || n.rows < 0 || n.cols < 0 || n.r0 + n.rows > in(0).rows() ||
                n.c0 + n.cols > in(0).cols()) {
                fail("block out of range");
            }
            n.value = in(0).block(n.r0, n.c0, n.rows, n.cols);
            return;
        case Op::solve: {
            const Matrix& m = in(0);
            if (m.rows() != m.cols()) fail("matrix is not square");
            if (in(1).rows() != m.rows()) fail("right-hand side row count differs");
            if (!m.allFinite()) {
                throw OverflowError("tape: " + describe(index) + ": non-finite matrix entries");
            }
            const double scale = m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
            n.lu = std::make_shared<Eigen::PartialPivLU<Matrix>>(m);
            const double min_pivot = n.lu->matrixLU().diagonal().cwiseAbs().minCoeff();
            if (!(scale > 0.0) || min_pivot < kSingularPivotRatio * scale) {
                throw SingularMatrixError("tape: " + describe(index) + ": matrix is singular to working precision");
            }
            n.value = n.lu->solve(in(1));
            n.rcond = n.lu->rcond();
            return;
        }
        case Op::exp:
            n.value = in(0).array().exp().matrix();
            if (!n.value.allFinite()) {
                throw OverflowError("tape: " + describe(index) + ": exp overflowed");
            }
            return;
        case Op::square:
            n.value = in(0).array().square().matrix();
            return;
        case Op::abs:
            n.value = in(0).cwiseAbs();
            return;
        case Op::masked_mean: {
            const Matrix& a = in(0);
            if (n.mask.rows() != a.rows() || n.mask.cols() != a.cols()) fail("mask shape differs");
            double total = 0.0;
            for (Index i = 0; i < a.rows(); ++i) {
                for (Index j = 0; j < a.cols(); ++j) {
                    if (n.mask(i, j) != 0) total += a(i, j);
                }
            }
            n.value.resize(1, 1);
            n.value(0, 0) = n.factor == 0.0 ? 0.0 : total / n.factor;
            return;
        }
        case Op::recurrence: {
            const Matrix& a = in(0);
            const Matrix& drive = in(1);
            const Matrix& x0 = in(2);
            const Index dim = a.rows();
            if (a.cols() != dim) fail("state matrix is not square");
            if (drive.rows() != dim) fail("drive row count differs from state dimension");
            if (x0.rows() != dim || x0.cols() != 1) fail("initial state is not a column of the state dimension");
            const Index steps = drive.cols();
            n.value.resize(dim, steps);
            if (steps == 0) return;
            n.value.col(0) = x0;
            for (Index k = 1; k < steps; ++k) {
                n.value.col(k).noalias() = a * n.value.col(k - 1);
                n.value.col(k) += drive.col(k - 1);
                const double peak = n.value.col(k).cwiseAbs().maxCoeff();
                if (!std::isfinite(peak) || peak > kDivergenceBound) {
                    throw DivergenceError("simulation diverged at step " + std::to_string(k),
                                          static_cast<std::size_t>(k));
                }
            }
            return;
        }
    }
}

const Matrix& Tape::value(Var v) const { return node(v).value; }

double Tape::scalar(Var v) const {
    const Matrix& m = node(v).value;
    if (m.rows() != 1 || m.cols() != 1) {
        throw ContractError("tape: value is not a scalar");
    }
    return m(0, 0);
}

double Tape::rcond(Var solve_node) const {
    const Node& n = node(solve_node);
    if (n.op != Op::solve) {
        throw ContractError("tape: rcond requested for a non-solve node");
    }
    return n.rcond;
}

std::size_t Tape::leaf_index(Var v) const {
    const Node& n = node(v);
    if (n.op != Op::leaf) {
        throw ContractError("tape: variable is not a leaf");
    }
    return n.leaf_ordinal;
}

Var Tape::last() const {
    if (nodes_.empty()) {
        throw ContractError("tape: empty tape");
    }
    return Var(nodes_.size() - 1);
}

const Matrix& Tape::forward(std::span<const Matrix> leaves) {
    if (leaves.size() != leaves_.size()) {
        throw DimensionError("tape: expected " + std::to_string(leaves_.size()) + " leaves, got " +
                             std::to_string(leaves.size()));
    }
    for (std::size_t k = 0; k < leaves.size(); ++k) {
        Node& n = nodes_[leaves_[k]];
        if (leaves[k].rows() != n.value.rows() || leaves[k].cols() != n.value.cols()) {
            throw DimensionError("tape: " + describe(leaves_[k]) + ": leaf shape differs from registration");
        }
        require_finite(leaves[k], "tape leaf '" + n.name + "'");
        n.value = leaves[k];
    }
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        evaluate(i);
    }
    return nodes_.back().value;
}

Tape::Gradients Tape::backward(double seed) const { return backward(last(), seed); }

Tape::Gradients Tape::backward(Var output, double seed) const {
    const Node& out = node(output);
    if (out.value.rows() != 1 || out.value.cols() != 1) {
        throw ContractError("tape: backward requires a scalar (1x1) output, got " + std::to_string(out.value.rows()) +
                            "x" + std::to_string(out.value.cols()));
    }
    std::vector<Matrix> adj(output.id_ + 1);
    adj[output.id_] = Matrix::Constant(1, 1, seed);

    for (std::size_t idx = output.id_ + 1; idx-- > 0;) {
        const Node& n = nodes_[idx];
        if (!n.needs_grad || adj[idx].size() == 0 || n.arity == 0) continue;
        const Matrix& g = adj[idx];
        const auto in = [&](int k) -> const Matrix& { return nodes_[n.in[k]].value; };
        const auto wants = [&](int k) { return nodes_[n.in[k]].needs_grad; };
        const auto slot = [&](int k) -> Matrix& { return adj[n.in[k]]; };

        switch (n.op) {
            case Op::leaf:
            case Op::constant:
                break;
            case Op::matmul:
                if (wants(0)) accumulate(slot(0), g * in(1).transpose());
                if (wants(1)) accumulate(slot(1), in(0).transpose() * g);
                break;
            case Op::add:
                if (wants(0)) accumulate(slot(0), g);
                if (wants(1)) accumulate(slot(1), g);
                break;
            case Op::sub:
                if (wants(0)) accumulate(slot(0), g);
                if (wants(1)) accumulate(slot(1), -g);
                break;
            case Op::scale:
                if (wants(0)) accumulate(slot(0), g * n.factor);
                break;
            case Op::scale_by:
                if (wants(0)) accumulate(slot(0), g * in(1)(0, 0));
                if (wants(1)) accumulate(slot(1), Matrix::Constant(1, 1, g.cwiseProduct(in(0)).sum()));
                break;
            case Op::transpose:
                if (wants(0)) accumulate(slot(0), g.transpose());
                break;
            case Op::block:
                if (wants(0)) {
                    Matrix& s = slot(0);
                    if (s.size() == 0) s = Matrix::Zero(in(0).rows(), in(0).cols());
                    s.block(n.r0, n.c0, n.rows, n.cols) += g;
                }
                break;
            case Op::solve: {
                // X = M⁻¹R: dR = M⁻ᵀ·G, dM = −dR·Xᵀ.
                const Matrix g_rhs = n.lu->transpose().solve(g);
                if (wants(1)) accumulate(slot(1), g_rhs);
                if (wants(0)) accumulate(slot(0), -g_rhs * n.value.transpose());
                break;
            }
            case Op::exp:
                if (wants(0)) accumulate(slot(0), g.cwiseProduct(n.value));
                break;
            case Op::square:
                if (wants(0)) accumulate(slot(0), 2.0 * g.cwiseProduct(in(0)));
                break;
            case Op::abs:
                if (wants(0)) {
                    const Matrix sign = in(0).unaryExpr([](double v) { return double((v > 0.0) - (v < 0.0)); });
                    accumulate(slot(0), g.cwiseProduct(sign));
                }
                break;
            case Op::masked_mean:
                if (wants(0)) {
                    const double w = n.factor == 0.0 ? 0.0 : g(0, 0) / n.factor;
                    Matrix contribution = Matrix::Zero(in(0).rows(), in(0).cols());
                    for (Index i = 0; i < contribution.rows(); ++i) {
                        for (Index j = 0; j < contribution.cols(); ++j) {
                            if (n.mask(i, j) != 0) contribution(i, j) = w;
                        }
                    }
                    accumulate(slot(0), contribution);
                }
                break;
            case Op::recurrence: {
                const Matrix& a = in(0);
                const Matrix& states = n.value;
                const Index dim = a.rows();
                const Index steps = states.cols();
                if (steps == 0) break;
                // Adjoint states λ_k = g_k + Aᵀ λ_{k+1}, λ_{L-1} = g_{L-1}.
                Matrix lambda(dim, steps);
                lambda.col(steps - 1) = g.col(steps - 1);
                for (Index k = steps - 1; k > 0; --k) {
                    lambda.col(k - 1).noalias() = a.transpose() * lambda.col(k);
                    lambda.col(k - 1) += g.col(k - 1);
                }
                if (steps > 1) {
                    if (wants(0)) {
                        accumulate(slot(0), lambda.rightCols(steps - 1) * states.leftCols(steps - 1).transpose());
                    }
                    if (wants(1)) {
                        Matrix g_drive = Matrix::Zero(dim, steps);
                        g_drive.leftCols(steps - 1) = lambda.rightCols(steps - 1);
                        accumulate(slot(1), g_drive);
                    }
                } else if (wants(1)) {
                    accumulate(slot(1), Matrix::Zero(dim, steps));
                }
                if (wants(2)) accumulate(slot(2), lambda.col(0));
                break;
            }
        }
    }

    Gradients grads;
    grads.per_leaf.reserve(leaves_.size());
    for (std::size_t leaf_node : leaves_) {
        if (leaf_node <= output.id_ && adj[leaf_node].size() != 0) {
            grads.per_leaf.push_back(std::move(adj[leaf_node]));
        } else {
            const Matrix& v = nodes_[leaf_node].value;
            grads.per_leaf.push_back(Matrix::Zero(v.rows(), v.cols()));
        }
    }
    return grads;
}

}  // namespace simba

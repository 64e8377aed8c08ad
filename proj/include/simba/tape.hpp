#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "simba/matrix.hpp"

namespace simba {

/// Handle to a node recorded on a Tape. Only meaningful for the tape that issued it.
class Var {
   public:
    Var() = default;
    std::size_t id() const noexcept { return id_; }

   private:
    friend class Tape;
    explicit Var(std::size_t id) : id_(id) {}
    std::size_t id_ = static_cast<std::size_t>(-1);
};

/// Reverse-mode differentiation over a closed set of dense matrix primitives.
///
/// Operations are evaluated eagerly as they are recorded, so value() is always
/// available. The recorded program can be replayed with new leaf values through
/// forward(), and backward() returns gradients for every registered leaf.
///
/// Reductions run in a fixed order, so identical tapes and leaves give
/// bit-identical values and gradients. A tape is not thread-safe; use one per
/// thread.
class Tape {
   public:
    enum class Op {
        leaf,
        constant,
        matmul,
        add,
        sub,
        scale,
        scale_by,
        transpose,
        block,
        solve,
        exp,
        square,
        abs,
        masked_mean,
        recurrence,
    };

    Tape() = default;

    /// Registers a differentiable input. Leaves are numbered in registration order.
    Var leaf(Matrix value, std::string name = {});
    Var constant(Matrix value);

    Var matmul(Var a, Var b);
    Var add(Var a, Var b);
    Var sub(Var a, Var b);
    Var scale(Var a, double factor);
    /// a · s for a 1×1 node s.
    Var scale_by(Var a, Var s);
    Var transpose(Var a);
    Var block(Var a, Index row, Index col, Index rows, Index cols);
    /// X with M·X = R, via pivoted LU. Gradients use d(M⁻¹) = −M⁻¹ dM M⁻¹.
    Var solve(Var m, Var r);
    /// M⁻¹, recorded as solve(M, I).
    Var inverse(Var m);
    Var exp(Var a);
    Var square(Var a);
    Var abs(Var a);
    /// Σ over entries with mask ≠ 0 of a_ij, divided by `denominator` (0 if denominator is 0).
    Var masked_mean(Var a, const Mask& mask, double denominator);
    /// Linear state recurrence: column 0 is x0, column k+1 is A·col_k + drive.col(k).
    /// Output has as many columns as `drive`. Throws DivergenceError once any state
    /// entry is non-finite or exceeds kDivergenceBound in magnitude.
    Var recurrence(Var a, Var drive, Var x0);

    const Matrix& value(Var v) const;
    double scalar(Var v) const;

    /// Reciprocal condition estimate recorded by the last evaluation of a solve node.
    double rcond(Var solve_node) const;

    /// Replays the tape with new leaf values (in registration order) and
    /// returns the value of the final node.
    const Matrix& forward(std::span<const Matrix> leaves);

    struct Gradients {
        /// One accumulator per leaf, in registration order.
        std::vector<Matrix> per_leaf;
        const Matrix& operator[](std::size_t leaf_index) const { return per_leaf.at(leaf_index); }
    };

    /// Reverse pass from the final node, seeded with `seed`.
    Gradients backward(double seed = 1.0) const;
    /// Reverse pass from `output`, which must be 1×1.
    Gradients backward(Var output, double seed = 1.0) const;

    /// Leaf ordinal of `v` (its position in the gradient vector).
    std::size_t leaf_index(Var v) const;

    std::size_t size() const noexcept { return nodes_.size(); }
    std::size_t leaf_count() const noexcept { return leaves_.size(); }
    Var last() const;

    static const char* op_name(Op op);

   private:
    struct Node {
        Op op = Op::constant;
        std::size_t in[3] = {0, 0, 0};
        int arity = 0;
        bool needs_grad = false;
        double factor = 0.0;
        Index r0 = 0, c0 = 0, rows = 0, cols = 0;
        Matrix value;
        Mask mask;
        std::shared_ptr<Eigen::PartialPivLU<Matrix>> lu;
        double rcond = 0.0;
        std::size_t leaf_ordinal = 0;
        std::string name;
    };

    Var push(Node node);
    void evaluate(std::size_t index);
    std::string describe(std::size_t index) const;
    const Node& node(Var v) const;

    std::vector<Node> nodes_;
    std::vector<std::size_t> leaves_;
};

/// Magnitude beyond which simulated states count as diverged.
inline constexpr double kDivergenceBound = 1e12;

}  // namespace simba

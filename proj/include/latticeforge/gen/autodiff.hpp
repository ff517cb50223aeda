#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <functional>
#include <vector>

namespace latticeforge::gen {

using Matrix = Eigen::MatrixXd;

class Tape;

/// Handle to a node on a Tape.
struct Var {
    Tape* tape = nullptr;
    std::size_t id = 0;

    const Matrix& value() const;
    Eigen::Index rows() const { return value().rows(); }
    Eigen::Index cols() const { return value().cols(); }
};

/// Reverse-mode differentiation over dense matrices. Nodes are appended in
/// evaluation order; backward() walks them in reverse.
class Tape {
  public:
    Var constant(Matrix value);
    /// Leaf whose gradient is kept after backward().
    Var leaf(Matrix value);
    /// Leaf that refers to caller-owned storage, which must outlive the tape
    /// and stay unchanged while it is in use.
    Var borrow(const Matrix& value, bool trainable);

    const Matrix& value(const Var& v) const { return nodes_[v.id].get(); }
    const Matrix& grad(const Var& v) const { return nodes_[v.id].grad; }
    /// Moves the gradient out (zeros if nothing reached v).
    Matrix take_grad(const Var& v);

    /// Seeds d(out)/d(out) = 1 for a 1x1 output and propagates.
    void backward(const Var& out);

    // Used by the op implementations.
    Var push(Matrix value, std::vector<std::size_t> parents, std::function<void(Tape&, std::size_t)> back);
    Matrix& grad_ref(std::size_t id);
    const Matrix& value_ref(std::size_t id) const { return nodes_[id].get(); }
    bool needs_grad(std::size_t id) const { return nodes_[id].needs_grad; }

  private:
    struct Node {
        Matrix value;
        const Matrix* external;
        Matrix grad;
        bool needs_grad = false;
        std::function<void(Tape&, std::size_t)> back;
        const Matrix& get() const { return external ? *external : value; }
    };
    std::vector<Node> nodes_;
};

Var matmul(const Var& a, const Var& b);
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var hadamard(const Var& a, const Var& b);
Var scale(const Var& a, double s);
/// a (n x c) plus a 1 x c row broadcast over rows.
Var add_row(const Var& a, const Var& row);
/// Repeats a 1 x c row n times.
Var broadcast_rows(const Var& row, Eigen::Index n);
Var transpose(const Var& a);
Var silu(const Var& a);
Var abs(const Var& a);
Var softmax_rows(const Var& a);
/// Row-wise normalization with learned gain and bias (both 1 x c).
Var layer_norm(const Var& a, const Var& gain, const Var& bias, double eps = 1e-5);
Var slice_cols(const Var& a, Eigen::Index start, Eigen::Index count);
Var hcat(const std::vector<Var>& parts);
Var slice_rows(const Var& a, Eigen::Index start, Eigen::Index count);
Var vcat(const std::vector<Var>& parts);
Var gather_rows(const Var& a, const std::vector<Eigen::Index>& rows);
/// Mean of (a - target)^2 over all entries; 1x1.
Var mean_squared_error(const Var& a, const Matrix& target);
/// Mean binary cross-entropy of logits against 0/1 targets; 1x1.
Var bce_with_logits(const Var& logits, const Matrix& targets);

}  // namespace latticeforge::gen

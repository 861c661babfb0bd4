#pragma once

// Tape-based reverse-mode automatic differentiation over dense matrices.
//
// Values are column-major Eigen matrices; batched activations are laid out
// as (features x batch). Nodes are appended in evaluation order, so the
// reverse of the tape is a valid topological order for backpropagation.

#include "doge/common.hpp"

#include <cstddef>
#include <functional>
#include <vector>

namespace doge::ad {

class Tape;

/// Handle to a node on a tape. Cheap to copy; only valid while the tape lives.
struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;

  const Matrix& value() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
};

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// A leaf. Gradients are accumulated for it only when requires_grad is set.
  Var leaf(Matrix value, bool requires_grad = false);
  Var constant(Matrix value) { return leaf(std::move(value), false); }
  Var scalar(double v);

  const Matrix& value(Var v) const { return nodes_[v.id].value; }

  /// Gradient of the last backward() root w.r.t. v; zeros if v did not
  /// influence it.
  Matrix grad(Var v) const;

  /// Seeds d(root)/d(root) = 1 for a 1x1 root and backpropagates.
  void backward(Var root);

  std::size_t size() const { return nodes_.size(); }

  // Used by the op implementations.
  using BackwardFn = std::function<void(Tape&, const Matrix& upstream)>;
  Var push(Matrix value, std::vector<std::size_t> parents, BackwardFn fn);
  bool needs_grad(std::size_t id) const { return nodes_[id].needs_grad; }
  void accumulate(std::size_t id, const Matrix& g);

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool needs_grad = false;
    bool has_grad = false;
    BackwardFn backward;
  };
  std::vector<Node> nodes_;
};

// Ops. Shapes are checked and violations raise InvalidArgument.
Var matmul(Var a, Var b);
/// z (m x n) + bias (m x 1) broadcast across columns.
Var add_bias(Var z, Var bias);
Var add(Var a, Var b);
Var sub(Var a, Var b);
/// Elementwise product.
Var mul(Var a, Var b);
Var scale(Var a, double c);
/// a + c elementwise.
Var shift(Var a, double c);
/// ReLU with subgradient 0 at the kink.
Var relu(Var a);
Var tanh(Var a);
Var square(Var a);
/// Elementwise minimum; ties route the gradient to `a`.
Var min(Var a, Var b);
/// Stacks rows: [a; b]. Column counts must agree.
Var concat_rows(Var a, Var b);
/// Mean of all entries, as a 1x1 node.
Var mean(Var a);
/// Sum of all entries, as a 1x1 node.
Var sum(Var a);
/// Column-wise sum over rows: (m x n) -> (1 x n).
Var sum_rows(Var a);

}  // namespace doge::ad

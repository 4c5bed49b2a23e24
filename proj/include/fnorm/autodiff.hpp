#pragma once

#include <fnorm/tensor.hpp>

#include <array>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace fnorm {

class Tape;

/// Handle to a node on a Tape. Cheap to copy; valid while the tape lives.
struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;

  const Tensor& value() const;
  Index rows() const { return value().rows(); }
  Index cols() const { return value().cols(); }
  /// Value of a 1x1 node.
  double scalar() const;
};

enum class Op {
  Leaf,
  MatMul,
  Linear,
  AddBias,
  Add,
  Sub,
  Scale,
  MulConst,
  Relu,
  RowSqL2,
  Mean,
  SumSq,
  SoftmaxCrossEntropy,
  BatchNormTrain,
  BatchNormEval,
};

/// Append-only record of a forward computation. Node inputs always refer to
/// earlier nodes, so reverse insertion order is a valid topological order.
class Tape {
 public:
  struct Node {
    Op op = Op::Leaf;
    std::array<std::size_t, 3> inputs{};
    int arity = 0;
    Tensor value;
    bool requires_grad = false;
    // Op-specific saved state.
    Tensor saved;
    Tensor saved2;
    double coeff = 0.0;
    std::vector<int> labels;
  };

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;
  Tape(Tape&&) = default;
  Tape& operator=(Tape&&) = default;

  /// Differentiable leaf (a parameter or an input we want gradients for).
  Var variable(Tensor value);
  /// Leaf excluded from differentiation (data, sampled points, masks).
  Var constant(Tensor value);

  std::size_t size() const { return nodes_.size(); }
  const Node& node(std::size_t id) const { return nodes_.at(id); }
  bool backward_done() const { return backward_done_; }

 private:
  friend struct TapeAccess;

  std::vector<Node> nodes_;
  bool backward_done_ = false;
};

/// Gradients of one scalar with respect to every node that requires them.
class Gradients {
 public:
  explicit Gradients(std::vector<std::optional<Tensor>> grads) : grads_(std::move(grads)) {}

  /// Gradient for `v`; zeros if the output does not depend on it.
  Tensor of(Var v) const;
  bool has(Var v) const { return v.id < grads_.size() && grads_[v.id].has_value(); }

 private:
  std::vector<std::optional<Tensor>> grads_;
};

// Recorded operations. Every op checks shapes (DimensionError) and rejects
// non-finite inputs or outputs (NumericError).

Var matmul(Var a, Var b);
/// x * W^T + b with x [n x in], W [out x in], b [1 x out].
Var linear(Var x, Var weight, Var bias);
/// Adds a [1 x k] row to every row of a [n x k] matrix.
Var add_bias(Var a, Var bias);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var scale(Var a, double c);
/// Elementwise product with a constant tensor (dropout masks).
Var mul_const(Var a, const Tensor& mask);
/// max(0, x); the derivative at exactly 0 is taken to be 0.
Var relu(Var a);
/// Squared L2 norm of every row: [n x k] -> [n x 1].
Var row_sq_l2(Var a);
/// Mean of all entries -> [1 x 1].
Var mean(Var a);
/// Sum of squares of all entries -> [1 x 1].
Var sum_sq(Var a);
/// Mean over rows of -log softmax(logits)[label].
Var softmax_cross_entropy(Var logits, std::span<const int> labels);

/// Per-feature batch normalization with batch statistics. The biased batch
/// mean and variance are written to `batch_mean` / `batch_var`.
Var batch_norm_train(Var x, Var gamma, Var beta, double eps, RowVector* batch_mean = nullptr,
                     RowVector* batch_var = nullptr);
/// Batch normalization with fixed (running) statistics.
Var batch_norm_eval(Var x, Var gamma, Var beta, const RowVector& mean, const RowVector& var,
                    double eps);

/// Reverse sweep from a scalar node. A tape supports exactly one sweep.
Gradients backward(Tape& tape, Var output);

/// Central differences (f(p + h e_i) - f(p - h e_i)) / 2h for every coordinate.
Tensor finite_diff_gradient(const std::function<double(const Tensor&)>& f, const Tensor& params,
                            double h);

}  // namespace fnorm

#include <fnorm/autodiff.hpp>

#include <cmath>
#include <utility>

namespace fnorm {

struct TapeAccess {
  static Var push(Tape& tape, Tape::Node node) {
    if (!node.value.allFinite()) {
      throw NumericError("non-finite value produced by recorded operation");
    }
    tape.nodes_.push_back(std::move(node));
    return Var{&tape, tape.nodes_.size() - 1};
  }
  static std::vector<Tape::Node>& nodes(Tape& tape) { return tape.nodes_; }
  static void mark_backward(Tape& tape) { tape.backward_done_ = true; }
};

namespace {

Tape& tape_of(Var a) {
  if (a.tape == nullptr) throw ContractError("Var is not attached to a tape");
  return *a.tape;
}

Tape& same_tape(Var a, Var b) {
  if (a.tape != b.tape) throw ContractError("operands recorded on different tapes");
  return tape_of(a);
}

Tape::Node make_node(Op op, std::initializer_list<Var> inputs) {
  Tape::Node node;
  node.op = op;
  for (const Var& v : inputs) {
    node.inputs[node.arity++] = v.id;
    node.requires_grad = node.requires_grad || v.tape->node(v.id).requires_grad;
  }
  return node;
}

void require_shape(bool ok, const char* op, const std::string& detail) {
  if (!ok) throw DimensionError(std::string(op) + ": shape mismatch " + detail);
}

}  // namespace

const Tensor& Var::value() const { return tape_of(*this).node(id).value; }

double Var::scalar() const {
  const Tensor& v = value();
  if (v.size() != 1) throw ContractError("scalar() on non-scalar node " + shape_str(v));
  return v(0, 0);
}

Var Tape::variable(Tensor value) {
  if (!value.allFinite()) throw NumericError("non-finite leaf value");
  Node node;
  node.value = std::move(value);
  node.requires_grad = true;
  return TapeAccess::push(*this, std::move(node));
}

Var Tape::constant(Tensor value) {
  if (!value.allFinite()) throw NumericError("non-finite leaf value");
  Node node;
  node.value = std::move(value);
  return TapeAccess::push(*this, std::move(node));
}

Var matmul(Var a, Var b) {
  Tape& tape = same_tape(a, b);
  require_shape(a.cols() == b.rows(), "matmul", shape_str(a.value()) + " * " + shape_str(b.value()));
  Tape::Node node = make_node(Op::MatMul, {a, b});
  node.value.noalias() = a.value() * b.value();
  return TapeAccess::push(tape, std::move(node));
}

Var linear(Var x, Var weight, Var bias) {
  Tape& tape = same_tape(x, weight);
  same_tape(x, bias);
  const Tensor& w = weight.value();
  require_shape(x.cols() == w.cols() && bias.rows() == 1 && bias.cols() == w.rows(), "linear",
                shape_str(x.value()) + " W" + shape_str(w) + " b" + shape_str(bias.value()));
  Tape::Node node = make_node(Op::Linear, {x, weight, bias});
  node.value.noalias() = x.value() * w.transpose();
  node.value.rowwise() += bias.value().row(0);
  return TapeAccess::push(tape, std::move(node));
}

Var add_bias(Var a, Var bias) {
  Tape& tape = same_tape(a, bias);
  require_shape(bias.rows() == 1 && bias.cols() == a.cols(), "add_bias",
                shape_str(a.value()) + " + " + shape_str(bias.value()));
  Tape::Node node = make_node(Op::AddBias, {a, bias});
  node.value = a.value();
  node.value.rowwise() += bias.value().row(0);
  return TapeAccess::push(tape, std::move(node));
}

Var add(Var a, Var b) {
  Tape& tape = same_tape(a, b);
  require_shape(a.rows() == b.rows() && a.cols() == b.cols(), "add",
                shape_str(a.value()) + " + " + shape_str(b.value()));
  Tape::Node node = make_node(Op::Add, {a, b});
  node.value = a.value() + b.value();
  return TapeAccess::push(tape, std::move(node));
}

Var sub(Var a, Var b) {
  Tape& tape = same_tape(a, b);
  require_shape(a.rows() == b.rows() && a.cols() == b.cols(), "sub",
                shape_str(a.value()) + " - " + shape_str(b.value()));
  Tape::Node node = make_node(Op::Sub, {a, b});
  node.value = a.value() - b.value();
  return TapeAccess::push(tape, std::move(node));
}

Var scale(Var a, double c) {
  Tape& tape = tape_of(a);
  if (!std::isfinite(c)) throw NumericError("scale: non-finite factor");
  Tape::Node node = make_node(Op::Scale, {a});
  node.value = c * a.value();
  node.coeff = c;
  return TapeAccess::push(tape, std::move(node));
}

Var mul_const(Var a, const Tensor& mask) {
  Tape& tape = tape_of(a);
  require_shape(a.rows() == mask.rows() && a.cols() == mask.cols(), "mul_const",
                shape_str(a.value()) + " .* " + shape_str(mask));
  if (!mask.allFinite()) throw NumericError("mul_const: non-finite mask");
  Tape::Node node = make_node(Op::MulConst, {a});
  node.value = a.value().cwiseProduct(mask);
  node.saved = mask;
  return TapeAccess::push(tape, std::move(node));
}

Var relu(Var a) {
  Tape& tape = tape_of(a);
  Tape::Node node = make_node(Op::Relu, {a});
  node.value = a.value().cwiseMax(0.0);
  return TapeAccess::push(tape, std::move(node));
}

Var row_sq_l2(Var a) {
  Tape& tape = tape_of(a);
  Tape::Node node = make_node(Op::RowSqL2, {a});
  node.value = a.value().rowwise().squaredNorm();
  return TapeAccess::push(tape, std::move(node));
}

Var mean(Var a) {
  Tape& tape = tape_of(a);
  if (a.value().size() == 0) throw DimensionError("mean: empty tensor");
  Tape::Node node = make_node(Op::Mean, {a});
  node.value = Tensor::Constant(1, 1, a.value().mean());
  return TapeAccess::push(tape, std::move(node));
}

Var sum_sq(Var a) {
  Tape& tape = tape_of(a);
  Tape::Node node = make_node(Op::SumSq, {a});
  node.value = Tensor::Constant(1, 1, a.value().squaredNorm());
  return TapeAccess::push(tape, std::move(node));
}

Var softmax_cross_entropy(Var logits, std::span<const int> labels) {
  Tape& tape = tape_of(logits);
  const Tensor& z = logits.value();
  require_shape(static_cast<Index>(labels.size()) == z.rows() && z.rows() > 0, "softmax_cross_entropy",
                shape_str(z) + " vs " + std::to_string(labels.size()) + " labels");
  Tape::Node node = make_node(Op::SoftmaxCrossEntropy, {logits});
  Tensor probs(z.rows(), z.cols());
  double total = 0.0;
  for (Index i = 0; i < z.rows(); ++i) {
    const int label = labels[static_cast<std::size_t>(i)];
    if (label < 0 || label >= z.cols()) throw DimensionError("softmax_cross_entropy: label out of range");
    const double shift = z.row(i).maxCoeff();
    const RowVector e = (z.row(i).array() - shift).exp().matrix();
    const double norm = e.sum();
    probs.row(i) = e / norm;
    total += std::log(norm) + shift - z(i, label);
  }
  node.value = Tensor::Constant(1, 1, total / static_cast<double>(z.rows()));
  node.saved = std::move(probs);
  node.labels.assign(labels.begin(), labels.end());
  return TapeAccess::push(tape, std::move(node));
}

Var batch_norm_train(Var x, Var gamma, Var beta, double eps, RowVector* batch_mean,
                     RowVector* batch_var) {
  Tape& tape = same_tape(x, gamma);
  same_tape(x, beta);
  const Tensor& v = x.value();
  require_shape(gamma.rows() == 1 && gamma.cols() == v.cols() && beta.rows() == 1 &&
                    beta.cols() == v.cols() && v.rows() > 0,
                "batch_norm_train", shape_str(v));
  Tape::Node node = make_node(Op::BatchNormTrain, {x, gamma, beta});
  const RowVector mu = v.colwise().mean();
  const Tensor centered = v.rowwise() - mu;
  const RowVector var = centered.colwise().squaredNorm() / static_cast<double>(v.rows());
  const RowVector inv_std = (var.array() + eps).rsqrt().matrix();
  Tensor xhat = centered.array().rowwise() * inv_std.array();
  node.value = xhat.array().rowwise() * gamma.value().row(0).array();
  node.value.rowwise() += beta.value().row(0);
  node.saved = std::move(xhat);
  node.saved2 = inv_std;
  if (batch_mean != nullptr) *batch_mean = mu;
  if (batch_var != nullptr) *batch_var = var;
  return TapeAccess::push(tape, std::move(node));
}

Var batch_norm_eval(Var x, Var gamma, Var beta, const RowVector& mean, const RowVector& var,
                    double eps) {
  Tape& tape = same_tape(x, gamma);
  same_tape(x, beta);
  const Tensor& v = x.value();
  require_shape(gamma.cols() == v.cols() && beta.cols() == v.cols() && mean.size() == v.cols() &&
                    var.size() == v.cols(),
                "batch_norm_eval", shape_str(v));
  Tape::Node node = make_node(Op::BatchNormEval, {x, gamma, beta});
  const RowVector inv_std = (var.array() + eps).rsqrt().matrix();
  Tensor xhat = (v.rowwise() - mean).array().rowwise() * inv_std.array();
  node.value = xhat.array().rowwise() * gamma.value().row(0).array();
  node.value.rowwise() += beta.value().row(0);
  node.saved = std::move(xhat);
  node.saved2 = inv_std;
  return TapeAccess::push(tape, std::move(node));
}

Tensor Gradients::of(Var v) const {
  if (has(v)) return *grads_[v.id];
  return Tensor::Zero(v.rows(), v.cols());
}

Gradients backward(Tape& tape, Var output) {
  if (output.tape != &tape) throw ContractError("backward: output not on this tape");
  if (tape.backward_done()) throw ContractError("backward: tape already swept");
  if (output.value().size() != 1) {
    throw ContractError("backward: output must be scalar, got " + shape_str(output.value()));
  }
  TapeAccess::mark_backward(tape);

  auto& nodes = TapeAccess::nodes(tape);
  std::vector<std::optional<Tensor>> grads(nodes.size());
  grads[output.id] = Tensor::Ones(1, 1);

  auto accumulate = [&](std::size_t id, Tensor g) {
    if (!nodes[id].requires_grad) return;
    if (grads[id]) {
      *grads[id] += g;
    } else {
      grads[id] = std::move(g);
    }
  };

  for (std::size_t k = output.id + 1; k-- > 0;) {
    if (!grads[k] || nodes[k].op == Op::Leaf) continue;
    const Tape::Node& node = nodes[k];
    const Tensor& g = *grads[k];
    const auto in = [&](int j) -> const Tensor& { return nodes[node.inputs[j]].value; };
    const auto id = [&](int j) { return node.inputs[j]; };

    switch (node.op) {
      case Op::Leaf:
        break;
      case Op::MatMul:
        accumulate(id(0), g * in(1).transpose());
        accumulate(id(1), in(0).transpose() * g);
        break;
      case Op::Linear:
        accumulate(id(0), g * in(1));
        accumulate(id(1), g.transpose() * in(0));
        accumulate(id(2), g.colwise().sum());
        break;
      case Op::AddBias:
        accumulate(id(0), g);
        accumulate(id(1), g.colwise().sum());
        break;
      case Op::Add:
        accumulate(id(0), g);
        accumulate(id(1), g);
        break;
      case Op::Sub:
        accumulate(id(0), g);
        accumulate(id(1), -g);
        break;
      case Op::Scale:
        accumulate(id(0), node.coeff * g);
        break;
      case Op::MulConst:
        accumulate(id(0), g.cwiseProduct(node.saved));
        break;
      case Op::Relu:
        accumulate(id(0), (in(0).array() > 0.0).select(g, 0.0));
        break;
      case Op::RowSqL2:
        accumulate(id(0), 2.0 * (in(0).array().colwise() * g.col(0).array()).matrix());
        break;
      case Op::Mean: {
        const Tensor& a = in(0);
        accumulate(id(0), Tensor::Constant(a.rows(), a.cols(), g(0, 0) / static_cast<double>(a.size())));
        break;
      }
      case Op::SumSq:
        accumulate(id(0), 2.0 * g(0, 0) * in(0));
        break;
      case Op::SoftmaxCrossEntropy: {
        Tensor d = node.saved;
        for (Index i = 0; i < d.rows(); ++i) d(i, node.labels[static_cast<std::size_t>(i)]) -= 1.0;
        accumulate(id(0), (g(0, 0) / static_cast<double>(d.rows())) * d);
        break;
      }
      case Op::BatchNormTrain: {
        const Tensor& xhat = node.saved;
        const RowVector inv_std = node.saved2.row(0);
        const RowVector gamma = in(1).row(0);
        const double n = static_cast<double>(xhat.rows());
        accumulate(id(2), g.colwise().sum());
        accumulate(id(1), g.cwiseProduct(xhat).colwise().sum());
        const Tensor dxhat = g.array().rowwise() * gamma.array();
        const RowVector sum_d = dxhat.colwise().sum();
        const RowVector sum_dx = dxhat.cwiseProduct(xhat).colwise().sum();
        Tensor dx = (n * dxhat).rowwise() - sum_d;
        dx -= (xhat.array().rowwise() * sum_dx.array()).matrix();
        dx = dx.array().rowwise() * (inv_std.array() / n);
        accumulate(id(0), std::move(dx));
        break;
      }
      case Op::BatchNormEval: {
        const RowVector factor = in(1).row(0).cwiseProduct(node.saved2.row(0));
        accumulate(id(2), g.colwise().sum());
        accumulate(id(1), g.cwiseProduct(node.saved).colwise().sum());
        accumulate(id(0), g.array().rowwise() * factor.array());
        break;
      }
    }
  }
  return Gradients(std::move(grads));
}

Tensor finite_diff_gradient(const std::function<double(const Tensor&)>& f, const Tensor& params,
                            double h) {
  if (!(h > 0.0)) throw ContractError("finite_diff_gradient: h must be positive");
  Tensor grad(params.rows(), params.cols());
  Tensor probe = params;
  for (Index i = 0; i < params.size(); ++i) {
    const double orig = probe.data()[i];
    probe.data()[i] = orig + h;
    const double up = f(probe);
    probe.data()[i] = orig - h;
    const double down = f(probe);
    probe.data()[i] = orig;
    grad.data()[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

}  // namespace fnorm

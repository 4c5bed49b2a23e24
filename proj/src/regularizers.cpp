#include <fnorm/regularizers.hpp>

#include <cmath>

namespace fnorm {

std::string to_string(RegKind kind) {
  switch (kind) {
    case RegKind::None: return "none";
    case RegKind::WeightedL2: return "weighted_l2";
    case RegKind::Sobolev: return "sobolev";
    case RegKind::TrainOutput: return "train_output";
    case RegKind::WeightDecay: return "weight_decay";
  }
  return "unknown";
}

RegKind reg_kind_from_string(const std::string& name) {
  if (name == "none") return RegKind::None;
  if (name == "weighted_l2") return RegKind::WeightedL2;
  if (name == "sobolev") return RegKind::Sobolev;
  if (name == "train_output") return RegKind::TrainOutput;
  if (name == "weight_decay") return RegKind::WeightDecay;
  throw ContractError("unknown regularizer kind '" + name + "'");
}

void RegConfig::validate() const {
  if (!(lambda >= 0.0)) throw ContractError("RegConfig: lambda must be >= 0");
  if (reg_batch_size < 1) throw ContractError("RegConfig: reg_batch_size must be >= 1");
  if (!(sobolev_step > 0.0)) throw ContractError("RegConfig: sobolev step must be > 0");
  if (!(weight_decay >= 0.0)) throw ContractError("RegConfig: weight_decay must be >= 0");
}

namespace {

Var eval_outputs(Tape& tape, const ParamVars& vars, const Parameters& params, const MlpSpec& spec,
                 const Tensor& points) {
  return forward(tape, vars, params, spec, tape.constant(points), Mode::Eval);
}

void require_batch(const Tensor& z, const char* what) {
  if (z.rows() == 0) throw ContractError(std::string(what) + ": empty batch");
}

}  // namespace

Var l2_norm_sq_estimate(Tape& tape, const ParamVars& vars, const Parameters& params, const MlpSpec& spec,
                        const Tensor& z) {
  require_batch(z, "l2_norm_sq_estimate");
  return mean(row_sq_l2(eval_outputs(tape, vars, params, spec, z)));
}

double l2_norm_sq_estimate(const Parameters& params, const MlpSpec& spec, const Tensor& z) {
  Tape tape;
  return l2_norm_sq_estimate(tape, bind(tape, params), params, spec, z).scalar();
}

Var sobolev_norm_sq_estimate(Tape& tape, const ParamVars& vars, const Parameters& params, const MlpSpec& spec,
                             const Tensor& z, const RowVector& u, double h) {
  require_batch(z, "sobolev_norm_sq_estimate");
  if (!(h > 0.0)) throw ContractError("sobolev_norm_sq_estimate: h must be > 0");
  if (u.size() != z.cols()) throw DimensionError("sobolev_norm_sq_estimate: direction dimension mismatch");
  if (std::abs(u.norm() - 1.0) > 1e-12) throw ContractError("sobolev_norm_sq_estimate: direction is not unit");

  const Var l2 = l2_norm_sq_estimate(tape, vars, params, spec, z);
  const RowVector shift = h * u;
  const Var up = eval_outputs(tape, vars, params, spec, z.rowwise() + shift);
  const Var down = eval_outputs(tape, vars, params, spec, z.rowwise() - shift);
  const Var directional = scale(sub(up, down), 1.0 / (2.0 * h));
  return add(l2, mean(row_sq_l2(directional)));
}

double sobolev_norm_sq_estimate(const Parameters& params, const MlpSpec& spec, const Tensor& z,
                                const RowVector& u, double h) {
  Tape tape;
  return sobolev_norm_sq_estimate(tape, bind(tape, params), params, spec, z, u, h).scalar();
}

Var train_output_penalty(Tape& tape, const ParamVars& vars, const Parameters& params, const MlpSpec& spec,
                         const Tensor& x) {
  require_batch(x, "train_output_penalty");
  return mean(row_sq_l2(eval_outputs(tape, vars, params, spec, x)));
}

RowVector random_unit_direction(Index d, Rng& rng) {
  if (d < 1) throw ContractError("random_unit_direction: d must be >= 1");
  std::normal_distribution<double> normal(0.0, 1.0);
  RowVector u(d);
  double norm = 0.0;
  while (norm < 1e-150) {
    for (Index j = 0; j < d; ++j) u(j) = normal(rng);
    norm = u.norm();
  }
  u /= norm;
  return u;
}

LossTerms regularized_loss(Tape& tape, const ParamVars& vars, const Parameters& params, const MlpSpec& spec,
                           const Tensor& x, std::span<const int> labels, const RegConfig& reg,
                           const Sampler* sampler, Rng& rng, BatchStats* stats) {
  reg.validate();
  if (reg.needs_sampler() && sampler == nullptr) {
    throw ContractError("regularized_loss: " + to_string(reg.kind) + " needs a sampler");
  }

  LossTerms terms;
  const Var logits = forward(tape, vars, params, spec, tape.constant(x), Mode::Train, &rng, stats);
  terms.risk = softmax_cross_entropy(logits, labels);
  terms.total = terms.risk;
  if (reg.weight_decay > 0.0) terms.total = add(terms.total, scale(weight_decay_norm(vars), reg.weight_decay));
  if (reg.kind == RegKind::None || reg.lambda == 0.0) return terms;

  switch (reg.kind) {
    case RegKind::None:
      break;
    case RegKind::WeightedL2: {
      const Tensor z = sampler->draw(reg.reg_batch_size, rng);
      terms.q_rows_drawn = z.rows();
      terms.penalty = l2_norm_sq_estimate(tape, vars, params, spec, z);
      break;
    }
    case RegKind::Sobolev: {
      const Tensor z = sampler->draw(reg.reg_batch_size, rng);
      terms.q_rows_drawn = z.rows();
      RowVector u;
      if (reg.sobolev_direction_seed) {
        Rng direction_rng = make_rng(*reg.sobolev_direction_seed, 0x50b0);
        u = random_unit_direction(z.cols(), direction_rng);
      } else {
        u = random_unit_direction(z.cols(), rng);
      }
      terms.penalty = sobolev_norm_sq_estimate(tape, vars, params, spec, z, u, reg.sobolev_step);
      break;
    }
    case RegKind::TrainOutput:
      terms.penalty = train_output_penalty(tape, vars, params, spec, x);
      break;
    case RegKind::WeightDecay:
      terms.penalty = weight_decay_norm(vars);
      break;
  }
  terms.total = add(terms.total, scale(*terms.penalty, reg.lambda));
  return terms;
}

}  // namespace fnorm

#include <fnorm/gradcheck.hpp>

#include <algorithm>
#include <cmath>

namespace fnorm {
namespace {

// Random inputs of one regularized_loss call, replayed from the same rng
// stream in the same order: dropout masks, then the Q batch, then the
// Sobolev direction.
struct Draws {
  std::vector<Tensor> masks;  // per hidden layer; empty when no dropout
  Tensor z;
  RowVector u;
};

Draws replay_draws(const MlpSpec& spec, Index batch, const RegConfig& reg, const Sampler* sampler,
                   std::uint64_t rng_seed) {
  Rng rng = make_rng(rng_seed, 0x6c);
  Draws d;
  d.masks.resize(spec.num_hidden());
  for (std::size_t l = 0; l < spec.num_hidden(); ++l) {
    const double p = spec.dropout_rate(l);
    if (p <= 0.0) continue;
    std::bernoulli_distribution keep(1.0 - p);
    Tensor mask(batch, spec.layer_dims[l + 1]);
    for (Index i = 0; i < mask.size(); ++i) mask.data()[i] = keep(rng) ? 1.0 / (1.0 - p) : 0.0;
    d.masks[l] = std::move(mask);
  }
  if (reg.lambda == 0.0 || !reg.needs_sampler()) return d;
  d.z = sampler->draw(reg.reg_batch_size, rng);
  if (reg.kind == RegKind::Sobolev) {
    if (reg.sobolev_direction_seed) {
      Rng direction_rng = make_rng(*reg.sobolev_direction_seed, 0x50b0);
      d.u = random_unit_direction(d.z.cols(), direction_rng);
    } else {
      d.u = random_unit_direction(d.z.cols(), rng);
    }
  }
  return d;
}

// Straight-line evaluation of the regularized loss in Scalar arithmetic,
// written independently of the tape. One trainable coordinate (tensor t,
// entry k, in trainable_tensors order) is offset by `delta`.
template <typename Scalar>
class ReferenceLoss {
 public:
  using M = MatrixT<Scalar>;
  using R = RowVectorT<Scalar>;

  ReferenceLoss(const MlpSpec& spec, const Parameters& params, std::size_t t, Index k, Scalar delta)
      : spec_(spec), params_(params) {
    Parameters copy = params;
    std::vector<Tensor*> tensors = trainable_tensors(copy);
    for (std::size_t i = 0; i < tensors.size(); ++i) {
      M m = tensors[i]->template cast<Scalar>();
      if (i == t) m.data()[k] += delta;
      values_.push_back(std::move(m));
    }
  }

  Scalar operator()(const Tensor& x, std::span<const int> labels, const RegConfig& reg, const Draws& draws,
                    std::vector<bool>* pattern) const {
    const M logits = forward(x.template cast<Scalar>(), true, &draws, pattern);
    Scalar ce(0);
    for (Index i = 0; i < logits.rows(); ++i) {
      const Scalar top = logits.row(i).maxCoeff();
      Scalar s(0);
      for (Index j = 0; j < logits.cols(); ++j) s += std::exp(logits(i, j) - top);
      ce += top + std::log(s) - logits(i, labels[static_cast<std::size_t>(i)]);
    }
    Scalar total = ce / Scalar(static_cast<double>(logits.rows()));
    if (reg.weight_decay > 0.0) total += Scalar(reg.weight_decay) * weight_sq();
    if (reg.kind == RegKind::None || reg.lambda == 0.0) return total;

    Scalar penalty(0);
    switch (reg.kind) {
      case RegKind::None:
        break;
      case RegKind::WeightedL2:
        penalty = mean_sq(forward(draws.z.template cast<Scalar>(), false, nullptr, pattern));
        break;
      case RegKind::Sobolev: {
        const RowVector shift = reg.sobolev_step * draws.u;
        const Tensor z_up = draws.z.rowwise() + shift;
        const Tensor z_down = draws.z.rowwise() - shift;
        const M f_up = forward(z_up.template cast<Scalar>(), false, nullptr, pattern);
        const M f_down = forward(z_down.template cast<Scalar>(), false, nullptr, pattern);
        penalty = mean_sq(forward(draws.z.template cast<Scalar>(), false, nullptr, pattern)) +
                  mean_sq(((f_up - f_down) / Scalar(2.0 * reg.sobolev_step)).eval());
        break;
      }
      case RegKind::TrainOutput:
        penalty = mean_sq(forward(x.template cast<Scalar>(), false, nullptr, pattern));
        break;
      case RegKind::WeightDecay:
        penalty = weight_sq();
        break;
    }
    return total + Scalar(reg.lambda) * penalty;
  }

 private:
  const M& weight(std::size_t l) const { return values_[2 * l]; }
  const M& bias(std::size_t l) const { return values_[2 * l + 1]; }

  Scalar weight_sq() const {
    Scalar s(0);
    for (std::size_t l = 0; l < spec_.num_layers(); ++l) s += weight(l).squaredNorm();
    return s;
  }

  static Scalar mean_sq(const M& f) { return f.squaredNorm() / Scalar(static_cast<double>(f.rows())); }

  M forward(const M& x, bool train, const Draws* draws, std::vector<bool>* pattern) const {
    std::size_t bn_slot = 2 * spec_.num_layers();
    M h = x;
    for (std::size_t l = 0; l < spec_.num_layers(); ++l) {
      M next = h * weight(l).transpose();
      next.rowwise() += R(bias(l));
      h = std::move(next);
      if (l + 1 == spec_.num_layers()) break;

      if (spec_.has_batchnorm(l)) {
        const R gamma = values_[bn_slot];
        const R beta = values_[bn_slot + 1];
        bn_slot += 2;
        const Scalar eps(kBatchNormEps);
        R mu, var;
        if (train) {
          mu = h.colwise().mean();
          var = (h.rowwise() - mu).array().square().colwise().mean().matrix();
        } else {
          mu = params_.batchnorm[l]->running_mean.template cast<Scalar>();
          var = params_.batchnorm[l]->running_var.template cast<Scalar>();
        }
        for (Index j = 0; j < h.cols(); ++j) {
          const Scalar inv = Scalar(1) / std::sqrt(var(j) + eps);
          h.col(j) = ((h.col(j).array() - mu(j)) * inv * gamma(j) + beta(j)).matrix();
        }
      }
      for (Index i = 0; i < h.size(); ++i) {
        if (pattern != nullptr) pattern->push_back(h.data()[i] > Scalar(0));
        if (!(h.data()[i] > Scalar(0))) h.data()[i] = Scalar(0);
      }
      if (train && draws != nullptr && draws->masks[l].size() > 0) {
        h = h.cwiseProduct(draws->masks[l].template cast<Scalar>());
      }
    }
    return h;
  }

  const MlpSpec& spec_;
  const Parameters& params_;
  std::vector<M> values_;
};

}  // namespace

GradCheckResult check_loss_gradient(const MlpSpec& spec, const Parameters& params, const Tensor& x,
                                    std::span<const int> labels, const RegConfig& reg, const Sampler* sampler,
                                    std::uint64_t rng_seed, const GradCheckOptions& options) {
  if (!(options.h > 0.0)) throw ContractError("check_loss_gradient: h must be > 0");

  std::vector<Tensor> analytic;
  double tape_loss = 0.0;
  {
    Tape tape;
    Rng rng = make_rng(rng_seed, 0x6c);
    const ParamVars vars = bind(tape, params);
    const LossTerms terms = regularized_loss(tape, vars, params, spec, x, labels, reg, sampler, rng);
    tape_loss = terms.total.scalar();
    const Gradients grads = backward(tape, terms.total);
    for (const Var& v : trainable_vars(vars)) analytic.push_back(grads.of(v));
  }

  const Draws draws = replay_draws(spec, x.rows(), reg, sampler, rng_seed);
  using Wide = long double;
  std::vector<bool> centre_pattern;
  const Wide centre = ReferenceLoss<Wide>(spec, params, 0, 0, Wide(0))(x, labels, reg, draws, &centre_pattern);

  GradCheckResult result;
  result.reference_mismatch = std::abs(static_cast<double>(centre) - tape_loss) / std::max(1.0, std::abs(tape_loss));

  for (std::size_t t = 0; t < analytic.size(); ++t) {
    for (Index k = 0; k < analytic[t].size(); ++k) {
      ++result.total;
      std::vector<bool> up_pattern, down_pattern;
      const Wide h(options.h);
      const Wide up = ReferenceLoss<Wide>(spec, params, t, k, h)(x, labels, reg, draws, &up_pattern);
      const Wide down = ReferenceLoss<Wide>(spec, params, t, k, -h)(x, labels, reg, draws, &down_pattern);
      if (up_pattern != centre_pattern || down_pattern != centre_pattern) {
        ++result.kink_skipped;
        continue;
      }
      const double numeric = static_cast<double>((up - down) / (Wide(2) * h));
      const double exact = analytic[t].data()[k];
      if (std::abs(numeric) <= options.magnitude_floor || std::abs(exact) <= options.magnitude_floor) {
        ++result.below_floor;
        continue;
      }
      const double rel = std::abs(numeric - exact) / std::max(std::abs(numeric), std::abs(exact));
      result.max_rel_error = std::max(result.max_rel_error, rel);
      ++result.compared;
    }
  }
  return result;
}

std::vector<RandomCheckCase> random_gradient_checks(int nets, std::uint64_t seed, const GradCheckOptions& options) {
  const RegKind kinds[] = {RegKind::None, RegKind::WeightedL2, RegKind::Sobolev, RegKind::TrainOutput,
                           RegKind::WeightDecay};
  std::vector<RandomCheckCase> cases;
  for (int n = 0; n < nets; ++n) {
    Rng rng = make_rng(seed, static_cast<std::uint64_t>(n));
    std::uniform_int_distribution<int> depth(1, 3), width(2, 32), in_dim(1, 8), out_dim(2, 5), batch(4, 10);
    std::bernoulli_distribution coin(0.3);

    MlpSpec spec;
    spec.layer_dims.push_back(in_dim(rng));
    const int hidden = depth(rng);
    for (int l = 0; l < hidden; ++l) spec.layer_dims.push_back(width(rng));
    spec.layer_dims.push_back(out_dim(rng));
    if (coin(rng)) spec.dropout.assign(static_cast<std::size_t>(hidden), 0.25);
    if (coin(rng)) {
      spec.batchnorm.assign(static_cast<std::size_t>(hidden), false);
      spec.batchnorm[0] = true;
    }
    spec.validate();

    Parameters params = init(spec, seed * 7919 + static_cast<std::uint64_t>(n));
    // Non-zero biases and batch-norm parameters so their gradients are exercised.
    for (Tensor& b : params.biases) b = uniform(b.rows(), b.cols(), -0.5, 0.5, rng);
    for (auto& bn : params.batchnorm) {
      if (!bn) continue;
      bn->gamma = uniform(1, bn->gamma.cols(), 0.5, 1.5, rng);
      bn->beta = uniform(1, bn->beta.cols(), -0.5, 0.5, rng);
      bn->running_mean = uniform(1, bn->gamma.cols(), -0.2, 0.2, rng);
      bn->running_var = uniform(1, bn->gamma.cols(), 0.5, 2.0, rng);
    }

    const Index rows = batch(rng);
    const Tensor x = uniform(rows, spec.input_dim(), -1.0, 1.0, rng);
    std::vector<int> labels(static_cast<std::size_t>(rows));
    std::uniform_int_distribution<int> label(0, static_cast<int>(spec.output_dim()) - 1);
    for (int& y : labels) y = label(rng);

    const Sampler sampler = fit(SamplerSpec{}, x);
    for (RegKind kind : kinds) {
      RegConfig reg;
      reg.kind = kind;
      reg.lambda = 0.1;
      reg.reg_batch_size = 6;
      reg.weight_decay = kind == RegKind::WeightedL2 ? 0.01 : 0.0;
      RandomCheckCase c;
      c.net = n;
      c.kind = kind;
      c.spec = spec;
      c.result = check_loss_gradient(spec, params, x, labels, reg, &sampler,
                                     seed * 31 + static_cast<std::uint64_t>(n), options);
      cases.push_back(std::move(c));
    }
  }
  return cases;
}

}  // namespace fnorm

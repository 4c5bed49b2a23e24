#include <fnorm/network.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

namespace fnorm {

MlpSpec MlpSpec::plain(std::vector<Index> dims) {
  MlpSpec spec;
  spec.layer_dims = std::move(dims);
  return spec;
}

void MlpSpec::validate() const {
  if (layer_dims.size() < 3) throw ContractError("MlpSpec: need at least one hidden layer");
  for (Index d : layer_dims) {
    if (d < 1) throw ContractError("MlpSpec: layer dimensions must be >= 1");
  }
  if (!dropout.empty()) {
    if (dropout.size() != num_hidden()) throw ContractError("MlpSpec: one dropout rate per hidden layer");
    for (double p : dropout) {
      if (!(p >= 0.0 && p < 1.0)) throw ContractError("MlpSpec: dropout rate must lie in [0,1)");
    }
  }
  if (!batchnorm.empty() && batchnorm.size() != num_hidden()) {
    throw ContractError("MlpSpec: one batch-norm flag per hidden layer");
  }
}

bool Parameters::operator==(const Parameters& other) const {
  if (weights.size() != other.weights.size() || batchnorm.size() != other.batchnorm.size()) return false;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] != other.weights[i] || biases[i] != other.biases[i]) return false;
  }
  for (std::size_t i = 0; i < batchnorm.size(); ++i) {
    const auto& a = batchnorm[i];
    const auto& b = other.batchnorm[i];
    if (a.has_value() != b.has_value()) return false;
    if (a && (a->gamma != b->gamma || a->beta != b->beta || a->running_mean != b->running_mean ||
              a->running_var != b->running_var)) {
      return false;
    }
  }
  return true;
}

Parameters init(const MlpSpec& spec, std::uint64_t seed) {
  spec.validate();
  Rng rng = make_rng(seed, 0x1417);
  Parameters params;
  for (std::size_t l = 0; l < spec.num_layers(); ++l) {
    const Index fan_in = spec.layer_dims[l];
    const Index fan_out = spec.layer_dims[l + 1];
    params.weights.push_back(standard_normal(fan_out, fan_in, rng) * std::sqrt(2.0 / static_cast<double>(fan_in)));
    params.biases.push_back(Tensor::Zero(1, fan_out));
  }
  for (std::size_t h = 0; h < spec.num_hidden(); ++h) {
    if (spec.has_batchnorm(h)) {
      const Index k = spec.layer_dims[h + 1];
      params.batchnorm.emplace_back(BatchNormParams{Tensor::Ones(1, k), Tensor::Zero(1, k),
                                                    RowVector::Zero(k), RowVector::Ones(k)});
    } else {
      params.batchnorm.emplace_back(std::nullopt);
    }
  }
  return params;
}

ParamVars bind(Tape& tape, const Parameters& params) {
  ParamVars vars;
  for (std::size_t l = 0; l < params.weights.size(); ++l) {
    vars.weights.push_back(tape.variable(params.weights[l]));
    vars.biases.push_back(tape.variable(params.biases[l]));
  }
  for (const auto& bn : params.batchnorm) {
    if (bn) {
      vars.gammas.emplace_back(tape.variable(bn->gamma));
      vars.betas.emplace_back(tape.variable(bn->beta));
    } else {
      vars.gammas.emplace_back(std::nullopt);
      vars.betas.emplace_back(std::nullopt);
    }
  }
  return vars;
}

Var forward(Tape& tape, const ParamVars& vars, const Parameters& params, const MlpSpec& spec, Var x,
            Mode mode, Rng* rng, BatchStats* stats) {
  if (x.tape != &tape) throw ContractError("forward: input on a different tape");
  if (x.cols() != spec.input_dim()) {
    throw DimensionError("forward: input " + shape_str(x.value()) + " but spec expects " +
                         std::to_string(spec.input_dim()) + " features");
  }
  if (vars.weights.size() != spec.num_layers()) throw DimensionError("forward: parameters do not match spec");
  if (stats != nullptr) stats->per_layer.assign(spec.num_hidden(), std::nullopt);

  Var h = x;
  for (std::size_t l = 0; l < spec.num_layers(); ++l) {
    h = linear(h, vars.weights[l], vars.biases[l]);
    if (l + 1 == spec.num_layers()) break;

    if (spec.has_batchnorm(l)) {
      const BatchNormParams& bn = *params.batchnorm[l];
      if (mode == Mode::Train) {
        RowVector mu;
        RowVector var;
        h = batch_norm_train(h, *vars.gammas[l], *vars.betas[l], kBatchNormEps, &mu, &var);
        if (stats != nullptr) stats->per_layer[l] = std::make_pair(std::move(mu), std::move(var));
      } else {
        h = batch_norm_eval(h, *vars.gammas[l], *vars.betas[l], bn.running_mean, bn.running_var,
                            kBatchNormEps);
      }
    }
    h = relu(h);

    const double p = spec.dropout_rate(l);
    if (mode == Mode::Train && p > 0.0) {
      if (rng == nullptr) throw ContractError("forward: dropout in train mode needs an rng");
      std::bernoulli_distribution keep(1.0 - p);
      Tensor mask(h.rows(), h.cols());
      const double kept_scale = 1.0 / (1.0 - p);
      for (Index i = 0; i < mask.size(); ++i) mask.data()[i] = keep(*rng) ? kept_scale : 0.0;
      h = mul_const(h, mask);
    }
  }
  return h;
}

Tensor forward(const Parameters& params, const MlpSpec& spec, const Tensor& x, Mode mode, Rng* rng) {
  Tape tape;
  const ParamVars vars = bind(tape, params);
  return forward(tape, vars, params, spec, tape.constant(x), mode, rng).value();
}

void update_running_stats(Parameters& params, const BatchStats& stats, double momentum) {
  for (std::size_t l = 0; l < stats.per_layer.size(); ++l) {
    if (!stats.per_layer[l] || !params.batchnorm[l]) continue;
    BatchNormParams& bn = *params.batchnorm[l];
    bn.running_mean = momentum * bn.running_mean + (1.0 - momentum) * stats.per_layer[l]->first;
    bn.running_var = momentum * bn.running_var + (1.0 - momentum) * stats.per_layer[l]->second;
  }
}

double weight_decay_norm(const Parameters& params) {
  double total = 0.0;
  for (const Tensor& w : params.weights) total += w.squaredNorm();
  return total;
}

Var weight_decay_norm(const ParamVars& vars) {
  Var total = sum_sq(vars.weights.front());
  for (std::size_t l = 1; l < vars.weights.size(); ++l) total = add(total, sum_sq(vars.weights[l]));
  return total;
}

Parameters rescale_layer_pair(const Parameters& params, const MlpSpec& spec, std::size_t layer, double c) {
  if (!(c > 0.0)) throw ContractError("rescale_layer_pair: c must be positive");
  if (layer + 1 >= params.weights.size()) throw ContractError("rescale_layer_pair: layer index out of range");
  if (spec.has_batchnorm(layer)) throw ContractError("rescale_layer_pair: batch norm between the layers");
  Parameters out = params;
  out.weights[layer] *= c;
  out.biases[layer] *= c;
  out.weights[layer + 1] /= c;
  return out;
}

Parameters permute_hidden_units(const Parameters& params, const MlpSpec& spec, std::size_t layer,
                                std::span<const Index> permutation) {
  if (layer + 1 >= params.weights.size()) throw ContractError("permute_hidden_units: layer index out of range");
  const Index width = spec.layer_dims[layer + 1];
  std::vector<Index> sorted(permutation.begin(), permutation.end());
  std::sort(sorted.begin(), sorted.end());
  bool valid = static_cast<Index>(sorted.size()) == width;
  for (Index k = 0; valid && k < width; ++k) valid = sorted[static_cast<std::size_t>(k)] == k;
  if (!valid) throw ContractError("permute_hidden_units: not a permutation of the layer width");

  Parameters out = params;
  for (Index k = 0; k < width; ++k) {
    const Index src = permutation[static_cast<std::size_t>(k)];
    out.weights[layer].row(k) = params.weights[layer].row(src);
    out.biases[layer](0, k) = params.biases[layer](0, src);
    out.weights[layer + 1].col(k) = params.weights[layer + 1].col(src);
    if (const auto& bn = params.batchnorm[layer]) {
      BatchNormParams& dst = *out.batchnorm[layer];
      dst.gamma(0, k) = bn->gamma(0, src);
      dst.beta(0, k) = bn->beta(0, src);
      dst.running_mean(k) = bn->running_mean(src);
      dst.running_var(k) = bn->running_var(src);
    }
  }
  return out;
}

std::vector<Tensor*> trainable_tensors(Parameters& params) {
  std::vector<Tensor*> out;
  for (std::size_t l = 0; l < params.weights.size(); ++l) {
    out.push_back(&params.weights[l]);
    out.push_back(&params.biases[l]);
  }
  for (auto& bn : params.batchnorm) {
    if (bn) {
      out.push_back(&bn->gamma);
      out.push_back(&bn->beta);
    }
  }
  return out;
}

std::vector<Var> trainable_vars(const ParamVars& vars) {
  std::vector<Var> out;
  for (std::size_t l = 0; l < vars.weights.size(); ++l) {
    out.push_back(vars.weights[l]);
    out.push_back(vars.biases[l]);
  }
  for (std::size_t h = 0; h < vars.gammas.size(); ++h) {
    if (vars.gammas[h]) {
      out.push_back(*vars.gammas[h]);
      out.push_back(*vars.betas[h]);
    }
  }
  return out;
}

namespace {

void write_block(std::ostream& out, const std::string& name, const Tensor& t) {
  out << "tensor " << name << ' ' << t.rows() << ' ' << t.cols() << '\n';
  char buf[32];
  for (Index i = 0; i < t.rows(); ++i) {
    for (Index j = 0; j < t.cols(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", t(i, j));
      out << (j == 0 ? "" : " ") << buf;
    }
    out << '\n';
  }
}

Tensor read_block(std::istream& in, const std::string& expected) {
  std::string tag;
  std::string name;
  Index rows = 0;
  Index cols = 0;
  if (!(in >> tag >> name >> rows >> cols) || tag != "tensor" || name != expected || rows < 0 || cols < 0) {
    throw std::runtime_error("checkpoint: expected tensor block '" + expected + "'");
  }
  Tensor t(rows, cols);
  for (Index i = 0; i < t.size(); ++i) {
    std::string token;
    if (!(in >> token)) throw std::runtime_error("checkpoint: truncated tensor '" + expected + "'");
    t.data()[i] = std::stod(token);
  }
  return t;
}

}  // namespace

void save_parameters(std::ostream& out, const Parameters& params) {
  out << "fnorm-parameters 1\n";
  out << "layers " << params.weights.size() << '\n';
  for (std::size_t l = 0; l < params.weights.size(); ++l) {
    write_block(out, "weight." + std::to_string(l), params.weights[l]);
    write_block(out, "bias." + std::to_string(l), params.biases[l]);
  }
  for (std::size_t h = 0; h < params.batchnorm.size(); ++h) {
    const auto& bn = params.batchnorm[h];
    out << "batchnorm " << h << ' ' << (bn ? 1 : 0) << '\n';
    if (!bn) continue;
    const std::string suffix = "." + std::to_string(h);
    write_block(out, "gamma" + suffix, bn->gamma);
    write_block(out, "beta" + suffix, bn->beta);
    write_block(out, "running_mean" + suffix, bn->running_mean);
    write_block(out, "running_var" + suffix, bn->running_var);
  }
}

Parameters load_parameters(std::istream& in) {
  std::string magic;
  int version = 0;
  if (!(in >> magic >> version) || magic != "fnorm-parameters" || version != 1) {
    throw std::runtime_error("checkpoint: bad header");
  }
  std::string tag;
  std::size_t layers = 0;
  if (!(in >> tag >> layers) || tag != "layers" || layers < 2) throw std::runtime_error("checkpoint: bad layer count");
  Parameters params;
  for (std::size_t l = 0; l < layers; ++l) {
    params.weights.push_back(read_block(in, "weight." + std::to_string(l)));
    params.biases.push_back(read_block(in, "bias." + std::to_string(l)));
  }
  for (std::size_t h = 0; h + 1 < layers; ++h) {
    std::size_t index = 0;
    int present = 0;
    if (!(in >> tag >> index >> present) || tag != "batchnorm" || index != h) {
      throw std::runtime_error("checkpoint: bad batchnorm block");
    }
    if (present == 0) {
      params.batchnorm.emplace_back(std::nullopt);
      continue;
    }
    const std::string suffix = "." + std::to_string(h);
    BatchNormParams bn;
    bn.gamma = read_block(in, "gamma" + suffix);
    bn.beta = read_block(in, "beta" + suffix);
    bn.running_mean = read_block(in, "running_mean" + suffix).row(0);
    bn.running_var = read_block(in, "running_var" + suffix).row(0);
    params.batchnorm.emplace_back(std::move(bn));
  }
  return params;
}

}  // namespace fnorm

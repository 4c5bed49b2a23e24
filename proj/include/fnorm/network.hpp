#pragma once

#include <fnorm/autodiff.hpp>

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

namespace fnorm {

/// Layer sizes [d, h1, ..., s] of a ReLU perceptron with identity output.
/// Dropout and batch normalization apply per hidden layer.
struct MlpSpec {
  std::vector<Index> layer_dims;
  std::vector<double> dropout;   // one rate per hidden layer, empty = none
  std::vector<bool> batchnorm;   // one flag per hidden layer, empty = none

  static MlpSpec plain(std::vector<Index> dims);

  Index input_dim() const { return layer_dims.front(); }
  Index output_dim() const { return layer_dims.back(); }
  std::size_t num_layers() const { return layer_dims.size() - 1; }
  std::size_t num_hidden() const { return layer_dims.size() - 2; }
  double dropout_rate(std::size_t hidden) const { return dropout.empty() ? 0.0 : dropout[hidden]; }
  bool has_batchnorm(std::size_t hidden) const { return !batchnorm.empty() && batchnorm[hidden]; }

  /// Throws ContractError unless >= 1 hidden layer, dims >= 1, rates in [0,1).
  void validate() const;
};

struct BatchNormParams {
  Tensor gamma;  // [1 x k]
  Tensor beta;   // [1 x k]
  RowVector running_mean;
  RowVector running_var;
};

inline constexpr double kBatchNormEps = 1e-5;
inline constexpr double kBatchNormMomentum = 0.9;

/// Weights are stored [out x in] so a layer computes x * W^T + b.
struct Parameters {
  std::vector<Tensor> weights;
  std::vector<Tensor> biases;  // [1 x out]
  std::vector<std::optional<BatchNormParams>> batchnorm;  // per hidden layer

  bool operator==(const Parameters& other) const;
};

enum class Mode { Train, Eval };

/// Parameters bound as differentiable leaves on one tape.
struct ParamVars {
  std::vector<Var> weights;
  std::vector<Var> biases;
  std::vector<std::optional<Var>> gammas;
  std::vector<std::optional<Var>> betas;
};

/// Batch statistics observed by train-mode batch normalization.
struct BatchStats {
  std::vector<std::optional<std::pair<RowVector, RowVector>>> per_layer;
};

/// He initialization: W ~ N(0, 2 / fan_in), zero biases, identity batch norm.
Parameters init(const MlpSpec& spec, std::uint64_t seed);

ParamVars bind(Tape& tape, const Parameters& params);

/// Records the network on `tape`. Train mode applies inverted dropout (needs
/// `rng` when any rate is positive) and batch statistics; eval mode is
/// deterministic and uses running statistics.
Var forward(Tape& tape, const ParamVars& vars, const Parameters& params, const MlpSpec& spec, Var x,
            Mode mode, Rng* rng = nullptr, BatchStats* stats = nullptr);

/// Tape-free evaluation, returning logits [n x s].
Tensor forward(const Parameters& params, const MlpSpec& spec, const Tensor& x, Mode mode = Mode::Eval,
               Rng* rng = nullptr);

/// Folds observed batch statistics into running statistics.
void update_running_stats(Parameters& params, const BatchStats& stats,
                          double momentum = kBatchNormMomentum);

/// Sum of squared weight-matrix entries (biases and batch-norm excluded).
double weight_decay_norm(const Parameters& params);
Var weight_decay_norm(const ParamVars& vars);

/// Scales layer `layer` (weights and bias) by c and layer `layer + 1`'s
/// weights by 1/c. The realized function is unchanged.
Parameters rescale_layer_pair(const Parameters& params, const MlpSpec& spec, std::size_t layer, double c);

/// Reorders hidden units of layer `layer`: out[k] = in[permutation[k]].
Parameters permute_hidden_units(const Parameters& params, const MlpSpec& spec, std::size_t layer,
                                std::span<const Index> permutation);

/// Mutable views of every trainable tensor, in a fixed order.
std::vector<Tensor*> trainable_tensors(Parameters& params);
std::vector<Var> trainable_vars(const ParamVars& vars);

/// Text checkpoint: header "fnorm-parameters 1", then one block per tensor.
void save_parameters(std::ostream& out, const Parameters& params);
Parameters load_parameters(std::istream& in);

}  // namespace fnorm

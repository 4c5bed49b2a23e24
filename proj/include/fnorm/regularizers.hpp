#pragma once

#include <fnorm/network.hpp>
#include <fnorm/samplers.hpp>

#include <cstdint>
#include <optional>
#include <span>
#include <string>

namespace fnorm {

enum class RegKind { None, WeightedL2, Sobolev, TrainOutput, WeightDecay };

std::string to_string(RegKind kind);
RegKind reg_kind_from_string(const std::string& name);

struct RegConfig {
  RegKind kind = RegKind::None;
  double lambda = 0.01;
  Index reg_batch_size = 32;
  double sobolev_step = 1e-3;
  /// Extra weight-decay coefficient applied on top of the selected penalty.
  double weight_decay = 0.0;
  /// Fixed Sobolev direction drawn from this seed; unset = fresh direction each step.
  std::optional<std::uint64_t> sobolev_direction_seed;

  void validate() const;
  bool needs_sampler() const { return kind == RegKind::WeightedL2 || kind == RegKind::Sobolev; }
};

// The penalties below evaluate the network in eval mode: the regularized
// object is the deterministic function f, not a dropout-perturbed sample of it.

/// (1/m) sum_i ||f(z_i)||^2. Gradient reaches the parameters, not z.
Var l2_norm_sq_estimate(Tape& tape, const ParamVars& vars, const Parameters& params, const MlpSpec& spec,
                        const Tensor& z);
double l2_norm_sq_estimate(const Parameters& params, const MlpSpec& spec, const Tensor& z);

/// L2 term plus (1/m) sum_i ||(f(z_i + h u) - f(z_i - h u)) / 2h||^2.
Var sobolev_norm_sq_estimate(Tape& tape, const ParamVars& vars, const Parameters& params, const MlpSpec& spec,
                             const Tensor& z, const RowVector& u, double h);
double sobolev_norm_sq_estimate(const Parameters& params, const MlpSpec& spec, const Tensor& z,
                                const RowVector& u, double h);

/// Mean of ||f(x_i)||^2 over the labeled training batch.
Var train_output_penalty(Tape& tape, const ParamVars& vars, const Parameters& params, const MlpSpec& spec,
                         const Tensor& x);

/// Uniformly distributed unit vector in R^d.
RowVector random_unit_direction(Index d, Rng& rng);

struct LossTerms {
  Var total;
  Var risk;
  std::optional<Var> penalty;
  Index q_rows_drawn = 0;
};

/// Cross-entropy empirical risk of the train-mode forward plus lambda times
/// the selected penalty. For weighted_l2 / sobolev a fresh batch of
/// reg_batch_size points is drawn from `sampler` on every call.
LossTerms regularized_loss(Tape& tape, const ParamVars& vars, const Parameters& params, const MlpSpec& spec,
                           const Tensor& x, std::span<const int> labels, const RegConfig& reg,
                           const Sampler* sampler, Rng& rng, BatchStats* stats = nullptr);

}  // namespace fnorm

#pragma once

#include <fnorm/tensor.hpp>

#include <optional>
#include <string>

namespace fnorm {

enum class SamplerKind { Pool, GaussianFixed, GaussianMomentMatched, Kde };

/// Description of the sampling distribution Q.
struct SamplerSpec {
  SamplerKind kind = SamplerKind::GaussianMomentMatched;
  double mean = 0.0;                // gaussian_fixed
  double variance = 1.0;            // gaussian_fixed
  double bandwidth_inflation = 2.0; // kde

  void validate() const;
};

std::string to_string(SamplerKind kind);
SamplerKind sampler_kind_from_string(const std::string& name);

inline constexpr double kVarianceFloor = 1e-8;

/// A fitted, immutable sampler. Draws depend only on (spec, data, rng state).
class Sampler {
 public:
  Sampler() = default;

  SamplerKind kind() const { return kind_; }
  Index dim() const { return dim_; }
  /// Per-dimension mean and variance (Gaussian kinds).
  const RowVector& mean() const { return mean_; }
  const RowVector& variance() const { return variance_; }
  /// Per-dimension kernel standard deviation (kde).
  const RowVector& bandwidth() const { return bandwidth_; }
  const Tensor& support() const { return support_; }

  /// m i.i.d. draws [m x d].
  Tensor draw(Index m, Rng& rng) const;

 private:
  friend Sampler fit(const SamplerSpec& spec, const Tensor& data);

  SamplerKind kind_ = SamplerKind::GaussianMomentMatched;
  Index dim_ = 0;
  Tensor support_;  // pool rows or kde centres
  RowVector mean_;
  RowVector variance_;
  RowVector bandwidth_;
};

/// Fits Q from training data (moment matching, kde) or from an unlabeled pool.
/// gaussian_fixed only takes the dimension from `data`.
Sampler fit(const SamplerSpec& spec, const Tensor& data);

/// Per-dimension rule-of-thumb bandwidth 1.06 * sd * n^(-1/5).
RowVector silverman_bandwidth(const Tensor& data);

/// Per-dimension biased variance with the 1e-8 floor.
RowVector floored_variance(const Tensor& data);

/// Diagonal Gaussian N(mean, diag(variance)).
struct DiagGaussian {
  RowVector mean;
  RowVector variance;
};

/// D_P(P||Q) = integral of p^2 / q. nullopt when the integral diverges
/// (some dimension has 2 var_Q <= var_P).
std::optional<double> chi2_divergence_term(const DiagGaussian& p, const DiagGaussian& q);

}  // namespace fnorm

#pragma once

#include <fnorm/network.hpp>
#include <fnorm/samplers.hpp>

#include <cmath>
#include <cstdint>
#include <span>

namespace fnorm {

/// Inputs of the generalization-gap bound.
///   A  bound on ||f||^2_{2,Q}          B  bound on the std of ||f(z)||^2
///   D  chi-square term D_P(P||Q) >= 1  K  Lipschitz constant of the loss
///   C  loss at zero output             N  training-set size
struct BoundInputs {
  double A = 0.0;
  double B = 0.0;
  double D = 1.0;
  double delta = 0.05;
  double lipschitz_K = 1.4142135623730951;
  double loss_at_zero_C = 2.302585092994046;
  std::int64_t N = 1;

  /// Throws ContractError on any out-of-range field.
  void validate() const;
};

/// Gap term, holding with probability at least (1 - delta)^2:
///   (K [ (A+B)^{1/2} D^{1/4} / sqrt(delta) + A^{1/2} D^{1/2} ] + C) sqrt(2 ln(2/delta) / N)
template <typename Scalar>
Scalar generalization_gap_bound(Scalar A, Scalar B, Scalar D, Scalar delta, Scalar K, Scalar C, Scalar N) {
  using std::log;
  using std::pow;
  using std::sqrt;
  const Scalar bracket = sqrt(A + B) * pow(D, Scalar(0.25)) / sqrt(delta) + sqrt(A) * sqrt(D);
  return (K * bracket + C) * sqrt(Scalar(2) * log(Scalar(2) / delta) / N);
}

double generalization_gap_bound(const BoundInputs& inputs);

/// Empirical plug-ins for A and B: sample mean and sample standard deviation
/// of ||f(z_i)||^2 over m draws from Q.
struct NormMoments {
  double A_hat = 0.0;
  double B_hat = 0.0;
};

NormMoments estimate_A_B(const Parameters& params, const MlpSpec& spec, const Sampler& sampler, Index m,
                         Rng& rng);

struct SampleMeanReport {
  bool premise_holds = false;     // every m-subset mean <= A
  double worst_subset_mean = 0.0;
  double max_value = 0.0;
  double variance = 0.0;          // under the uniform distribution on the support
  bool max_bound_holds = false;   // max <= m A
  bool variance_bound_holds = false;  // var <= m^2 A^2
  std::uint64_t subsets_checked = 0;

  /// Premise false, or both conclusions true.
  bool consistent() const { return !premise_holds || (max_bound_holds && variance_bound_holds); }
};

inline constexpr std::size_t kMaxEnumerableSupport = 20;

/// Exhaustive check of: if all m-point sample means of the nonnegative values
/// are <= A, then every value is <= mA and their variance is <= m^2 A^2.
SampleMeanReport verify_sample_mean_implication(std::span<const double> values, std::size_t m, double A);

}  // namespace fnorm

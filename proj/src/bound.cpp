#include <fnorm/bound.hpp>

#include <algorithm>
#include <numeric>
#include <vector>

namespace fnorm {

void BoundInputs::validate() const {
  const bool ok = std::isfinite(A) && A >= 0.0 && std::isfinite(B) && B >= 0.0 && std::isfinite(D) && D >= 1.0 &&
                  delta > 0.0 && delta < 1.0 && std::isfinite(lipschitz_K) && lipschitz_K > 0.0 &&
                  std::isfinite(loss_at_zero_C) && loss_at_zero_C >= 0.0 && N >= 1;
  if (!ok) {
    throw ContractError("BoundInputs: need A,B,C >= 0, D >= 1, 0 < delta < 1, K > 0, N >= 1");
  }
}

double generalization_gap_bound(const BoundInputs& in) {
  in.validate();
  return generalization_gap_bound<double>(in.A, in.B, in.D, in.delta, in.lipschitz_K, in.loss_at_zero_C,
                                          static_cast<double>(in.N));
}

NormMoments estimate_A_B(const Parameters& params, const MlpSpec& spec, const Sampler& sampler, Index m,
                         Rng& rng) {
  if (m < 2) throw ContractError("estimate_A_B: m must be >= 2");
  const Tensor z = sampler.draw(m, rng);
  const Vector sq = forward(params, spec, z, Mode::Eval).rowwise().squaredNorm();
  const double mu = sq.mean();
  const double var = (sq.array() - mu).square().sum() / static_cast<double>(m - 1);
  return {mu, std::sqrt(var)};
}

SampleMeanReport verify_sample_mean_implication(std::span<const double> values, std::size_t m, double A) {
  const std::size_t s = values.size();
  if (s > kMaxEnumerableSupport) throw ContractError("verify_sample_mean_implication: support too large");
  if (m < 1 || m > s) throw ContractError("verify_sample_mean_implication: need 1 <= m <= support size");
  for (double v : values) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw ContractError("verify_sample_mean_implication: values must be >= 0");
  }

  SampleMeanReport report;
  report.premise_holds = true;
  report.worst_subset_mean = -1.0;
  // Every m-subset via a permuted selection mask. Subset sums are compared
  // with m*A in extended precision so premise and conclusion share one threshold.
  const long double mA = static_cast<long double>(m) * static_cast<long double>(A);
  std::vector<bool> chosen(s, false);
  std::fill(chosen.begin(), chosen.begin() + static_cast<std::ptrdiff_t>(m), true);
  do {
    long double sum = 0.0L;
    for (std::size_t i = 0; i < s; ++i) {
      if (chosen[i]) sum += values[i];
    }
    report.worst_subset_mean = std::max(report.worst_subset_mean, static_cast<double>(sum / m));
    if (sum > mA) report.premise_holds = false;
    ++report.subsets_checked;
  } while (std::prev_permutation(chosen.begin(), chosen.end()));

  const double n = static_cast<double>(s);
  const double mu = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double var = 0.0;
  for (double v : values) var += (v - mu) * (v - mu);
  report.variance = var / n;
  report.max_value = *std::max_element(values.begin(), values.end());
  report.max_bound_holds = report.max_value <= mA;
  report.variance_bound_holds = report.variance <= mA * mA;
  return report;
}

}  // namespace fnorm

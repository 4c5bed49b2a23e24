#include <fnorm/samplers.hpp>

#include <cmath>

namespace fnorm {

void SamplerSpec::validate() const {
  if (kind == SamplerKind::GaussianFixed && !(variance > 0.0)) {
    throw ContractError("sampler: gaussian_fixed variance must be positive");
  }
  if (kind == SamplerKind::Kde && !(bandwidth_inflation >= 1.0)) {
    throw ContractError("sampler: kde bandwidth inflation must be >= 1");
  }
}

std::string to_string(SamplerKind kind) {
  switch (kind) {
    case SamplerKind::Pool: return "pool";
    case SamplerKind::GaussianFixed: return "gaussian_fixed";
    case SamplerKind::GaussianMomentMatched: return "gaussian_moment_matched";
    case SamplerKind::Kde: return "kde";
  }
  return "unknown";
}

SamplerKind sampler_kind_from_string(const std::string& name) {
  if (name == "pool") return SamplerKind::Pool;
  if (name == "gaussian_fixed") return SamplerKind::GaussianFixed;
  if (name == "gaussian_moment_matched") return SamplerKind::GaussianMomentMatched;
  if (name == "kde") return SamplerKind::Kde;
  throw ContractError("unknown sampler kind '" + name + "'");
}

RowVector floored_variance(const Tensor& data) {
  const RowVector mu = data.colwise().mean();
  RowVector var = (data.rowwise() - mu).colwise().squaredNorm() / static_cast<double>(data.rows());
  return var.cwiseMax(kVarianceFloor);
}

RowVector silverman_bandwidth(const Tensor& data) {
  const double n = static_cast<double>(data.rows());
  return 1.06 * floored_variance(data).cwiseSqrt() * std::pow(n, -0.2);
}

Sampler fit(const SamplerSpec& spec, const Tensor& data) {
  spec.validate();
  if (data.rows() == 0 || data.cols() == 0) throw ContractError("sampler fit: empty data");
  Sampler s;
  s.kind_ = spec.kind;
  s.dim_ = data.cols();
  switch (spec.kind) {
    case SamplerKind::Pool:
      s.support_ = data;
      break;
    case SamplerKind::GaussianFixed:
      s.mean_ = RowVector::Constant(s.dim_, spec.mean);
      s.variance_ = RowVector::Constant(s.dim_, spec.variance);
      break;
    case SamplerKind::GaussianMomentMatched:
      s.mean_ = data.colwise().mean();
      s.variance_ = floored_variance(data);
      break;
    case SamplerKind::Kde:
      s.support_ = data;
      s.bandwidth_ = spec.bandwidth_inflation * silverman_bandwidth(data);
      break;
  }
  return s;
}

Tensor Sampler::draw(Index m, Rng& rng) const {
  if (m < 1) throw ContractError("sampler draw: m must be >= 1");
  Tensor out(m, dim_);
  std::normal_distribution<double> normal(0.0, 1.0);
  switch (kind_) {
    case SamplerKind::Pool: {
      std::uniform_int_distribution<Index> pick(0, support_.rows() - 1);
      for (Index i = 0; i < m; ++i) out.row(i) = support_.row(pick(rng));
      break;
    }
    case SamplerKind::GaussianFixed:
    case SamplerKind::GaussianMomentMatched: {
      const RowVector sd = variance_.cwiseSqrt();
      for (Index i = 0; i < m; ++i) {
        for (Index j = 0; j < dim_; ++j) out(i, j) = mean_(j) + sd(j) * normal(rng);
      }
      break;
    }
    case SamplerKind::Kde: {
      std::uniform_int_distribution<Index> pick(0, support_.rows() - 1);
      for (Index i = 0; i < m; ++i) {
        const Index centre = pick(rng);
        for (Index j = 0; j < dim_; ++j) out(i, j) = support_(centre, j) + bandwidth_(j) * normal(rng);
      }
      break;
    }
  }
  return out;
}

std::optional<double> chi2_divergence_term(const DiagGaussian& p, const DiagGaussian& q) {
  const Index d = p.mean.size();
  if (p.variance.size() != d || q.mean.size() != d || q.variance.size() != d) {
    throw DimensionError("chi2_divergence_term: dimension mismatch");
  }
  // Per dimension: var_q / (sd_p sqrt(2 var_q - var_p)) * exp((mu_p - mu_q)^2 / (2 var_q - var_p)).
  double log_total = 0.0;
  for (Index j = 0; j < d; ++j) {
    const double vp = p.variance(j);
    const double vq = q.variance(j);
    if (!(vp > 0.0 && vq > 0.0)) throw ContractError("chi2_divergence_term: variances must be positive");
    const double denom = 2.0 * vq - vp;
    if (!(denom > 0.0)) return std::nullopt;
    const double diff = p.mean(j) - q.mean(j);
    log_total += std::log(vq) - 0.5 * std::log(vp) - 0.5 * std::log(denom) + diff * diff / denom;
  }
  return std::exp(log_total);
}

}  // namespace fnorm

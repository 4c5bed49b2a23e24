#include <doctest.h>

#include <fnorm/samplers.hpp>

#include <boost/math/quadrature/sinh_sinh.hpp>

#include <cmath>
#include <numbers>

using namespace fnorm;

namespace {

double gaussian_pdf(double x, double mean, double var) {
  return std::exp(-(x - mean) * (x - mean) / (2.0 * var)) / std::sqrt(2.0 * std::numbers::pi * var);
}

// Quadrature of p^2 / q over the real line.
double chi2_term_quadrature(double mp, double vp, double mq, double vq) {
  boost::math::quadrature::sinh_sinh<double> integrator;
  auto f = [&](double x) {
    const double p = gaussian_pdf(x, mp, vp);
    const double q = gaussian_pdf(x, mq, vq);
    return q > 0.0 ? p * p / q : 0.0;
  };
  return integrator.integrate(f);
}

DiagGaussian gauss1(double mean, double var) {
  return {RowVector::Constant(1, mean), RowVector::Constant(1, var)};
}

}  // namespace

TEST_SUITE("samplers") {
  TEST_CASE("moment matching on {0, 2}") {
    const Tensor data = (Tensor(2, 1) << 0.0, 2.0).finished();
    const Sampler s = fit(SamplerSpec{}, data);
    CHECK(s.mean()(0) == 1.0);
    CHECK(s.variance()(0) == 1.0);
  }

  TEST_CASE("gaussian_fixed ignores the data") {
    SamplerSpec spec;
    spec.kind = SamplerKind::GaussianFixed;
    spec.mean = 5.0;
    spec.variance = 2.0;
    Rng rng = make_rng(1);
    const Sampler s = fit(spec, standard_normal(10, 3, rng));
    CHECK(s.mean() == RowVector::Constant(3, 5.0));
    CHECK(s.variance() == RowVector::Constant(3, 2.0));
  }

  TEST_CASE("kde on a single point") {
    SamplerSpec spec;
    spec.kind = SamplerKind::Kde;
    spec.bandwidth_inflation = 1.0;
    const Tensor data = (Tensor(1, 2) << 3.0, -1.0).finished();
    const Sampler s = fit(spec, data);
    // Zero spread is floored at variance 1e-8; n^(-1/5) = 1.
    CHECK(s.bandwidth()(0) == doctest::Approx(1.06 * 1e-4).epsilon(1e-12));
    Rng rng = make_rng(2);
    const Tensor z = s.draw(100000, rng);
    CHECK(std::abs(z.col(0).mean() - 3.0) < 1e-5);
    const double sd = std::sqrt((z.col(1).array() + 1.0).square().mean());
    CHECK(sd == doctest::Approx(1.06e-4).epsilon(0.02));
  }

  TEST_CASE("silverman bandwidth") {
    Rng rng = make_rng(3);
    const Tensor data = standard_normal(32, 2, rng);
    const RowVector bw = silverman_bandwidth(data);
    const RowVector var = floored_variance(data);
    for (Index j = 0; j < 2; ++j) CHECK(bw(j) == doctest::Approx(1.06 * std::sqrt(var(j)) * 0.5).epsilon(1e-14));
  }

  TEST_CASE("draws are reproducible") {
    Rng data_rng = make_rng(4);
    const Tensor data = standard_normal(20, 3, data_rng);
    for (SamplerKind kind : {SamplerKind::Pool, SamplerKind::GaussianFixed, SamplerKind::GaussianMomentMatched,
                             SamplerKind::Kde}) {
      SamplerSpec spec;
      spec.kind = kind;
      const Sampler s = fit(spec, data);
      Rng a = make_rng(9), b = make_rng(9);
      CHECK(s.draw(50, a) == s.draw(50, b));
    }
  }

  TEST_CASE("gaussian_fixed(0, 1): sample mean within 0.02") {
    SamplerSpec spec;
    spec.kind = SamplerKind::GaussianFixed;
    const Sampler s = fit(spec, Tensor::Zero(1, 4));
    Rng rng = make_rng(5);
    const Tensor z = s.draw(100000, rng);
    CHECK(z.colwise().mean().cwiseAbs().maxCoeff() < 0.02);
  }

  TEST_CASE("pool draws are pool rows") {
    Rng rng = make_rng(6);
    const Tensor pool = standard_normal(7, 3, rng);
    SamplerSpec spec;
    spec.kind = SamplerKind::Pool;
    const Sampler s = fit(spec, pool);
    const Tensor z = s.draw(500, rng);
    for (Index i = 0; i < z.rows(); ++i) {
      bool found = false;
      for (Index r = 0; r < pool.rows(); ++r) found = found || z.row(i) == pool.row(r);
      CHECK(found);
    }
  }

  TEST_CASE("kde with inflation 2 is wider than the data") {
    Rng rng = make_rng(7);
    const Tensor data = standard_normal(200, 3, rng);
    SamplerSpec spec;
    spec.kind = SamplerKind::Kde;
    const Sampler s = fit(spec, data);
    const Index m = 100000;
    const Tensor z = s.draw(m, rng);
    const RowVector data_var = floored_variance(data);
    const RowVector draw_var = floored_variance(z);
    for (Index j = 0; j < 3; ++j) {
      // Standard error of a Gaussian-like sample variance is about var * sqrt(2 / m).
      CHECK(draw_var(j) - data_var(j) > 3.0 * draw_var(j) * std::sqrt(2.0 / static_cast<double>(m)));
    }
  }

  TEST_CASE("invalid specs") {
    SamplerSpec spec;
    spec.kind = SamplerKind::GaussianFixed;
    spec.variance = 0.0;
    CHECK_THROWS_AS(spec.validate(), ContractError);
    spec.kind = SamplerKind::Kde;
    spec.bandwidth_inflation = 0.5;
    CHECK_THROWS_AS(spec.validate(), ContractError);
    CHECK_THROWS_AS(fit(SamplerSpec{}, Tensor(0, 3)), ContractError);
    const Sampler s = fit(SamplerSpec{}, Tensor::Ones(3, 2));
    CHECK(s.variance()(0) == kVarianceFloor);
    Rng rng = make_rng(1);
    CHECK_THROWS_AS(s.draw(0, rng), ContractError);
    CHECK(sampler_kind_from_string(to_string(SamplerKind::Kde)) == SamplerKind::Kde);
  }

  TEST_CASE("chi2 term: P == Q gives exactly 1") {
    CHECK(chi2_divergence_term(gauss1(0.3, 1.7), gauss1(0.3, 1.7)).value() == 1.0);
    const DiagGaussian p{(RowVector(3) << 1.0, -2.0, 0.5).finished(), (RowVector(3) << 0.5, 2.0, 3.0).finished()};
    CHECK(chi2_divergence_term(p, p).value() == 1.0);
  }

  TEST_CASE("chi2 term: N(0,1) against N(0,4) matches quadrature") {
    const double analytic = chi2_divergence_term(gauss1(0.0, 1.0), gauss1(0.0, 4.0)).value();
    CHECK(std::abs(analytic - chi2_term_quadrature(0.0, 1.0, 0.0, 4.0)) <= 1e-6);
  }

  TEST_CASE("chi2 term: integrability violations") {
    CHECK_FALSE(chi2_divergence_term(gauss1(0.0, 4.0), gauss1(0.0, 1.0)).has_value());
    CHECK_FALSE(chi2_divergence_term(gauss1(0.0, 2.0), gauss1(0.0, 1.0)).has_value());  // boundary 2 var_Q = var_P
    CHECK(chi2_divergence_term(gauss1(0.0, 1.9), gauss1(0.0, 1.0)).has_value());
  }

  TEST_CASE("chi2 term is at least 1") {
    Rng rng = make_rng(8);
    std::uniform_real_distribution<double> mean(-2.0, 2.0), var(0.2, 3.0);
    for (int k = 0; k < 200; ++k) {
      const double vq = var(rng);
      const double vp = std::min(var(rng), 1.9 * vq);
      const auto d = chi2_divergence_term(gauss1(mean(rng), vp), gauss1(mean(rng), vq));
      REQUIRE(d.has_value());
      CHECK(*d >= 1.0);
    }
  }

  TEST_CASE("chi2 term factorizes over dimensions") {
    const DiagGaussian p{(RowVector(2) << 0.1, -0.4).finished(), (RowVector(2) << 1.0, 0.7).finished()};
    const DiagGaussian q{(RowVector(2) << 0.0, 0.2).finished(), (RowVector(2) << 1.5, 0.9).finished()};
    const double joint = chi2_divergence_term(p, q).value();
    const double a = chi2_divergence_term(gauss1(0.1, 1.0), gauss1(0.0, 1.5)).value();
    const double b = chi2_divergence_term(gauss1(-0.4, 0.7), gauss1(0.2, 0.9)).value();
    CHECK(joint == doctest::Approx(a * b).epsilon(1e-14));
  }
}

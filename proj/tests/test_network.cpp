#include <doctest.h>

#include <fnorm/network.hpp>

#include <cmath>
#include <numeric>
#include <sstream>

#include "test_util.hpp"

using namespace fnorm;

TEST_SUITE("network") {
  TEST_CASE("init is deterministic and biases start at zero") {
    const MlpSpec spec = MlpSpec::plain({5, 7, 3});
    const Parameters a = init(spec, 42);
    const Parameters b = init(spec, 42);
    CHECK(a == b);
    CHECK(!(a == init(spec, 43)));
    for (const Tensor& bias : a.biases) CHECK(bias.isZero(0.0));
  }

  TEST_CASE("He variance on a fan-in of 1000") {
    const Parameters p = init(MlpSpec::plain({1000, 200, 2}), 7);
    const Tensor& w = p.weights[0];
    const double mean = w.mean();
    const double var = (w.array() - mean).square().mean();
    CHECK(std::abs(var - 2.0 / 1000.0) <= 0.1 * 2.0 / 1000.0);
  }

  TEST_CASE("zero parameters give zero logits") {
    const MlpSpec spec = MlpSpec::plain({4, 6, 3});
    Parameters p = init(spec, 1);
    for (Tensor* t : trainable_tensors(p)) t->setZero();
    Rng rng = make_rng(2);
    CHECK(forward(p, spec, standard_normal(9, 4, rng)).isZero(0.0));
  }

  TEST_CASE("train and eval agree without dropout and batch norm") {
    const MlpSpec spec = MlpSpec::plain({4, 6, 5, 3});
    const Parameters p = init(spec, 3);
    Rng rng = make_rng(4);
    const Tensor x = standard_normal(8, 4, rng);
    CHECK(forward(p, spec, x, Mode::Train, &rng) == forward(p, spec, x, Mode::Eval));
  }

  TEST_CASE("hand-set hat function: forward(0) = 1") {
    const double eps = 0.25;
    const MlpSpec spec = MlpSpec::plain({1, 3, 1});
    Parameters p = init(spec, 1);
    p.weights[0] = Tensor::Ones(3, 1);
    p.biases[0] = (Tensor(1, 3) << eps, 0.0, -eps).finished();
    p.weights[1] = (Tensor(1, 3) << 1.0 / eps, -2.0 / eps, 1.0 / eps).finished();
    p.biases[1].setZero();
    CHECK(forward(p, spec, Tensor::Zero(1, 1))(0, 0) == 1.0);
    CHECK(forward(p, spec, Tensor::Constant(1, 1, eps))(0, 0) == 0.0);
    CHECK(forward(p, spec, Tensor::Constant(1, 1, -eps))(0, 0) == 0.0);
  }

  TEST_CASE("eval mode is deterministic with dropout and batch norm") {
    MlpSpec spec = MlpSpec::plain({4, 8, 3});
    spec.dropout = {0.5};
    spec.batchnorm = {true};
    const Parameters p = init(spec, 5);
    Rng rng = make_rng(6);
    const Tensor x = standard_normal(10, 4, rng);
    CHECK(forward(p, spec, x, Mode::Eval) == forward(p, spec, x, Mode::Eval));
    CHECK_THROWS_AS(forward(p, spec, x, Mode::Train, nullptr), ContractError);
  }

  TEST_CASE("inverted dropout keeps the expected activation") {
    MlpSpec spec = MlpSpec::plain({1, 1, 1});
    spec.dropout = {0.3};
    Parameters p = init(spec, 1);
    p.weights[0].setOnes();
    p.weights[1].setOnes();
    Rng rng = make_rng(8);
    const Tensor y = forward(p, spec, Tensor::Ones(200000, 1), Mode::Train, &rng);
    CHECK(std::abs(y.mean() - 1.0) < 0.01);
    CHECK(y.maxCoeff() == doctest::Approx(1.0 / 0.7));
  }

  TEST_CASE("running statistics follow momentum 0.9") {
    MlpSpec spec = MlpSpec::plain({2, 3, 2});
    spec.batchnorm = {true};
    Parameters p = init(spec, 1);
    BatchStats stats;
    stats.per_layer = {std::make_pair(RowVector::Constant(3, 2.0), RowVector::Constant(3, 5.0))};
    update_running_stats(p, stats);
    CHECK(p.batchnorm[0]->running_mean(0) == doctest::Approx(0.2));
    CHECK(p.batchnorm[0]->running_var(0) == doctest::Approx(0.9 + 0.5));
  }

  TEST_CASE("weight decay norm") {
    const MlpSpec spec = MlpSpec::plain({2, 2, 2});
    Parameters p = init(spec, 1);
    for (Tensor* t : trainable_tensors(p)) t->setZero();
    CHECK(weight_decay_norm(p) == 0.0);
    p.weights[0].setOnes();
    p.biases[0].setConstant(10.0);
    CHECK(weight_decay_norm(p) == 4.0);
  }

  TEST_CASE("rescaling a layer pair keeps the function") {
    const MlpSpec spec = MlpSpec::plain({6, 10, 8, 3});
    const Parameters p = init(spec, 11);
    CHECK(rescale_layer_pair(p, spec, 0, 1.0) == p);
    const Parameters q = rescale_layer_pair(p, spec, 1, 2.0);
    Rng rng = make_rng(12);
    const Tensor x = uniform(1000, 6, -1.0, 1.0, rng);
    CHECK((forward(p, spec, x) - forward(q, spec, x)).cwiseAbs().maxCoeff() <= 1e-9);
    CHECK(weight_decay_norm(q) != weight_decay_norm(p));
    CHECK_THROWS_AS(rescale_layer_pair(p, spec, 0, 0.0), ContractError);
    CHECK_THROWS_AS(rescale_layer_pair(p, spec, 0, -1.0), ContractError);
    CHECK_THROWS_AS(rescale_layer_pair(p, spec, 2, 2.0), ContractError);

    MlpSpec bn = spec;
    bn.batchnorm = {true, false};
    CHECK_THROWS_AS(rescale_layer_pair(init(bn, 1), bn, 0, 2.0), ContractError);
  }

  TEST_CASE("unit-weight net: weight decay changes under rescaling") {
    const MlpSpec spec = MlpSpec::plain({3, 3, 3});
    Parameters p = init(spec, 1);
    for (Tensor& w : p.weights) w.setOnes();
    const Parameters q = rescale_layer_pair(p, spec, 0, 2.0);
    // 9 * 4 + 9 / 4 against 18.
    CHECK(weight_decay_norm(q) == doctest::Approx(36.0 + 2.25));
    CHECK(weight_decay_norm(p) == 18.0);
  }

  TEST_CASE("permuting hidden units is exact on a dyadic network") {
    const MlpSpec spec = MlpSpec::plain({5, 12, 7, 4});
    const Parameters p = test_util::dyadic_params(spec, 3);
    Rng rng = make_rng(4);
    const Tensor x = test_util::dyadic_inputs(100, 5, rng);

    std::vector<Index> perm(12);
    std::iota(perm.begin(), perm.end(), Index{0});
    CHECK(permute_hidden_units(p, spec, 0, perm) == p);

    std::shuffle(perm.begin(), perm.end(), rng);
    const Parameters q = permute_hidden_units(p, spec, 0, perm);
    CHECK(!(q == p));
    CHECK(forward(q, spec, x) == forward(p, spec, x));

    std::vector<Index> reversal(7);
    std::iota(reversal.rbegin(), reversal.rend(), Index{0});
    CHECK(permute_hidden_units(permute_hidden_units(p, spec, 1, reversal), spec, 1, reversal) == p);

    CHECK_THROWS(permute_hidden_units(p, spec, 0, std::vector<Index>{0, 0, 1}));
    std::vector<Index> duplicate(12, 0);
    CHECK_THROWS(permute_hidden_units(p, spec, 0, duplicate));
  }

  TEST_CASE("permuting a batch-norm layer carries its parameters") {
    MlpSpec spec = MlpSpec::plain({3, 4, 2});
    spec.batchnorm = {true};
    Parameters p = init(spec, 2);
    p.batchnorm[0]->gamma << 1.0, 2.0, 3.0, 4.0;
    p.batchnorm[0]->running_mean << 0.5, 0.25, 0.125, 0.0;
    const std::vector<Index> perm = {3, 2, 1, 0};
    const Parameters q = permute_hidden_units(p, spec, 0, perm);
    CHECK(q.batchnorm[0]->gamma(0, 0) == 4.0);
    CHECK(q.batchnorm[0]->running_mean(1) == 0.125);
    Rng rng = make_rng(1);
    const Tensor x = standard_normal(5, 3, rng);
    CHECK((forward(p, spec, x) - forward(q, spec, x)).cwiseAbs().maxCoeff() < 1e-12);
  }

  TEST_CASE("checkpoint round trip is exact") {
    MlpSpec spec = MlpSpec::plain({4, 5, 3, 2});
    spec.batchnorm = {true, false};
    Parameters p = init(spec, 9);
    p.batchnorm[0]->running_var(2) = 1.0 / 3.0;
    std::stringstream ss;
    save_parameters(ss, p);
    const std::string first = ss.str();
    const Parameters q = load_parameters(ss);
    CHECK(q == p);
    std::stringstream again;
    save_parameters(again, q);
    CHECK(again.str() == first);

    std::stringstream bad("fnorm-parameters 2\n");
    CHECK_THROWS(load_parameters(bad));
  }

  TEST_CASE("spec validation") {
    CHECK_THROWS_AS(MlpSpec::plain({3, 2}).validate(), ContractError);
    MlpSpec s = MlpSpec::plain({3, 2, 2});
    s.dropout = {1.0};
    CHECK_THROWS_AS(s.validate(), ContractError);
    CHECK_THROWS_AS(MlpSpec::plain({3, 0, 2}).validate(), ContractError);
    const Parameters p = init(MlpSpec::plain({3, 2, 2}), 1);
    CHECK_THROWS_AS(forward(p, MlpSpec::plain({3, 2, 2}), Tensor::Zero(2, 4)), DimensionError);
  }
}

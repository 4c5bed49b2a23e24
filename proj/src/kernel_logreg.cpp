#include <fnorm/kernel_logreg.hpp>

#include <algorithm>
#include <cmath>

namespace fnorm::klr {

Tensor rbf_gram(const Tensor& x, const Tensor& y, double gamma) {
  if (!(gamma > 0.0)) throw ContractError("rbf_gram: gamma must be positive");
  if (x.cols() != y.cols()) throw DimensionError("rbf_gram: feature dimensions differ");
  // Direct differences: the gram of a set against itself is exactly symmetric.
  Tensor k(x.rows(), y.rows());
  for (Index i = 0; i < x.rows(); ++i) {
    for (Index j = 0; j < y.rows(); ++j) k(i, j) = std::exp(-gamma * (x.row(i) - y.row(j)).squaredNorm());
  }
  return k;
}

double min_eigenvalue(const Tensor& gram) {
  if (gram.rows() != gram.cols()) throw DimensionError("min_eigenvalue: gram must be square");
  const Eigen::MatrixXd sym = 0.5 * (gram + gram.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

std::string to_string(RegKind kind) {
  switch (kind) {
    case RegKind::None: return "none";
    case RegKind::Rkhs: return "rkhs";
    case RegKind::WeightedL2: return "weighted_l2";
  }
  return "unknown";
}

RegKind reg_kind_from_string(const std::string& name) {
  if (name == "none") return RegKind::None;
  if (name == "rkhs") return RegKind::Rkhs;
  if (name == "weighted_l2") return RegKind::WeightedL2;
  throw ContractError("unknown klr regularizer '" + name + "'");
}

void KlrProblem::validate() const {
  if (gram == nullptr || gram->rows() != gram->cols()) throw DimensionError("klr: gram must be square");
  if (static_cast<Index>(labels.size()) != gram->rows()) throw DimensionError("klr: one label per gram row");
  if (classes < 2) throw ContractError("klr: need at least two classes");
  for (int y : labels) {
    if (y < 0 || y >= classes) throw ContractError("klr: label out of range");
  }
  if (!(lambda >= 0.0)) throw ContractError("klr: lambda must be >= 0");
  if (kind == RegKind::WeightedL2) {
    if (reg_gram == nullptr || reg_gram->rows() == 0) throw ContractError("klr: weighted_l2 needs a reg gram");
    if (reg_gram->cols() != gram->rows()) throw DimensionError("klr: reg gram columns must match training points");
  }
}

Vector KlrProblem::pack(const Tensor& alpha, const RowVector& bias) const {
  Vector packed(num_params());
  const Index n_alpha = alpha.size();
  packed.head(n_alpha) = Eigen::Map<const Vector>(alpha.data(), n_alpha);
  packed.tail(classes) = bias.transpose();
  return packed;
}

void KlrProblem::unpack(const Vector& packed, Tensor& alpha, RowVector& bias) const {
  const Index n = gram->rows();
  alpha = Eigen::Map<const Tensor>(packed.data(), n, classes);
  bias = packed.tail(classes).transpose();
}

double KlrProblem::penalty(const Tensor& alpha, const RowVector& /*bias*/) const {
  switch (kind) {
    case RegKind::None:
      return 0.0;
    case RegKind::Rkhs:
      return (alpha.transpose() * (*gram) * alpha).trace();
    case RegKind::WeightedL2: {
      const Tensor values = (*reg_gram) * alpha;
      return values.squaredNorm() / static_cast<double>(reg_gram->rows());
    }
  }
  return 0.0;
}

double KlrProblem::evaluate(const Vector& packed, Vector* grad) const {
  const Tensor& k = *gram;
  const Index n = k.rows();
  Tensor alpha;
  RowVector bias;
  unpack(packed, alpha, bias);

  Tensor logits = k * alpha;
  logits.rowwise() += bias;
  double loss = 0.0;
  Tensor dlogits(n, classes);
  for (Index i = 0; i < n; ++i) {
    const double shift = logits.row(i).maxCoeff();
    const RowVector e = (logits.row(i).array() - shift).exp().matrix();
    const double z = e.sum();
    const int y = labels[static_cast<std::size_t>(i)];
    loss += std::log(z) + shift - logits(i, y);
    dlogits.row(i) = e / z;
    dlogits(i, y) -= 1.0;
  }
  loss /= static_cast<double>(n);
  dlogits /= static_cast<double>(n);

  Tensor g_alpha = k.transpose() * dlogits;
  RowVector g_bias = dlogits.colwise().sum();
  double objective = loss;
  if (lambda > 0.0 && kind != RegKind::None) {
    objective += lambda * penalty(alpha, bias);
    if (kind == RegKind::Rkhs) {
      g_alpha += lambda * (k + k.transpose()) * alpha;
    } else {
      const Tensor& r = *reg_gram;
      const double m = static_cast<double>(r.rows());
      g_alpha += (2.0 * lambda / m) * r.transpose() * (r * alpha);
    }
  }
  if (grad != nullptr) *grad = pack(g_alpha, g_bias);
  return objective;
}

namespace {

KernelModel fit_model(const KlrProblem& problem, const KlrOptions& options, const Vector& x0, bool strict) {
  if (min_eigenvalue(*problem.gram) < -kPsdTolerance) throw ContractError("train_klr: gram is not positive semidefinite");
  if (x0.size() != problem.num_params()) throw DimensionError("train_klr: start vector has the wrong size");
  LbfgsOptions lbfgs;
  lbfgs.tol = options.tol;
  lbfgs.max_iterations = options.max_iterations;
  const LbfgsResult result =
      lbfgs_minimize([&](const Vector& x, Vector& g) { return problem.evaluate(x, &g); }, x0, lbfgs);
  if (strict && !result.converged) {
    throw ConvergenceError("train_klr: gradient norm " + std::to_string(result.grad_inf_norm) +
                           " above tolerance after " + std::to_string(result.iterations) + " iterations");
  }
  KernelModel model;
  problem.unpack(result.x, model.alpha, model.bias);
  model.gram_train = *problem.gram;
  model.classes = problem.classes;
  model.iterations = result.iterations;
  model.grad_inf_norm = result.grad_inf_norm;
  return model;
}

}  // namespace

KernelModel train_klr(const Tensor& gram_train, std::span<const int> labels, int classes, const KlrOptions& options,
                      const Tensor* reg_gram, const std::optional<Vector>& start) {
  KlrProblem problem{&gram_train, labels, classes, options.kind, options.lambda, reg_gram};
  problem.validate();
  return fit_model(problem, options, start.value_or(Vector::Zero(problem.num_params())), true);
}

Tensor decision_function(const KernelModel& model, const Tensor& gram_test_train) {
  if (gram_test_train.cols() != model.alpha.rows()) throw DimensionError("decision_function: gram columns mismatch");
  Tensor scores = gram_test_train * model.alpha;
  scores.rowwise() += model.bias;
  return scores;
}

std::vector<int> predict(const KernelModel& model, const Tensor& gram_test_train) {
  const Tensor scores = decision_function(model, gram_test_train);
  std::vector<int> out(static_cast<std::size_t>(scores.rows()));
  for (Index i = 0; i < scores.rows(); ++i) {
    Index best = 0;
    scores.row(i).maxCoeff(&best);
    out[static_cast<std::size_t>(i)] = static_cast<int>(best);
  }
  return out;
}

double accuracy(std::span<const int> predicted, std::span<const int> truth) {
  if (predicted.size() != truth.size() || truth.empty()) throw DimensionError("accuracy: size mismatch");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hits += predicted[i] == truth[i] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

namespace {

Tensor select(const Tensor& m, std::span<const Index> rows, std::span<const Index> cols) {
  Tensor out(static_cast<Index>(rows.size()), static_cast<Index>(cols.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < cols.size(); ++j) out(static_cast<Index>(i), static_cast<Index>(j)) = m(rows[i], cols[j]);
  }
  return out;
}

std::vector<Index> all_rows(Index n) {
  std::vector<Index> rows(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) rows[static_cast<std::size_t>(i)] = i;
  return rows;
}

std::vector<int> pick(std::span<const int> labels, std::span<const Index> rows) {
  std::vector<int> out;
  out.reserve(rows.size());
  for (Index r : rows) out.push_back(labels[static_cast<std::size_t>(r)]);
  return out;
}

/// Unregularized problems on separable data have no finite minimizer; for
/// them the iteration cap ends the fit instead of raising.
KernelModel fit_allowing_cap(const Tensor& gram, std::span<const int> labels, int classes, const KlrOptions& options,
                             const Tensor* reg_gram) {
  KlrProblem problem{&gram, labels, classes, options.kind, options.lambda, reg_gram};
  problem.validate();
  const bool strict = options.kind != RegKind::None && options.lambda > 0.0;
  return fit_model(problem, options, Vector::Zero(problem.num_params()), strict);
}

}  // namespace

double cross_validate(const Tensor& gram_train, std::span<const int> labels, int classes, RegKind kind,
                      std::span<const double> lambda_grid, int folds, std::uint64_t seed, const Tensor* reg_gram,
                      double tol) {
  if (lambda_grid.empty()) throw ContractError("cross_validate: empty lambda grid");
  if (folds < 2 || folds > gram_train.rows()) throw ContractError("cross_validate: bad fold count");
  if (lambda_grid.size() == 1) return lambda_grid.front();

  std::vector<double> grid(lambda_grid.begin(), lambda_grid.end());
  std::sort(grid.begin(), grid.end());

  Rng rng = make_rng(seed, 0xcf01d);
  const std::vector<Index> order = permutation(gram_train.rows(), rng);
  std::vector<int> fold_of(order.size());
  for (std::size_t i = 0; i < order.size(); ++i) fold_of[static_cast<std::size_t>(order[i])] = static_cast<int>(i) % folds;

  std::vector<double> mean_acc(grid.size(), 0.0);
  for (int f = 0; f < folds; ++f) {
    std::vector<Index> fit_rows;
    std::vector<Index> held_rows;
    for (Index i = 0; i < gram_train.rows(); ++i) (fold_of[static_cast<std::size_t>(i)] == f ? held_rows : fit_rows).push_back(i);
    const Tensor k_fit = select(gram_train, fit_rows, fit_rows);
    const Tensor k_held = select(gram_train, held_rows, fit_rows);
    const std::vector<int> y_fit = pick(labels, fit_rows);
    const std::vector<int> y_held = pick(labels, held_rows);
    std::optional<Tensor> r_fit;
    if (reg_gram != nullptr) r_fit = select(*reg_gram, all_rows(reg_gram->rows()), fit_rows);

    for (std::size_t g = 0; g < grid.size(); ++g) {
      KlrOptions options{kind, grid[g], tol, 5000};
      const KernelModel model = fit_allowing_cap(k_fit, y_fit, classes, options, r_fit ? &*r_fit : nullptr);
      mean_acc[g] += accuracy(predict(model, k_held), y_held) / folds;
    }
  }
  std::size_t best = 0;
  for (std::size_t g = 1; g < grid.size(); ++g) {
    if (mean_acc[g] > mean_acc[best]) best = g;
  }
  return grid[best];
}

void ExperimentConfig::validate() const {
  if (splits < 1) throw ContractError("klr experiment: splits must be >= 1");
  if (!(train_fraction > 0.0 && test_fraction > 0.0 && pool_fraction > 0.0 &&
        train_fraction + test_fraction + pool_fraction <= 1.0 + 1e-12)) {
    throw ContractError("klr experiment: fractions must be positive and sum to at most 1");
  }
  if (!(gamma > 0.0)) throw ContractError("klr experiment: gamma must be positive");
  if (lambda_grid.empty()) throw ContractError("klr experiment: empty lambda grid");
  if (kinds.empty()) throw ContractError("klr experiment: no regularizer kinds");
}

std::vector<SplitResult> run_experiment(const ExperimentConfig& config) {
  config.validate();
  const Dataset data = make_blobs(config.blobs, config.seed);
  const Index n = data.size();
  const auto count = [n](double fraction) { return static_cast<Index>(std::llround(fraction * static_cast<double>(n))); };
  const Index n_train = count(config.train_fraction);
  const Index n_test = count(config.test_fraction);
  const Index n_pool = std::min(count(config.pool_fraction), n - n_train - n_test);

  std::vector<SplitResult> results;
  for (int split = 0; split < config.splits; ++split) {
    Rng rng = make_rng(config.seed, 1000 + static_cast<std::uint64_t>(split));
    const std::vector<Index> order = permutation(n, rng);
    const std::span<const Index> all(order);
    const Dataset train = data.subset(all.subspan(0, static_cast<std::size_t>(n_train)));
    const Dataset test = data.subset(all.subspan(static_cast<std::size_t>(n_train), static_cast<std::size_t>(n_test)));
    const Dataset pool = data.subset(all.subspan(static_cast<std::size_t>(n_train + n_test), static_cast<std::size_t>(n_pool)));

    const Tensor k_train = rbf_gram(train.x, train.x, config.gamma);
    const Tensor k_test = rbf_gram(test.x, train.x, config.gamma);
    const Tensor k_pool = rbf_gram(pool.x, train.x, config.gamma);

    for (RegKind kind : config.kinds) {
      const Tensor* reg = kind == RegKind::WeightedL2 ? &k_pool : nullptr;
      double lambda = 0.0;
      if (kind != RegKind::None) {
        lambda = cross_validate(k_train, train.labels, data.classes, kind, config.lambda_grid, config.folds,
                                config.seed + static_cast<std::uint64_t>(split), reg, config.tol);
      }
      const KernelModel model =
          fit_allowing_cap(k_train, train.labels, data.classes, KlrOptions{kind, lambda, config.tol, 5000}, reg);
      results.push_back({split, kind, lambda, accuracy(predict(model, k_test), test.labels)});
    }
  }
  return results;
}

}  // namespace fnorm::klr

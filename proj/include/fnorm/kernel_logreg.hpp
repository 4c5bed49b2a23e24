#pragma once

#include <fnorm/dataset.hpp>
#include <fnorm/lbfgs.hpp>

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace fnorm::klr {

/// K_ij = exp(-gamma ||x_i - y_j||^2).
Tensor rbf_gram(const Tensor& x, const Tensor& y, double gamma);

/// Smallest eigenvalue of the symmetrized matrix.
double min_eigenvalue(const Tensor& gram);
inline constexpr double kPsdTolerance = 1e-8;

enum class RegKind { None, Rkhs, WeightedL2 };

std::string to_string(RegKind kind);
RegKind reg_kind_from_string(const std::string& name);

class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Multinomial logistic regression on a kernel expansion
/// f_c(x) = sum_i alpha_ic K(x, x_i) + b_c.
struct KernelModel {
  Tensor alpha;    // [n_train x classes]
  RowVector bias;  // [classes]
  Tensor gram_train;
  int classes = 0;
  int iterations = 0;
  double grad_inf_norm = 0.0;
};

/// Penalized training objective. `reg_gram` [m x n] holds K(z_j, x_i) for the
/// regularization points and is required for the weighted-L2 kind:
///   mean cross-entropy + lambda * Omega,
///   Omega_rkhs = sum_c alpha_c^T K alpha_c,
///   Omega_l2   = (1/m) sum_j sum_c (sum_i alpha_ic K(z_j, x_i))^2.
/// The biases are not penalized.
struct KlrProblem {
  const Tensor* gram = nullptr;
  std::span<const int> labels;
  int classes = 0;
  RegKind kind = RegKind::Rkhs;
  double lambda = 0.0;
  const Tensor* reg_gram = nullptr;

  void validate() const;
  Index num_params() const { return gram->rows() * classes + classes; }
  /// Objective value; fills the gradient (same packing as the input) when given.
  double evaluate(const Vector& packed, Vector* grad = nullptr) const;
  double penalty(const Tensor& alpha, const RowVector& bias) const;
  Vector pack(const Tensor& alpha, const RowVector& bias) const;
  void unpack(const Vector& packed, Tensor& alpha, RowVector& bias) const;
};

struct KlrOptions {
  RegKind kind = RegKind::Rkhs;
  double lambda = 1e-3;
  double tol = 1e-6;
  int max_iterations = 5000;
};

/// Fits the model from a zero start with L-BFGS. Throws ContractError on a
/// non-PSD gram and ConvergenceError when the gradient tolerance is not met.
KernelModel train_klr(const Tensor& gram_train, std::span<const int> labels, int classes, const KlrOptions& options,
                      const Tensor* reg_gram = nullptr, const std::optional<Vector>& start = std::nullopt);

/// Class scores [n x classes] for a cross gram K(test, train).
Tensor decision_function(const KernelModel& model, const Tensor& gram_test_train);
std::vector<int> predict(const KernelModel& model, const Tensor& gram_test_train);
double accuracy(std::span<const int> predicted, std::span<const int> truth);

/// k-fold cross-validation over the lambda grid on a training gram. Returns
/// the lambda with the best mean fold accuracy, the smallest on ties.
/// `reg_gram` [m x n] restricts to the fold's training columns.
double cross_validate(const Tensor& gram_train, std::span<const int> labels, int classes, RegKind kind,
                      std::span<const double> lambda_grid, int folds, std::uint64_t seed,
                      const Tensor* reg_gram = nullptr, double tol = 1e-5);

/// Train / test / regularization-pool protocol on synthetic blobs.
struct ExperimentConfig {
  BlobSpec blobs;
  int splits = 10;
  double train_fraction = 0.1;
  double test_fraction = 0.2;
  double pool_fraction = 0.7;  // fraction of the whole dataset used as the regularization pool
  double gamma = 0.05;
  // One value per decade: the two penalties differ in scale by several orders.
  std::vector<double> lambda_grid = {1e-8, 1e-7, 1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1, 1.0};
  std::vector<RegKind> kinds = {RegKind::None, RegKind::Rkhs, RegKind::WeightedL2};
  int folds = 3;
  double tol = 1e-5;
  std::uint64_t seed = 1;

  void validate() const;
};

struct SplitResult {
  int split = 0;
  RegKind kind = RegKind::None;
  double lambda = 0.0;
  double accuracy = 0.0;
};

std::vector<SplitResult> run_experiment(const ExperimentConfig& config);

}  // namespace fnorm::klr

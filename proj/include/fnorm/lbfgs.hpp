#pragma once

#include <fnorm/tensor.hpp>

#include <functional>

namespace fnorm {

/// Objective returning f(x) and writing its gradient.
using Objective = std::function<double(const Vector& x, Vector& grad)>;

struct LbfgsOptions {
  int memory = 10;
  double tol = 1e-6;      // stop when ||grad||_inf <= tol
  int max_iterations = 5000;
  double armijo_c1 = 1e-4;
  double backtrack = 0.5;
  int max_backtracks = 60;
};

struct LbfgsResult {
  Vector x;
  double value = 0.0;
  double grad_inf_norm = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Limited-memory BFGS: two-loop recursion for the search direction and
/// backtracking line search on the Armijo condition.
LbfgsResult lbfgs_minimize(const Objective& objective, Vector x0, const LbfgsOptions& options = {});

}  // namespace fnorm

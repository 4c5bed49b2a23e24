#include <fnorm/lbfgs.hpp>

#include <deque>

namespace fnorm {

namespace {

struct CurvaturePair {
  Vector s;
  Vector y;
  double rho;
};

Vector two_loop_direction(const Vector& grad, const std::deque<CurvaturePair>& history) {
  Vector q = grad;
  std::vector<double> alpha(history.size());
  for (std::size_t i = history.size(); i-- > 0;) {
    alpha[i] = history[i].rho * history[i].s.dot(q);
    q -= alpha[i] * history[i].y;
  }
  if (!history.empty()) {
    const CurvaturePair& last = history.back();
    q *= last.s.dot(last.y) / last.y.squaredNorm();
  }
  for (std::size_t i = 0; i < history.size(); ++i) {
    const double beta = history[i].rho * history[i].y.dot(q);
    q += (alpha[i] - beta) * history[i].s;
  }
  return -q;
}

}  // namespace

LbfgsResult lbfgs_minimize(const Objective& objective, Vector x0, const LbfgsOptions& options) {
  LbfgsResult result;
  result.x = std::move(x0);
  Vector grad(result.x.size());
  result.value = objective(result.x, grad);
  if (!std::isfinite(result.value)) throw NumericError("lbfgs: non-finite objective at start");

  std::deque<CurvaturePair> history;
  Vector next_grad(grad.size());
  for (result.iterations = 0; result.iterations < options.max_iterations; ++result.iterations) {
    result.grad_inf_norm = grad.lpNorm<Eigen::Infinity>();
    if (result.grad_inf_norm <= options.tol) {
      result.converged = true;
      return result;
    }

    Vector direction = two_loop_direction(grad, history);
    double slope = grad.dot(direction);
    if (!(slope < 0.0)) {
      // Curvature information went stale; restart from steepest descent.
      history.clear();
      direction = -grad;
      slope = -grad.squaredNorm();
    }

    double step = 1.0;
    if (history.empty()) step = std::min(1.0, 1.0 / grad.lpNorm<Eigen::Infinity>());
    Vector candidate;
    double value = 0.0;
    bool accepted = false;
    for (int k = 0; k < options.max_backtracks; ++k) {
      candidate = result.x + step * direction;
      value = objective(candidate, next_grad);
      if (std::isfinite(value) && value <= result.value + options.armijo_c1 * step * slope) {
        accepted = true;
        break;
      }
      step *= options.backtrack;
    }
    if (!accepted) break;

    CurvaturePair pair{candidate - result.x, next_grad - grad, 0.0};
    const double sy = pair.s.dot(pair.y);
    if (sy > 1e-12 * pair.y.squaredNorm()) {
      pair.rho = 1.0 / sy;
      history.push_back(std::move(pair));
      if (static_cast<int>(history.size()) > options.memory) history.pop_front();
    }
    result.x = std::move(candidate);
    result.value = value;
    grad.swap(next_grad);
  }
  result.grad_inf_norm = grad.lpNorm<Eigen::Infinity>();
  result.converged = result.grad_inf_norm <= options.tol;
  return result;
}

}  // namespace fnorm

#pragma once

#include <fnorm/network.hpp>

#include <array>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace fnorm::sat {

struct Literal {
  int var = 1;  // 1-based variable index
  bool negated = false;
  bool operator==(const Literal&) const = default;
};

using Clause = std::array<Literal, 3>;

/// Conjunction of clauses with exactly three literals each.
struct Cnf3 {
  int num_vars = 0;
  std::vector<Clause> clauses;

  int num_clauses() const { return static_cast<int>(clauses.size()); }
  void validate() const;
  bool satisfied_by(std::uint64_t assignment_bits) const;
};

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// DIMACS CNF ("c" comments, one "p cnf <vars> <clauses>" header, 0-terminated
/// clauses of 1-3 literals). Short clauses are padded by repeating their last
/// literal.
Cnf3 parse_dimacs(std::string_view text);

/// Half-width of the bumps; 0 < epsilon < 0.5. Powers of two keep the
/// cancellations f0(+-eps) = 0 exact.
struct GadgetParams {
  double epsilon = 0.25;
  void validate() const;
};

// Gadget functions, written as the ReLU combinations the network realizes.

template <typename Scalar>
Scalar relu(Scalar x) {
  return x > Scalar(0) ? x : Scalar(0);
}

/// Hat of height 1 at 0 with support (-eps, eps).
template <typename Scalar>
Scalar f0(Scalar x, Scalar eps) {
  return (relu<Scalar>(x + eps) - Scalar(2) * relu<Scalar>(x) + relu<Scalar>(x - eps)) / eps;
}

/// Hat at 1.
template <typename Scalar>
Scalar f1(Scalar x, Scalar eps) {
  return f0<Scalar>(x - Scalar(1), eps);
}

/// OR block: sum_{j=1..3} f0(z1 + z2 + z3 - j).
template <typename Scalar>
Scalar f_or(Scalar z1, Scalar z2, Scalar z3, Scalar eps) {
  const Scalar s = z1 + z2 + z3;
  return f0<Scalar>(s - Scalar(1), eps) + f0<Scalar>(s - Scalar(2), eps) + f0<Scalar>(s - Scalar(3), eps);
}

/// OR block applied to positive literals, F(X) = f_or(f1(X1), f1(X2), f1(X3)).
template <typename Scalar>
Scalar or_block(Scalar x1, Scalar x2, Scalar x3, Scalar eps) {
  return f_or<Scalar>(f1<Scalar>(x1, eps), f1<Scalar>(x2, eps), f1<Scalar>(x3, eps), eps);
}

/// AND block: f0(sum z - c).
template <typename Scalar>
Scalar f_and(std::span<const Scalar> z, Scalar eps) {
  Scalar s(0);
  for (const Scalar& v : z) s += v;
  return f0<Scalar>(s - Scalar(static_cast<double>(z.size())), eps);
}

/// Truncation f_T(x) = ||x||_1 / (1 + dim x).
template <typename Scalar>
Scalar f_trunc(std::span<const Scalar> x) {
  Scalar s(0);
  for (const Scalar& v : x) s += (v < Scalar(0) ? -v : v);
  return s / Scalar(static_cast<double>(x.size() + 1));
}

/// Direct evaluation of f_B (or max(f_B - f_T, 0)) from the gadget formulas,
/// independent of the compiled weights.
template <typename Scalar>
Scalar evaluate_formula(const Cnf3& cnf, const GadgetParams& g, std::span<const Scalar> x, bool truncated) {
  const Scalar eps(g.epsilon);
  std::vector<Scalar> ors;
  ors.reserve(cnf.clauses.size());
  for (const Clause& clause : cnf.clauses) {
    std::array<Scalar, 3> lit{};
    for (std::size_t k = 0; k < 3; ++k) {
      const Scalar xv = x[static_cast<std::size_t>(clause[k].var - 1)];
      lit[k] = clause[k].negated ? f0<Scalar>(xv, eps) : f1<Scalar>(xv, eps);
    }
    ors.push_back(f_or<Scalar>(lit[0], lit[1], lit[2], eps));
  }
  const Scalar fb = f_and<Scalar>(std::span<const Scalar>(ors), eps);
  if (!truncated) return fb;
  return relu<Scalar>(fb - f_trunc<Scalar>(x));
}

/// Depth-4 ReLU network compiled from a formula.
struct ConstructedNet {
  MlpSpec spec;
  Parameters params;
  int num_vars = 0;
  int num_clauses = 0;
  double epsilon = 0.25;
  bool truncated = false;
  Index literal_units = 0;  // first-layer units computing literal bumps
};

/// Layers: literal bumps f0(x_i)/f1(x_i) (3 units per used variable polarity),
/// OR blocks (9 units per clause), the AND block (3 units), and with
/// truncation one more layer computing max(f_B - f_T, 0). Size O(p + c).
ConstructedNet compile(const Cnf3& cnf, const GadgetParams& g, bool truncated = false);

/// Network value at one point.
double evaluate(const ConstructedNet& net, std::span<const double> x);
/// Network values at every row of `points` [n x p].
Vector evaluate_batch(const ConstructedNet& net, const Tensor& points);

struct SatResult {
  bool satisfiable = false;
  std::vector<bool> witness;  // witness[i] is the value of variable i+1
};

inline constexpr int kMaxBruteForceVars = 24;

/// Exhaustive enumeration of the 2^p assignments.
SatResult brute_force_sat(const Cnf3& cnf);

struct CornerScan {
  double max_value = 0.0;
  std::vector<bool> argmax;
};

/// Maximum of the network over the Boolean corners {0,1}^p.
CornerScan corner_max(const ConstructedNet& net);

/// Half-width of the corner boxes in the integration measure. Small enough
/// that the network stays positive on the whole box around a satisfying corner.
double corner_box_halfwidth(const ConstructedNet& net);

/// m points from the integration measure on [-eps, 1+eps]^p: with probability
/// 1/2 uniform on the cube, otherwise uniform in the box of half-width
/// corner_box_halfwidth around a uniformly chosen Boolean corner.
Tensor draw_probe_points(const ConstructedNet& net, Index m, Rng& rng);

/// sqrt((1/m) sum f(z_i)^2) over the given points.
double norm_estimate(const ConstructedNet& net, const Tensor& points);

/// Monte-Carlo estimate of the L2 norm under the integration measure.
double mc_norm_estimate(const ConstructedNet& net, Index m, Rng& rng);

struct RangeCheck {
  double min_value = 0.0;
  double max_value = 0.0;
  std::array<double, 3> argmax{};
  std::uint64_t probes = 0;
};

/// Sweeps the OR block over a resolution^3 grid of [1-2eps, 1+2eps]^3, the
/// far-field grid {-1, 0, ..., 2}^3 and `random_points` uniform points of
/// [-1, 2]^3.
RangeCheck or_block_range_check(const GadgetParams& g, int resolution, std::uint64_t random_points, Rng& rng);

}  // namespace fnorm::sat

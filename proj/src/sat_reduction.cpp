#include <fnorm/sat_reduction.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>
#include <string>

namespace fnorm::sat {

void Cnf3::validate() const {
  if (num_vars < 1) throw ContractError("Cnf3: need at least one variable");
  for (const Clause& clause : clauses) {
    for (const Literal& lit : clause) {
      if (lit.var < 1 || lit.var > num_vars) throw ContractError("Cnf3: variable index out of range");
    }
  }
}

bool Cnf3::satisfied_by(std::uint64_t bits) const {
  for (const Clause& clause : clauses) {
    bool any = false;
    for (const Literal& lit : clause) {
      const bool value = ((bits >> (lit.var - 1)) & 1U) != 0;
      any = any || (value != lit.negated);
    }
    if (!any) return false;
  }
  return true;
}

Cnf3 parse_dimacs(std::string_view text) {
  Cnf3 cnf;
  bool have_header = false;
  long declared_clauses = 0;
  std::vector<Literal> pending;

  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const char lead = line[first];
    if (lead == 'c') continue;
    if (lead == '%') break;  // SATLIB trailer
    std::istringstream tokens(line.substr(first));
    if (lead == 'p') {
      std::string p;
      std::string fmt;
      long vars = 0;
      if (have_header || !(tokens >> p >> fmt >> vars >> declared_clauses) || fmt != "cnf" || vars < 1 ||
          declared_clauses < 0) {
        throw ParseError("dimacs line " + std::to_string(line_no) + ": malformed header");
      }
      cnf.num_vars = static_cast<int>(vars);
      have_header = true;
      continue;
    }
    if (!have_header) throw ParseError("dimacs line " + std::to_string(line_no) + ": clause before header");
    std::string token;
    while (tokens >> token) {
      long value = 0;
      try {
        std::size_t used = 0;
        value = std::stol(token, &used);
        if (used != token.size()) throw std::invalid_argument(token);
      } catch (const std::exception&) {
        throw ParseError("dimacs line " + std::to_string(line_no) + ": bad literal '" + token + "'");
      }
      if (value == 0) {
        if (pending.empty()) throw ParseError("dimacs line " + std::to_string(line_no) + ": empty clause");
        if (pending.size() > 3) {
          throw ParseError("dimacs line " + std::to_string(line_no) + ": clause with " +
                           std::to_string(pending.size()) + " literals is unsupported");
        }
        while (pending.size() < 3) pending.push_back(pending.back());
        cnf.clauses.push_back({pending[0], pending[1], pending[2]});
        pending.clear();
        continue;
      }
      const long var = value < 0 ? -value : value;
      if (var > cnf.num_vars) {
        throw ParseError("dimacs line " + std::to_string(line_no) + ": variable " + std::to_string(var) +
                         " exceeds declared count");
      }
      pending.push_back(Literal{static_cast<int>(var), value < 0});
    }
  }
  if (!have_header) throw ParseError("dimacs: missing 'p cnf' header");
  if (!pending.empty()) throw ParseError("dimacs: last clause not terminated by 0");
  if (static_cast<long>(cnf.clauses.size()) != declared_clauses) {
    throw ParseError("dimacs: header declares " + std::to_string(declared_clauses) + " clauses, found " +
                     std::to_string(cnf.clauses.size()));
  }
  return cnf;
}

void GadgetParams::validate() const {
  if (!(epsilon > 0.0 && epsilon < 0.5)) throw ContractError("GadgetParams: epsilon must lie in (0, 0.5)");
}

ConstructedNet compile(const Cnf3& cnf, const GadgetParams& g, bool truncated) {
  cnf.validate();
  g.validate();
  const double eps = g.epsilon;
  const Index p = cnf.num_vars;
  const Index c = cnf.num_clauses();
  if (c < 1) throw ContractError("compile: formula has no clauses");

  // Layer 1: three units per (variable, polarity) in use.
  std::map<std::pair<int, bool>, Index> literal_slot;
  for (const Clause& clause : cnf.clauses) {
    for (const Literal& lit : clause) {
      const auto key = std::make_pair(lit.var, lit.negated);
      if (!literal_slot.contains(key)) {
        const Index slot = static_cast<Index>(literal_slot.size());
        literal_slot.emplace(key, slot);
      }
    }
  }
  const Index literal_units = 3 * static_cast<Index>(literal_slot.size());
  const Index carry1 = truncated ? 2 * p : 0;
  const Index width1 = literal_units + carry1;
  Tensor w1 = Tensor::Zero(width1, p);
  Tensor b1 = Tensor::Zero(1, width1);
  for (const auto& [key, slot] : literal_slot) {
    const auto [var, negated] = key;
    const double centre = negated ? 0.0 : 1.0;
    for (Index k = 0; k < 3; ++k) {
      w1(3 * slot + k, var - 1) = 1.0;
      b1(0, 3 * slot + k) = -centre + eps * static_cast<double>(1 - k);  // +eps, 0, -eps
    }
  }
  for (Index i = 0; i < carry1 / 2; ++i) {
    w1(literal_units + 2 * i, i) = 1.0;
    w1(literal_units + 2 * i + 1, i) = -1.0;
  }

  // Layer 2: for clause k and j = 1..3, units s_k - j + {eps, 0, -eps}.
  const double hat[3] = {1.0 / eps, -2.0 / eps, 1.0 / eps};
  const Index width2 = 9 * c + (truncated ? 1 : 0);
  Tensor w2 = Tensor::Zero(width2, width1);
  Tensor b2 = Tensor::Zero(1, width2);
  for (Index k = 0; k < c; ++k) {
    for (const Literal& lit : cnf.clauses[static_cast<std::size_t>(k)]) {
      const Index slot = literal_slot.at({lit.var, lit.negated});
      for (Index row = 9 * k; row < 9 * k + 9; ++row) {
        for (Index v = 0; v < 3; ++v) w2(row, 3 * slot + v) += hat[v];
      }
    }
    for (Index j = 0; j < 3; ++j) {
      for (Index u = 0; u < 3; ++u) {
        b2(0, 9 * k + 3 * j + u) = -static_cast<double>(j + 1) + eps * static_cast<double>(1 - u);
      }
    }
  }
  if (truncated) {
    const double inv = 1.0 / static_cast<double>(p + 1);
    for (Index i = 0; i < carry1; ++i) w2(9 * c, literal_units + i) = inv;
  }

  // Layer 3: AND block units S - c + {eps, 0, -eps}, S the sum of OR outputs.
  const Index width3 = 3 + (truncated ? 1 : 0);
  Tensor w3 = Tensor::Zero(width3, width2);
  Tensor b3 = Tensor::Zero(1, width3);
  for (Index u = 0; u < 3; ++u) {
    for (Index k = 0; k < c; ++k) {
      for (Index j = 0; j < 3; ++j) {
        for (Index v = 0; v < 3; ++v) w3(u, 9 * k + 3 * j + v) = hat[v];
      }
    }
    b3(0, u) = -static_cast<double>(c) + eps * static_cast<double>(1 - u);
  }
  if (truncated) w3(3, 9 * c) = 1.0;

  ConstructedNet net;
  net.num_vars = static_cast<int>(p);
  net.num_clauses = static_cast<int>(c);
  net.epsilon = eps;
  net.truncated = truncated;
  net.literal_units = literal_units;
  net.params.weights = {w1, w2, w3};
  net.params.biases = {b1, b2, b3};

  // f_B = hat . (AND units); optionally one more layer for max(f_B - f_T, 0).
  Tensor readout = Tensor::Zero(1, width3);
  for (Index u = 0; u < 3; ++u) readout(0, u) = hat[u];
  if (truncated) {
    readout(0, 3) = -1.0;
    net.params.weights.push_back(readout);
    net.params.biases.push_back(Tensor::Zero(1, 1));
    net.params.weights.push_back(Tensor::Ones(1, 1));
    net.params.biases.push_back(Tensor::Zero(1, 1));
    net.spec = MlpSpec::plain({p, width1, width2, width3, 1, 1});
  } else {
    net.params.weights.push_back(readout);
    net.params.biases.push_back(Tensor::Zero(1, 1));
    net.spec = MlpSpec::plain({p, width1, width2, width3, 1});
  }
  net.params.batchnorm.assign(net.spec.num_hidden(), std::nullopt);
  return net;
}

Vector evaluate_batch(const ConstructedNet& net, const Tensor& points) {
  if (points.cols() != net.num_vars) {
    throw DimensionError("sat evaluate: expected " + std::to_string(net.num_vars) + " coordinates, got " +
                         std::to_string(points.cols()));
  }
  // Plain dense forward pass; the construction has no batch norm or dropout.
  Tensor h = points;
  const std::size_t layers = net.params.weights.size();
  for (std::size_t l = 0; l < layers; ++l) {
    Tensor next = h * net.params.weights[l].transpose();
    next.rowwise() += net.params.biases[l].row(0);
    h = (l + 1 < layers) ? Tensor(next.cwiseMax(0.0)) : next;
  }
  return h.col(0);
}

double evaluate(const ConstructedNet& net, std::span<const double> x) {
  Tensor point(1, static_cast<Index>(x.size()));
  for (std::size_t i = 0; i < x.size(); ++i) point(0, static_cast<Index>(i)) = x[i];
  return evaluate_batch(net, point)(0);
}

SatResult brute_force_sat(const Cnf3& cnf) {
  cnf.validate();
  if (cnf.num_vars > kMaxBruteForceVars) throw ContractError("brute_force_sat: too many variables");
  const std::uint64_t total = std::uint64_t{1} << cnf.num_vars;
  for (std::uint64_t bits = 0; bits < total; ++bits) {
    if (cnf.satisfied_by(bits)) {
      SatResult result;
      result.satisfiable = true;
      for (int i = 0; i < cnf.num_vars; ++i) result.witness.push_back(((bits >> i) & 1U) != 0);
      return result;
    }
  }
  return SatResult{};
}

CornerScan corner_max(const ConstructedNet& net) {
  if (net.num_vars > 20) throw ContractError("corner_max: too many variables");
  const Index p = net.num_vars;
  const Index total = Index{1} << p;
  Tensor corners(total, p);
  for (Index bits = 0; bits < total; ++bits) {
    for (Index i = 0; i < p; ++i) corners(bits, i) = static_cast<double>((bits >> i) & 1);
  }
  const Vector values = evaluate_batch(net, corners);
  Index best = 0;
  const double max_value = values.maxCoeff(&best);
  CornerScan scan;
  scan.max_value = max_value;
  for (Index i = 0; i < p; ++i) scan.argmax.push_back(((best >> i) & 1) != 0);
  return scan;
}

double corner_box_halfwidth(const ConstructedNet& net) {
  const double eps = net.epsilon;
  return eps * eps * eps / (6.0 * static_cast<double>(net.num_clauses) * static_cast<double>(net.num_vars + 1));
}

Tensor draw_probe_points(const ConstructedNet& net, Index m, Rng& rng) {
  if (m < 1) throw ContractError("draw_probe_points: m must be >= 1");
  const Index p = net.num_vars;
  const double eps = net.epsilon;
  const double r = corner_box_halfwidth(net);
  std::bernoulli_distribution near_corner(0.5);
  std::bernoulli_distribution bit(0.5);
  std::uniform_real_distribution<double> cube(-eps, 1.0 + eps);
  std::uniform_real_distribution<double> jitter(-r, r);
  Tensor points(m, p);
  for (Index i = 0; i < m; ++i) {
    if (near_corner(rng)) {
      for (Index j = 0; j < p; ++j) points(i, j) = (bit(rng) ? 1.0 : 0.0) + jitter(rng);
    } else {
      for (Index j = 0; j < p; ++j) points(i, j) = cube(rng);
    }
  }
  return points;
}

double norm_estimate(const ConstructedNet& net, const Tensor& points) {
  if (points.rows() == 0) throw ContractError("norm_estimate: no points");
  return std::sqrt(evaluate_batch(net, points).squaredNorm() / static_cast<double>(points.rows()));
}

double mc_norm_estimate(const ConstructedNet& net, Index m, Rng& rng) {
  if (m < 1) throw ContractError("mc_norm_estimate: m must be >= 1");
  constexpr Index kChunk = 8192;
  double sum_sq = 0.0;
  for (Index done = 0; done < m; done += kChunk) {
    const Index n = std::min(kChunk, m - done);
    sum_sq += evaluate_batch(net, draw_probe_points(net, n, rng)).squaredNorm();
  }
  return std::sqrt(sum_sq / static_cast<double>(m));
}

RangeCheck or_block_range_check(const GadgetParams& g, int resolution, std::uint64_t random_points, Rng& rng) {
  g.validate();
  if (resolution < 2) throw ContractError("or_block_range_check: resolution must be >= 2");
  const double eps = g.epsilon;
  RangeCheck check;
  check.min_value = std::numeric_limits<double>::infinity();
  check.max_value = -std::numeric_limits<double>::infinity();
  auto probe = [&](double a, double b, double c) {
    const double v = or_block<double>(a, b, c, eps);
    ++check.probes;
    check.min_value = std::min(check.min_value, v);
    if (v > check.max_value) {
      check.max_value = v;
      check.argmax = {a, b, c};
    }
  };

  const double lo = 1.0 - 2.0 * eps;
  std::vector<double> axis(static_cast<std::size_t>(resolution));
  for (int i = 0; i < resolution; ++i) axis[static_cast<std::size_t>(i)] = lo + 4.0 * eps * i / (resolution - 1);
  for (double a : axis) {
    for (double b : axis) {
      for (double c : axis) probe(a, b, c);
    }
  }
  for (int i = -1; i <= 2; ++i) {
    for (int j = -1; j <= 2; ++j) {
      for (int k = -1; k <= 2; ++k) probe(i, j, k);
    }
  }
  std::uniform_real_distribution<double> far(-1.0, 2.0);
  for (std::uint64_t n = 0; n < random_points; ++n) probe(far(rng), far(rng), far(rng));
  return check;
}

}  // namespace fnorm::sat

// fnorm command-line front end.

#include <fnorm/bound.hpp>
#include <fnorm/gradcheck.hpp>
#include <fnorm/harness.hpp>
#include <fnorm/kernel_logreg.hpp>
#include <fnorm/sat_reduction.hpp>

#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

namespace {

using namespace fnorm;

// Writes to the file when a path is given, else stdout.
class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty()) {
      file_ = std::make_unique<std::ofstream>(path);
      if (!*file_) throw std::runtime_error("cannot write " + path);
    }
  }
  std::ostream& stream() { return file_ ? *file_ : std::cout; }

 private:
  std::unique_ptr<std::ofstream> file_;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int cmd_train(const std::string& config_path, const std::string& out_path, const std::string& summary_path,
              const std::string& trials_path) {
  ExperimentConfig config = load_experiment_config(config_path);
  if (!out_path.empty()) config.output_csv = out_path;
  if (!summary_path.empty()) config.summary_csv = summary_path;

  const MetricLog log = run_experiment(config);
  if (config.output_csv.empty()) {
    write_metric_csv(std::cout, log, config.log_wall_time);
  } else {
    emit_csv(log, config.output_csv, config.log_wall_time);
  }
  if (!config.summary_csv.empty()) emit_summary({{"run", &log}}, config.summary_csv);
  if (!trials_path.empty()) {
    Output trials(trials_path);
    write_trials_csv(trials.stream(), log);
  }
  std::cerr << "trials " << log.trials.size() << ", diverged " << log.diverged_count()
            << ", mean final test error " << format_double(log.mean_final_test_error()) << '\n';
  return 0;
}

int cmd_klr(std::uint64_t seed, const std::vector<double>& lambdas, const std::string& kind, double pool_fraction,
            int splits, double gamma, const std::string& out_path) {
  klr::ExperimentConfig config;
  config.seed = seed;
  config.lambda_grid = lambdas;
  config.pool_fraction = pool_fraction;
  config.splits = splits;
  config.gamma = gamma;
  if (kind != "all") config.kinds = {klr::reg_kind_from_string(kind)};

  const std::vector<klr::SplitResult> results = klr::run_experiment(config);
  Output out(out_path);
  out.stream() << "split,kind,lambda,accuracy\n";
  for (const klr::SplitResult& r : results) {
    out.stream() << r.split << ',' << klr::to_string(r.kind) << ',' << format_double(r.lambda) << ','
                 << format_double(r.accuracy) << '\n';
  }
  return 0;
}

int cmd_sat_norm(const std::string& cnf_path, double eps, std::int64_t samples, std::uint64_t seed, bool truncate,
                 const std::string& out_path) {
  if (samples < 1) throw std::invalid_argument("--samples must be >= 1");
  const sat::Cnf3 cnf = sat::parse_dimacs(read_file(cnf_path));
  const sat::GadgetParams g{eps};
  const sat::ConstructedNet net = sat::compile(cnf, g, truncate);
  const sat::SatResult oracle = sat::brute_force_sat(cnf);
  const sat::CornerScan corners = sat::corner_max(net);
  Rng rng = make_rng(seed, 0x5a7);
  const double norm = sat::mc_norm_estimate(net, samples, rng);

  // Untruncated: the corner max is exactly 1 or 0. Truncated: only positivity is claimed.
  const bool corner_says_sat = truncate ? corners.max_value > 0.0 : corners.max_value == 1.0;
  const bool agree = oracle.satisfiable == corner_says_sat && oracle.satisfiable == (norm > 0.0);

  Output out(out_path);
  out.stream() << "vars,clauses,epsilon,truncated,samples,seed,oracle,corner_max,mc_norm,verdict\n";
  out.stream() << cnf.num_vars << ',' << cnf.num_clauses() << ',' << format_double(eps) << ',' << (truncate ? 1 : 0)
               << ',' << samples << ',' << seed << ',' << (oracle.satisfiable ? "SAT" : "UNSAT") << ','
               << format_double(corners.max_value) << ',' << format_double(norm) << ','
               << (agree ? "agree" : "disagree") << '\n';
  if (!agree) {
    std::cerr << "sat-norm: oracle, corner scan and norm estimate disagree\n";
    return 3;
  }
  return 0;
}

int cmd_bound(const std::string& config_path, const std::string& out_path) {
  const KeyValueConfig kv = KeyValueConfig::load(config_path);
  kv.require_known({"A", "B", "D", "delta", "K", "C", "N", "p_mean", "p_variance", "q_mean", "q_variance"});
  BoundInputs in;
  in.A = kv.get_double("A", in.A);
  in.B = kv.get_double("B", in.B);
  in.delta = kv.get_double("delta", in.delta);
  in.lipschitz_K = kv.get_double("K", in.lipschitz_K);
  in.loss_at_zero_C = kv.get_double("C", in.loss_at_zero_C);
  in.N = kv.get_int("N", in.N);

  const bool gaussians = kv.contains("p_mean") || kv.contains("q_mean");
  if (gaussians && kv.contains("D")) throw ConfigError("give either D or the Gaussian pair, not both");
  bool infinite = false;
  if (gaussians) {
    auto row = [&](const std::string& key) {
      const std::vector<double> v = kv.get_doubles(key, {});
      if (v.empty()) throw ConfigError("missing key '" + key + "'");
      return RowVector(Eigen::Map<const RowVector>(v.data(), static_cast<Index>(v.size())));
    };
    const DiagGaussian p{row("p_mean"), row("p_variance")};
    const DiagGaussian q{row("q_mean"), row("q_variance")};
    const std::optional<double> d = chi2_divergence_term(p, q);
    infinite = !d.has_value();
    in.D = d.value_or(1.0);
  } else {
    in.D = kv.get_double("D", in.D);
  }

  Output out(out_path);
  out.stream() << "A,B,D,delta,K,C,N,gap\n";
  if (infinite) {
    in.validate();
    out.stream() << format_double(in.A) << ',' << format_double(in.B) << ",inf," << format_double(in.delta) << ','
                 << format_double(in.lipschitz_K) << ',' << format_double(in.loss_at_zero_C) << ',' << in.N
                 << ",inf\n";
    std::cerr << "bound: the divergence term is infinite (2 var_Q <= var_P in some dimension)\n";
    return 0;
  }
  const double gap = generalization_gap_bound(in);
  out.stream() << format_double(in.A) << ',' << format_double(in.B) << ',' << format_double(in.D) << ','
               << format_double(in.delta) << ',' << format_double(in.lipschitz_K) << ','
               << format_double(in.loss_at_zero_C) << ',' << in.N << ',' << format_double(gap) << '\n';
  return 0;
}

int cmd_gradcheck(int nets, std::uint64_t seed, double tolerance, const std::string& out_path) {
  GradCheckOptions options;
  options.tolerance = tolerance;
  const std::vector<RandomCheckCase> cases = random_gradient_checks(nets, seed, options);
  Output out(out_path);
  out.stream() << "net,kind,dims,max_rel_error,reference_mismatch,compared,below_floor,kink_skipped,pass\n";
  bool ok = true;
  for (const RandomCheckCase& c : cases) {
    std::string dims;
    for (Index d : c.spec.layer_dims) dims += (dims.empty() ? "" : "-") + std::to_string(d);
    const bool pass = c.result.passed(tolerance);
    ok = ok && pass;
    out.stream() << c.net << ',' << to_string(c.kind) << ',' << dims << ',' << format_double(c.result.max_rel_error)
                 << ',' << format_double(c.result.reference_mismatch) << ',' << c.result.compared << ',' << c.result.below_floor << ',' << c.result.kink_skipped << ','
                 << (pass ? 1 : 0) << '\n';
  }
  if (!ok) {
    std::cerr << "gradcheck: relative error above " << tolerance << '\n';
    return 3;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sampled function-norm regularization toolkit"};
  app.require_subcommand(1);

  std::string out_path;

  auto* train = app.add_subcommand("train", "Run a multi-trial training experiment");
  std::string config_path, summary_path, trials_path;
  train->add_option("config", config_path, "Experiment config file")->required()->check(CLI::ExistingFile);
  train->add_option("-o,--out", out_path, "Metric CSV (overrides output.csv; default stdout)");
  train->add_option("--summary", summary_path, "Per-step summary CSV (overrides output.summary)");
  train->add_option("--trials", trials_path, "Per-trial outcome CSV");

  auto* klr_cmd = app.add_subcommand("klr", "Kernel logistic regression comparison on synthetic blobs");
  std::uint64_t klr_seed = 1;
  std::vector<double> lambdas = klr::ExperimentConfig{}.lambda_grid;
  std::string klr_kind = "all";
  double pool_fraction = 0.7;
  int splits = 10;
  double gamma = klr::ExperimentConfig{}.gamma;
  klr_cmd->add_option("--seed", klr_seed, "Split seed");
  klr_cmd->add_option("--lambdas", lambdas, "Lambda grid")->delimiter(',');
  klr_cmd->add_option("--kind", klr_kind, "none | rkhs | weighted_l2 | all")
      ->check(CLI::IsMember({"none", "rkhs", "weighted_l2", "all"}));
  klr_cmd->add_option("--pool-fraction", pool_fraction, "Fraction of the data used as the regularization pool");
  klr_cmd->add_option("--splits", splits, "Number of random splits");
  klr_cmd->add_option("--gamma", gamma, "RBF kernel width");
  klr_cmd->add_option("-o,--out", out_path, "Output CSV (default stdout)");

  auto* sat_cmd = app.add_subcommand("sat-norm", "Compile a DIMACS 3-CNF into a ReLU network and estimate its norm");
  std::string cnf_path;
  double eps = 0.25;
  std::int64_t samples = 100000;
  std::uint64_t sat_seed = 1;
  bool truncate = false;
  sat_cmd->add_option("cnf", cnf_path, "DIMACS CNF file")->required()->check(CLI::ExistingFile);
  sat_cmd->add_option("--eps", eps, "Gadget half-width, in (0, 0.5)");
  sat_cmd->add_option("--samples", samples, "Monte-Carlo sample count");
  sat_cmd->add_option("--seed", sat_seed, "Sampling seed");
  sat_cmd->add_flag("--truncate", truncate, "Use max(f_B - f_T, 0)");
  sat_cmd->add_option("-o,--out", out_path, "Output CSV (default stdout)");

  auto* bound_cmd = app.add_subcommand("bound", "Evaluate the generalization-gap bound");
  std::string bound_path;
  bound_cmd->add_option("config", bound_path, "key = value file (A, B, D, delta, K, C, N)")
      ->required()
      ->check(CLI::ExistingFile);
  bound_cmd->add_option("-o,--out", out_path, "Output CSV (default stdout)");

  auto* grad_cmd = app.add_subcommand("gradcheck", "Autodiff vs finite differences on random networks");
  int nets = 50;
  std::uint64_t grad_seed = 1;
  double tolerance = 1e-4;
  grad_cmd->add_option("--nets", nets, "Number of random networks");
  grad_cmd->add_option("--seed", grad_seed, "Seed");
  grad_cmd->add_option("--tolerance", tolerance, "Maximum relative error");
  grad_cmd->add_option("-o,--out", out_path, "Output CSV (default stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) return cmd_train(config_path, out_path, summary_path, trials_path);
    if (*klr_cmd) return cmd_klr(klr_seed, lambdas, klr_kind, pool_fraction, splits, gamma, out_path);
    if (*sat_cmd) return cmd_sat_norm(cnf_path, eps, samples, sat_seed, truncate, out_path);
    if (*bound_cmd) return cmd_bound(bound_path, out_path);
    if (*grad_cmd) return cmd_gradcheck(nets, grad_seed, tolerance, out_path);
  } catch (const std::exception& e) {
    std::cerr << "fnorm: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

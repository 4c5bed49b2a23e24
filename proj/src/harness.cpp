#include <fnorm/harness.hpp>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>

namespace fnorm {
namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double parse_double(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) {
    throw ConfigError("config key '" + key + "': not a number: '" + text + "'");
  }
  return value;
}

std::int64_t parse_int(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  std::int64_t value = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) {
    throw ConfigError("config key '" + key + "': not an integer: '" + text + "'");
  }
  return value;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
  if (t == "false" || t == "0" || t == "no" || t == "off") return false;
  throw ConfigError("config key '" + key + "': not a boolean: '" + text + "'");
}

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return std::nan("");
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// Sample standard deviation; 0 for fewer than two values.
double std_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

}  // namespace

// ---------------------------------------------------------------- config

KeyValueConfig KeyValueConfig::parse(std::istream& in) {
  KeyValueConfig cfg;
  std::string line;
  std::string section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("config line " + std::to_string(lineno) + ": bad section header");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(lineno) + ": expected 'key = value'");
    }
    std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
    if (!section.empty()) key = section + "." + key;
    if (cfg.values_.contains(key)) {
      throw ConfigError("config line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
    }
    cfg.values_[key] = trim(line.substr(eq + 1));
  }
  return cfg;
}

KeyValueConfig KeyValueConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  return parse(in);
}

std::string KeyValueConfig::get(const std::string& key, const std::string& fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

double KeyValueConfig::get_double(const std::string& key, double fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : parse_double(key, it->second);
}

std::int64_t KeyValueConfig::get_int(const std::string& key, std::int64_t fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : parse_int(key, it->second);
}

bool KeyValueConfig::get_bool(const std::string& key, bool fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : parse_bool(key, it->second);
}

std::vector<double> KeyValueConfig::get_doubles(const std::string& key, const std::vector<double>& fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  std::vector<double> out;
  for (const std::string& item : split_list(it->second)) out.push_back(parse_double(key, item));
  return out;
}

void KeyValueConfig::require_known(const std::vector<std::string>& known) const {
  const std::set<std::string> allowed(known.begin(), known.end());
  for (const auto& [key, value] : values_) {
    if (!allowed.contains(key)) throw ConfigError("unknown config key '" + key + "'");
  }
}

void ExperimentConfig::validate() const {
  if (subset_size < 1) throw ConfigError("experiment.subset_size must be >= 1");
  if (trials < 1) throw ConfigError("experiment.trials must be >= 1");
  if (eval_every < 1) throw ConfigError("experiment.eval_every must be >= 1");
  if (test_limit < 0) throw ConfigError("experiment.test_limit must be >= 0");
  if (hidden.empty()) throw ConfigError("model.hidden needs at least one layer");
  for (Index h : hidden) {
    if (h < 1) throw ConfigError("model.hidden sizes must be >= 1");
  }
  if (!dropout.empty() && dropout.size() != hidden.size()) {
    throw ConfigError("model.dropout needs one rate per hidden layer");
  }
  if (!batchnorm.empty() && batchnorm.size() != hidden.size()) {
    throw ConfigError("model.batchnorm needs one flag per hidden layer");
  }
  if (!(optimizer.lr > 0.0) || !std::isfinite(optimizer.lr)) throw ConfigError("optimizer.lr must be > 0");
  if (!(optimizer.momentum >= 0.0 && optimizer.momentum < 1.0)) {
    throw ConfigError("optimizer.momentum must be in [0, 1)");
  }
  if (optimizer.batch_size < 1) throw ConfigError("optimizer.batch_size must be >= 1");
  if (optimizer.steps < 1) throw ConfigError("optimizer.steps must be >= 1");
  if (!(reg_batch_ratio > 0.0)) throw ConfigError("reg.batch_ratio must be > 0");
  if (pool_size < 1) throw ConfigError("sampler.pool_size must be >= 1");
  if (dataset == DatasetKind::Blobs && !(blob_test_fraction > 0.0 && blob_test_fraction < 1.0)) {
    throw ConfigError("dataset.test_fraction must be in (0, 1)");
  }
  try {
    effective_reg().validate();
    sampler.validate();
  } catch (const ContractError& e) {
    throw ConfigError(e.what());
  }
}

MlpSpec ExperimentConfig::mlp_spec(Index input_dim, int classes) const {
  MlpSpec spec;
  spec.layer_dims.push_back(input_dim);
  spec.layer_dims.insert(spec.layer_dims.end(), hidden.begin(), hidden.end());
  spec.layer_dims.push_back(classes);
  spec.dropout = dropout;
  spec.batchnorm = batchnorm;
  spec.validate();
  return spec;
}

RegConfig ExperimentConfig::effective_reg() const {
  RegConfig r = reg;
  r.reg_batch_size = std::max<Index>(
      1, static_cast<Index>(std::llround(reg_batch_ratio * static_cast<double>(optimizer.batch_size))));
  return r;
}

ExperimentConfig parse_experiment_config(const KeyValueConfig& kv) {
  kv.require_known({"dataset.kind",         "dataset.dir",         "dataset.classes",
                    "dataset.per_class",    "dataset.dim",         "dataset.centre_spread",
                    "dataset.noise",        "dataset.test_fraction",
                    "experiment.subset_size", "experiment.trials", "experiment.seed",
                    "experiment.eval_every", "experiment.test_limit",
                    "model.hidden",         "model.dropout",       "model.batchnorm",
                    "optimizer.lr",         "optimizer.momentum",  "optimizer.batch_size",
                    "optimizer.steps",
                    "reg.kind",             "reg.lambda",          "reg.batch_ratio",
                    "reg.sobolev_step",     "reg.weight_decay",    "reg.sobolev_direction_seed",
                    "sampler.kind",         "sampler.mean",        "sampler.variance",
                    "sampler.bandwidth_inflation", "sampler.pool_size",
                    "output.csv",           "output.summary",      "output.checkpoint_dir",
                    "output.wall_time"});
  ExperimentConfig c;
  const std::string kind = kv.get("dataset.kind", "mnist");
  if (kind == "mnist") {
    c.dataset = DatasetKind::Mnist;
  } else if (kind == "blobs") {
    c.dataset = DatasetKind::Blobs;
  } else {
    throw ConfigError("dataset.kind must be mnist or blobs, got '" + kind + "'");
  }
  c.data_dir = kv.get("dataset.dir", "");
  c.blobs.classes = static_cast<int>(kv.get_int("dataset.classes", c.blobs.classes));
  c.blobs.per_class = static_cast<int>(kv.get_int("dataset.per_class", c.blobs.per_class));
  c.blobs.dim = static_cast<int>(kv.get_int("dataset.dim", c.blobs.dim));
  c.blobs.centre_spread = kv.get_double("dataset.centre_spread", c.blobs.centre_spread);
  c.blobs.noise = kv.get_double("dataset.noise", c.blobs.noise);
  c.blob_test_fraction = kv.get_double("dataset.test_fraction", c.blob_test_fraction);

  c.subset_size = kv.get_int("experiment.subset_size", c.subset_size);
  c.trials = static_cast<int>(kv.get_int("experiment.trials", c.trials));
  const std::int64_t seed = kv.get_int("experiment.seed", static_cast<std::int64_t>(c.seed));
  if (seed < 0) throw ConfigError("experiment.seed must be >= 0");
  c.seed = static_cast<std::uint64_t>(seed);
  c.eval_every = static_cast<int>(kv.get_int("experiment.eval_every", c.eval_every));
  c.test_limit = kv.get_int("experiment.test_limit", c.test_limit);

  if (kv.contains("model.hidden")) {
    c.hidden.clear();
    for (const std::string& item : split_list(kv.get("model.hidden", ""))) {
      c.hidden.push_back(parse_int("model.hidden", item));
    }
  }
  c.dropout = kv.get_doubles("model.dropout", {});
  if (kv.contains("model.batchnorm")) {
    for (const std::string& item : split_list(kv.get("model.batchnorm", ""))) {
      c.batchnorm.push_back(parse_bool("model.batchnorm", item));
    }
  }

  c.optimizer.lr = kv.get_double("optimizer.lr", c.optimizer.lr);
  c.optimizer.momentum = kv.get_double("optimizer.momentum", c.optimizer.momentum);
  c.optimizer.batch_size = kv.get_int("optimizer.batch_size", c.optimizer.batch_size);
  c.optimizer.steps = static_cast<int>(kv.get_int("optimizer.steps", c.optimizer.steps));

  try {
    c.reg.kind = reg_kind_from_string(kv.get("reg.kind", to_string(c.reg.kind)));
    c.sampler.kind = sampler_kind_from_string(kv.get("sampler.kind", to_string(c.sampler.kind)));
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  c.reg.lambda = kv.get_double("reg.lambda", c.reg.lambda);
  c.reg_batch_ratio = kv.get_double("reg.batch_ratio", c.reg_batch_ratio);
  c.reg.sobolev_step = kv.get_double("reg.sobolev_step", c.reg.sobolev_step);
  c.reg.weight_decay = kv.get_double("reg.weight_decay", c.reg.weight_decay);
  if (kv.contains("reg.sobolev_direction_seed")) {
    const std::int64_t s = kv.get_int("reg.sobolev_direction_seed", 0);
    if (s < 0) throw ConfigError("reg.sobolev_direction_seed must be >= 0");
    c.reg.sobolev_direction_seed = static_cast<std::uint64_t>(s);
  }

  c.sampler.mean = kv.get_double("sampler.mean", c.sampler.mean);
  c.sampler.variance = kv.get_double("sampler.variance", c.sampler.variance);
  c.sampler.bandwidth_inflation = kv.get_double("sampler.bandwidth_inflation", c.sampler.bandwidth_inflation);
  c.pool_size = kv.get_int("sampler.pool_size", c.pool_size);

  c.output_csv = kv.get("output.csv", "");
  c.summary_csv = kv.get("output.summary", "");
  c.checkpoint_dir = kv.get("output.checkpoint_dir", "");
  c.log_wall_time = kv.get_bool("output.wall_time", false);
  c.validate();
  return c;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  return parse_experiment_config(KeyValueConfig::load(path));
}

std::filesystem::path resolve_data_dir(const std::filesystem::path& configured) {
  if (!configured.empty()) return configured;
  if (const char* env = std::getenv(kDataDirEnv); env != nullptr && *env != '\0') return env;
  return std::filesystem::path("data") / "mnist5k";
}

// ---------------------------------------------------------------- experiment

int MetricLog::diverged_count() const {
  return static_cast<int>(std::count_if(trials.begin(), trials.end(), [](const TrialOutcome& t) { return t.diverged; }));
}

double MetricLog::mean_final_test_error() const {
  std::vector<double> errors;
  for (const TrialOutcome& t : trials) {
    if (!t.diverged) errors.push_back(t.final_test_error);
  }
  return mean_of(errors);
}

TrainTestData load_experiment_data(const ExperimentConfig& config) {
  if (config.dataset == DatasetKind::Mnist) {
    const auto dir = resolve_data_dir(config.data_dir);
    TrainTestData data{load_mnist_idx(dir / "train-images-idx3-ubyte", dir / "train-labels-idx1-ubyte"),
                       load_mnist_idx(dir / "t10k-images-idx3-ubyte", dir / "t10k-labels-idx1-ubyte")};
    return data;
  }
  const Dataset all = make_blobs(config.blobs, config.seed);
  Rng rng = make_rng(config.seed, 0x5b17);
  const std::vector<Index> order = permutation(all.size(), rng);
  const auto n_test = static_cast<std::size_t>(
      std::llround(config.blob_test_fraction * static_cast<double>(all.size())));
  if (n_test == 0 || n_test >= order.size()) throw ConfigError("dataset.test_fraction leaves an empty split");
  const std::vector<Index> test_rows(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_test));
  const std::vector<Index> train_rows(order.begin() + static_cast<std::ptrdiff_t>(n_test), order.end());
  return {all.subset(train_rows), all.subset(test_rows)};
}

double test_error(const Parameters& params, const MlpSpec& spec, const Dataset& test) {
  if (test.size() == 0) throw ContractError("test_error: empty test set");
  constexpr Index kChunk = 1024;
  Index wrong = 0;
  for (Index start = 0; start < test.size(); start += kChunk) {
    const Index n = std::min(kChunk, test.size() - start);
    const Tensor logits = forward(params, spec, test.x.middleRows(start, n), Mode::Eval);
    for (Index i = 0; i < n; ++i) {
      Index arg = 0;
      logits.row(i).maxCoeff(&arg);
      if (static_cast<int>(arg) != test.labels[static_cast<std::size_t>(start + i)]) ++wrong;
    }
  }
  return static_cast<double>(wrong) / static_cast<double>(test.size());
}

TrialOutcome run_trial(const ExperimentConfig& config, const TrainTestData& data, int trial,
                       std::vector<MetricRow>& rows, Parameters* final_params) {
  const Dataset& train = data.train;
  if (config.subset_size > train.size()) {
    throw ConfigError("experiment.subset_size exceeds the training set (" + std::to_string(train.size()) + ")");
  }
  const auto t_stream = static_cast<std::uint64_t>(trial);
  TrialOutcome outcome;
  outcome.trial = trial;

  // Subset and pool come from one permutation so they never overlap.
  Rng split_rng = make_rng(config.seed, (t_stream << 8) | 1);
  const std::vector<Index> order = permutation(train.size(), split_rng);
  outcome.subset.assign(order.begin(), order.begin() + config.subset_size);
  const Dataset subset = train.subset(outcome.subset);

  const RegConfig reg = config.effective_reg();
  Sampler sampler;
  if (reg.needs_sampler()) {
    if (config.sampler.kind == SamplerKind::Pool) {
      const Index available = train.size() - config.subset_size;
      if (available < 1) throw ConfigError("no rows left for the unlabeled pool");
      const Index n_pool = std::min(config.pool_size, available);
      outcome.pool.assign(order.begin() + config.subset_size, order.begin() + config.subset_size + n_pool);
      sampler = fit(config.sampler, train.subset(outcome.pool).x);
    } else {
      sampler = fit(config.sampler, subset.x);
    }
  }

  Dataset test = data.test;
  if (config.test_limit > 0 && config.test_limit < test.size()) {
    std::vector<Index> head(static_cast<std::size_t>(config.test_limit));
    std::iota(head.begin(), head.end(), Index{0});
    test = test.subset(head);
  }

  const int classes = std::max(train.classes, test.classes);
  const MlpSpec spec = config.mlp_spec(train.dim(), classes);
  Parameters params = init(spec, config.seed * 1000003ULL + t_stream);
  std::vector<Tensor> velocity;
  for (Tensor* t : trainable_tensors(params)) velocity.push_back(Tensor::Zero(t->rows(), t->cols()));

  Rng train_rng = make_rng(config.seed, (t_stream << 8) | 2);
  std::vector<Index> epoch_order;
  std::size_t cursor = 0;
  const Index batch = std::min(config.optimizer.batch_size, subset.size());
  const auto clock_start = std::chrono::steady_clock::now();

  double last_risk = 0.0;
  double last_penalty = 0.0;
  for (int step = 1; step <= config.optimizer.steps; ++step) {
    std::vector<Index> batch_rows;
    batch_rows.reserve(static_cast<std::size_t>(batch));
    while (static_cast<Index>(batch_rows.size()) < batch) {
      if (cursor == epoch_order.size()) {
        epoch_order = permutation(subset.size(), train_rng);
        cursor = 0;
      }
      batch_rows.push_back(epoch_order[cursor++]);
    }
    const Dataset mb = subset.subset(batch_rows);

    try {
      Tape tape;
      const ParamVars vars = bind(tape, params);
      BatchStats stats;
      const LossTerms terms = regularized_loss(tape, vars, params, spec, mb.x, mb.labels, reg,
                                               reg.needs_sampler() ? &sampler : nullptr, train_rng, &stats);
      if (terms.q_rows_drawn > 0) ++outcome.q_batches_drawn;
      last_risk = terms.risk.scalar();
      last_penalty = terms.penalty ? terms.penalty->scalar() : 0.0;
      if (!std::isfinite(terms.total.scalar())) throw NumericError("non-finite loss");
      const Gradients grads = backward(tape, terms.total);
      const std::vector<Var> leaves = trainable_vars(vars);
      std::vector<Tensor*> tensors = trainable_tensors(params);
      for (std::size_t k = 0; k < tensors.size(); ++k) {
        velocity[k] = config.optimizer.momentum * velocity[k] - config.optimizer.lr * grads.of(leaves[k]);
        *tensors[k] += velocity[k];
        if (!tensors[k]->allFinite()) throw NumericError("non-finite parameters");
      }
      update_running_stats(params, stats);
    } catch (const NumericError&) {
      outcome.diverged = true;
      outcome.steps_run = step;
      outcome.final_test_error = std::nan("");
      if (final_params != nullptr) *final_params = params;
      return outcome;
    }
    outcome.steps_run = step;

    if (step % config.eval_every == 0 || step == config.optimizer.steps) {
      MetricRow row;
      row.trial = trial;
      row.step = step;
      row.train_loss = last_risk;
      row.penalty = last_penalty;
      row.test_error = test_error(params, spec, test);
      row.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - clock_start).count();
      rows.push_back(row);
      outcome.final_test_error = row.test_error;
    }
  }

  if (!config.checkpoint_dir.empty()) {
    std::filesystem::create_directories(config.checkpoint_dir);
    std::ofstream out(config.checkpoint_dir / ("trial-" + std::to_string(trial) + ".params"));
    if (!out) throw std::runtime_error("cannot write checkpoint in " + config.checkpoint_dir.string());
    save_parameters(out, params);
  }
  if (final_params != nullptr) *final_params = std::move(params);
  return outcome;
}

MetricLog run_experiment(const ExperimentConfig& config, const TrainTestData& data) {
  config.validate();
  MetricLog log;
  for (int t = 0; t < config.trials; ++t) log.trials.push_back(run_trial(config, data, t, log.rows));
  return log;
}

MetricLog run_experiment(const ExperimentConfig& config) {
  config.validate();
  return run_experiment(config, load_experiment_data(config));
}

// ---------------------------------------------------------------- csv

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

void write_metric_csv(std::ostream& out, const MetricLog& log, bool with_wall_time) {
  out << "trial,step,train_loss,penalty,test_error" << (with_wall_time ? ",wall_time" : "") << '\n';
  for (const MetricRow& r : log.rows) {
    out << r.trial << ',' << r.step << ',' << format_double(r.train_loss) << ',' << format_double(r.penalty) << ','
        << format_double(r.test_error);
    if (with_wall_time) out << ',' << format_double(r.wall_time);
    out << '\n';
  }
}

void emit_csv(const MetricLog& log, const std::filesystem::path& path, bool with_wall_time) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_metric_csv(out, log, with_wall_time);
}

std::vector<MetricRow> parse_metric_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw FormatError("metric csv: missing header");
  const bool with_wall = line == "trial,step,train_loss,penalty,test_error,wall_time";
  if (!with_wall && line != "trial,step,train_loss,penalty,test_error") {
    throw FormatError("metric csv: unexpected header '" + line + "'");
  }
  std::vector<MetricRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) fields.push_back(f);
    if (fields.size() != (with_wall ? 6u : 5u)) throw FormatError("metric csv: bad row '" + line + "'");
    MetricRow r;
    try {
      r.trial = std::stoi(fields[0]);
      r.step = std::stoi(fields[1]);
      r.train_loss = std::stod(fields[2]);
      r.penalty = std::stod(fields[3]);
      r.test_error = std::stod(fields[4]);
      if (with_wall) r.wall_time = std::stod(fields[5]);
    } catch (const std::exception&) {
      throw FormatError("metric csv: bad number in '" + line + "'");
    }
    rows.push_back(r);
  }
  return rows;
}

void write_summary_csv(std::ostream& out, const std::vector<NamedLog>& logs) {
  out << "run,step,trials,train_loss_mean,train_loss_std,penalty_mean,test_error_mean,test_error_std\n";
  for (const NamedLog& named : logs) {
    const MetricLog& log = *named.log;
    std::set<int> ok;
    for (const TrialOutcome& t : log.trials) {
      if (!t.diverged) ok.insert(t.trial);
    }
    std::map<int, std::vector<const MetricRow*>> by_step;
    for (const MetricRow& r : log.rows) {
      if (ok.contains(r.trial)) by_step[r.step].push_back(&r);
    }
    for (const auto& [step, rs] : by_step) {
      std::vector<double> loss, pen, err;
      for (const MetricRow* r : rs) {
        loss.push_back(r->train_loss);
        pen.push_back(r->penalty);
        err.push_back(r->test_error);
      }
      out << named.name << ',' << step << ',' << rs.size() << ',' << format_double(mean_of(loss)) << ','
          << format_double(std_of(loss)) << ',' << format_double(mean_of(pen)) << ','
          << format_double(mean_of(err)) << ',' << format_double(std_of(err)) << '\n';
    }
  }
}

void emit_summary(const std::vector<NamedLog>& logs, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_summary_csv(out, logs);
}

void write_trials_csv(std::ostream& out, const MetricLog& log) {
  out << "trial,diverged,steps_run,final_test_error,q_batches\n";
  for (const TrialOutcome& t : log.trials) {
    out << t.trial << ',' << (t.diverged ? 1 : 0) << ',' << t.steps_run << ',' << format_double(t.final_test_error)
        << ',' << t.q_batches_drawn << '\n';
  }
}

}  // namespace fnorm

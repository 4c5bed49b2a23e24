#pragma once

#include <fnorm/dataset.hpp>
#include <fnorm/network.hpp>
#include <fnorm/regularizers.hpp>
#include <fnorm/samplers.hpp>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace fnorm {

/// Environment variable naming the default data directory.
inline constexpr const char* kDataDirEnv = "FNORM_DATA_DIR";

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Flat `key = value` map. `[section]` lines prefix the keys that follow
/// with `section.`; `#` starts a comment.
class KeyValueConfig {
 public:
  static KeyValueConfig parse(std::istream& in);
  static KeyValueConfig load(const std::filesystem::path& path);

  bool contains(const std::string& key) const { return values_.contains(key); }
  std::string get(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<double> get_doubles(const std::string& key, const std::vector<double>& fallback) const;
  void set(const std::string& key, const std::string& value) { values_[key] = value; }

  /// Throws ConfigError naming the first key not listed in `known`.
  void require_known(const std::vector<std::string>& known) const;

 private:
  std::map<std::string, std::string> values_;
};

enum class DatasetKind { Mnist, Blobs };

struct OptimizerConfig {
  double lr = 0.01;
  double momentum = 0.9;
  Index batch_size = 32;
  int steps = 5000;
};

/// One multi-trial training experiment.
struct ExperimentConfig {
  DatasetKind dataset = DatasetKind::Mnist;
  std::filesystem::path data_dir;  // empty: $FNORM_DATA_DIR, then ./data/mnist5k
  BlobSpec blobs;                  // DatasetKind::Blobs
  double blob_test_fraction = 0.5;

  Index subset_size = 100;
  int trials = 10;
  std::uint64_t seed = 1;
  int eval_every = 100;
  Index test_limit = 0;  // 0: whole test set

  std::vector<Index> hidden = {300, 100};
  std::vector<double> dropout;  // empty or one per hidden layer
  std::vector<bool> batchnorm;  // empty or one per hidden layer

  OptimizerConfig optimizer;
  RegConfig reg;
  double reg_batch_ratio = 1.0;  // reg batch = ratio * train batch
  SamplerSpec sampler;
  Index pool_size = 1000;  // unlabeled rows for the pool sampler

  std::filesystem::path output_csv;
  std::filesystem::path summary_csv;
  std::filesystem::path checkpoint_dir;
  bool log_wall_time = false;

  /// Throws ConfigError on invalid values.
  void validate() const;
  MlpSpec mlp_spec(Index input_dim, int classes) const;
  /// The training config with reg_batch_size derived from the ratio.
  RegConfig effective_reg() const;
};

ExperimentConfig parse_experiment_config(const KeyValueConfig& kv);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

/// Resolves the data directory: explicit, then $FNORM_DATA_DIR, then data/mnist5k.
std::filesystem::path resolve_data_dir(const std::filesystem::path& configured);

struct MetricRow {
  int trial = 0;
  int step = 0;
  double train_loss = 0.0;
  double penalty = 0.0;
  double test_error = 0.0;
  double wall_time = 0.0;

  bool operator==(const MetricRow&) const = default;
};

struct TrialOutcome {
  int trial = 0;
  bool diverged = false;
  int steps_run = 0;
  double final_test_error = 1.0;
  Index q_batches_drawn = 0;
  std::vector<Index> subset;  // training rows used by this trial
  std::vector<Index> pool;    // unlabeled rows of the pool sampler
};

struct MetricLog {
  std::vector<MetricRow> rows;
  std::vector<TrialOutcome> trials;

  int diverged_count() const;
  /// Mean final test error over trials that did not diverge.
  double mean_final_test_error() const;
};

struct TrainTestData {
  Dataset train;
  Dataset test;
};

TrainTestData load_experiment_data(const ExperimentConfig& config);

/// Runs every trial: draw the subset, fit the sampler, train with SGD +
/// momentum (fresh Q batch each step), record test error every eval_every
/// steps. A trial whose loss turns non-finite is marked diverged.
MetricLog run_experiment(const ExperimentConfig& config, const TrainTestData& data);
MetricLog run_experiment(const ExperimentConfig& config);

/// One trial; exposed for tests.
TrialOutcome run_trial(const ExperimentConfig& config, const TrainTestData& data, int trial,
                       std::vector<MetricRow>& rows, Parameters* final_params = nullptr);

/// Fraction of misclassified rows under the eval-mode network.
double test_error(const Parameters& params, const MlpSpec& spec, const Dataset& test);

// CSV output. Numbers use %.17g so a parse reproduces the values exactly.

void write_metric_csv(std::ostream& out, const MetricLog& log, bool with_wall_time = false);
void emit_csv(const MetricLog& log, const std::filesystem::path& path, bool with_wall_time = false);
std::vector<MetricRow> parse_metric_csv(std::istream& in);

struct NamedLog {
  std::string name;
  const MetricLog* log = nullptr;
};

/// Per (run, step): trial count, mean/std of train loss, penalty and test
/// error across non-diverged trials.
void write_summary_csv(std::ostream& out, const std::vector<NamedLog>& logs);
void emit_summary(const std::vector<NamedLog>& logs, const std::filesystem::path& path);

/// Per-trial outcomes: trial, diverged, steps_run, final_test_error, q_batches.
void write_trials_csv(std::ostream& out, const MetricLog& log);

std::string format_double(double value);

}  // namespace fnorm

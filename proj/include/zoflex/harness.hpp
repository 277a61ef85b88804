#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "zoflex/algorithms.hpp"
#include "zoflex/feeder.hpp"

namespace zoflex {

struct ProblemSpec {
  std::string type = "convex_case";  // convex_case | feeder
  std::uint64_t seed = 0;
  bool resample_per_trial = true;
  // convex_case
  std::size_t agents = 100;
  double curtail_kw = 1500.0;
  // feeder
  std::string file = "builtin:feeder15";
  double curtail_target = 0.15;
  double alpha_D = 20.0;
  double alpha_v = 20.0;
  double v_lo = 0.96;
  double v_hi = 1.04;
};

struct AlgorithmSetting {
  std::string label;
  std::variant<ZfgdConfig, RzfcdConfig> config;  // K is taken from the experiment budget
};

struct ExperimentConfig {
  std::string name = "experiment";
  ProblemSpec problem;
  std::vector<AlgorithmSetting> algorithms;
  std::size_t trials = 1;
  std::uint64_t base_seed = 0;
  std::size_t budget = 0;  // K
  std::vector<double> thresholds{0.05, 0.01, 0.001};
  std::optional<double> stationarity_M;  // defaults: 1/0.3 convex, 1/0.025 feeder
  std::size_t record_every = 0;          // 0 = automatic
  bool record_wall_time = false;
  // Start point when an algorithm setting gives no x0: anchor | lower | upper.
  std::string initial_point = "anchor";
  std::string output_dir = "results";
};

nlohmann::json to_json(const ExperimentConfig& cfg);
/// Validates everything, including schedules and the feeder reference,
/// before returning.
ExperimentConfig experiment_from_json(const nlohmann::json& j);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

/// Replaces base_seed with $ZOFLEX_SEED when it is set.
void apply_seed_override(ExperimentConfig& cfg);

/// Known recipes: convex_table2, nonconvex_feeder.
ExperimentConfig recipe(const std::string& name);

/// The problem instance for one trial. Instances depend on (problem seed,
/// trial) only, so every algorithm setting sees the same instance per trial.
Problem build_problem(const ProblemSpec& spec, std::size_t trial);
double default_stationarity_M(const ProblemSpec& spec);
/// Resolves "anchor", "lower" or "upper" against the problem's box.
Vector resolve_initial_point(const Problem& problem, const std::string& which);

struct TrialResult {
  std::string setting;
  std::size_t trial = 0;
  std::filesystem::path trace_path;
  std::vector<std::optional<std::size_t>> achieved;  // per threshold
  double final_F = 0.0;
  double final_stationarity = 0.0;
  std::uint64_t queries = 0;
  std::size_t iterations = 0;
  std::size_t infeasible_points = 0;
  std::optional<double> F_star;
};

struct TrialFailure {
  std::string setting;
  std::size_t trial = 0;
  std::string message;
};

struct RunOptions {
  std::size_t jobs = 0;  // 0 = hardware concurrency
  std::optional<std::filesystem::path> output_dir;  // overrides the config
  bool write_files = true;
  bool keep_traces = false;
};

struct ExperimentResult {
  SummaryTable summary;
  std::vector<TrialResult> trials;      // setting-major, trial-minor
  std::vector<TrialFailure> failures;
  std::vector<std::vector<Trace>> traces;  // [setting][trial], only with keep_traces
  bool ok() const { return failures.empty(); }
};

/// Runs every (setting, trial) pair on a worker pool. Files written:
/// <out>/<setting>/trial_NNN.csv, <out>/<setting>/aggregate.csv,
/// <out>/summary.json, <out>/summary.txt and, if any trial aborted,
/// <out>/failures.json.
ExperimentResult run_experiment(const ExperimentConfig& config, const RunOptions& options = {});

/// Streams trace rows to CSV `k,F,rel_err,stat_norm,queries,wall_s`, writing
/// whole lines only.
class TraceCsvWriter {
 public:
  explicit TraceCsvWriter(const std::filesystem::path& path);
  ~TraceCsvWriter();
  TraceCsvWriter(const TraceCsvWriter&) = delete;
  TraceCsvWriter& operator=(const TraceCsvWriter&) = delete;

  void write(const TraceRow& row);
  void flush();

 private:
  std::FILE* file_;
  std::string buffer_;
};

std::vector<TraceRow> read_trace_csv(const std::filesystem::path& path);
std::string format_double(double v);

struct VerifyCheck {
  std::string name;
  double measured = 0.0;
  double bound = 0.0;
  bool pass = false;
};

/// Estimator, geometry and power-flow self-checks.
std::vector<VerifyCheck> verify(std::uint64_t seed = 0);
nlohmann::json to_json(const std::vector<VerifyCheck>& checks);

}  // namespace zoflex

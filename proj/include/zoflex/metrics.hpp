#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "zoflex/problem.hpp"

namespace zoflex {

/// Norm of the gradient mapping M (x - P_X[x - grad / M]).
double stationarity(const FeasibleSet& set, const Vector& x, const Vector& gradient, double M);
/// Same, with the exact gradient of F taken from the problem.
double stationarity(const Problem& problem, const Vector& x, double M);

/// (F - F*) / F*, or nothing when F* <= tol.
std::optional<double> relative_error(double F, double F_star, double tol = 1e-12);

struct TraceRow {
  std::size_t k = 0;
  double F = 0.0;
  std::optional<double> rel_err;
  double stat_norm = 0.0;
  std::uint64_t queries = 0;  // cumulative phi queries by the algorithm
  double wall_s = 0.0;
};

struct Trace {
  std::vector<TraceRow> rows;
  Vector final_x;
  std::size_t iterations = 0;
  std::uint64_t queries = 0;
  // Iterates and probe points outside X, checked with zero tolerance.
  std::size_t infeasible_points = 0;
};

struct RecordOptions {
  double stationarity_M = 1.0;
  std::optional<double> F_star;
  /// 0 picks every iteration for d <= 200 and every 10th above.
  std::size_t record_every = 0;
  bool wall_time = false;
  /// Called once per recorded row, in order.
  std::function<void(const TraceRow&)> sink;
};

/// Builds a Trace from evaluation-only access to the problem. Rows are
/// written at k = 0, at every `record_every`-th iteration, and at k = K.
class TraceRecorder {
 public:
  TraceRecorder(Problem& problem, RecordOptions options, std::size_t budget);

  bool due(std::size_t k) const { return k == 0 || k == budget_ || k % every_ == 0; }
  void record(std::size_t k, const Vector& x, std::uint64_t queries);
  void audit(const Vector& point);
  Trace finish(Vector x, std::size_t iterations, std::uint64_t queries);

 private:
  Problem* problem_;
  RecordOptions options_;
  std::size_t budget_;
  std::size_t every_;
  Trace trace_;
  std::chrono::steady_clock::time_point start_;
};

/// Smallest recorded k with RE(k) <= threshold.
std::optional<std::size_t> iterations_to_threshold(const Trace& trace, double threshold);
std::optional<std::size_t> iterations_to_threshold(const std::vector<TraceRow>& rows, double threshold);

struct ThresholdCell {
  double threshold = 0.0;
  std::optional<double> mean_iterations;  // over achieving trials only
  std::size_t achieved = 0;
  std::size_t trials = 0;
  double proportion() const { return trials == 0 ? 0.0 : static_cast<double>(achieved) / static_cast<double>(trials); }
};

struct SummaryRow {
  std::string setting;
  std::vector<ThresholdCell> cells;
};

struct SummaryTable {
  std::vector<double> thresholds;
  std::size_t budget = 0;
  std::vector<SummaryRow> rows;

  std::string to_text() const;
  nlohmann::json to_json() const;
};

/// Per-threshold mean iterations among trials reaching it within `budget`,
/// and the fraction that did.
SummaryRow summarize(const std::string& setting, const std::vector<std::vector<TraceRow>>& traces,
                     const std::vector<double>& thresholds, std::size_t budget);
SummaryRow summarize(const std::string& setting, const std::vector<Trace>& traces,
                     const std::vector<double>& thresholds, std::size_t budget);

struct ColumnStats {
  double mean = 0.0;
  double stddev = 0.0;
  double p5 = 0.0;
  double p50 = 0.0;
  double p95 = 0.0;
};

/// Linear-interpolation percentile, q in [0, 1].
double percentile(std::vector<double> values, double q);
ColumnStats column_stats(const std::vector<double>& values);

struct AggregateRow {
  std::size_t k = 0;
  ColumnStats F;
  ColumnStats stat_norm;
  std::optional<ColumnStats> rel_err;
};

/// Cross-trial statistics at each k recorded by every trace.
std::vector<AggregateRow> aggregate(const std::vector<std::vector<TraceRow>>& traces);

}  // namespace zoflex

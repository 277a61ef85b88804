#include "zoflex/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <numeric>
#include <sstream>

namespace zoflex {

double stationarity(const FeasibleSet& set, const Vector& x, const Vector& gradient, double M) {
  if (!(M > 0.0)) throw ParameterError("stationarity constant M must be positive");
  return (M * (x - set.project(x - gradient / M))).norm();
}

double stationarity(const Problem& problem, const Vector& x, double M) {
  return stationarity(problem.feasible(), x, problem.exact_gradient(x), M);
}

std::optional<double> relative_error(double F, double F_star, double tol) {
  if (!(F_star > tol)) return std::nullopt;
  return (F - F_star) / F_star;
}

// ---------------------------------------------------------------------------

TraceRecorder::TraceRecorder(Problem& problem, RecordOptions options, std::size_t budget)
    : problem_(&problem), options_(std::move(options)), budget_(budget), start_(std::chrono::steady_clock::now()) {
  every_ = options_.record_every != 0 ? options_.record_every : (problem.dimension() <= 200 ? 1 : 10);
}

void TraceRecorder::record(std::size_t k, const Vector& x, std::uint64_t queries) {
  TraceRow row;
  row.k = k;
  row.F = problem_->eval_F(x);
  if (options_.F_star) row.rel_err = relative_error(row.F, *options_.F_star);
  row.stat_norm =
      problem_->has_exact_gradient() ? stationarity(*problem_, x, options_.stationarity_M) : std::nan("");
  row.queries = queries;
  if (options_.wall_time) {
    row.wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }
  if (options_.sink) options_.sink(row);
  trace_.rows.push_back(row);
}

void TraceRecorder::audit(const Vector& point) {
  if (!problem_->feasible().contains(point, 0.0)) ++trace_.infeasible_points;
}

Trace TraceRecorder::finish(Vector x, std::size_t iterations, std::uint64_t queries) {
  trace_.final_x = std::move(x);
  trace_.iterations = iterations;
  trace_.queries = queries;
  return std::move(trace_);
}

// ---------------------------------------------------------------------------

std::optional<std::size_t> iterations_to_threshold(const std::vector<TraceRow>& rows, double threshold) {
  for (const TraceRow& row : rows) {
    if (row.rel_err && *row.rel_err <= threshold) return row.k;
  }
  return std::nullopt;
}

std::optional<std::size_t> iterations_to_threshold(const Trace& trace, double threshold) {
  return iterations_to_threshold(trace.rows, threshold);
}

SummaryRow summarize(const std::string& setting, const std::vector<std::vector<TraceRow>>& traces,
                     const std::vector<double>& thresholds, std::size_t budget) {
  if (traces.empty()) throw PreconditionError("summarize needs at least one trace");
  SummaryRow out{setting, {}};
  for (const double eps : thresholds) {
    ThresholdCell cell;
    cell.threshold = eps;
    cell.trials = traces.size();
    double total = 0.0;
    for (const auto& rows : traces) {
      const auto k = iterations_to_threshold(rows, eps);
      if (k && *k <= budget) {
        ++cell.achieved;
        total += static_cast<double>(*k);
      }
    }
    if (cell.achieved > 0) cell.mean_iterations = total / static_cast<double>(cell.achieved);
    out.cells.push_back(cell);
  }
  return out;
}

SummaryRow summarize(const std::string& setting, const std::vector<Trace>& traces,
                     const std::vector<double>& thresholds, std::size_t budget) {
  std::vector<std::vector<TraceRow>> rows;
  rows.reserve(traces.size());
  for (const Trace& t : traces) rows.push_back(t.rows);
  return summarize(setting, rows, thresholds, budget);
}

namespace {

std::string format_threshold(double eps) {
  std::ostringstream os;
  os << eps * 100.0 << "%";
  return os.str();
}

std::string format_cell(const ThresholdCell& c) {
  std::ostringstream os;
  if (c.mean_iterations) {
    os << std::fixed << std::setprecision(1) << *c.mean_iterations << "/" << std::setprecision(0)
       << c.proportion() * 100.0 << "%";
  } else {
    os << "N/A";
  }
  return os.str();
}

}  // namespace

std::string SummaryTable::to_text() const {
  std::vector<std::vector<std::string>> cells;
  std::vector<std::string> header{"setting"};
  for (const double eps : thresholds) header.push_back(format_threshold(eps));
  cells.push_back(header);
  for (const SummaryRow& row : rows) {
    std::vector<std::string> line{row.setting};
    for (const ThresholdCell& c : row.cells) line.push_back(format_cell(c));
    cells.push_back(line);
  }
  std::vector<std::size_t> width(header.size(), 0);
  for (const auto& line : cells) {
    for (std::size_t j = 0; j < line.size() && j < width.size(); ++j) width[j] = std::max(width[j], line[j].size());
  }
  std::ostringstream os;
  os << "iterations to relative error (mean over achieving trials / proportion), budget " << budget << "\n";
  for (const auto& line : cells) {
    for (std::size_t j = 0; j < line.size(); ++j) {
      if (j == 0) {
        os << std::left << std::setw(static_cast<int>(width[j])) << line[j];
      } else {
        os << "  " << std::right << std::setw(static_cast<int>(width[j])) << line[j];
      }
    }
    os << "\n";
  }
  return os.str();
}

nlohmann::json SummaryTable::to_json() const {
  nlohmann::json j;
  j["budget"] = budget;
  j["thresholds"] = thresholds;
  j["rows"] = nlohmann::json::array();
  for (const SummaryRow& row : rows) {
    nlohmann::json r;
    r["setting"] = row.setting;
    r["cells"] = nlohmann::json::array();
    for (const ThresholdCell& c : row.cells) {
      nlohmann::json cell;
      cell["threshold"] = c.threshold;
      cell["mean_iterations"] = c.mean_iterations ? nlohmann::json(*c.mean_iterations) : nlohmann::json("N/A");
      cell["achieved"] = c.achieved;
      cell["trials"] = c.trials;
      cell["proportion"] = c.proportion();
      r["cells"].push_back(cell);
    }
    j["rows"].push_back(r);
  }
  return j;
}

// ---------------------------------------------------------------------------

double percentile(std::vector<double> values, double q) {
  if (values.empty()) throw PreconditionError("percentile of an empty sample");
  std::sort(values.begin(), values.end());
  const double pos = std::clamp(q, 0.0, 1.0) * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

ColumnStats column_stats(const std::vector<double>& values) {
  if (values.empty()) throw PreconditionError("statistics of an empty sample");
  ColumnStats s;
  const double n = static_cast<double>(values.size());
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double ss = 0.0;
  for (const double v : values) ss += (v - s.mean) * (v - s.mean);
  s.stddev = values.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  s.p5 = percentile(values, 0.05);
  s.p50 = percentile(values, 0.50);
  s.p95 = percentile(values, 0.95);
  return s;
}

std::vector<AggregateRow> aggregate(const std::vector<std::vector<TraceRow>>& traces) {
  if (traces.empty()) return {};
  std::map<std::size_t, std::vector<const TraceRow*>> by_k;
  for (const auto& rows : traces) {
    for (const TraceRow& row : rows) by_k[row.k].push_back(&row);
  }
  std::vector<AggregateRow> out;
  for (const auto& [k, rows] : by_k) {
    if (rows.size() != traces.size()) continue;
    std::vector<double> F, stat, re;
    for (const TraceRow* row : rows) {
      F.push_back(row->F);
      stat.push_back(row->stat_norm);
      if (row->rel_err) re.push_back(*row->rel_err);
    }
    AggregateRow agg;
    agg.k = k;
    agg.F = column_stats(F);
    agg.stat_norm = column_stats(stat);
    if (re.size() == rows.size()) agg.rel_err = column_stats(re);
    out.push_back(agg);
  }
  return out;
}

}  // namespace zoflex

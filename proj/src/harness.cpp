#include "zoflex/harness.hpp"

#include <atomic>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "zoflex/estimators.hpp"

namespace zoflex {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// Config

namespace {

json setting_to_json(const AlgorithmSetting& s) {
  json j = std::visit([](const auto& cfg) { return to_json(cfg); }, s.config);
  j.erase("K");
  j["label"] = s.label;
  return j;
}

AlgorithmSetting setting_from_json(const json& j, std::size_t budget) {
  AlgorithmSetting s;
  s.label = j.at("label").get<std::string>();
  if (s.label.empty()) throw ParameterError("algorithm label must not be empty");
  json body = j;
  body["K"] = budget;
  const auto algorithm = j.at("algorithm").get<std::string>();
  if (algorithm == "2zfgd") {
    ZfgdConfig cfg = zfgd_config_from_json(body);
    // Schedules are checked over the whole budget before any trial starts.
    for (std::size_t k = 0; k < budget; k += std::max<std::size_t>(1, budget / 1000)) {
      check_shrink_factor(cfg.shrink(k));
      if (!(cfg.radius(k) > 0.0)) throw ParameterError("2-ZFGD radius schedule must stay positive");
    }
    check_shrink_factor(cfg.shrink.supremum());
    s.config = cfg;
  } else if (algorithm == "rzfcd") {
    s.config = rzfcd_config_from_json(body);
  } else {
    throw ParameterError("unknown algorithm \"" + algorithm + "\" (expected 2zfgd or rzfcd)");
  }
  return s;
}

json problem_to_json(const ProblemSpec& p) {
  json j;
  j["type"] = p.type;
  j["seed"] = p.seed;
  j["resample_per_trial"] = p.resample_per_trial;
  if (p.type == "convex_case") {
    j["agents"] = p.agents;
    j["curtail_kw"] = p.curtail_kw;
  } else {
    j["file"] = p.file;
    j["curtail_target"] = p.curtail_target;
    j["alpha_D"] = p.alpha_D;
    j["alpha_v"] = p.alpha_v;
    j["v_lo"] = p.v_lo;
    j["v_hi"] = p.v_hi;
  }
  return j;
}

ProblemSpec problem_from_json(const json& j) {
  ProblemSpec p;
  p.type = j.at("type").get<std::string>();
  p.seed = j.value("seed", p.seed);
  p.resample_per_trial = j.value("resample_per_trial", p.resample_per_trial);
  if (p.type == "convex_case") {
    p.agents = j.value("agents", p.agents);
    p.curtail_kw = j.value("curtail_kw", p.curtail_kw);
    if (p.agents == 0) throw ParameterError("convex_case needs at least one agent");
  } else if (p.type == "feeder") {
    p.file = j.value("file", p.file);
    p.curtail_target = j.value("curtail_target", p.curtail_target);
    p.alpha_D = j.value("alpha_D", p.alpha_D);
    p.alpha_v = j.value("alpha_v", p.alpha_v);
    p.v_lo = j.value("v_lo", p.v_lo);
    p.v_hi = j.value("v_hi", p.v_hi);
    if (!(p.v_lo < p.v_hi)) throw ParameterError("feeder voltage band needs v_lo < v_hi");
    if (p.file.rfind("builtin:", 0) != 0 && !fs::exists(p.file)) {
      throw ParameterError("feeder file not found: " + p.file);
    }
  } else {
    throw ParameterError("unknown problem type \"" + p.type + "\" (expected convex_case or feeder)");
  }
  return p;
}

}  // namespace

json to_json(const ExperimentConfig& cfg) {
  json j;
  j["name"] = cfg.name;
  j["problem"] = problem_to_json(cfg.problem);
  j["algorithms"] = json::array();
  for (const auto& s : cfg.algorithms) j["algorithms"].push_back(setting_to_json(s));
  j["trials"] = cfg.trials;
  j["base_seed"] = cfg.base_seed;
  j["budget"] = cfg.budget;
  j["thresholds"] = cfg.thresholds;
  if (cfg.stationarity_M) j["stationarity_M"] = *cfg.stationarity_M;
  j["record_every"] = cfg.record_every;
  j["record_wall_time"] = cfg.record_wall_time;
  j["initial_point"] = cfg.initial_point;
  j["output_dir"] = cfg.output_dir;
  return j;
}

ExperimentConfig experiment_from_json(const json& j) {
  try {
    ExperimentConfig cfg;
    cfg.name = j.value("name", cfg.name);
    cfg.problem = problem_from_json(j.at("problem"));
    cfg.trials = j.value("trials", cfg.trials);
    cfg.base_seed = j.value("base_seed", cfg.base_seed);
    cfg.budget = j.at("budget").get<std::size_t>();
    cfg.thresholds = j.value("thresholds", cfg.thresholds);
    if (j.contains("stationarity_M")) cfg.stationarity_M = j.at("stationarity_M").get<double>();
    cfg.record_every = j.value("record_every", cfg.record_every);
    cfg.record_wall_time = j.value("record_wall_time", cfg.record_wall_time);
    cfg.initial_point = j.value("initial_point", cfg.initial_point);
    if (cfg.initial_point != "anchor" && cfg.initial_point != "lower" && cfg.initial_point != "upper") {
      throw ParameterError("initial_point must be anchor, lower or upper");
    }
    cfg.output_dir = j.value("output_dir", cfg.output_dir);
    if (cfg.trials == 0) throw ParameterError("trials must be at least 1");
    if (cfg.stationarity_M && !(*cfg.stationarity_M > 0.0)) throw ParameterError("stationarity_M must be positive");
    for (const auto& a : j.at("algorithms")) cfg.algorithms.push_back(setting_from_json(a, cfg.budget));
    if (cfg.algorithms.empty()) throw ParameterError("config lists no algorithms");
    for (std::size_t a = 0; a < cfg.algorithms.size(); ++a) {
      for (std::size_t b = 0; b < a; ++b) {
        if (cfg.algorithms[a].label == cfg.algorithms[b].label) {
          throw ParameterError("duplicate algorithm label \"" + cfg.algorithms[a].label + "\"");
        }
      }
    }
    return cfg;
  } catch (const json::exception& e) {
    throw ParameterError(std::string("malformed experiment config: ") + e.what());
  }
}

ExperimentConfig load_experiment_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ParameterError("cannot open config " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("config is not valid JSON: ") + e.what(), 0);
  }
  return experiment_from_json(j);
}

void apply_seed_override(ExperimentConfig& cfg) {
  const char* env = std::getenv("ZOFLEX_SEED");
  if (env == nullptr || *env == '\0') return;
  std::uint64_t seed = 0;
  const char* end = env + std::char_traits<char>::length(env);
  const auto [ptr, ec] = std::from_chars(env, end, seed);
  if (ec != std::errc() || ptr != end) throw ParameterError(std::string("ZOFLEX_SEED is not an integer: ") + env);
  cfg.base_seed = seed;
}

ExperimentConfig recipe(const std::string& name) {
  ExperimentConfig cfg;
  cfg.name = name;
  if (name == "convex_table2") {
    cfg.problem.type = "convex_case";
    cfg.problem.seed = 1;
    cfg.trials = 50;
    cfg.budget = 20000;
    cfg.stationarity_M = 1.0 / 0.3;
    const Schedule radius = Schedule::capped_power(1.0, 1.1, 1e-3);
    const Schedule shrink = Schedule::inverse_sqrt(0.1);
    cfg.algorithms.push_back({"2zfgd_cs_eta1e-4", ZfgdConfig{0, Schedule::constant(1e-4), radius, shrink, {}}});
    cfg.algorithms.push_back({"2zfgd_ds_eta0_0.01", ZfgdConfig{0, Schedule::inverse_sqrt(0.01), radius, shrink, {}}});
    cfg.algorithms.push_back({"rzfcd_cs_eta0.3", RzfcdConfig{0, {Schedule::constant(0.3)}, {radius}, {}}});
    cfg.output_dir = "results/convex_table2";
  } else if (name == "nonconvex_feeder") {
    cfg.problem.type = "feeder";
    cfg.problem.seed = 1;
    cfg.trials = 100;
    cfg.budget = 20000;
    cfg.thresholds = {};
    cfg.stationarity_M = 1.0 / 0.025;
    const Schedule zfgd_radius = Schedule::capped_power(0.01, 1.1, 1e-5, 4000.0);
    cfg.algorithms.push_back(
        {"2zfgd_cs", ZfgdConfig{0, Schedule::constant(3e-6), zfgd_radius, Schedule::constant(0.005), {}}});
    cfg.algorithms.push_back({"2zfgd_ds", ZfgdConfig{0, Schedule::inverse_sqrt(3e-4, 1000.0), zfgd_radius,
                                                     Schedule::capped_power(50.0, 1.0, 0.1), {}}});
    cfg.algorithms.push_back({"rzfcd_cs", RzfcdConfig{0,
                                                      {Schedule::constant(0.025)},
                                                      {Schedule::capped_power(0.1, 1.2, 2e-4)},
                                                      {}}});
    cfg.output_dir = "results/nonconvex_feeder";
  } else {
    throw ParameterError("unknown recipe \"" + name + "\" (known: convex_table2, nonconvex_feeder)");
  }
  return cfg;
}

// ---------------------------------------------------------------------------
// Problem instances

namespace {

std::uint64_t instance_seed(const ProblemSpec& spec, std::size_t trial) {
  return spec.resample_per_trial ? derive_stream_seed(spec.seed, trial) : spec.seed;
}

}  // namespace

Problem build_problem(const ProblemSpec& spec, std::size_t trial) {
  if (spec.type == "convex_case") {
    return make_convex_case(draw_convex_case(instance_seed(spec, trial), spec.agents, spec.curtail_kw));
  }
  if (spec.type == "feeder") {
    auto net = std::make_shared<const RadialNetwork>(load_feeder(spec.file));
    FeederCaseOptions opts;
    opts.curtail_target = spec.curtail_target;
    opts.cost_seed = instance_seed(spec, trial);
    opts.alpha_D = spec.alpha_D;
    opts.alpha_v = spec.alpha_v;
    opts.v_lo = spec.v_lo;
    opts.v_hi = spec.v_hi;
    return make_feeder_case(std::move(net), opts);
  }
  throw ParameterError("unknown problem type \"" + spec.type + "\"");
}

double default_stationarity_M(const ProblemSpec& spec) {
  return spec.type == "feeder" ? 1.0 / 0.025 : 1.0 / 0.3;
}

Vector resolve_initial_point(const Problem& problem, const std::string& which) {
  if (which == "anchor") return problem.feasible().anchor();
  const auto* box = dynamic_cast<const BoxSet*>(&problem.feasible());
  if (box == nullptr) throw ConfigurationError("initial_point \"" + which + "\" needs a box feasible set");
  if (which == "lower") return box->lower();
  if (which == "upper") return box->upper();
  throw ParameterError("unknown initial_point \"" + which + "\"");
}

// ---------------------------------------------------------------------------
// CSV

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

TraceCsvWriter::TraceCsvWriter(const fs::path& path) : file_(std::fopen(path.string().c_str(), "wb")) {
  if (file_ == nullptr) throw std::runtime_error("cannot open trace file " + path.string());
  buffer_ = "k,F,rel_err,stat_norm,queries,wall_s\n";
  flush();
}

TraceCsvWriter::~TraceCsvWriter() {
  flush();
  std::fclose(file_);
}

void TraceCsvWriter::write(const TraceRow& row) {
  buffer_ += std::to_string(row.k);
  buffer_ += ',';
  buffer_ += format_double(row.F);
  buffer_ += ',';
  if (row.rel_err) buffer_ += format_double(*row.rel_err);
  buffer_ += ',';
  buffer_ += format_double(row.stat_norm);
  buffer_ += ',';
  buffer_ += std::to_string(row.queries);
  buffer_ += ',';
  buffer_ += format_double(row.wall_s);
  buffer_ += '\n';
  if (buffer_.size() >= (1u << 14)) flush();
}

void TraceCsvWriter::flush() {
  if (!buffer_.empty()) {
    std::fwrite(buffer_.data(), 1, buffer_.size(), file_);
    buffer_.clear();
  }
  std::fflush(file_);
}

std::vector<TraceRow> read_trace_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open trace " + path.string(), 0);
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line) || line != "k,F,rel_err,stat_norm,queries,wall_s") {
    throw ParseError("trace header must be k,F,rel_err,stat_norm,queries,wall_s", 1);
  }
  std::vector<TraceRow> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (!line.empty() && line.back() == ',') f.emplace_back();
    if (f.size() != 6) throw ParseError("expected 6 trace fields", line_no);
    try {
      TraceRow row;
      row.k = std::stoull(f[0]);
      row.F = std::stod(f[1]);
      if (!f[2].empty()) row.rel_err = std::stod(f[2]);
      row.stat_norm = std::stod(f[3]);
      row.queries = std::stoull(f[4]);
      row.wall_s = std::stod(f[5]);
      rows.push_back(row);
    } catch (const std::logic_error&) {
      throw ParseError("unparsable trace row", line_no);
    }
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Orchestration

namespace {

std::string directory_name(const std::string& label) {
  std::string out;
  for (const char c : label) {
    out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.') ? c : '_';
  }
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

void write_aggregate_csv(const fs::path& path, const std::vector<AggregateRow>& rows) {
  std::string s = "k";
  for (const char* col : {"F", "stat_norm", "rel_err"}) {
    for (const char* stat : {"mean", "std", "p5", "p50", "p95"}) s += std::string(",") + col + "_" + stat;
  }
  s += '\n';
  const auto put = [&s](const std::optional<ColumnStats>& c) {
    for (const double v : {c ? c->mean : NAN, c ? c->stddev : NAN, c ? c->p5 : NAN, c ? c->p50 : NAN,
                           c ? c->p95 : NAN}) {
      s += ',';
      if (c) s += format_double(v);
    }
  };
  for (const AggregateRow& r : rows) {
    s += std::to_string(r.k);
    put(r.F);
    put(r.stat_norm);
    put(r.rel_err);
    s += '\n';
  }
  write_text(path, s);
}

json trial_to_json(const TrialResult& t, const std::vector<double>& thresholds) {
  json j;
  j["setting"] = t.setting;
  j["trial"] = t.trial;
  j["trace"] = t.trace_path.generic_string();
  j["final_F"] = t.final_F;
  j["final_stationarity"] = t.final_stationarity;
  j["queries"] = t.queries;
  j["iterations"] = t.iterations;
  j["infeasible_points"] = t.infeasible_points;
  j["F_star"] = t.F_star ? json(*t.F_star) : json(nullptr);
  json achieved = json::object();
  for (std::size_t i = 0; i < thresholds.size() && i < t.achieved.size(); ++i) {
    achieved[format_double(thresholds[i])] = t.achieved[i] ? json(*t.achieved[i]) : json(nullptr);
  }
  j["achieved"] = achieved;
  return j;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config, const RunOptions& options) {
  if (config.algorithms.empty()) throw ParameterError("experiment has no algorithm settings");
  const fs::path out_dir = options.output_dir ? *options.output_dir : fs::path(config.output_dir);
  const std::size_t n_settings = config.algorithms.size();
  const std::size_t n_tasks = n_settings * config.trials;
  const double M = config.stationarity_M ? *config.stationarity_M : default_stationarity_M(config.problem);

  if (options.write_files) {
    for (const auto& s : config.algorithms) fs::create_directories(out_dir / directory_name(s.label));
  }

  std::vector<std::optional<TrialResult>> results(n_tasks);
  std::vector<std::optional<TrialFailure>> failures(n_tasks);
  std::vector<std::optional<Trace>> traces(n_tasks);

  const auto run_task = [&](std::size_t task) {
    const std::size_t s = task / config.trials;
    const std::size_t trial = task % config.trials;
    const AlgorithmSetting& setting = config.algorithms[s];
    TrialResult result;
    result.setting = setting.label;
    result.trial = trial;
    try {
      Problem problem = build_problem(config.problem, trial);
      if (config.problem.type == "convex_case") result.F_star = reference_optimum(problem).value;

      RecordOptions rec;
      rec.stationarity_M = M;
      rec.F_star = result.F_star;
      rec.record_every = config.record_every;
      rec.wall_time = config.record_wall_time;
      std::unique_ptr<TraceCsvWriter> writer;
      if (options.write_files) {
        char name[32];
        std::snprintf(name, sizeof(name), "trial_%03zu.csv", trial);
        result.trace_path = out_dir / directory_name(setting.label) / name;
        writer = std::make_unique<TraceCsvWriter>(result.trace_path);
        rec.sink = [w = writer.get()](const TraceRow& row) { w->write(row); };
      }

      RandomStream stream(config.base_seed, trial);
      Trace trace = std::visit(
          [&](auto cfg) {
            cfg.K = config.budget;
            if (!cfg.x0) cfg.x0 = resolve_initial_point(problem, config.initial_point);
            if constexpr (std::is_same_v<decltype(cfg), ZfgdConfig>) {
              return run_2zfgd(problem, cfg, stream, rec);
            } else {
              return run_rzfcd(problem, cfg, stream, rec);
            }
          },
          setting.config);

      for (const double eps : config.thresholds) result.achieved.push_back(iterations_to_threshold(trace, eps));
      result.final_F = trace.rows.back().F;
      result.final_stationarity = trace.rows.back().stat_norm;
      result.queries = trace.queries;
      result.iterations = trace.iterations;
      result.infeasible_points = trace.infeasible_points;
      results[task] = std::move(result);
      if (options.keep_traces || options.write_files) traces[task] = std::move(trace);
    } catch (const std::exception& e) {
      failures[task] = TrialFailure{setting.label, trial, e.what()};
    }
  };

  std::size_t jobs = options.jobs != 0 ? options.jobs : std::max(1u, std::thread::hardware_concurrency());
  jobs = std::min(jobs, n_tasks);
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < jobs; ++w) {
    pool.emplace_back([&] {
      for (std::size_t task = next++; task < n_tasks; task = next++) run_task(task);
    });
  }
  for (auto& t : pool) t.join();

  ExperimentResult out;
  out.summary.thresholds = config.thresholds;
  out.summary.budget = config.budget;
  if (options.keep_traces) out.traces.resize(n_settings);
  for (std::size_t s = 0; s < n_settings; ++s) {
    std::vector<std::vector<TraceRow>> rows;
    std::vector<Trace> kept;
    for (std::size_t trial = 0; trial < config.trials; ++trial) {
      const std::size_t task = s * config.trials + trial;
      if (failures[task]) out.failures.push_back(*failures[task]);
      if (!results[task]) continue;
      out.trials.push_back(*results[task]);
      if (traces[task]) {
        rows.push_back(traces[task]->rows);
        if (options.keep_traces) kept.push_back(std::move(*traces[task]));
      }
    }
    if (!rows.empty()) {
      out.summary.rows.push_back(summarize(config.algorithms[s].label, rows, config.thresholds, config.budget));
      if (options.write_files) {
        write_aggregate_csv(out_dir / directory_name(config.algorithms[s].label) / "aggregate.csv", aggregate(rows));
      }
    }
    if (options.keep_traces) out.traces[s] = std::move(kept);
  }

  if (options.write_files) {
    json summary;
    summary["name"] = config.name;
    summary["summary"] = out.summary.to_json();
    summary["trials"] = json::array();
    for (const auto& t : out.trials) summary["trials"].push_back(trial_to_json(t, config.thresholds));
    write_text(out_dir / "summary.json", summary.dump(2) + "\n");
    write_text(out_dir / "summary.txt", out.summary.to_text());
    if (!out.failures.empty()) {
      json f = json::array();
      for (const auto& x : out.failures) f.push_back({{"setting", x.setting}, {"trial", x.trial}, {"error", x.message}});
      write_text(out_dir / "failures.json", f.dump(2) + "\n");
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Self-checks

namespace {

// Closed-form voltage at the load end of a single line fed at 1 p.u.
Complex two_bus_voltage(double r, double x, double p, double q) {
  const double b = 2.0 * (r * p + x * q) - 1.0;
  const double c = (r * r + x * x) * (p * p + q * q);
  const double t = 0.5 * (-b + std::sqrt(b * b - 4.0 * c));
  return t + std::conj(Complex(r, x)) * Complex(p, q);
}

}  // namespace

std::vector<VerifyCheck> verify(std::uint64_t seed) {
  std::vector<VerifyCheck> checks;
  const auto add = [&checks](std::string name, double measured, double bound) {
    checks.push_back({std::move(name), measured, bound, measured <= bound});
  };

  {
    RandomStream stream(seed, 1);
    const Vector x = Vector::LinSpaced(10, -1.0, 1.0);
    const auto h = half_squared_distance(Vector::Zero(10));
    const BiasReport rep = bias_diagnostic(h, x, 0.01, 200000, stream);
    add("estimator bias <= sqrt(d) L r + 3 CLT half-width", rep.bias_norm, rep.bias_bound + 3.0 * rep.clt_half_width);
  }
  {
    RandomStream stream(seed, 2);
    Vector x = Vector::Zero(10);
    x[0] = 2.0;
    const auto h = half_squared_distance(Vector::Zero(10));
    const VarianceReport rep = variance_limit_diagnostic(h, x, {1e-4}, 200000, stream);
    add("variance limit relative error (d + 1)|grad h|^2", std::abs(rep.points[0].mean_squared_error / rep.limit - 1.0),
        0.03);
  }
  {
    RandomStream stream(seed, 3);
    double worst = -INFINITY;
    for (int trial = 0; trial < 1000; ++trial) {
      const std::size_t d = 1 + stream.below(6);
      const auto n = static_cast<Eigen::Index>(d);
      Matrix B(n, n);
      for (Eigen::Index i = 0; i < B.size(); ++i) B.data()[i] = stream.normal();
      const Matrix A = B * B.transpose() + Matrix::Identity(n, n);
      const Vector c = gaussian(stream, d);
      const ScalarOracle phi = [&](const Vector& v) { return 0.5 * v.dot(A * v) + c.dot(v); };
      const Vector x = gaussian(stream, d);
      const std::size_t alpha = stream.below(d);
      const auto a = static_cast<Eigen::Index>(alpha);
      const double r = 0.05 + 0.45 * stream.uniform();
      const int sign = stream.uniform() < 0.5 ? -1 : 1;
      const double g = coordinate_estimate(phi, x, alpha, r, sign, 0.0);
      const double exact = (A * x + c)[a];
      worst = std::max(worst, std::abs(g - exact) - 0.5 * A(a, a) * r);
    }
    add("coordinate estimate error minus L r / 2", worst, 1e-12);
  }
  {
    RandomStream stream(seed, 4);
    double worst = -INFINITY;
    for (int trial = 0; trial < 10000; ++trial) {
      const std::size_t d = 1 + stream.below(8);
      const auto n = static_cast<Eigen::Index>(d);
      Vector lo(n), hi(n), anchor(n);
      for (Eigen::Index i = 0; i < n; ++i) {
        lo[i] = -10.0 * stream.uniform() - 0.1;
        hi[i] = 10.0 * stream.uniform() + 0.1;
        anchor[i] = lo[i] + (hi[i] - lo[i]) * stream.uniform_open(0.0, 1.0);
      }
      const auto box = std::make_shared<BoxSet>(lo, hi, anchor);
      const double delta = stream.uniform_open(0.0, 1.0);
      const Vector y = anchor + 20.0 * gaussian(stream, d);
      const double gap = (box->project(y) - shrink(box, delta)->project(y)).norm();
      worst = std::max(worst, gap - delta * box->radii().circumscribed);
    }
    add("shrunk projection distance minus delta R_upper", worst, 1e-10);
  }
  {
    double worst = 0.0;
    for (const auto& [p, q] : {std::pair{0.1, 0.05}, std::pair{0.3, 0.2}, std::pair{0.0, 0.0}}) {
      const RadialNetwork net({{-1, 0, 0, 0, 0}, {0, 0.01, 0.01, p, q}});
      const auto sol = solve_power_flow(net, LoadVector::nominal(net));
      worst = std::max(worst, std::abs(sol.voltage[1] - two_bus_voltage(0.01, 0.01, p, q)));
    }
    add("two-bus sweep vs closed form |dV|", worst, 1e-8);
  }
  {
    RandomStream stream(seed, 5);
    const RadialNetwork net = synthetic_feeder();
    const LoadVector nominal = LoadVector::nominal(net);
    double worst_v = 0.0;
    double worst_energy = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
      LoadVector l = nominal;
      for (Eigen::Index i = 0; i < l.active.size(); ++i) {
        l.active[i] *= stream.uniform();
        l.reactive[i] *= stream.uniform();
      }
      const auto sweep = solve_power_flow(net, l);
      const auto newton = solve_power_flow_newton(net, l);
      worst_v = std::max(worst_v, (sweep.magnitude - newton.magnitude).lpNorm<Eigen::Infinity>());
      worst_energy =
          std::max(worst_energy, std::abs(sweep.substation_active - l.active.sum() - sweep.active_losses));
    }
    add("feeder sweep vs Newton max |dv|", worst_v, 1e-6);
    add("feeder energy balance |p_c - loads - losses|", worst_energy, 1e-8);
  }
  return checks;
}

json to_json(const std::vector<VerifyCheck>& checks) {
  json j;
  j["checks"] = json::array();
  bool pass = true;
  for (const auto& c : checks) {
    j["checks"].push_back({{"name", c.name}, {"measured", c.measured}, {"bound", c.bound}, {"pass", c.pass}});
    pass = pass && c.pass;
  }
  j["pass"] = pass;
  return j;
}

}  // namespace zoflex

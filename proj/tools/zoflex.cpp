// zoflex command-line driver: run experiments, self-checks, summaries and recipes.

#include <glob.h>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "zoflex/harness.hpp"

namespace {

std::vector<double> parse_thresholds(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    const double v = std::stod(item, &used);
    if (used != item.size()) throw zoflex::ParameterError("bad threshold \"" + item + "\"");
    out.push_back(v);
  }
  return out;
}

std::vector<std::string> expand_glob(const std::string& pattern) {
  glob_t g{};
  std::vector<std::string> paths;
  if (::glob(pattern.c_str(), 0, nullptr, &g) == 0) {
    for (std::size_t i = 0; i < g.gl_pathc; ++i) paths.emplace_back(g.gl_pathv[i]);
  }
  ::globfree(&g);
  return paths;
}

int cmd_run(const std::string& config_path, std::size_t jobs, const std::string& out) {
  zoflex::ExperimentConfig cfg = zoflex::load_experiment_config(config_path);
  zoflex::apply_seed_override(cfg);
  zoflex::RunOptions opts;
  opts.jobs = jobs;
  if (!out.empty()) opts.output_dir = out;
  const auto result = zoflex::run_experiment(cfg, opts);
  std::cout << result.summary.to_text();
  for (const auto& f : result.failures) {
    std::cerr << "trial " << f.trial << " of " << f.setting << " aborted: " << f.message << "\n";
  }
  return result.ok() ? 0 : 1;
}

int cmd_verify(const std::string& report) {
  const auto checks = zoflex::verify();
  const auto j = zoflex::to_json(checks);
  for (const auto& c : checks) {
    std::cout << (c.pass ? "PASS " : "FAIL ") << c.name << ": " << c.measured << " (bound " << c.bound << ")\n";
  }
  if (!report.empty()) {
    std::ofstream(report) << j.dump(2) << "\n";
  }
  return j.at("pass").get<bool>() ? 0 : 1;
}

int cmd_summarize(const std::string& pattern, const std::string& thresholds, std::size_t budget,
                  const std::string& label, bool json_out) {
  const auto paths = expand_glob(pattern);
  if (paths.empty()) {
    std::cerr << "no trace files match " << pattern << "\n";
    return 1;
  }
  std::vector<std::vector<zoflex::TraceRow>> traces;
  std::size_t max_k = 0;
  for (const auto& p : paths) {
    traces.push_back(zoflex::read_trace_csv(p));
    if (!traces.back().empty()) max_k = std::max(max_k, traces.back().back().k);
  }
  zoflex::SummaryTable table;
  table.thresholds = parse_thresholds(thresholds);
  table.budget = budget != 0 ? budget : max_k;
  table.rows.push_back(zoflex::summarize(label, traces, table.thresholds, table.budget));
  std::cout << (json_out ? table.to_json().dump(2) + "\n" : table.to_text());
  return 0;
}

int cmd_recipe(const std::string& name, const std::string& emit) {
  const auto j = zoflex::to_json(zoflex::recipe(name));
  if (emit.empty() || emit == "-") {
    std::cout << j.dump(2) << "\n";
  } else {
    std::ofstream out(emit);
    if (!out) throw std::runtime_error("cannot write " + emit);
    out << j.dump(2) << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Zeroth-order feedback optimization for distributed demand response"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  std::size_t jobs = 0;
  auto* run = app.add_subcommand("run", "Run a multi-trial experiment from a JSON config");
  run->add_option("--config", config_path, "Experiment config file")->required()->check(CLI::ExistingFile);
  run->add_option("--jobs", jobs, "Worker threads (default: all cores)");
  run->add_option("--out", out_dir, "Output directory (overrides the config)");

  std::string report;
  auto* ver = app.add_subcommand("verify", "Estimator, geometry and power-flow self-checks");
  ver->add_option("--report", report, "Write the JSON report here");

  std::string pattern, thresholds = "0.05,0.01,0.001", label = "traces";
  std::size_t budget = 0;
  bool json_out = false;
  auto* sum = app.add_subcommand("summarize", "Threshold table from trace CSV files");
  sum->add_option("--traces", pattern, "Glob of trace CSV files")->required();
  sum->add_option("--thresholds", thresholds, "Comma-separated relative-error levels");
  sum->add_option("--budget", budget, "Iteration budget (default: last k in the traces)");
  sum->add_option("--label", label, "Row label");
  sum->add_flag("--json", json_out, "Print JSON instead of text");

  std::string name, emit;
  auto* rec = app.add_subcommand("recipe", "Emit a ready-made experiment config");
  rec->add_option("--name", name, "convex_table2 or nonconvex_feeder")->required();
  rec->add_option("--emit", emit, "Output file (default: stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(config_path, jobs, out_dir);
    if (*ver) return cmd_verify(report);
    if (*sum) return cmd_summarize(pattern, thresholds, budget, label, json_out);
    if (*rec) return cmd_recipe(name, emit);
  } catch (const std::exception& e) {
    std::cerr << "zoflex: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

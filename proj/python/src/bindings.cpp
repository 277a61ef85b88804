#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "zoflex/estimators.hpp"
#include "zoflex/harness.hpp"

namespace py = pybind11;
using namespace zoflex;

namespace {

// JSON crosses the boundary as text; the Python layer wraps it with json.loads.
std::string dump(const nlohmann::json& j) { return j.dump(); }

py::dict trace_to_dict(const Trace& t) {
  std::vector<std::size_t> k;
  std::vector<double> F, re, stat;
  std::vector<std::uint64_t> queries;
  for (const TraceRow& r : t.rows) {
    k.push_back(r.k);
    F.push_back(r.F);
    re.push_back(r.rel_err.value_or(std::nan("")));
    stat.push_back(r.stat_norm);
    queries.push_back(r.queries);
  }
  py::dict d;
  d["k"] = k;
  d["F"] = F;
  d["rel_err"] = re;
  d["stat_norm"] = stat;
  d["queries"] = queries;
  d["final_x"] = t.final_x;
  d["iterations"] = t.iterations;
  d["total_queries"] = t.queries;
  d["infeasible_points"] = t.infeasible_points;
  return d;
}

RecordOptions record_options(double M, std::optional<double> F_star, std::size_t every) {
  RecordOptions r;
  r.stationarity_M = M;
  r.F_star = F_star;
  r.record_every = every;
  return r;
}

void register_errors(py::module_& m) {
  py::register_exception<ParameterError>(m, "ParameterError", PyExc_ValueError);
  py::register_exception<PreconditionError>(m, "PreconditionError", PyExc_ValueError);
  py::register_exception<ConfigurationError>(m, "ConfigurationError", PyExc_ValueError);
  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<OracleError>(m, "OracleError", PyExc_RuntimeError);
  py::register_exception<PowerFlowDivergence>(m, "PowerFlowDivergence", PyExc_RuntimeError);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Zeroth-order feedback optimization core";
  register_errors(m);

  py::class_<FeasibleSet, std::shared_ptr<FeasibleSet>>(m, "FeasibleSet")
      .def("project", &FeasibleSet::project, py::arg("y"))
      .def("contains", &FeasibleSet::contains, py::arg("x"), py::arg("tol") = kContainmentTol)
      .def_property_readonly("anchor", &FeasibleSet::anchor)
      .def_property_readonly("dimension", &FeasibleSet::dimension)
      .def("radii", [](const FeasibleSet& s) {
        const Radii r = s.radii();
        return py::make_tuple(r.inscribed, r.circumscribed);
      });

  py::class_<BoxSet, FeasibleSet, std::shared_ptr<BoxSet>>(m, "BoxSet")
      .def(py::init<Vector, Vector>(), py::arg("lower"), py::arg("upper"))
      .def(py::init<Vector, Vector, Vector>(), py::arg("lower"), py::arg("upper"), py::arg("anchor"))
      .def_property_readonly("lower", &BoxSet::lower)
      .def_property_readonly("upper", &BoxSet::upper)
      .def("shrink", &BoxSet::shrink, py::arg("delta"));

  py::class_<BallSet, FeasibleSet, std::shared_ptr<BallSet>>(m, "BallSet")
      .def(py::init<Vector, double>(), py::arg("center"), py::arg("radius"));

  m.def("perturbation_project", &perturbation_project, py::arg("set"), py::arg("x"), py::arg("r"), py::arg("zbar"));

  py::class_<RandomStream>(m, "RandomStream")
      .def(py::init<std::uint64_t, std::uint64_t>(), py::arg("seed"), py::arg("stream_id") = 0)
      .def("uniform", &RandomStream::uniform)
      .def("normal", &RandomStream::normal);
  m.def("gaussian", &gaussian, py::arg("stream"), py::arg("d"));
  m.def("projected_gaussian_perturbation", &projected_gaussian_perturbation, py::arg("stream"), py::arg("set"),
        py::arg("x"), py::arg("r"));

  m.def(
      "two_point_estimate",
      [](const ScalarOracle& oracle, const Vector& x, double r, const Vector& z) {
        return two_point_estimate(oracle, x, r, z).estimate;
      },
      py::arg("oracle"), py::arg("x"), py::arg("r"), py::arg("z"));
  m.def("coordinate_estimate", &coordinate_estimate, py::arg("oracle"), py::arg("x"), py::arg("index"),
        py::arg("r"), py::arg("sign"), py::arg("local_partial") = 0.0);

  py::class_<Problem>(m, "Problem")
      .def_property_readonly("dimension", &Problem::dimension)
      .def_property_readonly("unit", &Problem::unit)
      .def_property_readonly("oracle_queries", &Problem::oracle_queries)
      .def_property_readonly("feasible",
                             [](const Problem& p) { return std::const_pointer_cast<FeasibleSet>(p.feasible_ptr()); })
      .def("eval_global", &Problem::eval_global, py::arg("x"))
      .def("eval_F", &Problem::eval_F, py::arg("x"))
      .def("exact_gradient", &Problem::exact_gradient, py::arg("x"))
      .def("local_gradient", &Problem::local_gradient, py::arg("x"));

  m.def("make_convex_case", py::overload_cast<std::uint64_t>(&make_convex_case), py::arg("seed"));
  m.def(
      "make_feeder_case",
      [](const std::string& feeder, double curtail_target, std::uint64_t cost_seed) {
        FeederCaseOptions opts;
        opts.curtail_target = curtail_target;
        opts.cost_seed = cost_seed;
        return make_feeder_case(std::make_shared<const RadialNetwork>(load_feeder(feeder)), opts);
      },
      py::arg("feeder") = "builtin:feeder15", py::arg("curtail_target") = 0.15, py::arg("cost_seed") = 0);
  m.def(
      "reference_optimum",
      [](Problem& p) {
        const ReferenceOptimum r = reference_optimum(p);
        return py::make_tuple(r.x, r.value);
      },
      py::arg("problem"));
  m.def(
      "stationarity", [](const Problem& p, const Vector& x, double M) { return stationarity(p, x, M); },
      py::arg("problem"), py::arg("x"), py::arg("M"));

  m.def(
      "solve_power_flow",
      [](const std::string& feeder, std::optional<Vector> active, std::optional<Vector> reactive) {
        const RadialNetwork net = load_feeder(feeder);
        LoadVector loads = LoadVector::nominal(net);
        if (active) loads.active = *active;
        if (reactive) loads.reactive = *reactive;
        const PowerFlowSolution s = solve_power_flow(net, loads);
        py::dict d;
        d["magnitude"] = s.magnitude;
        d["angle"] = s.angle;
        d["substation_active"] = s.substation_active;
        d["active_losses"] = s.active_losses;
        d["iterations"] = s.iterations;
        return d;
      },
      py::arg("feeder") = "builtin:feeder15", py::arg("active") = py::none(), py::arg("reactive") = py::none());

  m.def(
      "run_2zfgd",
      [](Problem& p, const std::string& config, std::uint64_t seed, std::uint64_t stream_id, double M,
         std::optional<double> F_star, std::size_t record_every) {
        RandomStream s(seed, stream_id);
        const ZfgdConfig cfg = zfgd_config_from_json(nlohmann::json::parse(config));
        Trace t;
        {
          py::gil_scoped_release release;
          t = run_2zfgd(p, cfg, s, record_options(M, F_star, record_every));
        }
        return trace_to_dict(t);
      },
      py::arg("problem"), py::arg("config"), py::arg("seed") = 0, py::arg("stream_id") = 0, py::arg("M") = 1.0,
      py::arg("F_star") = py::none(), py::arg("record_every") = 0);
  m.def(
      "run_rzfcd",
      [](Problem& p, const std::string& config, std::uint64_t seed, std::uint64_t stream_id, double M,
         std::optional<double> F_star, std::size_t record_every) {
        RandomStream s(seed, stream_id);
        const RzfcdConfig cfg = rzfcd_config_from_json(nlohmann::json::parse(config));
        Trace t;
        {
          py::gil_scoped_release release;
          t = run_rzfcd(p, cfg, s, record_options(M, F_star, record_every));
        }
        return trace_to_dict(t);
      },
      py::arg("problem"), py::arg("config"), py::arg("seed") = 0, py::arg("stream_id") = 0, py::arg("M") = 1.0,
      py::arg("F_star") = py::none(), py::arg("record_every") = 0);

  m.def("recipe_json", [](const std::string& name) { return dump(to_json(recipe(name))); }, py::arg("name"));
  m.def(
      "run_experiment_json",
      [](const std::string& config, std::size_t jobs, std::optional<std::string> out, bool write_files) {
        ExperimentConfig cfg = experiment_from_json(nlohmann::json::parse(config));
        RunOptions opts;
        opts.jobs = jobs;
        if (out) opts.output_dir = *out;
        opts.write_files = write_files;
        ExperimentResult r;
        {
          py::gil_scoped_release release;
          r = run_experiment(cfg, opts);
        }
        nlohmann::json j = r.summary.to_json();
        j["failures"] = nlohmann::json::array();
        for (const auto& f : r.failures) {
          j["failures"].push_back({{"setting", f.setting}, {"trial", f.trial}, {"error", f.message}});
        }
        return dump(j);
      },
      py::arg("config"), py::arg("jobs") = 0, py::arg("out") = py::none(), py::arg("write_files") = true);
  m.def("verify_json", [](std::uint64_t seed) { return dump(to_json(verify(seed))); }, py::arg("seed") = 0);
}

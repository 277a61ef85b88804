#include "zoflex/algorithms.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "zoflex/estimators.hpp"

namespace zoflex {

// ---------------------------------------------------------------------------
// Schedule

Schedule::Schedule(Kind kind, double c, double offset, double exponent, double cap, double ratio)
    : kind_(kind), c_(c), offset_(offset), exponent_(exponent), cap_(cap), ratio_(ratio) {
  if (!(c_ >= 0.0) || !std::isfinite(c_)) throw ParameterError("schedule base must be finite and nonnegative");
  if ((kind_ == Kind::inverse_sqrt || kind_ == Kind::capped_power) && !(offset_ > 0.0)) {
    throw ParameterError("schedule offset must be positive");
  }
  if (kind_ == Kind::capped_power && !(exponent_ > 0.0)) throw ParameterError("schedule exponent must be positive");
  if (kind_ == Kind::capped_power && !(cap_ > 0.0)) throw ParameterError("schedule cap must be positive");
  if (kind_ == Kind::geometric && !(ratio_ > 0.0 && ratio_ <= 1.0)) {
    throw ParameterError("geometric ratio must lie in (0, 1]");
  }
}

Schedule Schedule::constant(double c) { return {Kind::constant, c, 1.0, 0.0, 0.0, 1.0}; }
Schedule Schedule::inverse_sqrt(double c, double offset) { return {Kind::inverse_sqrt, c, offset, 0.5, 0.0, 1.0}; }
Schedule Schedule::capped_power(double c, double exponent, double cap, double offset) {
  return {Kind::capped_power, c, offset, exponent, cap, 1.0};
}
Schedule Schedule::geometric(double c, double ratio) { return {Kind::geometric, c, 1.0, 0.0, 0.0, ratio}; }

double Schedule::operator()(std::size_t k) const {
  const double kk = static_cast<double>(k);
  switch (kind_) {
    case Kind::constant:
      return c_;
    case Kind::inverse_sqrt:
      return c_ / std::sqrt(kk + offset_);
    case Kind::capped_power:
      return std::min(c_ / std::pow(kk + offset_, exponent_), cap_);
    case Kind::geometric:
      return c_ * std::pow(ratio_, kk);
  }
  return c_;
}

bool Schedule::summable() const {
  if (c_ == 0.0) return true;
  switch (kind_) {
    case Kind::capped_power:
      return exponent_ > 1.0;
    case Kind::geometric:
      return ratio_ < 1.0;
    default:
      return false;
  }
}

bool Schedule::square_summable() const {
  if (c_ == 0.0) return true;
  switch (kind_) {
    case Kind::capped_power:
      return exponent_ > 0.5;
    case Kind::geometric:
      return ratio_ < 1.0;
    default:
      return false;
  }
}

double Schedule::supremum() const {
  switch (kind_) {
    case Kind::inverse_sqrt:
      return c_ / std::sqrt(offset_);
    case Kind::capped_power:
      return std::min(c_ / std::pow(offset_, exponent_), cap_);
    default:
      return c_;
  }
}

std::string Schedule::kind_name(Kind kind) {
  switch (kind) {
    case Kind::constant:
      return "constant";
    case Kind::inverse_sqrt:
      return "inverse_sqrt";
    case Kind::capped_power:
      return "capped_power";
    case Kind::geometric:
      return "geometric";
  }
  return "constant";
}

nlohmann::json Schedule::to_json() const {
  nlohmann::json j;
  j["kind"] = kind_name(kind_);
  j["c"] = c_;
  switch (kind_) {
    case Kind::inverse_sqrt:
      j["offset"] = offset_;
      break;
    case Kind::capped_power:
      j["offset"] = offset_;
      j["exponent"] = exponent_;
      j["cap"] = cap_;
      break;
    case Kind::geometric:
      j["ratio"] = ratio_;
      break;
    default:
      break;
  }
  return j;
}

Schedule Schedule::from_json(const nlohmann::json& j) {
  if (j.is_number()) return constant(j.get<double>());
  if (!j.is_object() || !j.contains("kind") || !j.contains("c")) {
    throw ParameterError("schedule must be a number or an object with \"kind\" and \"c\"");
  }
  const auto kind = j.at("kind").get<std::string>();
  const double c = j.at("c").get<double>();
  const double offset = j.value("offset", 1.0);
  if (kind == "constant") return constant(c);
  if (kind == "inverse_sqrt") return inverse_sqrt(c, offset);
  if (kind == "capped_power") {
    if (!j.contains("exponent") || !j.contains("cap")) {
      throw ParameterError("capped_power schedule needs \"exponent\" and \"cap\"");
    }
    return capped_power(c, j.at("exponent").get<double>(), j.at("cap").get<double>(), offset);
  }
  if (kind == "geometric") {
    if (!j.contains("ratio")) throw ParameterError("geometric schedule needs \"ratio\"");
    return geometric(c, j.at("ratio").get<double>());
  }
  throw ParameterError("unknown schedule kind \"" + kind + "\"");
}

// ---------------------------------------------------------------------------
// Config JSON

namespace {

nlohmann::json schedules_to_json(const std::vector<Schedule>& s) {
  if (s.size() == 1) return s.front().to_json();
  nlohmann::json arr = nlohmann::json::array();
  for (const Schedule& x : s) arr.push_back(x.to_json());
  return arr;
}

std::vector<Schedule> schedules_from_json(const nlohmann::json& j) {
  std::vector<Schedule> out;
  if (j.is_array()) {
    for (const auto& x : j) out.push_back(Schedule::from_json(x));
  } else {
    out.push_back(Schedule::from_json(j));
  }
  if (out.empty()) throw ParameterError("schedule list is empty");
  return out;
}

std::optional<Vector> vector_from_json(const nlohmann::json& j, const char* key) {
  if (!j.contains(key)) return std::nullopt;
  const auto v = j.at(key).get<std::vector<double>>();
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

void vector_to_json(nlohmann::json& j, const char* key, const std::optional<Vector>& v) {
  if (v) j[key] = std::vector<double>(v->data(), v->data() + v->size());
}

}  // namespace

nlohmann::json to_json(const ZfgdConfig& cfg) {
  nlohmann::json j;
  j["algorithm"] = "2zfgd";
  j["K"] = cfg.K;
  j["step"] = cfg.step.to_json();
  j["radius"] = cfg.radius.to_json();
  j["shrink"] = cfg.shrink.to_json();
  vector_to_json(j, "x0", cfg.x0);
  return j;
}

ZfgdConfig zfgd_config_from_json(const nlohmann::json& j) {
  ZfgdConfig cfg;
  cfg.K = j.at("K").get<std::size_t>();
  cfg.step = Schedule::from_json(j.at("step"));
  cfg.radius = Schedule::from_json(j.at("radius"));
  cfg.shrink = Schedule::from_json(j.at("shrink"));
  cfg.x0 = vector_from_json(j, "x0");
  return cfg;
}

nlohmann::json to_json(const RzfcdConfig& cfg) {
  nlohmann::json j;
  j["algorithm"] = "rzfcd";
  j["K"] = cfg.K;
  j["step"] = schedules_to_json(cfg.step);
  j["radius"] = schedules_to_json(cfg.radius);
  vector_to_json(j, "x0", cfg.x0);
  return j;
}

RzfcdConfig rzfcd_config_from_json(const nlohmann::json& j) {
  RzfcdConfig cfg;
  cfg.K = j.at("K").get<std::size_t>();
  cfg.step = schedules_from_json(j.at("step"));
  cfg.radius = schedules_from_json(j.at("radius"));
  cfg.x0 = vector_from_json(j, "x0");
  return cfg;
}

// ---------------------------------------------------------------------------
// Algorithms

namespace {

Vector initial_point(const Problem& problem, const std::optional<Vector>& x0) {
  Vector x = x0 ? *x0 : problem.feasible().anchor();
  if (static_cast<std::size_t>(x.size()) != problem.dimension() || !problem.feasible().contains(x, 0.0)) {
    throw PreconditionError("initial point lies outside the feasible set");
  }
  return x;
}

[[noreturn]] void abort_iteration(const char* algorithm, std::size_t k, const std::exception& e) {
  throw OracleError(std::string(algorithm) + " aborted at iteration " + std::to_string(k) + ": " + e.what());
}

// Trace rows evaluate F; a simulator failure there is reported like an oracle failure.
void record_row(TraceRecorder& recorder, const char* algorithm, std::size_t k, const Vector& x,
                std::uint64_t queries) {
  try {
    recorder.record(k, x, queries);
  } catch (const std::exception& e) {
    abort_iteration(algorithm, k, e);
  }
}

Vector stacked_local_gradient(const FeedbackView& view, const Vector& x) {
  const AgentPartition& part = view.partition();
  Vector g(x.size());
  for (std::size_t i = 0; i < part.agent_count(); ++i) {
    g.segment(static_cast<Eigen::Index>(part.offset(i)), static_cast<Eigen::Index>(part.size(i))) =
        view.local_partial(i, x);
  }
  return g;
}

}  // namespace

Trace run_2zfgd(Problem& problem, const ZfgdConfig& config, RandomStream& stream, const RecordOptions& record,
                const PerturbationSource& perturbation) {
  Vector x = initial_point(problem, config.x0);
  FeedbackView view(problem);
  const auto X = view.feasible_ptr();
  const std::uint64_t q0 = view.queries();
  const ScalarOracle oracle = [&view](const Vector& p) { return view.observe(p); };

  TraceRecorder recorder(problem, record, config.K);
  recorder.audit(x);
  record_row(recorder, "2-ZFGD", 0, x, 0);

  std::shared_ptr<const FeasibleSet> shrunk;
  double shrunk_delta = -1.0;
  for (std::size_t k = 0; k < config.K; ++k) {
    const double r = config.radius(k);
    const double eta = config.step(k);
    const double delta = config.shrink(k);
    if (!(r > 0.0)) throw ParameterError("smoothing radius must be positive at iteration " + std::to_string(k));
    if (delta != shrunk_delta) {
      shrunk = shrink(X, delta);
      shrunk_delta = delta;
    }
    try {
      const Vector z = perturbation ? perturbation(stream, *X, x, r) : projected_gaussian_perturbation(stream, *X, x, r);
      recorder.audit(x + r * z);
      const EstimatorSample sample = two_point_estimate(oracle, x, r, z);
      const Vector g = stacked_local_gradient(view, x) + sample.estimate;
      x = shrunk->project(x - eta * g);
    } catch (const ParameterError&) {
      throw;
    } catch (const std::exception& e) {
      abort_iteration("2-ZFGD", k, e);
    }
    recorder.audit(x);
    if (recorder.due(k + 1)) record_row(recorder, "2-ZFGD", k + 1, x, view.queries() - q0);
  }
  return recorder.finish(std::move(x), config.K, view.queries() - q0);
}

Trace run_rzfcd(Problem& problem, const RzfcdConfig& config, RandomStream& stream, const RecordOptions& record) {
  const auto* box = dynamic_cast<const BoxSet*>(&problem.feasible());
  if (box == nullptr) throw ConfigurationError("RZFCD requires a box feasible set");
  const std::size_t d = problem.dimension();
  const auto per_coordinate = [d](const std::vector<Schedule>& s, const char* what) {
    if (s.size() != 1 && s.size() != d) {
      throw ConfigurationError(std::string("RZFCD ") + what + " needs one shared schedule or one per coordinate");
    }
  };
  per_coordinate(config.step, "step");
  per_coordinate(config.radius, "radius");

  Vector x = initial_point(problem, config.x0);
  FeedbackView view(problem);
  const AgentPartition& part = view.partition();
  const std::uint64_t q0 = view.queries();
  const ScalarOracle oracle = [&view](const Vector& p) { return view.observe(p); };

  TraceRecorder recorder(problem, record, config.K);
  recorder.audit(x);
  record_row(recorder, "RZFCD", 0, x, 0);

  for (std::size_t k = 0; k < config.K; ++k) {
    const std::size_t alpha = uniform_index(stream, d);
    const auto a = static_cast<Eigen::Index>(alpha);
    const double l = box->lower()[a];
    const double u = box->upper()[a];
    const double eta = config.step[config.step.size() == 1 ? 0 : alpha](k);
    const double r = std::min(config.radius[config.radius.size() == 1 ? 0 : alpha](k), 0.5 * (u - l));
    if (!(r > 0.0)) throw ParameterError("smoothing radius must be positive at iteration " + std::to_string(k));
    try {
      const int sign = coordinate_sign(stream, x[a], l, u, r);
      Vector probe = x;
      probe[a] += r * sign;
      recorder.audit(probe);
      const std::size_t agent = part.agent_of(alpha);
      const double partial = view.local_partial(agent, x)[a - static_cast<Eigen::Index>(part.offset(agent))];
      const double g = coordinate_estimate(oracle, x, alpha, r, sign, partial);
      x[a] = std::clamp(x[a] - eta * g, l, u);
    } catch (const ParameterError&) {
      throw;
    } catch (const std::exception& e) {
      abort_iteration("RZFCD", k, e);
    }
    recorder.audit(x);
    if (recorder.due(k + 1)) record_row(recorder, "RZFCD", k + 1, x, view.queries() - q0);
  }
  return recorder.finish(std::move(x), config.K, view.queries() - q0);
}

// ---------------------------------------------------------------------------
// Parameter helpers

ZfgdConfig TheoremParams::config() const {
  ZfgdConfig cfg;
  cfg.K = K;
  cfg.step = Schedule::constant(eta);
  cfg.radius = radius;
  cfg.shrink = Schedule::constant(delta);
  return cfg;
}

namespace {

struct Bounds {
  double delta = 0.0;
  double eta = 0.0;
  double K_min = 0.0;  // lower bound on K
  std::optional<double> sum_r;
  double sum_r2 = 0.0;
};

void require_positive(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v)) throw ParameterError(std::string(name) + " must be positive and finite");
}

void validate_constants(const TheoremConstants& c, double epsilon, Regime regime) {
  require_positive(epsilon, "epsilon");
  require_positive(c.smooth_F, "L_F");
  require_positive(c.lipschitz_phi, "Lambda_phi");
  require_positive(c.inscribed, "inscribed radius");
  require_positive(c.circumscribed, "circumscribed radius");
  if (c.dimension == 0) throw ParameterError("dimension must be positive");
  if (c.inscribed > c.circumscribed) throw ParameterError("inscribed radius exceeds circumscribed radius");
  if (regime == Regime::convex) {
    require_positive(c.lipschitz_F, "Lambda_F");
  } else {
    require_positive(c.smooth_phi, "L_phi");
    require_positive(c.initial_gap, "F(x(0)) - F*");
  }
}

Bounds theorem_bounds(const TheoremConstants& c, double eps, Regime regime) {
  const double d = static_cast<double>(c.dimension);
  const double Rbar = c.circumscribed;
  const double offset = Rbar + c.lipschitz_phi / (2.0 * c.smooth_F * d);
  Bounds b;
  if (regime == Regime::convex) {
    b.delta = eps / (5.0 * c.lipschitz_F * offset);
    b.eta = std::min(eps / (5.0 * c.lipschitz_phi * c.lipschitz_phi), 1.0 / c.smooth_F) / (2.0 * (d + 5.0));
    b.sum_r = 2.0 * std::sqrt(d) * Rbar;
    b.sum_r2 = 4.0 * Rbar * Rbar / (d + 5.0);
  } else {
    b.delta = std::sqrt(eps) / (5.0 * c.smooth_F * offset);
    b.eta = std::min(eps / (30.0 * c.lipschitz_phi * c.lipschitz_phi), 1.0) / (c.smooth_F * (d + 5.0));
    b.sum_r2 = c.initial_gap / (c.smooth_phi * (d + 6.0));
  }
  return b;
}

double k_lower_bound(const TheoremConstants& c, double eps, Regime regime, double eta) {
  if (regime == Regime::convex) return 10.0 * c.circumscribed * c.circumscribed / (eta * eps);
  return 15.0 * c.initial_gap / (eta * eps);
}

double radius_cap(const TheoremConstants& c, Regime regime, double delta) {
  const double d = static_cast<double>(c.dimension);
  const double log_ratio = 4.0 * std::log(8.0 * c.circumscribed / c.inscribed);
  const double log_delta = regime == Regime::convex ? 2.0 * std::log(d / (delta * delta * delta))
                                                    : std::log(d * d * d / std::pow(delta, 7.0));
  return delta * c.inscribed / (2.0 * std::sqrt(d / 2.0 + log_ratio + log_delta));
}

// Closed-form sums of a geometric schedule; nothing else is produced here.
double geometric_sum(const Schedule& s, double power) {
  return std::pow(s.base(), power) / (1.0 - std::pow(s.ratio(), power));
}

}  // namespace

std::vector<InequalityCheck> check_2zfgd_conditions(const TheoremConstants& c, double epsilon, Regime regime,
                                                    double delta, double eta, std::size_t K,
                                                    const Schedule& radius) {
  validate_constants(c, epsilon, regime);
  const Bounds b = theorem_bounds(c, epsilon, regime);
  std::vector<InequalityCheck> out;
  const auto add = [&out](std::string name, double lhs, double rhs) {
    out.push_back({std::move(name), lhs, rhs, lhs <= rhs});
  };
  add("delta <= delta_max", delta, b.delta);
  add("delta < 1", delta, std::nextafter(1.0, 0.0));
  add("eta <= eta_max", eta, b.eta);
  add("K_min <= K", k_lower_bound(c, epsilon, regime, eta), static_cast<double>(K));

  const bool summable = radius.kind() == Schedule::Kind::geometric && radius.ratio() < 1.0;
  const double inf = INFINITY;
  if (b.sum_r) add("sum r(k) <= sum cap", summable ? geometric_sum(radius, 1.0) : inf, *b.sum_r);
  add("sum r(k)^2 <= square-sum cap", summable ? geometric_sum(radius, 2.0) : inf, b.sum_r2);
  const double cap = delta > 0.0 && delta < 1.0 ? radius_cap(c, regime, delta) : 0.0;
  add("r(k) <= per-step cap", radius.supremum(), cap);
  return out;
}

TheoremParams theoretical_params_2zfgd(const TheoremConstants& c, double epsilon, Regime regime) {
  validate_constants(c, epsilon, regime);
  const Bounds b = theorem_bounds(c, epsilon, regime);
  if (!(b.delta < 1.0)) {
    std::ostringstream os;
    os << "epsilon too large: the shrink bound evaluates to " << b.delta << ", violating delta < 1";
    throw ParameterError(os.str());
  }
  TheoremParams p;
  p.delta = b.delta;
  p.eta = b.eta;
  const double K_min = k_lower_bound(c, epsilon, regime, p.eta);
  if (!(K_min < 1e18)) throw ParameterError("iteration bound overflows: K >= " + std::to_string(K_min));
  p.K = static_cast<std::size_t>(std::ceil(K_min));

  double r0 = radius_cap(c, regime, p.delta);
  if (b.sum_r) r0 = std::min(r0, *b.sum_r / 2.0);
  r0 = std::min(r0, std::sqrt(b.sum_r2 / 2.0));
  if (!(r0 > 0.0)) throw ParameterError("no positive radius satisfies the radius conditions");
  // Ratio 1/2: sum r = 2 r0 and sum r^2 = (4/3) r0^2, both within the caps.
  p.radius = Schedule::geometric(r0, 0.5);

  p.checks = check_2zfgd_conditions(c, epsilon, regime, p.delta, p.eta, p.K, p.radius);
  for (const InequalityCheck& chk : p.checks) {
    if (!chk.pass) {
      std::ostringstream os;
      os << "parameter choice violates " << chk.name << " (" << chk.lhs << " > " << chk.rhs << ")";
      throw ParameterError(os.str());
    }
  }
  return p;
}

bool RzfcdReport::pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const RzfcdCheck& c) { return c.pass; });
}

RzfcdReport validate_params_rzfcd(const RzfcdConfig& config, const Vector& coordinate_smoothness) {
  const auto d = static_cast<std::size_t>(coordinate_smoothness.size());
  if (d == 0) throw ParameterError("coordinate smoothness constants are empty");
  const auto pick = [](const std::vector<Schedule>& s, std::size_t beta) -> const Schedule& {
    return s.size() == 1 ? s.front() : s.at(beta);
  };
  if (config.step.empty() || config.radius.empty()) throw ParameterError("RZFCD config has no schedules");

  RzfcdReport report;
  RzfcdCheck step{"eta_beta * L_F_beta <= 1", true, std::nullopt, 0.0};
  for (std::size_t beta = 0; beta < d; ++beta) {
    const double v = pick(config.step, beta).supremum() * coordinate_smoothness[static_cast<Eigen::Index>(beta)];
    if (v > 1.0 && step.pass) {
      step.pass = false;
      step.coordinate = beta;
      step.value = v;
    } else if (step.pass) {
      step.value = std::max(step.value, v);
    }
  }
  report.checks.push_back(step);

  RzfcdCheck radius{"sum over beta and k of r_beta(k) < infinity", true, std::nullopt, 0.0};
  for (std::size_t beta = 0; beta < d; ++beta) {
    if (!pick(config.radius, beta).summable()) {
      radius.pass = false;
      radius.coordinate = beta;
      break;
    }
  }
  report.checks.push_back(radius);
  return report;
}

}  // namespace zoflex

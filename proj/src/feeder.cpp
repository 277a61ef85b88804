#include "zoflex/feeder.hpp"

#include <charconv>
#include <cmath>
#include <deque>
#include <fstream>
#include <sstream>

#include "zoflex/random.hpp"

namespace zoflex {

// ---------------------------------------------------------------------------
// Network

RadialNetwork::RadialNetwork(std::vector<Bus> buses, double source_voltage, double base_kva)
    : buses_(std::move(buses)), source_voltage_(source_voltage), base_kva_(base_kva) {
  const std::size_t n = buses_.size();
  if (n < 2) throw ParameterError("feeder needs a substation and at least one load bus");
  if (!(source_voltage_ > 0.0)) throw ParameterError("substation voltage must be positive");
  if (buses_[0].parent != -1) throw ParameterError("bus 0 must be the substation (parent -1)");
  if (buses_[0].p_load != 0.0 || buses_[0].q_load != 0.0) throw ParameterError("substation bus carries load");

  std::vector<std::vector<std::size_t>> children(n);
  for (std::size_t i = 1; i < n; ++i) {
    const Bus& b = buses_[i];
    if (b.parent < 0 || static_cast<std::size_t>(b.parent) >= n || static_cast<std::size_t>(b.parent) == i) {
      throw ParameterError("bus " + std::to_string(i) + " has an invalid parent");
    }
    if (!(b.r >= 0.0) || !(b.x >= 0.0) || b.r + b.x <= 0.0) {
      throw ParameterError("line into bus " + std::to_string(i) + " needs r >= 0, x >= 0 and nonzero impedance");
    }
    if (!(b.p_load >= 0.0) || !(b.q_load >= 0.0) || !std::isfinite(b.p_load) || !std::isfinite(b.q_load)) {
      throw ParameterError("bus " + std::to_string(i) + " has a negative or non-finite load");
    }
    children[static_cast<std::size_t>(b.parent)].push_back(i);
  }
  std::deque<std::size_t> queue{0};
  while (!queue.empty()) {
    const std::size_t k = queue.front();
    queue.pop_front();
    order_.push_back(k);
    for (const std::size_t c : children[k]) queue.push_back(c);
  }
  if (order_.size() != n) throw ParameterError("feeder is not a tree rooted at bus 0 (cycle or disconnected bus)");
}

double RadialNetwork::nominal_active_total() const {
  double total = 0.0;
  for (const Bus& b : buses_) total += b.p_load;
  return total;
}

Eigen::MatrixXcd RadialNetwork::admittance() const {
  const auto n = static_cast<Eigen::Index>(buses_.size());
  Eigen::MatrixXcd y = Eigen::MatrixXcd::Zero(n, n);
  for (Eigen::Index i = 1; i < n; ++i) {
    const Bus& b = buses_[static_cast<std::size_t>(i)];
    const Complex yl = 1.0 / Complex(b.r, b.x);
    const Eigen::Index p = b.parent;
    y(i, i) += yl;
    y(p, p) += yl;
    y(i, p) -= yl;
    y(p, i) -= yl;
  }
  return y;
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    out.push_back(trim(std::string_view(line).substr(start, comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

template <typename T>
T parse_number(const std::string& field, const char* name, std::size_t line) {
  T value{};
  const char* end = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(field.data(), end, value);
  if (ec != std::errc() || ptr != end || field.empty()) {
    throw ParseError(std::string("cannot parse ") + name + " from \"" + field + "\"", line);
  }
  return value;
}

}  // namespace

RadialNetwork parse_feeder_csv(std::istream& in) {
  static const std::vector<std::string> kHeader = {"bus", "parent", "r_pu", "x_pu", "p_load_pu", "q_load_pu"};
  std::vector<RadialNetwork::Bus> buses;
  std::vector<bool> seen;
  std::vector<std::size_t> defined_on;
  bool header_seen = false;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = trim(raw.substr(0, raw.find('#')));
    if (line.empty()) continue;
    const auto fields = split_fields(line);
    if (!header_seen) {
      if (fields != kHeader) {
        throw ParseError("expected header bus,parent,r_pu,x_pu,p_load_pu,q_load_pu", line_no);
      }
      header_seen = true;
      continue;
    }
    if (fields.size() != kHeader.size()) {
      throw ParseError("expected 6 fields, found " + std::to_string(fields.size()), line_no);
    }
    const auto id = parse_number<long>(fields[0], "bus", line_no);
    if (id < 0) throw ParseError("bus index must be nonnegative", line_no);
    const auto idx = static_cast<std::size_t>(id);
    if (idx >= buses.size()) {
      buses.resize(idx + 1);
      seen.resize(idx + 1, false);
      defined_on.resize(idx + 1, 0);
    }
    if (seen[idx]) {
      throw ParseError("bus " + std::to_string(idx) + " already defined on line " + std::to_string(defined_on[idx]),
                       line_no);
    }
    seen[idx] = true;
    defined_on[idx] = line_no;
    RadialNetwork::Bus& b = buses[idx];
    b.parent = static_cast<int>(parse_number<long>(fields[1], "parent", line_no));
    b.r = parse_number<double>(fields[2], "r_pu", line_no);
    b.x = parse_number<double>(fields[3], "x_pu", line_no);
    b.p_load = parse_number<double>(fields[4], "p_load_pu", line_no);
    b.q_load = parse_number<double>(fields[5], "q_load_pu", line_no);
    if (idx == 0 && b.parent != -1) throw ParseError("bus 0 must have parent -1", line_no);
    if (idx != 0 && b.parent < 0) throw ParseError("only bus 0 may have parent -1", line_no);
  }
  if (!header_seen) throw ParseError("feeder file is empty", line_no);
  for (std::size_t i = 0; i < seen.size(); ++i) {
    if (!seen[i]) throw ParseError("bus " + std::to_string(i) + " is missing", line_no);
  }
  try {
    return RadialNetwork(std::move(buses));
  } catch (const ParameterError& e) {
    throw ParseError(e.what(), 0);
  }
}

RadialNetwork load_feeder_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open feeder file " + path.string(), 0);
  return parse_feeder_csv(in);
}

const std::string& synthetic_feeder_csv() {
  static const std::string csv = R"(# 15-bus synthetic radial feeder, 10 MVA base.
# Main trunk 0-1-2-3-4-5-6-7 with laterals at buses 2, 3 and 5.
# Nominal loads total 0.80 + j0.40 p.u.; the far ends of the trunk and of the
# bus-5 lateral sag below 0.96 p.u. at nominal load.
bus,parent,r_pu,x_pu,p_load_pu,q_load_pu
0,-1,0,0,0,0
1,0,0.004,0.008,0.04,0.02
2,1,0.010,0.012,0.06,0.03
3,2,0.012,0.010,0.05,0.025
4,3,0.015,0.012,0.07,0.035
5,4,0.020,0.015,0.06,0.03
6,5,0.025,0.018,0.05,0.025
7,6,0.030,0.020,0.04,0.02
8,3,0.018,0.014,0.06,0.03
9,8,0.022,0.016,0.05,0.025
10,9,0.035,0.022,0.07,0.035
11,5,0.028,0.020,0.06,0.03
12,11,0.040,0.025,0.05,0.025
13,2,0.016,0.012,0.07,0.035
14,13,0.030,0.020,0.07,0.035
)";
  return csv;
}

RadialNetwork synthetic_feeder() {
  std::istringstream in(synthetic_feeder_csv());
  return parse_feeder_csv(in);
}

RadialNetwork load_feeder(const std::string& reference) {
  if (reference == "builtin:feeder15") return synthetic_feeder();
  return load_feeder_csv(reference);
}

LoadVector LoadVector::nominal(const RadialNetwork& net) {
  const auto n = static_cast<Eigen::Index>(net.bus_count());
  LoadVector l{Vector(n), Vector(n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    l.active[i] = net.bus(static_cast<std::size_t>(i)).p_load;
    l.reactive[i] = net.bus(static_cast<std::size_t>(i)).q_load;
  }
  return l;
}

// ---------------------------------------------------------------------------
// Power flow

namespace {

void check_loads(const RadialNetwork& net, const LoadVector& loads) {
  const auto n = static_cast<Eigen::Index>(net.bus_count());
  if (loads.active.size() != n || loads.reactive.size() != n) {
    throw PreconditionError("load vector does not match the network bus count");
  }
  if (!loads.active.allFinite() || !loads.reactive.allFinite()) {
    throw PreconditionError("loads must be finite");
  }
}

void finish_solution(PowerFlowSolution& s) {
  const auto n = static_cast<Eigen::Index>(s.voltage.size());
  s.magnitude.resize(n);
  s.angle.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    s.magnitude[i] = std::abs(s.voltage[static_cast<std::size_t>(i)]);
    s.angle[i] = std::arg(s.voltage[static_cast<std::size_t>(i)]);
  }
}

}  // namespace

PowerFlowSolution solve_power_flow(const RadialNetwork& net, const LoadVector& loads, const SweepOptions& opts) {
  check_loads(net, loads);
  const std::size_t n = net.bus_count();
  const auto& order = net.order();
  const Complex source(net.source_voltage(), 0.0);
  std::vector<Complex> v(n, source);
  std::vector<Complex> branch(n);
  std::vector<Complex> next(n);

  PowerFlowSolution sol;
  double delta = INFINITY;
  std::size_t sweep = 0;
  while (sweep < opts.max_sweeps) {
    ++sweep;
    // Backward: load currents, accumulated leaf to root.
    for (std::size_t i = 0; i < n; ++i) {
      const auto k = static_cast<Eigen::Index>(i);
      branch[i] = i == 0 ? Complex{} : std::conj(Complex(loads.active[k], loads.reactive[k]) / v[i]);
    }
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      const std::size_t i = *it;
      if (i != 0) branch[static_cast<std::size_t>(net.bus(i).parent)] += branch[i];
    }
    // Forward: voltage drops, root to leaf.
    next[0] = source;
    delta = 0.0;
    for (const std::size_t i : order) {
      if (i == 0) continue;
      const auto& b = net.bus(i);
      next[i] = next[static_cast<std::size_t>(b.parent)] - Complex(b.r, b.x) * branch[i];
      delta = std::max(delta, std::abs(next[i] - v[i]));
    }
    std::swap(v, next);
    if (!std::isfinite(delta) || delta > 1e6) break;
    if (delta < opts.tolerance) {
      sol.converged = true;
      break;
    }
  }
  sol.iterations = sweep;
  sol.residual = delta;
  if (!sol.converged) {
    std::ostringstream os;
    os << "backward/forward sweep diverged after " << sweep << " sweeps (last update " << delta << " p.u.)";
    throw PowerFlowDivergence(os.str(), delta, sweep);
  }

  // branch[0] now holds the current drawn from the substation.
  const Complex s0 = source * std::conj(branch[0]);
  sol.substation_active = s0.real();
  sol.substation_reactive = s0.imag();
  // branch[i] for i > 0 is the current in the line into bus i.
  for (std::size_t i = 1; i < n; ++i) sol.active_losses += net.bus(i).r * std::norm(branch[i]);
  sol.voltage = std::move(v);
  finish_solution(sol);
  return sol;
}

namespace {

struct PolarDerivatives {
  Eigen::MatrixXcd dS_dVa;
  Eigen::MatrixXcd dS_dVm;
  Eigen::VectorXcd S;
};

// Complex power injections and their derivatives with respect to voltage
// angles and magnitudes (all buses).
PolarDerivatives power_derivatives(const Eigen::MatrixXcd& ybus, const Eigen::VectorXcd& v) {
  const Eigen::VectorXcd current = ybus * v;
  const Eigen::VectorXcd vnorm = v.array() / v.array().abs().cast<Complex>();
  PolarDerivatives d;
  d.S = v.array() * current.array().conjugate();
  d.dS_dVm = v.asDiagonal() * (ybus * vnorm.asDiagonal()).conjugate();
  d.dS_dVm += Eigen::MatrixXcd(current.conjugate().asDiagonal()) * vnorm.asDiagonal();
  Eigen::MatrixXcd inner = -(ybus * v.asDiagonal());
  inner.diagonal() += current;
  d.dS_dVa = Complex(0.0, 1.0) * (v.asDiagonal() * inner.conjugate());
  return d;
}

// Reduced Jacobian of [Re S; Im S] at the non-slack buses with respect to
// [angle; magnitude] at the non-slack buses.
Matrix reduced_jacobian(const PolarDerivatives& d) {
  const Eigen::Index m = d.S.size() - 1;
  Matrix j(2 * m, 2 * m);
  j.topLeftCorner(m, m) = d.dS_dVa.bottomRightCorner(m, m).real();
  j.topRightCorner(m, m) = d.dS_dVm.bottomRightCorner(m, m).real();
  j.bottomLeftCorner(m, m) = d.dS_dVa.bottomRightCorner(m, m).imag();
  j.bottomRightCorner(m, m) = d.dS_dVm.bottomRightCorner(m, m).imag();
  return j;
}

}  // namespace

PowerFlowSolution solve_power_flow_newton(const RadialNetwork& net, const LoadVector& loads, double tolerance,
                                          std::size_t max_iterations) {
  check_loads(net, loads);
  const auto n = static_cast<Eigen::Index>(net.bus_count());
  const Eigen::Index m = n - 1;
  const Eigen::MatrixXcd ybus = net.admittance();
  Vector va = Vector::Zero(n);
  Vector vm = Vector::Ones(n);
  vm[0] = net.source_voltage();

  PowerFlowSolution sol;
  Eigen::VectorXcd v(n);
  for (std::size_t it = 0;; ++it) {
    for (Eigen::Index i = 0; i < n; ++i) v[i] = std::polar(vm[i], va[i]);
    const PolarDerivatives d = power_derivatives(ybus, v);
    Vector mismatch(2 * m);
    for (Eigen::Index i = 1; i < n; ++i) {
      mismatch[i - 1] = d.S[i].real() + loads.active[i];
      mismatch[m + i - 1] = d.S[i].imag() + loads.reactive[i];
    }
    sol.residual = mismatch.lpNorm<Eigen::Infinity>();
    sol.iterations = it;
    if (sol.residual < tolerance) {
      sol.converged = true;
      sol.substation_active = d.S[0].real();
      sol.substation_reactive = d.S[0].imag();
      break;
    }
    if (it >= max_iterations || !std::isfinite(sol.residual)) {
      throw PowerFlowDivergence("Newton power flow did not converge", sol.residual, it);
    }
    const Vector step = reduced_jacobian(d).partialPivLu().solve(-mismatch);
    va.tail(m) += step.head(m);
    vm.tail(m) += step.tail(m);
  }
  sol.voltage.assign(v.data(), v.data() + n);
  sol.active_losses = 0.0;
  for (Eigen::Index i = 1; i < n; ++i) {
    const auto& b = net.bus(static_cast<std::size_t>(i));
    sol.active_losses += b.r * std::norm((v[b.parent] - v[i]) / Complex(b.r, b.x));
  }
  finish_solution(sol);
  return sol;
}

double voltage_penalty(const PowerFlowSolution& solution, double v_lo, double v_hi) {
  double rho = 0.0;
  for (Eigen::Index j = 0; j < solution.magnitude.size(); ++j) {
    const double v = solution.magnitude[j];
    const double over = std::max(v - v_hi, 0.0);
    const double under = std::max(v_lo - v, 0.0);
    rho += over * over + under * under;
  }
  return rho;
}

double feeder_global_cost(const RadialNetwork& net, const LoadVector& loads, const FeederCostParams& params) {
  const PowerFlowSolution sol = solve_power_flow(net, loads);
  const double dev = sol.substation_active - params.target;
  return params.alpha_D * dev * dev + params.alpha_v * voltage_penalty(sol, params.v_lo, params.v_hi);
}

// ---------------------------------------------------------------------------
// Objective

FeederObjective::FeederObjective(std::shared_ptr<const RadialNetwork> net, std::vector<LoadSlot> slots,
                                 FeederCostParams params)
    : net_(std::move(net)), slots_(std::move(slots)), params_(params) {
  if (!net_) throw ParameterError("feeder objective needs a network");
  for (const LoadSlot& s : slots_) {
    if (s.bus == 0 || s.bus >= net_->bus_count()) throw ParameterError("load slot refers to an invalid bus");
  }
}

LoadVector FeederObjective::loads_for(const Vector& x) const {
  if (static_cast<std::size_t>(x.size()) != slots_.size()) throw PreconditionError("decision size mismatch");
  LoadVector loads = LoadVector::nominal(*net_);
  for (std::size_t k = 0; k < slots_.size(); ++k) {
    const auto bus = static_cast<Eigen::Index>(slots_[k].bus);
    (slots_[k].reactive ? loads.reactive : loads.active)[bus] = x[static_cast<Eigen::Index>(k)];
  }
  return loads;
}

double FeederObjective::value(const Vector& x) const { return feeder_global_cost(*net_, loads_for(x), params_); }

std::optional<Vector> FeederObjective::gradient(const Vector& x) const {
  const LoadVector loads = loads_for(x);
  const PowerFlowSolution sol = solve_power_flow(*net_, loads);
  const auto n = static_cast<Eigen::Index>(net_->bus_count());
  const Eigen::Index m = n - 1;
  const Eigen::VectorXcd v = Eigen::Map<const Eigen::VectorXcd>(sol.voltage.data(), n);
  const PolarDerivatives d = power_derivatives(net_->admittance(), v);

  // d phi / d state, state = [angles; magnitudes] of the non-slack buses.
  Vector dphi_ds(2 * m);
  const double dev = sol.substation_active - params_.target;
  dphi_ds.head(m) = 2.0 * params_.alpha_D * dev * d.dS_dVa.row(0).tail(m).real().transpose();
  dphi_ds.tail(m) = 2.0 * params_.alpha_D * dev * d.dS_dVm.row(0).tail(m).real().transpose();
  for (Eigen::Index i = 1; i < n; ++i) {
    const double vi = sol.magnitude[i];
    dphi_ds[m + i - 1] +=
        params_.alpha_v * (2.0 * std::max(vi - params_.v_hi, 0.0) - 2.0 * std::max(params_.v_lo - vi, 0.0));
  }
  // Loads enter the mismatch with unit coefficient, so d phi / d load = -J^{-T} d phi / d state.
  const Vector adjoint = reduced_jacobian(d).transpose().partialPivLu().solve(dphi_ds);
  Vector grad(static_cast<Eigen::Index>(slots_.size()));
  for (std::size_t k = 0; k < slots_.size(); ++k) {
    const auto row = static_cast<Eigen::Index>(slots_[k].bus) - 1 + (slots_[k].reactive ? m : 0);
    grad[static_cast<Eigen::Index>(k)] = -adjoint[row];
  }
  return grad;
}

Problem make_feeder_case(std::shared_ptr<const RadialNetwork> net, const FeederCaseOptions& opts) {
  if (!net) throw ParameterError("make_feeder_case needs a network");
  std::vector<LoadSlot> slots;
  std::vector<std::size_t> agent_sizes;
  std::vector<double> upper;
  for (std::size_t i = 1; i < net->bus_count(); ++i) {
    const auto& b = net->bus(i);
    std::size_t dims = 0;
    if (b.p_load > 0.0) {
      slots.push_back({i, false});
      upper.push_back(b.p_load);
      ++dims;
    }
    if (b.q_load > 0.0) {
      slots.push_back({i, true});
      upper.push_back(b.q_load);
      ++dims;
    }
    if (dims > 0) agent_sizes.push_back(dims);
  }
  if (slots.empty()) throw ParameterError("feeder has no controllable loads");

  FeederCostParams params;
  params.target = net->nominal_active_total() - opts.curtail_target;
  params.alpha_D = opts.alpha_D;
  params.alpha_v = opts.alpha_v;
  params.v_lo = opts.v_lo;
  params.v_hi = opts.v_hi;

  const auto d = static_cast<Eigen::Index>(slots.size());
  const Vector u = Eigen::Map<const Vector>(upper.data(), d);
  auto box = std::make_shared<BoxSet>(Vector::Zero(d), u);

  RandomStream stream(opts.cost_seed, 0);
  AgentPartition partition(agent_sizes);
  std::vector<std::shared_ptr<const LocalCost>> locals;
  for (std::size_t i = 0; i < partition.agent_count(); ++i) {
    const auto di = static_cast<Eigen::Index>(partition.size(i));
    Vector a(di), b(di);
    for (Eigen::Index k = 0; k < di; ++k) {
      a[k] = stream.uniform_open(0.5, 1.5);
      b[k] = stream.uniform_open(0.0, 5.0);
    }
    locals.push_back(std::make_shared<QuadraticLocalCost>(a, b));
  }
  auto phi = std::make_shared<FeederObjective>(std::move(net), std::move(slots), params);
  return Problem(std::move(partition), std::move(box), std::move(phi), std::move(locals), {}, "p.u.");
}

}  // namespace zoflex

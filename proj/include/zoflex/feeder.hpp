#pragma once

#include <complex>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "zoflex/problem.hpp"

namespace zoflex {

using Complex = std::complex<double>;

/// Radial distribution feeder in per-unit. Bus 0 is the substation; every
/// other bus has exactly one upstream bus and one line (r + jx) to it.
class RadialNetwork {
 public:
  struct Bus {
    int parent = -1;
    double r = 0.0;  // line resistance to the parent, p.u.
    double x = 0.0;  // line reactance to the parent, p.u.
    double p_load = 0.0;  // nominal active load, p.u.
    double q_load = 0.0;  // nominal reactive load, p.u.
  };

  /// Validates the tree; buses[i] describes bus i.
  explicit RadialNetwork(std::vector<Bus> buses, double source_voltage = 1.0, double base_kva = 10000.0);

  std::size_t bus_count() const { return buses_.size(); }
  const Bus& bus(std::size_t i) const { return buses_.at(i); }
  const std::vector<Bus>& buses() const { return buses_; }
  double source_voltage() const { return source_voltage_; }
  double base_kva() const { return base_kva_; }
  /// Root-first breadth-first order.
  const std::vector<std::size_t>& order() const { return order_; }
  double nominal_active_total() const;

  /// Bus admittance matrix.
  Eigen::MatrixXcd admittance() const;

 private:
  std::vector<Bus> buses_;
  double source_voltage_;
  double base_kva_;
  std::vector<std::size_t> order_;
};

/// Reads `bus,parent,r_pu,x_pu,p_load_pu,q_load_pu` CSV; '#' starts a comment.
RadialNetwork parse_feeder_csv(std::istream& in);
RadialNetwork load_feeder_csv(const std::filesystem::path& path);

/// The 15-bus synthetic feeder shipped with the project (also data/feeder15.csv).
const std::string& synthetic_feeder_csv();
RadialNetwork synthetic_feeder();

/// Resolves "builtin:feeder15" or a filesystem path.
RadialNetwork load_feeder(const std::string& reference);

/// Per-bus loads; entry 0 (the substation) must be zero.
struct LoadVector {
  Vector active;
  Vector reactive;

  static LoadVector nominal(const RadialNetwork& net);
};

struct PowerFlowSolution {
  std::vector<Complex> voltage;
  Vector magnitude;
  Vector angle;
  double substation_active = 0.0;    // p_c
  double substation_reactive = 0.0;
  double active_losses = 0.0;
  std::size_t iterations = 0;
  double residual = 0.0;
  bool converged = false;
};

class PowerFlowDivergence : public std::runtime_error {
 public:
  PowerFlowDivergence(const std::string& what, double residual, std::size_t iterations)
      : std::runtime_error(what), residual_(residual), iterations_(iterations) {}
  double residual() const noexcept { return residual_; }
  std::size_t iterations() const noexcept { return iterations_; }

 private:
  double residual_;
  std::size_t iterations_;
};

struct SweepOptions {
  double tolerance = 1e-8;   // max complex voltage update, p.u.
  std::size_t max_sweeps = 200;
};

/// Backward/forward sweep with constant-power loads.
PowerFlowSolution solve_power_flow(const RadialNetwork& net, const LoadVector& loads, const SweepOptions& opts = {});

/// Flat-start polar Newton-Raphson on the full bus admittance matrix.
/// Independent of the sweep; used to cross-check it.
PowerFlowSolution solve_power_flow_newton(const RadialNetwork& net, const LoadVector& loads,
                                          double tolerance = 1e-11, std::size_t max_iterations = 30);

/// sum_j max(v_j - v_hi, 0)^2 + max(v_lo - v_j, 0)^2 over all buses.
double voltage_penalty(const PowerFlowSolution& solution, double v_lo, double v_hi);

struct FeederCostParams {
  double target = 0.0;  // D, p.u.
  double alpha_D = 20.0;
  double alpha_v = 20.0;
  double v_lo = 0.96;
  double v_hi = 1.04;
};

/// alpha_D (p_c - D)^2 + alpha_v rho.
double feeder_global_cost(const RadialNetwork& net, const LoadVector& loads, const FeederCostParams& params);

/// Decision coordinate -> (bus, active or reactive).
struct LoadSlot {
  std::size_t bus;
  bool reactive;
};

/// phi(x) for a feeder whose controllable loads are the decision x.
/// Loads outside the decision stay at their nominal values.
class FeederObjective final : public GlobalObjective {
 public:
  FeederObjective(std::shared_ptr<const RadialNetwork> net, std::vector<LoadSlot> slots, FeederCostParams params);

  double value(const Vector& x) const override;
  /// Adjoint of the power-flow Jacobian at the converged state.
  std::optional<Vector> gradient(const Vector& x) const override;

  LoadVector loads_for(const Vector& x) const;
  const RadialNetwork& network() const { return *net_; }
  const std::vector<LoadSlot>& slots() const { return slots_; }
  const FeederCostParams& params() const { return params_; }

 private:
  std::shared_ptr<const RadialNetwork> net_;
  std::vector<LoadSlot> slots_;
  FeederCostParams params_;
};

struct FeederCaseOptions {
  double curtail_target = 0.15;  // p.u.
  std::uint64_t cost_seed = 0;
  double alpha_D = 20.0;
  double alpha_v = 20.0;
  double v_lo = 0.96;
  double v_hi = 1.04;
};

/// Every bus with a positive nominal active (reactive) load contributes one
/// active (reactive) decision coordinate bounded by [0, nominal]. Each load
/// bus is one agent. D = nominal active total - curtail_target. Local costs
/// are quadratic with a ~ U(0.5, 1.5), b ~ U(0, 5) per coordinate.
Problem make_feeder_case(std::shared_ptr<const RadialNetwork> net, const FeederCaseOptions& opts);

}  // namespace zoflex

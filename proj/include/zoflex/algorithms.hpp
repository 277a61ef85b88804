#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "zoflex/metrics.hpp"
#include "zoflex/random.hpp"

namespace zoflex {

/// Nonnegative sequence indexed by the iteration counter k >= 0.
///   constant:      c
///   inverse_sqrt:  c / sqrt(k + offset)
///   capped_power:  min{c / (k + offset)^exponent, cap}
///   geometric:     c * ratio^k
class Schedule {
 public:
  enum class Kind { constant, inverse_sqrt, capped_power, geometric };

  Schedule() : Schedule(constant(1.0)) {}
  static Schedule constant(double c);
  static Schedule inverse_sqrt(double c, double offset = 1.0);
  static Schedule capped_power(double c, double exponent, double cap, double offset = 1.0);
  static Schedule geometric(double c, double ratio);

  double operator()(std::size_t k) const;
  Kind kind() const { return kind_; }
  double base() const { return c_; }
  double offset() const { return offset_; }
  double exponent() const { return exponent_; }
  double cap() const { return cap_; }
  double ratio() const { return ratio_; }

  /// sum_k value(k) < infinity, decided from the closed form.
  bool summable() const;
  bool square_summable() const;
  /// Supremum over k >= 0 (every kind is nonincreasing in k).
  double supremum() const;

  nlohmann::json to_json() const;
  static Schedule from_json(const nlohmann::json& j);
  static std::string kind_name(Kind kind);

 private:
  Schedule(Kind kind, double c, double offset, double exponent, double cap, double ratio);

  Kind kind_;
  double c_;
  double offset_;
  double exponent_;
  double cap_;
  double ratio_;
};

struct ZfgdConfig {
  std::size_t K = 0;
  Schedule step;    // eta(k)
  Schedule radius;  // r(k)
  Schedule shrink;  // delta(k), must stay in [0, 1)
  std::optional<Vector> x0;  // defaults to the anchor
};

struct RzfcdConfig {
  std::size_t K = 0;
  // One entry shared by every coordinate, or one per coordinate.
  std::vector<Schedule> step;
  std::vector<Schedule> radius;
  std::optional<Vector> x0;
};

nlohmann::json to_json(const ZfgdConfig& cfg);
ZfgdConfig zfgd_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const RzfcdConfig& cfg);
RzfcdConfig rzfcd_config_from_json(const nlohmann::json& j);

/// Draws z given (set, x, r); the default is the projected Gaussian.
using PerturbationSource =
    std::function<Vector(RandomStream& stream, const FeasibleSet& set, const Vector& x, double r)>;

/// Two-point zeroth-order feedback gradient descent. Each iteration queries
/// phi at x(k) and at x(k) + r(k) z(k), then steps and projects onto the
/// shrunk set (1 - delta(k)) X.
Trace run_2zfgd(Problem& problem, const ZfgdConfig& config, RandomStream& stream, const RecordOptions& record = {},
                const PerturbationSource& perturbation = {});

/// Randomized zeroth-order feedback coordinate descent on a box. Radii are
/// clamped to half the coordinate's width.
Trace run_rzfcd(Problem& problem, const RzfcdConfig& config, RandomStream& stream, const RecordOptions& record = {});

// ---------------------------------------------------------------------------
// Parameter helpers

struct TheoremConstants {
  double lipschitz_F = 0.0;   // Lambda_F (convex regime only)
  double smooth_F = 0.0;      // L_F
  double lipschitz_phi = 0.0; // Lambda_phi
  double smooth_phi = 0.0;    // L_phi (nonconvex regime only)
  double inscribed = 0.0;     // R_lower
  double circumscribed = 0.0; // R_upper
  std::size_t dimension = 0;
  double initial_gap = 0.0;   // F(x(0)) - F*, nonconvex regime only
};

enum class Regime { convex, nonconvex };

struct InequalityCheck {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  bool pass = false;
};

struct TheoremParams {
  double delta = 0.0;
  double eta = 0.0;
  std::size_t K = 0;
  Schedule radius;
  std::vector<InequalityCheck> checks;

  ZfgdConfig config() const;
};

/// delta, eta and K at their bounds, plus a geometric r(k) with ratio 1/2 whose
/// first term meets the per-step cap and both sum caps. Throws ParameterError
/// naming the violated inequality when no valid choice exists.
TheoremParams theoretical_params_2zfgd(const TheoremConstants& c, double epsilon, Regime regime);

/// Re-substitutes a parameter choice into the displayed inequalities.
std::vector<InequalityCheck> check_2zfgd_conditions(const TheoremConstants& c, double epsilon, Regime regime,
                                                    double delta, double eta, std::size_t K,
                                                    const Schedule& radius);

struct RzfcdCheck {
  std::string condition;
  bool pass = true;
  std::optional<std::size_t> coordinate;  // first offending beta
  double value = 0.0;                     // eta_beta * L_{F,beta} at the offender, or the worst one
};

struct RzfcdReport {
  std::vector<RzfcdCheck> checks;
  bool pass() const;
};

/// eta_beta L_{F,beta} <= 1 for every beta, and summable radii.
RzfcdReport validate_params_rzfcd(const RzfcdConfig& config, const Vector& coordinate_smoothness);

}  // namespace zoflex

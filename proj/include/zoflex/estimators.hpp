#pragma once

#include <functional>
#include <vector>

#include "zoflex/random.hpp"

namespace zoflex {

using ScalarOracle = std::function<double(const Vector&)>;

/// One two-point gradient estimate together with the raw feedback it used.
struct EstimatorSample {
  Vector probe_base;
  Vector probe_perturbed;
  double value_base = 0.0;
  double value_perturbed = 0.0;
  double r = 0.0;
  Vector z;
  Vector estimate;  // (value_perturbed - value_base) / r * z
};

/// G(x; r, z) = (h(x + r z) - h(x)) / r * z. Exactly two oracle calls.
/// Oracle exceptions are rethrown as OracleError naming the failing probe.
EstimatorSample two_point_estimate(const ScalarOracle& oracle, const Vector& x, double r, const Vector& z);

/// Single-coordinate estimate
///   local_partial + sign * (phi(x + r sign e_index) - phi(x)) / r.
/// Exactly two oracle calls.
double coordinate_estimate(const ScalarOracle& oracle, const Vector& x, std::size_t index, double r,
                           int sign, double local_partial);

/// Smooth test function with an analytic gradient, used by the diagnostics.
struct SmoothTestFunction {
  std::function<double(const Vector&)> value;
  std::function<Vector(const Vector&)> gradient;
  double smoothness = 0.0;  // L
};

/// 1/2 * ||x - center||^2 (L = 1).
SmoothTestFunction half_squared_distance(Vector center);

/// <c, x> + offset (L = 0; the estimator is unbiased).
SmoothTestFunction affine_function(Vector c, double offset = 0.0);

struct BiasReport {
  double bias_norm = 0.0;        // ||mean estimate - grad h(x)||
  double clt_half_width = 0.0;   // sqrt(sum of per-coordinate variances / n)
  double bias_bound = 0.0;       // sqrt(d) * L * r
  std::size_t samples = 0;

  /// bias_norm <= bias_bound + sigmas * clt_half_width
  bool within(double sigmas = 3.0) const { return bias_norm <= bias_bound + sigmas * clt_half_width; }
};

/// Monte-Carlo bias of the Gaussian two-point estimator at x. When `set` is
/// given, z follows the projected Gaussian on S(x, r) instead of N(0, I).
BiasReport bias_diagnostic(const SmoothTestFunction& h, const Vector& x, double r, std::size_t n_samples,
                           RandomStream& stream, const FeasibleSet* set = nullptr);

struct VariancePoint {
  double r = 0.0;
  double mean_squared_error = 0.0;  // E||G - grad h||^2
  double clt_half_width = 0.0;
};

struct VarianceReport {
  std::vector<VariancePoint> points;
  double limit = 0.0;  // (d + 1) ||grad h(x)||^2
  std::size_t samples = 0;
};

/// Monte-Carlo E||G(x; r, z) - grad h(x)||^2 for each radius; the small-r
/// values approach (d + 1) ||grad h(x)||^2.
VarianceReport variance_limit_diagnostic(const SmoothTestFunction& h, const Vector& x,
                                         const std::vector<double>& radii, std::size_t n_samples,
                                         RandomStream& stream, const FeasibleSet* set = nullptr);

}  // namespace zoflex

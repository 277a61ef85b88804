#include "zoflex/estimators.hpp"

#include <cmath>
#include <sstream>
#include <string>

namespace zoflex {

namespace {

std::string describe_probe(const Vector& p) {
  std::ostringstream os;
  os << "probe (dim " << p.size() << ", norm " << p.norm() << ")";
  return os.str();
}

double query(const ScalarOracle& oracle, const Vector& p) {
  try {
    return oracle(p);
  } catch (const OracleError&) {
    throw;
  } catch (const std::exception& e) {
    throw OracleError("oracle failed at " + describe_probe(p) + ": " + e.what());
  }
}

Vector draw_direction(RandomStream& stream, const Vector& x, double r, const FeasibleSet* set) {
  if (set != nullptr) return projected_gaussian_perturbation(stream, *set, x, r);
  return gaussian(stream, static_cast<std::size_t>(x.size()));
}

}  // namespace

EstimatorSample two_point_estimate(const ScalarOracle& oracle, const Vector& x, double r, const Vector& z) {
  if (!(r > 0.0)) throw ParameterError("smoothing radius must be positive");
  if (x.size() != z.size()) throw PreconditionError("two_point_estimate: dimension mismatch");
  EstimatorSample s;
  s.r = r;
  s.z = z;
  s.probe_base = x;
  s.probe_perturbed = x + r * z;
  s.value_base = query(oracle, s.probe_base);
  s.value_perturbed = query(oracle, s.probe_perturbed);
  s.estimate = ((s.value_perturbed - s.value_base) / r) * z;
  return s;
}

double coordinate_estimate(const ScalarOracle& oracle, const Vector& x, std::size_t index, double r,
                           int sign, double local_partial) {
  if (!(r > 0.0)) throw ParameterError("coordinate radius must be positive");
  if (sign != 1 && sign != -1) throw ParameterError("coordinate sign must be +1 or -1");
  if (index >= static_cast<std::size_t>(x.size())) throw PreconditionError("coordinate index out of range");
  Vector probe = x;
  probe[static_cast<Eigen::Index>(index)] += r * sign;
  const double base = query(oracle, x);
  const double perturbed = query(oracle, probe);
  return local_partial + sign * (perturbed - base) / r;
}

SmoothTestFunction half_squared_distance(Vector center) {
  SmoothTestFunction h;
  h.value = [center](const Vector& x) { return 0.5 * (x - center).squaredNorm(); };
  h.gradient = [center](const Vector& x) -> Vector { return x - center; };
  h.smoothness = 1.0;
  return h;
}

SmoothTestFunction affine_function(Vector c, double offset) {
  SmoothTestFunction h;
  h.value = [c, offset](const Vector& x) { return c.dot(x) + offset; };
  h.gradient = [c](const Vector&) -> Vector { return c; };
  h.smoothness = 0.0;
  return h;
}

BiasReport bias_diagnostic(const SmoothTestFunction& h, const Vector& x, double r, std::size_t n_samples,
                           RandomStream& stream, const FeasibleSet* set) {
  if (n_samples < 2) throw ParameterError("bias_diagnostic needs at least two samples");
  const Eigen::Index d = x.size();
  const double h0 = h.value(x);
  // Welford accumulation per coordinate.
  Vector mean = Vector::Zero(d);
  Vector m2 = Vector::Zero(d);
  for (std::size_t n = 1; n <= n_samples; ++n) {
    const Vector z = draw_direction(stream, x, r, set);
    const Vector g = ((h.value(x + r * z) - h0) / r) * z;
    const Vector delta = g - mean;
    mean += delta / static_cast<double>(n);
    m2 += delta.cwiseProduct(g - mean);
  }
  const double n = static_cast<double>(n_samples);
  BiasReport report;
  report.samples = n_samples;
  report.bias_norm = (mean - h.gradient(x)).norm();
  report.clt_half_width = std::sqrt(m2.sum() / (n - 1.0) / n);
  report.bias_bound = std::sqrt(static_cast<double>(d)) * h.smoothness * r;
  return report;
}

VarianceReport variance_limit_diagnostic(const SmoothTestFunction& h, const Vector& x,
                                         const std::vector<double>& radii, std::size_t n_samples,
                                         RandomStream& stream, const FeasibleSet* set) {
  if (n_samples < 2) throw ParameterError("variance_limit_diagnostic needs at least two samples");
  const Vector grad = h.gradient(x);
  const double h0 = h.value(x);
  VarianceReport report;
  report.samples = n_samples;
  report.limit = static_cast<double>(x.size() + 1) * grad.squaredNorm();
  for (const double r : radii) {
    if (!(r > 0.0)) throw ParameterError("smoothing radius must be positive");
    double mean = 0.0;
    double m2 = 0.0;
    for (std::size_t n = 1; n <= n_samples; ++n) {
      const Vector z = draw_direction(stream, x, r, set);
      const double err = (((h.value(x + r * z) - h0) / r) * z - grad).squaredNorm();
      const double delta = err - mean;
      mean += delta / static_cast<double>(n);
      m2 += delta * (err - mean);
    }
    const double n = static_cast<double>(n_samples);
    report.points.push_back({r, mean, std::sqrt(m2 / (n - 1.0) / n)});
  }
  return report;
}

}  // namespace zoflex

#include <doctest.h>

#include <cmath>

#include "zoflex/estimators.hpp"

using namespace zoflex;

TEST_CASE("two-point estimate on simple functions") {
  int calls = 0;
  const ScalarOracle square = [&calls](const Vector& x) {
    ++calls;
    return x.squaredNorm();
  };
  const EstimatorSample s = two_point_estimate(square, Vector::Ones(1), 0.1, Vector::Ones(1));
  CHECK(s.estimate[0] == doctest::Approx(2.1));
  CHECK(calls == 2);
  CHECK(s.value_base == 1.0);
  CHECK(s.probe_perturbed[0] == doctest::Approx(1.1));

  const ScalarOracle constant = [](const Vector&) { return 3.0; };
  CHECK(two_point_estimate(constant, Vector::Zero(3), 0.5, Vector::Ones(3)).estimate.norm() == 0.0);
  CHECK_THROWS_AS(two_point_estimate(constant, Vector::Zero(3), 0.0, Vector::Ones(3)), ParameterError);
}

TEST_CASE("two-point estimate is exact on linear functions") {
  RandomStream s(1, 0);
  const Vector c = gaussian(s, 6);
  const ScalarOracle lin = [&c](const Vector& x) { return c.dot(x); };
  for (const double r : {1e-3, 0.1, 2.0}) {
    const Vector z = gaussian(s, 6);
    const Vector x = gaussian(s, 6);
    const Vector est = two_point_estimate(lin, x, r, z).estimate;
    CHECK((est - c.dot(z) * z).norm() < 1e-9 * (1.0 + z.squaredNorm()));
  }
}

TEST_CASE("oracle failures carry probe context") {
  const ScalarOracle bad = [](const Vector&) -> double { throw std::runtime_error("diverged"); };
  try {
    two_point_estimate(bad, Vector::Zero(2), 0.1, Vector::Ones(2));
    FAIL("expected OracleError");
  } catch (const OracleError& e) {
    CHECK(std::string(e.what()).find("diverged") != std::string::npos);
    CHECK(std::string(e.what()).find("probe") != std::string::npos);
  }
}

TEST_CASE("coordinate estimate examples") {
  const ScalarOracle phi = [](const Vector& x) { return x[0] * x[0]; };
  Vector x(2);
  x << 1.0, 0.0;
  CHECK(coordinate_estimate(phi, x, 0, 0.01, 1, 0.0) == doctest::Approx(2.01));
  CHECK(coordinate_estimate(phi, x, 0, 0.01, -1, 0.0) == doctest::Approx(1.99));
  CHECK(coordinate_estimate(phi, x, 0, 0.01, 1, 0.5) == doctest::Approx(2.51));
  const ScalarOracle lin = [](const Vector& v) { return 3.0 * v[0] - 2.0 * v[1]; };
  CHECK(coordinate_estimate(lin, x, 1, 0.7, -1, 0.0) == doctest::Approx(-2.0));
  CHECK_THROWS_AS(coordinate_estimate(phi, x, 0, 0.01, 0, 0.0), ParameterError);
  CHECK_THROWS_AS(coordinate_estimate(phi, x, 2, 0.01, 1, 0.0), PreconditionError);
}

TEST_CASE("property: coordinate estimate error never exceeds half L r on quadratics") {
  RandomStream s(2, 0);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t d = 1 + s.below(5);
    const auto n = static_cast<Eigen::Index>(d);
    Matrix B(n, n);
    for (Eigen::Index i = 0; i < B.size(); ++i) B.data()[i] = s.normal();
    const Matrix A = B * B.transpose();
    const ScalarOracle phi = [&A](const Vector& v) { return 0.5 * v.dot(A * v); };
    const Vector x = gaussian(s, d);
    const std::size_t a = s.below(d);
    const double r = 0.05 + 0.5 * s.uniform();
    const int sign = s.uniform() < 0.5 ? 1 : -1;
    const double err = std::abs(coordinate_estimate(phi, x, a, r, sign, 0.0) - (A * x)[static_cast<Eigen::Index>(a)]);
    CHECK(err <= 0.5 * A(a, a) * r + 1e-12);
  }
}

TEST_CASE("bias diagnostic: affine functions are unbiased, quadratic within sqrt(d) L r") {
  RandomStream s(3, 0);
  const Vector c = Vector::LinSpaced(4, -1.0, 2.0);
  const BiasReport lin = bias_diagnostic(affine_function(c), Vector::Zero(4), 0.5, 100000, s);
  CHECK(lin.bias_bound == 0.0);
  CHECK(lin.bias_norm <= 3.0 * lin.clt_half_width);

  const Vector x = Vector::LinSpaced(10, -1.0, 1.0);
  const auto h = half_squared_distance(Vector::Zero(10));
  const BiasReport quad = bias_diagnostic(h, x, 0.01, 100000, s);
  CHECK(quad.within());
  CHECK(quad.bias_bound == doctest::Approx(std::sqrt(10.0) * 0.01));
  const BiasReport half = bias_diagnostic(h, x, 0.005, 100000, s);
  CHECK(half.bias_bound == doctest::Approx(quad.bias_bound / 2.0));
  CHECK(half.within());
}

TEST_CASE("bias diagnostic with a projected distribution at an interior point") {
  RandomStream s(4, 0);
  const BoxSet box(Vector::Constant(3, -100.0), Vector::Constant(3, 100.0));
  const auto h = half_squared_distance(Vector::Ones(3));
  const BiasReport rep = bias_diagnostic(h, Vector::Zero(3), 0.01, 50000, s, &box);
  CHECK(rep.within());
}

TEST_CASE("variance limit approaches (d + 1) |grad|^2") {
  RandomStream s(5, 0);
  Vector x = Vector::Zero(10);
  x[3] = 2.0;
  const auto h = half_squared_distance(Vector::Zero(10));
  const VarianceReport rep = variance_limit_diagnostic(h, x, {1e-2, 1e-3, 1e-4}, 200000, s);
  CHECK(rep.limit == doctest::Approx(44.0));
  REQUIRE(rep.points.size() == 3);
  for (const auto& p : rep.points) CHECK(std::abs(p.mean_squared_error / 44.0 - 1.0) < 0.03);
  // Convergence as r shrinks: the small-r estimates are at least as close as a few half-widths allow.
  CHECK(std::abs(rep.points[2].mean_squared_error - 44.0) <
        std::abs(rep.points[0].mean_squared_error - 44.0) + 4.0 * rep.points[2].clt_half_width);
}

TEST_CASE("variance at the optimum vanishes with r") {
  RandomStream s(6, 0);
  const auto h = half_squared_distance(Vector::Zero(5));
  const VarianceReport rep = variance_limit_diagnostic(h, Vector::Zero(5), {1e-2, 1e-4}, 20000, s);
  CHECK(rep.limit == 0.0);
  CHECK(rep.points[1].mean_squared_error < rep.points[0].mean_squared_error);
  CHECK(rep.points[1].mean_squared_error < 1e-6);
}

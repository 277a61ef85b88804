#include <doctest.h>

#include <cmath>

#include "zoflex/random.hpp"

using namespace zoflex;

TEST_CASE("streams are reproducible and distinct per stream id") {
  RandomStream a(42, 0), b(42, 0), c(42, 1);
  const double first = a.normal();
  CHECK(first == b.normal());
  CHECK(first != c.normal());
  CHECK(derive_stream_seed(1, 2) != derive_stream_seed(2, 1));
}

TEST_CASE("gaussian moments") {
  RandomStream s(42, 0);
  const int n = 1000000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double v = gaussian(s, 1)[0];
    sum += v;
    sq += v * v;
  }
  const double mean = sum / n;
  CHECK(std::abs(mean) < 0.005);
  CHECK(std::abs(sq / n - mean * mean - 1.0) < 0.01);
}

TEST_CASE("uniform helpers stay in range") {
  RandomStream s(3, 0);
  for (int i = 0; i < 10000; ++i) {
    const double u = s.uniform();
    CHECK((u >= 0.0 && u < 1.0));
    const double o = s.uniform_open(0.03, 0.15);
    CHECK((o > 0.03 && o < 0.15));
  }
}

TEST_CASE("projected gaussian is the raw draw far from the boundary") {
  const BoxSet box(Vector::Constant(5, -10.0), Vector::Constant(5, 10.0));
  RandomStream s(5, 0), raw(5, 0);
  for (int i = 0; i < 10000; ++i) {
    const Vector z = projected_gaussian_perturbation(s, box, Vector::Zero(5), 1e-3);
    CHECK(z == gaussian(raw, 5));
  }
}

TEST_CASE("projected gaussian clips at a face and never grows the draw") {
  const BoxSet box(Vector::Zero(3), Vector::Ones(3));
  RandomStream s(6, 0), raw(6, 0);
  Vector x(3);
  x << 1.0, 0.0, 0.5;
  for (int i = 0; i < 5000; ++i) {
    const Vector z = projected_gaussian_perturbation(s, box, x, 0.2);
    const Vector zbar = gaussian(raw, 3);
    CHECK(box.contains(x + 0.2 * z, 0.0));
    CHECK(z.norm() <= zbar.norm() + 1e-15);
    CHECK(z[0] <= 0.0);
    CHECK(z[1] >= 0.0);
  }
}

TEST_CASE("coordinate sign at and away from faces") {
  RandomStream s(9, 0);
  CHECK(coordinate_sign(s, 9.9, 0.0, 10.0, 0.5) == -1);
  CHECK(coordinate_sign(s, 0.1, 0.0, 10.0, 0.5) == 1);
  // Strict inequalities: exactly r away from a face still flips a coin.
  int plus = 0;
  for (int i = 0; i < 10000; ++i) plus += coordinate_sign(s, 5.0, 0.0, 10.0, 0.5) == 1;
  CHECK(std::abs(plus / 10000.0 - 0.5) < 0.02);
  int edge_plus = 0;
  for (int i = 0; i < 1000; ++i) edge_plus += coordinate_sign(s, 9.5, 0.0, 10.0, 0.5) == 1;
  CHECK(edge_plus > 0);
  CHECK(edge_plus < 1000);
  CHECK_THROWS_AS(coordinate_sign(s, 5.0, 0.0, 10.0, 5.1), ParameterError);
  CHECK_THROWS_AS(coordinate_sign(s, 5.0, 0.0, 10.0, 0.0), ParameterError);
  CHECK_THROWS_AS(coordinate_sign(s, 11.0, 0.0, 10.0, 0.5), PreconditionError);
}

TEST_CASE("property: coordinate probes stay in the interval") {
  RandomStream s(10, 0);
  for (int i = 0; i < 10000; ++i) {
    const double l = -10.0 * s.uniform();
    const double u = l + 0.01 + 10.0 * s.uniform();
    const double x = l + (u - l) * s.uniform();
    const double r = (u - l) / 2.0 * s.uniform_open(0.0, 1.0);
    const double probe = x + r * coordinate_sign(s, x, l, u, r);
    CHECK((probe >= l && probe <= u));
  }
}

TEST_CASE("uniform index frequencies") {
  RandomStream s(4, 0);
  for (int i = 0; i < 100; ++i) CHECK(uniform_index(s, 1) == 0);
  int counts[4] = {0, 0, 0, 0};
  for (int i = 0; i < 10000; ++i) ++counts[uniform_index(s, 4)];
  for (const int c : counts) CHECK(std::abs(c / 10000.0 - 0.25) < 0.02);
  RandomStream a(4, 2), b(4, 2);
  for (int i = 0; i < 100; ++i) CHECK(uniform_index(a, 17) == uniform_index(b, 17));
}

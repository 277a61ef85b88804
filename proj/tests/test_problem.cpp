#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "zoflex/problem.hpp"
#include "zoflex/random.hpp"

using namespace zoflex;

namespace {

class ShiftedSquare final : public GlobalObjective {
 public:
  explicit ShiftedSquare(double c) : c_(c) {}
  double value(const Vector& x) const override { return (x[0] - c_) * (x[0] - c_); }
  std::optional<Vector> gradient(const Vector& x) const override { return Vector::Constant(1, 2.0 * (x[0] - c_)); }

 private:
  double c_;
};

Problem scalar_problem(double lo, double hi, double c) {
  return Problem(AgentPartition::scalar_agents(1),
                 std::make_shared<BoxSet>(Vector::Constant(1, lo), Vector::Constant(1, hi)),
                 std::make_shared<ShiftedSquare>(c), {std::make_shared<QuadraticLocalCost>(0.0, 0.0)});
}

}  // namespace

TEST_CASE("agent partition offsets and lookup") {
  const AgentPartition p({2, 1, 3});
  CHECK(p.dimension() == 6);
  CHECK(p.agent_count() == 3);
  CHECK(p.offset(2) == 3);
  CHECK(p.agent_of(0) == 0);
  CHECK(p.agent_of(2) == 1);
  CHECK(p.agent_of(5) == 2);
  CHECK_THROWS_AS(p.agent_of(6), PreconditionError);
  CHECK_THROWS_AS(AgentPartition({2, 0}), ParameterError);
}

TEST_CASE("quadratic local cost partials") {
  const QuadraticLocalCost f(1.0, 2.0);
  CHECK(f.gradient(Vector::Constant(1, 3.0))[0] == 8.0);
  CHECK(QuadraticLocalCost(0.0, 0.0).gradient(Vector::Constant(1, 3.0))[0] == 0.0);
  RandomStream s(1, 0);
  Vector a(3), b(3);
  a << 0.7, 1.2, -0.4;
  b << 0.1, 3.0, 2.0;
  const QuadraticLocalCost g(a, b);
  const Vector x = gaussian(s, 3);
  const Vector fd = oracle::central_difference([&g](const Eigen::VectorXd& v) { return g.value(v); }, x, 1e-6);
  CHECK((fd - g.gradient(x)).norm() <= 1e-6 * std::max(1.0, g.gradient(x).norm()));
}

TEST_CASE("convex case draws respect the stated intervals") {
  const ConvexCaseData data = draw_convex_case(3);
  CHECK(data.upper.size() == 100);
  CHECK(data.loss.minCoeff() > 0.03);
  CHECK(data.loss.maxCoeff() < 0.15);
  CHECK(data.upper.minCoeff() >= 1.0);
  CHECK(data.upper.maxCoeff() < 50.0);
  CHECK(data.a.minCoeff() > 0.5);
  CHECK(data.a.maxCoeff() < 1.5);
  CHECK(data.b.minCoeff() > 0.0);
  CHECK(data.b.maxCoeff() < 5.0);
  CHECK(data.target == doctest::Approx(data.upper.sum() - 1500.0));
}

TEST_CASE("convex case oracle values and query counting") {
  const ConvexCaseData data = draw_convex_case(4);
  Problem p = make_convex_case(data);
  CHECK(p.dimension() == 100);
  CHECK(p.partition().agent_count() == 100);
  const Vector g = (data.loss.array() + 1.0).matrix();
  const double expected = std::pow(g.dot(data.upper) - data.target, 2);
  CHECK(p.eval_global(data.upper) == doctest::Approx(expected));
  CHECK(p.oracle_queries() == 1);
  p.local_partial(0, data.upper);
  CHECK(p.oracle_queries() == 1);
  const Vector mid = 0.5 * data.upper;
  const double F = p.eval_F(mid);
  CHECK(p.oracle_queries() == 1);
  CHECK(p.evaluation_queries() == 1);
  CHECK(F == doctest::Approx(p.eval_global(mid) + p.local_cost_total(mid)));
  CHECK_THROWS_AS(p.eval_global(data.upper * 1.01), PreconditionError);
}

TEST_CASE("eval_F equals eval_global without local costs") {
  Problem p = scalar_problem(0.0, 10.0, 3.0);
  const Vector x = Vector::Constant(1, 1.5);
  CHECK(p.eval_F(x) == p.eval_global(x));
}

TEST_CASE("convex case constants are valid bounds") {
  RandomStream s(5, 0);
  const ConvexCaseData data = draw_convex_case(5);
  Problem p = make_convex_case(data);
  const SmoothnessConstants& c = p.constants();
  REQUIRE(c.smooth_F);
  REQUIRE(c.lipschitz_F);
  REQUIRE(c.coordinate_smooth_F);
  for (int i = 0; i < 200; ++i) {
    Vector x(100), y(100);
    for (Eigen::Index j = 0; j < 100; ++j) {
      x[j] = data.upper[j] * s.uniform();
      y[j] = data.upper[j] * s.uniform();
    }
    const Vector gx = p.exact_gradient(x);
    CHECK(gx.norm() <= *c.lipschitz_F * (1.0 + 1e-12));
    CHECK((gx - p.exact_gradient(y)).norm() <= *c.smooth_F * (x - y).norm() * (1.0 + 1e-12));
    const Vector phi_grad = *p.global().gradient(x);
    CHECK(phi_grad.norm() <= *c.lipschitz_phi * (1.0 + 1e-12));
  }
}

TEST_CASE("reference optimum on scalar problems") {
  Problem interior = scalar_problem(0.0, 10.0, 3.0);
  const ReferenceOptimum a = reference_optimum(interior);
  CHECK(a.x[0] == doctest::Approx(3.0).epsilon(1e-9));
  CHECK(a.value == doctest::Approx(0.0).epsilon(1e-12));

  Problem boundary = scalar_problem(0.0, 2.0, 3.0);
  const ReferenceOptimum b = reference_optimum(boundary);
  CHECK(b.x[0] == doctest::Approx(2.0));
  CHECK(b.value == doctest::Approx(1.0));
}

TEST_CASE("reference optimum matches active-set enumeration on small convex instances") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const ConvexCaseData data = draw_convex_case(seed, 3, 40.0);
    Problem p = make_convex_case(data);
    const Vector g = (data.loss.array() + 1.0).matrix();
    // F = (g'x - D)^2 + sum a x^2 + b x  =  1/2 x'Hx + c'x + k
    const Matrix H = Matrix(2.0 * data.a.asDiagonal()) + 2.0 * g * g.transpose();
    const Vector c = data.b - 2.0 * data.target * g;
    const double k = data.target * data.target;
    const double brute = oracle::box_qp_brute_force(H, c, k, Vector::Zero(3), data.upper);
    const ReferenceOptimum ref = reference_optimum(p);
    CHECK(ref.value == doctest::Approx(brute).epsilon(1e-9));
  }
}

TEST_CASE("property: reference optimum satisfies the first-order condition") {
  RandomStream s(6, 0);
  Problem p = make_convex_case(6);
  const ReferenceOptimum ref = reference_optimum(p);
  const Vector grad = p.exact_gradient(ref.x);
  const auto& box = dynamic_cast<const BoxSet&>(p.feasible());
  for (int i = 0; i < 1000; ++i) {
    Vector x(100);
    for (Eigen::Index j = 0; j < 100; ++j) x[j] = box.upper()[j] * s.uniform();
    CHECK(grad.dot(x - ref.x) >= -1e-8);
  }
}

TEST_CASE("reference optimum requires an exact gradient") {
  class Opaque final : public GlobalObjective {
   public:
    double value(const Vector& x) const override { return x.squaredNorm(); }
  };
  Problem p(AgentPartition::scalar_agents(1), std::make_shared<BoxSet>(Vector::Zero(1), Vector::Ones(1)),
            std::make_shared<Opaque>(), {std::make_shared<QuadraticLocalCost>(1.0, 0.0)});
  CHECK_FALSE(p.has_exact_gradient());
  CHECK_THROWS_AS(reference_optimum(p), ConfigurationError);
}

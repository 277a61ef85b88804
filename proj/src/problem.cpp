#include "zoflex/problem.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "zoflex/random.hpp"

namespace zoflex {

// ---------------------------------------------------------------------------
// AgentPartition

AgentPartition::AgentPartition(std::vector<std::size_t> sizes) : sizes_(std::move(sizes)) {
  if (sizes_.empty()) throw ParameterError("partition needs at least one agent");
  offsets_.reserve(sizes_.size());
  for (const std::size_t s : sizes_) {
    if (s == 0) throw ParameterError("agent slices must be nonempty");
    offsets_.push_back(total_);
    total_ += s;
  }
}

AgentPartition AgentPartition::scalar_agents(std::size_t n) {
  return AgentPartition(std::vector<std::size_t>(n, 1));
}

std::size_t AgentPartition::agent_of(std::size_t index) const {
  if (index >= total_) throw PreconditionError("coordinate index out of range");
  const auto it = std::upper_bound(offsets_.begin(), offsets_.end(), index);
  return static_cast<std::size_t>(std::distance(offsets_.begin(), it)) - 1;
}

// ---------------------------------------------------------------------------
// Costs

QuadraticLocalCost::QuadraticLocalCost(double a, double b)
    : a_(Vector::Constant(1, a)), b_(Vector::Constant(1, b)) {}

QuadraticLocalCost::QuadraticLocalCost(Vector a, Vector b) : a_(std::move(a)), b_(std::move(b)) {
  if (a_.size() != b_.size() || a_.size() == 0) throw ParameterError("quadratic cost coefficient sizes differ");
}

double QuadraticLocalCost::value(const Vector& xi) const {
  return (a_.array() * xi.array().square() + b_.array() * xi.array()).sum();
}

Vector QuadraticLocalCost::gradient(const Vector& xi) const {
  return (2.0 * a_.array() * xi.array() + b_.array()).matrix();
}

LinearDeviationObjective::LinearDeviationObjective(Vector coefficients, double target, double weight)
    : g_(std::move(coefficients)), target_(target), weight_(weight) {}

double LinearDeviationObjective::value(const Vector& x) const {
  const double dev = g_.dot(x) - target_;
  return weight_ * dev * dev;
}

std::optional<Vector> LinearDeviationObjective::gradient(const Vector& x) const {
  return Vector((2.0 * weight_ * (g_.dot(x) - target_)) * g_);
}

// ---------------------------------------------------------------------------
// Problem

Problem::Problem(AgentPartition partition, std::shared_ptr<const FeasibleSet> feasible,
                 std::shared_ptr<const GlobalObjective> global, std::vector<std::shared_ptr<const LocalCost>> locals,
                 SmoothnessConstants constants, std::string unit)
    : partition_(std::move(partition)),
      feasible_(std::move(feasible)),
      global_(std::move(global)),
      locals_(std::move(locals)),
      constants_(std::move(constants)),
      unit_(std::move(unit)) {
  if (!feasible_ || !global_) throw ParameterError("problem needs a feasible set and a global objective");
  if (feasible_->dimension() != partition_.dimension()) {
    throw ParameterError("feasible set dimension does not match the agent partition");
  }
  if (locals_.size() != partition_.agent_count()) {
    throw ParameterError("one local cost per agent is required");
  }
  for (const auto& f : locals_) {
    if (!f) throw ParameterError("null local cost");
  }
}

void Problem::require_feasible(const Vector& x, const char* what) const {
  if (static_cast<std::size_t>(x.size()) != dimension() || !feasible_->contains(x)) {
    throw PreconditionError(std::string(what) + ": point lies outside the feasible set");
  }
}

double Problem::eval_global(const Vector& x) {
  require_feasible(x, "eval_global");
  ++oracle_queries_;
  return global_->value(x);
}

Vector Problem::local_partial(std::size_t agent, const Vector& x) const {
  return locals_.at(agent)->gradient(partition_.slice(x, agent));
}

Vector Problem::local_gradient(const Vector& x) const {
  Vector g(x.size());
  for (std::size_t i = 0; i < partition_.agent_count(); ++i) {
    g.segment(static_cast<Eigen::Index>(partition_.offset(i)), static_cast<Eigen::Index>(partition_.size(i))) =
        local_partial(i, x);
  }
  return g;
}

double Problem::local_cost_total(const Vector& x) const {
  double total = 0.0;
  for (std::size_t i = 0; i < partition_.agent_count(); ++i) total += locals_[i]->value(partition_.slice(x, i));
  return total;
}

double Problem::eval_F(const Vector& x) {
  require_feasible(x, "eval_F");
  ++evaluation_queries_;
  return global_->value(x) + local_cost_total(x);
}

bool Problem::has_exact_gradient() const {
  return global_->gradient(feasible_->anchor()).has_value();
}

Vector Problem::exact_gradient(const Vector& x) const {
  auto g = global_->gradient(x);
  if (!g) throw ConfigurationError("the global objective provides no exact gradient");
  return *g + local_gradient(x);
}

// ---------------------------------------------------------------------------
// Convex benchmark

ConvexCaseData draw_convex_case(std::uint64_t seed, std::size_t agents, double curtail_kw) {
  if (agents == 0) throw ParameterError("convex case needs at least one agent");
  RandomStream stream(seed, 0);
  ConvexCaseData data;
  const auto n = static_cast<Eigen::Index>(agents);
  data.loss.resize(n);
  data.upper.resize(n);
  data.a.resize(n);
  data.b.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    data.loss[i] = stream.uniform_open(0.03, 0.15);
    double u;
    do {
      u = stream.uniform_open(0.0, 50.0);
    } while (u < 1.0);
    data.upper[i] = u;
    data.a[i] = stream.uniform_open(0.5, 1.5);
    data.b[i] = stream.uniform_open(0.0, 5.0);
  }
  data.target = data.upper.sum() - curtail_kw;
  return data;
}

Problem make_convex_case(const ConvexCaseData& data) {
  const auto n = static_cast<std::size_t>(data.upper.size());
  const Vector g = (data.loss.array() + 1.0).matrix();
  auto box = std::make_shared<BoxSet>(Vector::Zero(data.upper.size()), data.upper);
  auto phi = std::make_shared<LinearDeviationObjective>(g, data.target);
  std::vector<std::shared_ptr<const LocalCost>> locals;
  locals.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    locals.push_back(std::make_shared<QuadraticLocalCost>(data.a[k], data.b[k]));
  }

  // Hessian of F is 2 diag(a) + 2 g g^T; everything below is closed form.
  SmoothnessConstants c;
  const Matrix hessian = Matrix(2.0 * data.a.asDiagonal()) + 2.0 * g * g.transpose();
  c.smooth_F = Eigen::SelfAdjointEigenSolver<Matrix>(hessian, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff();
  c.smooth_phi = 2.0 * g.squaredNorm();
  // |<g, x> - D| is maximized at a vertex; g > 0 puts it at 0 or at u.
  const double max_dev = std::max(std::abs(data.target), std::abs(g.dot(data.upper) - data.target));
  c.lipschitz_phi = 2.0 * max_dev * g.norm();
  // Triangle-inequality bound; local gradients 2 a x + b are largest at u.
  c.lipschitz_F = *c.lipschitz_phi + (2.0 * data.a.cwiseProduct(data.upper) + data.b).norm();
  c.coordinate_smooth_phi = Vector(2.0 * g.array().square());
  c.coordinate_smooth_F = Vector(2.0 * data.a.array() + 2.0 * g.array().square());

  return Problem(AgentPartition::scalar_agents(n), std::move(box), std::move(phi), std::move(locals), c, "kW");
}

Problem make_convex_case(std::uint64_t seed) { return make_convex_case(draw_convex_case(seed)); }

// ---------------------------------------------------------------------------

ReferenceOptimum reference_optimum(Problem& problem, double tol, std::size_t max_iterations) {
  if (!problem.has_exact_gradient()) {
    throw ConfigurationError("reference_optimum requires exact gradient access");
  }
  const FeasibleSet& set = problem.feasible();
  const auto value = [&](const Vector& x) { return problem.global().value(x) + problem.local_cost_total(x); };

  const bool known_L = problem.constants().smooth_F.has_value();
  double L = known_L ? *problem.constants().smooth_F : 1.0;
  Vector x = set.anchor();
  Vector grad = problem.exact_gradient(x);
  double fx = value(x);

  for (std::size_t it = 0; it < max_iterations; ++it) {
    Vector next = set.project(x - grad / L);
    const double mapping = (L * (x - next)).norm();
    if (mapping <= tol) {
      return {x, fx, it, mapping};
    }
    if (!known_L) {
      // Backtrack until the quadratic upper model holds.
      for (;;) {
        const Vector step = next - x;
        const double f_next = value(next);
        if (f_next <= fx + grad.dot(step) + 0.5 * L * step.squaredNorm() + 1e-15 * std::abs(fx)) break;
        L *= 2.0;
        next = set.project(x - grad / L);
      }
    }
    x = std::move(next);
    grad = problem.exact_gradient(x);
    fx = value(x);
  }
  throw ConvergenceError("reference_optimum did not reach the stationarity tolerance within " +
                         std::to_string(max_iterations) + " iterations");
}

}  // namespace zoflex

#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "zoflex/geometry.hpp"

namespace zoflex {

/// Split of the joint decision x = (x_1, ..., x_N) into contiguous agent slices.
class AgentPartition {
 public:
  AgentPartition() = default;
  explicit AgentPartition(std::vector<std::size_t> sizes);
  /// N agents of dimension one each.
  static AgentPartition scalar_agents(std::size_t n);

  std::size_t agent_count() const { return sizes_.size(); }
  std::size_t dimension() const { return total_; }
  std::size_t size(std::size_t agent) const { return sizes_.at(agent); }
  std::size_t offset(std::size_t agent) const { return offsets_.at(agent); }
  /// Agent owning coordinate `index`.
  std::size_t agent_of(std::size_t index) const;

  Vector slice(const Vector& x, std::size_t agent) const {
    return x.segment(static_cast<Eigen::Index>(offset(agent)), static_cast<Eigen::Index>(size(agent)));
  }

 private:
  std::vector<std::size_t> sizes_;
  std::vector<std::size_t> offsets_;
  std::size_t total_ = 0;
};

/// Cost known only to its agent; depends on the agent's own slice.
class LocalCost {
 public:
  virtual ~LocalCost() = default;
  virtual double value(const Vector& xi) const = 0;
  virtual Vector gradient(const Vector& xi) const = 0;
};

/// sum_a (a_a x_a^2 + b_a x_a) over the agent's coordinates.
class QuadraticLocalCost final : public LocalCost {
 public:
  QuadraticLocalCost(double a, double b);
  QuadraticLocalCost(Vector a, Vector b);

  double value(const Vector& xi) const override;
  Vector gradient(const Vector& xi) const override;

  const Vector& curvature() const { return a_; }
  const Vector& slope() const { return b_; }

 private:
  Vector a_;
  Vector b_;
};

/// The global objective phi. Implementations are pure and immutable, so a
/// single instance may be evaluated concurrently.
class GlobalObjective {
 public:
  virtual ~GlobalObjective() = default;
  virtual double value(const Vector& x) const = 0;
  /// Exact gradient when the model is available to the simulator.
  virtual std::optional<Vector> gradient(const Vector&) const { return std::nullopt; }
};

/// weight * (<g, x> - target)^2: the linear-loss load-following objective.
class LinearDeviationObjective final : public GlobalObjective {
 public:
  LinearDeviationObjective(Vector coefficients, double target, double weight = 1.0);

  double value(const Vector& x) const override;
  std::optional<Vector> gradient(const Vector& x) const override;

  const Vector& coefficients() const { return g_; }
  double target() const { return target_; }
  double weight() const { return weight_; }

 private:
  Vector g_;
  double target_;
  double weight_;
};

/// Regularity constants used by the parameter helpers. Any may be unknown.
struct SmoothnessConstants {
  std::optional<double> lipschitz_phi;  // Lambda_phi
  std::optional<double> smooth_phi;     // L_phi
  std::optional<double> lipschitz_F;    // Lambda_F
  std::optional<double> smooth_F;       // L_F
  std::optional<Vector> coordinate_smooth_F;    // L_{F,beta}
  std::optional<Vector> coordinate_smooth_phi;  // L_{phi,beta}
};

/// min_{x in X} F(x) = phi(x) + sum_i f_i(x).
///
/// `eval_global` is the only access to phi the algorithms get; it counts every
/// query. The exact-F and exact-gradient accessors exist because this is a
/// simulation, are counted separately, and never feed algorithm updates.
/// Copying a Problem clones its counters; the objective and set are shared
/// immutably.
class Problem {
 public:
  Problem(AgentPartition partition, std::shared_ptr<const FeasibleSet> feasible,
          std::shared_ptr<const GlobalObjective> global, std::vector<std::shared_ptr<const LocalCost>> locals,
          SmoothnessConstants constants = {}, std::string unit = "");

  const AgentPartition& partition() const { return partition_; }
  const FeasibleSet& feasible() const { return *feasible_; }
  std::shared_ptr<const FeasibleSet> feasible_ptr() const { return feasible_; }
  const GlobalObjective& global() const { return *global_; }
  const SmoothnessConstants& constants() const { return constants_; }
  SmoothnessConstants& constants() { return constants_; }
  const std::string& unit() const { return unit_; }
  std::size_t dimension() const { return partition_.dimension(); }

  /// phi(x); one query. Throws PreconditionError for infeasible x.
  double eval_global(const Vector& x);
  std::uint64_t oracle_queries() const { return oracle_queries_; }

  /// Exact grad_i f_i(x), agent-local; not counted.
  Vector local_partial(std::size_t agent, const Vector& x) const;
  /// All local partials stacked into one d-vector.
  Vector local_gradient(const Vector& x) const;
  double local_cost_total(const Vector& x) const;

  // Evaluation-only access.
  double eval_F(const Vector& x);
  bool has_exact_gradient() const;
  Vector exact_gradient(const Vector& x) const;
  std::uint64_t evaluation_queries() const { return evaluation_queries_; }

 private:
  void require_feasible(const Vector& x, const char* what) const;

  AgentPartition partition_;
  std::shared_ptr<const FeasibleSet> feasible_;
  std::shared_ptr<const GlobalObjective> global_;
  std::vector<std::shared_ptr<const LocalCost>> locals_;
  SmoothnessConstants constants_;
  std::string unit_;
  std::uint64_t oracle_queries_ = 0;
  std::uint64_t evaluation_queries_ = 0;
};

/// What an algorithm is allowed to see: feedback values of phi, each agent's
/// own local partials, and the feasible set.
class FeedbackView {
 public:
  explicit FeedbackView(Problem& problem) : problem_(&problem) {}

  double observe(const Vector& x) { return problem_->eval_global(x); }
  Vector local_partial(std::size_t agent, const Vector& x) const { return problem_->local_partial(agent, x); }
  const FeasibleSet& feasible() const { return problem_->feasible(); }
  std::shared_ptr<const FeasibleSet> feasible_ptr() const { return problem_->feasible_ptr(); }
  const AgentPartition& partition() const { return problem_->partition(); }
  std::size_t dimension() const { return problem_->dimension(); }
  std::uint64_t queries() const { return problem_->oracle_queries(); }

 private:
  Problem* problem_;
};

/// Parameters of the linear-loss convex benchmark instance.
struct ConvexCaseData {
  Vector loss;    // gamma_i
  Vector upper;   // u_i (kW)
  Vector a;
  Vector b;
  double target;  // D
};

/// Draws the 100-agent convex benchmark:
/// gamma_i ~ U(0.03, 0.15), u_i ~ U(0, 50) kW rejecting u_i < 1 kW,
/// a_i ~ U(0.5, 1.5), b_i ~ U(0, 5), D = sum u_i - 1500 kW,
/// phi(x) = (sum (1 + gamma_i) x_i - D)^2, X_i = [0, u_i].
ConvexCaseData draw_convex_case(std::uint64_t seed, std::size_t agents = 100, double curtail_kw = 1500.0);
Problem make_convex_case(const ConvexCaseData& data);
Problem make_convex_case(std::uint64_t seed);

struct ReferenceOptimum {
  Vector x;
  double value = 0.0;
  std::size_t iterations = 0;
  double stationarity = 0.0;
};

/// High-accuracy projected gradient descent with exact gradients, step 1/L_F,
/// until ||g(x; L_F)|| <= tol. Uses backtracking when L_F is unknown.
/// Meaningful as an optimum only for convex F.
ReferenceOptimum reference_optimum(Problem& problem, double tol = 1e-10, std::size_t max_iterations = 1000000);

}  // namespace zoflex

#pragma once

#include <memory>

#include <json.hpp>

#include "zoflex/types.hpp"

namespace zoflex {

/// Inscribed and circumscribed radii of a set, measured about its anchor.
struct Radii {
  double inscribed = 0.0;
  double circumscribed = 0.0;
};

/// Convex compact set with a nonempty interior, accessed through its Euclidean
/// projection. All radii and shrinking are taken about `anchor()`, an interior
/// point playing the role of the origin.
///
/// Implementations are immutable after construction.
class FeasibleSet {
 public:
  virtual ~FeasibleSet() = default;

  virtual std::size_t dimension() const = 0;
  virtual Vector project(const Vector& y) const = 0;
  virtual bool contains(const Vector& x, double tol = kContainmentTol) const = 0;
  virtual const Vector& anchor() const = 0;
  virtual Radii radii() const = 0;
};

/// Axis-aligned box {lower <= x <= upper}.
class BoxSet final : public FeasibleSet {
 public:
  /// Anchor defaults to the box center.
  BoxSet(Vector lower, Vector upper);
  BoxSet(Vector lower, Vector upper, Vector anchor);

  std::size_t dimension() const override { return static_cast<std::size_t>(lower_.size()); }
  Vector project(const Vector& y) const override;
  bool contains(const Vector& x, double tol = kContainmentTol) const override;
  const Vector& anchor() const override { return anchor_; }
  Radii radii() const override;

  /// Box with every distance to a face scaled by (1 - delta) about the anchor.
  BoxSet shrink(double delta) const;

  const Vector& lower() const { return lower_; }
  const Vector& upper() const { return upper_; }

 private:
  Vector lower_;
  Vector upper_;
  Vector anchor_;
};

/// Closed Euclidean ball; its center is the anchor.
class BallSet final : public FeasibleSet {
 public:
  BallSet(Vector center, double radius);

  std::size_t dimension() const override { return static_cast<std::size_t>(center_.size()); }
  Vector project(const Vector& y) const override;
  bool contains(const Vector& x, double tol = kContainmentTol) const override;
  const Vector& anchor() const override { return center_; }
  Radii radii() const override { return {radius_, radius_}; }

  double radius() const { return radius_; }

 private:
  Vector center_;
  double radius_;
};

/// anchor + (1 - delta)(base - anchor) for an arbitrary base set.
class ShrunkSet final : public FeasibleSet {
 public:
  ShrunkSet(std::shared_ptr<const FeasibleSet> base, double delta);

  std::size_t dimension() const override { return base_->dimension(); }
  Vector project(const Vector& y) const override;
  bool contains(const Vector& x, double tol = kContainmentTol) const override;
  const Vector& anchor() const override { return base_->anchor(); }
  Radii radii() const override;

  double delta() const { return delta_; }
  const FeasibleSet& base() const { return *base_; }

 private:
  std::shared_ptr<const FeasibleSet> base_;
  double delta_;
};

/// Throws ParameterError unless 0 <= delta < 1.
void check_shrink_factor(double delta);

/// anchor + (1 - delta)(X - anchor). Boxes and balls stay boxes and balls;
/// other sets are wrapped in a ShrunkSet.
std::shared_ptr<const FeasibleSet> shrink(std::shared_ptr<const FeasibleSet> set, double delta);

inline Radii radii(const FeasibleSet& set) { return set.radii(); }

/// Projection of zbar onto S(x, r) = {(s - x) / r : s in X}, evaluated through
/// (P_X[x + r zbar] - x) / r. For boxes the projection is done coordinatewise
/// on ((lower - x) / r, (upper - x) / r) so that x + r z stays inside the box.
Vector perturbation_project(const FeasibleSet& set, const Vector& x, double r, const Vector& zbar);

/// {"lower": [...], "upper": [...], "anchor": [...]} with "anchor" optional.
BoxSet box_from_json(const nlohmann::json& j);
nlohmann::json box_to_json(const BoxSet& box);

}  // namespace zoflex

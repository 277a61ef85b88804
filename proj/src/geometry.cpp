#include "zoflex/geometry.hpp"

#include <cmath>
#include <string>
#include <vector>


namespace zoflex {

void check_shrink_factor(double delta) {
  if (!(delta >= 0.0 && delta < 1.0)) {
    throw ParameterError("shrink factor must lie in [0, 1), got " + std::to_string(delta));
  }
}

// ---------------------------------------------------------------------------
// BoxSet

BoxSet::BoxSet(Vector lower, Vector upper) : BoxSet(lower, upper, 0.5 * (lower + upper)) {}

BoxSet::BoxSet(Vector lower, Vector upper, Vector anchor)
    : lower_(std::move(lower)), upper_(std::move(upper)), anchor_(std::move(anchor)) {
  if (lower_.size() == 0) {
    throw ParameterError("box must have at least one dimension");
  }
  if (lower_.size() != upper_.size() || lower_.size() != anchor_.size()) {
    throw ParameterError("box lower/upper/anchor dimensions differ");
  }
  for (Eigen::Index a = 0; a < lower_.size(); ++a) {
    if (!(lower_[a] < upper_[a])) {
      throw ParameterError("box coordinate " + std::to_string(a) + " has empty interior");
    }
    if (!(lower_[a] < anchor_[a] && anchor_[a] < upper_[a])) {
      throw ParameterError("box anchor coordinate " + std::to_string(a) + " is not interior");
    }
  }
}

Vector BoxSet::project(const Vector& y) const { return y.cwiseMax(lower_).cwiseMin(upper_); }

bool BoxSet::contains(const Vector& x, double tol) const {
  if (x.size() != lower_.size()) return false;
  return ((x.array() >= lower_.array() - tol) && (x.array() <= upper_.array() + tol)).all();
}

Radii BoxSet::radii() const {
  const Vector below = anchor_ - lower_;
  const Vector above = upper_ - anchor_;
  return {below.cwiseMin(above).minCoeff(), below.cwiseMax(above).norm()};
}

BoxSet BoxSet::shrink(double delta) const {
  check_shrink_factor(delta);
  const double scale = 1.0 - delta;
  // Clamp so rounding never lets the shrunk faces escape the original box.
  Vector lo = (anchor_ + scale * (lower_ - anchor_)).cwiseMax(lower_);
  Vector hi = (anchor_ + scale * (upper_ - anchor_)).cwiseMin(upper_);
  return BoxSet(std::move(lo), std::move(hi), anchor_);
}

// ---------------------------------------------------------------------------
// BallSet

BallSet::BallSet(Vector center, double radius) : center_(std::move(center)), radius_(radius) {
  if (center_.size() == 0) throw ParameterError("ball must have at least one dimension");
  if (!(radius_ > 0.0) || !std::isfinite(radius_)) {
    throw ParameterError("ball radius must be positive and finite");
  }
}

Vector BallSet::project(const Vector& y) const {
  const Vector offset = y - center_;
  const double dist = offset.norm();
  if (dist <= radius_) return y;
  return center_ + (radius_ / dist) * offset;
}

bool BallSet::contains(const Vector& x, double tol) const {
  if (x.size() != center_.size()) return false;
  return (x - center_).norm() <= radius_ + tol;
}

// ---------------------------------------------------------------------------
// ShrunkSet

ShrunkSet::ShrunkSet(std::shared_ptr<const FeasibleSet> base, double delta)
    : base_(std::move(base)), delta_(delta) {
  if (!base_) throw ParameterError("shrunk set needs a base set");
  check_shrink_factor(delta_);
}

Vector ShrunkSet::project(const Vector& y) const {
  const Vector& c = base_->anchor();
  const double scale = 1.0 - delta_;
  return c + scale * (base_->project(c + (y - c) / scale) - c);
}

bool ShrunkSet::contains(const Vector& x, double tol) const {
  const Vector& c = base_->anchor();
  const double scale = 1.0 - delta_;
  return base_->contains(c + (x - c) / scale, tol / scale);
}

Radii ShrunkSet::radii() const {
  const Radii r = base_->radii();
  const double scale = 1.0 - delta_;
  return {scale * r.inscribed, scale * r.circumscribed};
}

std::shared_ptr<const FeasibleSet> shrink(std::shared_ptr<const FeasibleSet> set, double delta) {
  if (!set) throw ParameterError("cannot shrink a null set");
  if (const auto* box = dynamic_cast<const BoxSet*>(set.get())) {
    return std::make_shared<BoxSet>(box->shrink(delta));
  }
  if (const auto* ball = dynamic_cast<const BallSet*>(set.get())) {
    check_shrink_factor(delta);
    return std::make_shared<BallSet>(ball->anchor(), (1.0 - delta) * ball->radius());
  }
  return std::make_shared<ShrunkSet>(std::move(set), delta);
}

// ---------------------------------------------------------------------------

Vector perturbation_project(const FeasibleSet& set, const Vector& x, double r, const Vector& zbar) {
  if (!(r > 0.0)) throw ParameterError("smoothing radius must be positive");
  if (x.size() != zbar.size() || static_cast<std::size_t>(x.size()) != set.dimension()) {
    throw PreconditionError("perturbation_project: dimension mismatch");
  }
  if (!set.contains(x)) {
    throw PreconditionError("perturbation_project: base point lies outside the feasible set");
  }
  if (const auto* box = dynamic_cast<const BoxSet*>(&set)) {
    // Clip on the probe itself, then map back; keeps x + r z inside [l, u].
    const Vector lo = (box->lower() - x) / r;
    const Vector hi = (box->upper() - x) / r;
    Vector z = zbar.cwiseMax(lo).cwiseMin(hi);
    for (Eigen::Index a = 0; a < z.size(); ++a) {
      // Undo one-ulp overshoot introduced by the division above.
      while (x[a] + r * z[a] > box->upper()[a]) z[a] = std::nextafter(z[a], -INFINITY);
      while (x[a] + r * z[a] < box->lower()[a]) z[a] = std::nextafter(z[a], INFINITY);
    }
    return z;
  }
  return (set.project(x + r * zbar) - x) / r;
}

// ---------------------------------------------------------------------------

namespace {

Vector vector_from_json(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_array()) {
    throw ParseError(std::string("box JSON: missing array \"") + key + "\"", 0);
  }
  const auto values = j.at(key).get<std::vector<double>>();
  return Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace

BoxSet box_from_json(const nlohmann::json& j) {
  Vector lower = vector_from_json(j, "lower");
  Vector upper = vector_from_json(j, "upper");
  if (j.contains("anchor")) return BoxSet(lower, upper, vector_from_json(j, "anchor"));
  return BoxSet(lower, upper);
}

nlohmann::json box_to_json(const BoxSet& box) {
  return {{"lower", to_std(box.lower())}, {"upper", to_std(box.upper())}, {"anchor", to_std(box.anchor())}};
}

}  // namespace zoflex

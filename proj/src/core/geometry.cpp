#include "geometry.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "errors.hpp"

namespace mu2opt {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void check_dimension(const FeasibleSet& set, const Point& x) {
  const auto dim = set.dimension();
  if (dim >= 0 && dim != x.size()) {
    throw ConfigError("point has dimension " + std::to_string(x.size()) +
                      " but the feasible set has dimension " + std::to_string(dim));
  }
}

}  // namespace

FeasibleSet FeasibleSet::ball(Point center, double radius) {
  if (!(radius > 0.0) || !std::isfinite(radius)) {
    throw ConfigError("ball radius must be a positive finite number");
  }
  if (center.size() == 0) throw ConfigError("ball center must have dimension >= 1");
  if (!center.allFinite()) throw ConfigError("ball center must be finite");
  return FeasibleSet(EuclideanBall{std::move(center), radius});
}

FeasibleSet FeasibleSet::unit_ball(Eigen::Index dimension) {
  return ball(Point::Zero(dimension), 1.0);
}

FeasibleSet FeasibleSet::box(Point lower, Point upper) {
  if (lower.size() != upper.size() || lower.size() == 0) {
    throw ConfigError("box bounds must have the same nonzero dimension");
  }
  if (!lower.allFinite() || !upper.allFinite()) throw ConfigError("box bounds must be finite");
  for (Eigen::Index i = 0; i < lower.size(); ++i) {
    if (lower[i] > upper[i]) {
      throw ConfigError("box lower bound exceeds upper bound at coordinate " + std::to_string(i));
    }
  }
  return FeasibleSet(Box{std::move(lower), std::move(upper)});
}

FeasibleSet FeasibleSet::unconstrained(double declared_diameter) {
  if (!(declared_diameter > 0.0) || !std::isfinite(declared_diameter)) {
    throw ConfigError("unconstrained set needs a positive declared diameter");
  }
  return FeasibleSet(Unconstrained{declared_diameter});
}

Eigen::Index FeasibleSet::dimension() const noexcept {
  return std::visit(Overloaded{[](const EuclideanBall& b) { return b.center.size(); },
                               [](const Box& b) { return b.lower.size(); },
                               [](const Unconstrained&) { return Eigen::Index{-1}; }},
                    shape_);
}

double FeasibleSet::max_distance_from(const Point& x) const {
  check_dimension(*this, x);
  return std::visit(
      Overloaded{[&](const EuclideanBall& b) { return (x - b.center).norm() + b.radius; },
                 [&](const Box& b) {
                   const Point far = (x - b.lower).cwiseAbs().cwiseMax((b.upper - x).cwiseAbs());
                   return far.norm();
                 },
                 [](const Unconstrained&) { return std::numeric_limits<double>::infinity(); }},
      shape_);
}

bool FeasibleSet::contains(const Point& x, double tolerance) const {
  check_dimension(*this, x);
  return std::visit(
      Overloaded{[&](const EuclideanBall& b) { return (x - b.center).norm() <= b.radius + tolerance; },
                 [&](const Box& b) {
                   return ((x - b.lower).array() >= -tolerance).all() &&
                          ((b.upper - x).array() >= -tolerance).all();
                 },
                 [](const Unconstrained&) { return true; }},
      shape_);
}

Point project(const FeasibleSet& set, const Point& x) {
  check_dimension(set, x);
  return std::visit(Overloaded{[&](const EuclideanBall& b) -> Point {
                                 const Point offset = x - b.center;
                                 const double dist = offset.norm();
                                 // Boundary points stay put (scale factor exactly 1).
                                 if (dist <= b.radius) return x;
                                 return b.center + offset * (b.radius / dist);
                               },
                               [&](const Box& b) -> Point {
                                 return x.cwiseMax(b.lower).cwiseMin(b.upper);
                               },
                               [&](const Unconstrained&) -> Point { return x; }},
                    set.shape());
}

double diameter(const FeasibleSet& set) {
  return std::visit(Overloaded{[](const EuclideanBall& b) { return 2.0 * b.radius; },
                               [](const Box& b) { return (b.upper - b.lower).norm(); },
                               [](const Unconstrained& u) { return u.declared_diameter; }},
                    set.shape());
}

}  // namespace mu2opt

#pragma once

#include <Eigen/Dense>
#include <variant>

namespace mu2opt {

using Point = Eigen::VectorXd;

struct EuclideanBall {
  Point center;
  double radius;
};

struct Box {
  Point lower;
  Point upper;
};

/// No constraint. The declared diameter stands in for D in diagnostics only.
struct Unconstrained {
  double declared_diameter;
};

/// Convex feasible region K. Construct through the factories so the
/// invariants (radius > 0, lower <= upper) are checked once.
class FeasibleSet {
 public:
  using Shape = std::variant<EuclideanBall, Box, Unconstrained>;

  static FeasibleSet ball(Point center, double radius);
  static FeasibleSet unit_ball(Eigen::Index dimension);
  static FeasibleSet box(Point lower, Point upper);
  static FeasibleSet unconstrained(double declared_diameter);

  const Shape& shape() const noexcept { return shape_; }

  /// True when K is compact; theory-backed guarantees only apply then.
  bool bounded() const noexcept { return !std::holds_alternative<Unconstrained>(shape_); }

  /// Dimension the set is pinned to, or -1 for the unconstrained variant.
  Eigen::Index dimension() const noexcept;

  /// Largest distance from `x` to any point of K. Infinite when unbounded.
  double max_distance_from(const Point& x) const;

  bool contains(const Point& x, double tolerance = 1e-9) const;

 private:
  explicit FeasibleSet(Shape s) : shape_(std::move(s)) {}
  Shape shape_;
};

/// Orthogonal projection onto K.
Point project(const FeasibleSet& set, const Point& x);

/// max_{x,y in K} ||x - y||.
double diameter(const FeasibleSet& set);

}  // namespace mu2opt

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>

#include "geometry.hpp"

namespace mu2opt {

__extension__ using Int128 = __int128;

/// Exact nonnegative rational, used to state schedule identities without
/// floating-point rounding.
struct Rational {
  std::int64_t num = 0;
  std::int64_t den = 1;

  double value() const noexcept { return static_cast<double>(num) / static_cast<double>(den); }
  friend bool operator==(const Rational& a, const Rational& b) noexcept {
    return static_cast<Int128>(a.num) * b.den == static_cast<Int128>(b.num) * a.den;
  }
  friend bool operator<=(const Rational& a, const Rational& b) noexcept {
    return static_cast<Int128>(a.num) * b.den <= static_cast<Int128>(b.num) * a.den;
  }
};

Rational operator*(const Rational& a, const Rational& b);
Rational operator-(const Rational& a, const Rational& b);

/// Anytime weights alpha_t.
class WeightSchedule {
 public:
  struct Linear {};   // alpha_t = t + 1
  struct Uniform {};  // alpha_t = 1
  struct FixedGamma {
    double gamma;     // alpha_t = C alpha_{1:t-1}, gamma = C / (C + 1)
  };
  using Variant = std::variant<Linear, Uniform, FixedGamma>;

  static WeightSchedule linear() { return WeightSchedule(Linear{}); }
  static WeightSchedule uniform() { return WeightSchedule(Uniform{}); }
  static WeightSchedule fixed_gamma(double gamma);

  const Variant& variant() const noexcept { return v_; }
  bool is_fixed_gamma() const noexcept { return std::holds_alternative<FixedGamma>(v_); }
  std::string name() const;

  double alpha(std::size_t t) const;
  /// alpha_{1:t}; zero for t = 0.
  double prefix(std::size_t t) const;
  /// alpha_t / alpha_{1:t}; exactly 1 at t = 1.
  double gamma(std::size_t t) const;

  /// Integer-valued schedules only (linear, uniform).
  std::optional<std::int64_t> alpha_exact(std::size_t t) const;
  std::optional<std::int64_t> prefix_exact(std::size_t t) const;

 private:
  explicit WeightSchedule(Variant v) : v_(v) {}
  Variant v_;
};

/// Momentum weights beta_t of the corrected-momentum recursion.
class MomentumSchedule {
 public:
  struct InverseAlpha {};  // beta_t = 1 / alpha_t
  struct InverseT {};      // beta_t = 1 / t
  struct Fixed {
    double beta;
  };
  using Variant = std::variant<InverseAlpha, InverseT, Fixed>;

  static MomentumSchedule inverse_alpha() { return MomentumSchedule(InverseAlpha{}); }
  static MomentumSchedule inverse_t() { return MomentumSchedule(InverseT{}); }
  static MomentumSchedule fixed(double beta);

  const Variant& variant() const noexcept { return v_; }
  std::string name() const;

 private:
  explicit MomentumSchedule(Variant v) : v_(v) {}
  Variant v_;
};

/// The (alpha, beta) pair an estimator runs with.
struct Schedules {
  WeightSchedule weights = WeightSchedule::linear();
  MomentumSchedule momentum = MomentumSchedule::inverse_alpha();

  double alpha(std::size_t t) const { return weights.alpha(t); }
  double gamma(std::size_t t) const { return weights.gamma(t); }
  double beta(std::size_t t) const;
  /// beta_t as an exact rational when both schedules are rational-valued.
  std::optional<Rational> beta_exact(std::size_t t) const;
};

/// C of the fixed-gamma reformulation: alpha_t = C alpha_{1:t-1}.
double gamma_to_ratio(double gamma);
double ratio_to_gamma(double ratio);

/// Running alpha-weighted average x_t = (1/alpha_{1:t}) sum alpha_tau w_tau.
/// Integer-weight schedules keep the weighted sum; fixed-gamma keeps the
/// exponential-average form since its weights overflow.
class AnytimeAverage {
 public:
  explicit AnytimeAverage(WeightSchedule weights) : weights_(weights) {}

  /// Appends w_{t+1}; afterwards value() is x_{t+1}.
  void push(const Point& w);
  /// x_{t+1} that push(w) would produce, without changing state.
  Point peek(const Point& w) const;

  std::size_t count() const noexcept { return t_; }
  const Point& value() const noexcept { return x_; }
  double prefix() const noexcept { return prefix_; }

 private:
  WeightSchedule weights_;
  std::size_t t_ = 0;
  double prefix_ = 0.0;
  Point weighted_sum_;
  Point x_;
};

}  // namespace mu2opt

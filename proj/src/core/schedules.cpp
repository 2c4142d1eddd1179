#include "schedules.hpp"

#include <cmath>
#include <numeric>

#include "errors.hpp"

namespace mu2opt {

namespace {

Rational reduce(Int128 num, Int128 den) {
  if (den < 0) {
    num = -num;
    den = -den;
  }
  Int128 a = num < 0 ? -num : num;
  Int128 b = den;
  while (b != 0) {
    const Int128 r = a % b;
    a = b;
    b = r;
  }
  const Int128 g = a == 0 ? 1 : a;
  return Rational{static_cast<std::int64_t>(num / g), static_cast<std::int64_t>(den / g)};
}

void require_positive_step(std::size_t t) {
  if (t == 0) throw ConfigError("schedules are indexed from t = 1");
}

}  // namespace

Rational operator*(const Rational& a, const Rational& b) {
  return reduce(static_cast<Int128>(a.num) * b.num, static_cast<Int128>(a.den) * b.den);
}

Rational operator-(const Rational& a, const Rational& b) {
  return reduce(static_cast<Int128>(a.num) * b.den - static_cast<Int128>(b.num) * a.den,
                static_cast<Int128>(a.den) * b.den);
}

WeightSchedule WeightSchedule::fixed_gamma(double gamma) {
  if (!(gamma > 0.0 && gamma < 1.0)) throw ConfigError("fixed gamma must lie in (0, 1)");
  return WeightSchedule(FixedGamma{gamma});
}

std::string WeightSchedule::name() const {
  if (std::holds_alternative<Linear>(v_)) return "linear";
  if (std::holds_alternative<Uniform>(v_)) return "uniform";
  return "fixed_gamma";
}

double WeightSchedule::alpha(std::size_t t) const {
  require_positive_step(t);
  if (std::holds_alternative<Linear>(v_)) return static_cast<double>(t + 1);
  if (std::holds_alternative<Uniform>(v_)) return 1.0;
  const double c = gamma_to_ratio(std::get<FixedGamma>(v_).gamma);
  return t == 1 ? 1.0 : c * std::pow(1.0 + c, static_cast<double>(t - 2));
}

double WeightSchedule::prefix(std::size_t t) const {
  if (t == 0) return 0.0;
  if (std::holds_alternative<Linear>(v_)) {
    const double td = static_cast<double>(t);
    return td * (td + 3.0) / 2.0;
  }
  if (std::holds_alternative<Uniform>(v_)) return static_cast<double>(t);
  const double c = gamma_to_ratio(std::get<FixedGamma>(v_).gamma);
  return std::pow(1.0 + c, static_cast<double>(t - 1));
}

double WeightSchedule::gamma(std::size_t t) const {
  require_positive_step(t);
  if (t == 1) return 1.0;
  if (const auto* f = std::get_if<FixedGamma>(&v_)) return f->gamma;
  return alpha(t) / prefix(t);
}

std::optional<std::int64_t> WeightSchedule::alpha_exact(std::size_t t) const {
  require_positive_step(t);
  if (std::holds_alternative<Linear>(v_)) return static_cast<std::int64_t>(t + 1);
  if (std::holds_alternative<Uniform>(v_)) return 1;
  return std::nullopt;
}

std::optional<std::int64_t> WeightSchedule::prefix_exact(std::size_t t) const {
  const auto ti = static_cast<std::int64_t>(t);
  if (std::holds_alternative<Linear>(v_)) return ti * (ti + 3) / 2;
  if (std::holds_alternative<Uniform>(v_)) return ti;
  return std::nullopt;
}

MomentumSchedule MomentumSchedule::fixed(double beta) {
  if (!(beta > 0.0 && beta <= 1.0)) throw ConfigError("fixed beta must lie in (0, 1]");
  return MomentumSchedule(Fixed{beta});
}

std::string MomentumSchedule::name() const {
  if (std::holds_alternative<InverseAlpha>(v_)) return "inverse_alpha";
  if (std::holds_alternative<InverseT>(v_)) return "inverse_t";
  return "fixed";
}

double Schedules::beta(std::size_t t) const {
  require_positive_step(t);
  const auto& v = momentum.variant();
  if (std::holds_alternative<MomentumSchedule::InverseT>(v)) return 1.0 / static_cast<double>(t);
  if (const auto* f = std::get_if<MomentumSchedule::Fixed>(&v)) return f->beta;
  // inverse_alpha; clamp keeps beta in (0, 1] for weights below one.
  return std::min(1.0, 1.0 / weights.alpha(t));
}

std::optional<Rational> Schedules::beta_exact(std::size_t t) const {
  require_positive_step(t);
  const auto& v = momentum.variant();
  if (std::holds_alternative<MomentumSchedule::InverseT>(v)) {
    return Rational{1, static_cast<std::int64_t>(t)};
  }
  if (std::holds_alternative<MomentumSchedule::InverseAlpha>(v)) {
    if (const auto a = weights.alpha_exact(t)) return Rational{1, *a};
  }
  return std::nullopt;
}

double gamma_to_ratio(double gamma) { return gamma / (1.0 - gamma); }
double ratio_to_gamma(double ratio) { return ratio / (ratio + 1.0); }

void AnytimeAverage::push(const Point& w) {
  ++t_;
  if (weights_.is_fixed_gamma()) {
    x_ = t_ == 1 ? w : Point(weights_.gamma(t_) * w + (1.0 - weights_.gamma(t_)) * x_);
    prefix_ = weights_.prefix(t_);
    return;
  }
  const double a = weights_.alpha(t_);
  if (t_ == 1) {
    weighted_sum_ = a * w;
  } else {
    weighted_sum_ += a * w;
  }
  prefix_ += a;
  x_ = weighted_sum_ / prefix_;
}

Point AnytimeAverage::peek(const Point& w) const {
  const std::size_t next = t_ + 1;
  if (next == 1) return w;
  if (weights_.is_fixed_gamma()) {
    const double g = weights_.gamma(next);
    return g * w + (1.0 - g) * x_;
  }
  const double a = weights_.alpha(next);
  return (weighted_sum_ + a * w) / (prefix_ + a);
}

}  // namespace mu2opt

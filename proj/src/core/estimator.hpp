#pragma once

#include <cstddef>

#include "geometry.hpp"
#include "problems.hpp"
#include "rng.hpp"
#include "schedules.hpp"

namespace mu2opt {

/// b_t = ceil(horizon / t).
std::size_t batch_size(std::size_t horizon, std::size_t t);

/// Double-momentum gradient estimator: gradients are queried at the
/// alpha-weighted averages x_t of the supplied iterates, and combined through
/// the corrected-momentum recursion
///   d_{t+1} = g_{t+1} + (1 - beta_{t+1}) (d_t - g~_t),
/// where g_{t+1} = grad f(x_{t+1}; z) and g~_t = grad f(x_t; z) share one
/// fresh token z. The estimator owns every draw so callers cannot split the
/// shared sample.
class Mu2Estimator {
 public:
  /// Draws z_1 and sets d_1 = grad f(x_1; z_1). With `batch_horizon` > 0,
  /// every gradient is averaged over ceil(horizon / t) fresh tokens.
  Mu2Estimator(ProblemPtr problem, const Point& x1, Schedules schedules, Rng& rng,
               std::size_t batch_horizon = 0);

  /// Moves to t + 1 given the next iterate w_{t+1}.
  void advance(const Point& w_next, Rng& rng);

  std::size_t t() const noexcept { return t_; }
  const Point& x() const noexcept { return average_.value(); }
  const Point& x_prev() const noexcept { return x_prev_; }
  const Point& d() const noexcept { return d_; }
  /// Last g_t and g~_{t-1}; at t = 1 both equal the initial gradient.
  const Point& g() const noexcept { return g_; }
  const Point& g_tilde() const noexcept { return g_tilde_; }
  /// Token(s) drawn by the most recent init/advance.
  const std::vector<SampleToken>& last_tokens() const noexcept { return last_tokens_; }
  double alpha_prefix() const noexcept { return average_.prefix(); }
  std::size_t samples_used() const noexcept { return samples_; }
  const Schedules& schedules() const noexcept { return schedules_; }
  std::size_t batch_horizon() const noexcept { return horizon_; }

  /// ||d_t - grad f(x_t)||^2. Diagnostic only.
  double epsilon_sq() const;

 private:
  std::size_t current_batch(std::size_t t) const;

  ProblemPtr problem_;
  Schedules schedules_;
  std::size_t horizon_;
  AnytimeAverage average_;
  std::size_t t_ = 1;
  Point x_prev_;
  Point d_;
  Point g_;
  Point g_tilde_;
  std::vector<SampleToken> last_tokens_;
  std::size_t samples_ = 0;
};

/// Corrected momentum with gradients queried at the iterates themselves:
///   d_t = grad f(w_t; z_t) + (1 - beta_t)(d_{t-1} - grad f(w_{t-1}; z_t)).
class StormEstimator {
 public:
  StormEstimator(ProblemPtr problem, const Point& w1, Schedules schedules, Rng& rng);

  void advance(const Point& w_next, Rng& rng);

  std::size_t t() const noexcept { return t_; }
  const Point& w() const noexcept { return w_; }
  const Point& d() const noexcept { return d_; }
  const Point& g() const noexcept { return g_; }
  std::size_t samples_used() const noexcept { return samples_; }

  /// ||d_t - grad f(w_t)||^2.
  double epsilon_sq() const;

 private:
  ProblemPtr problem_;
  Schedules schedules_;
  std::size_t t_ = 1;
  Point w_;
  Point d_;
  Point g_;
  std::size_t samples_ = 0;
};

}  // namespace mu2opt

#include "estimator.hpp"

#include "errors.hpp"

namespace mu2opt {

namespace {

void require_finite(const Point& w, const char* what) {
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    if (!std::isfinite(w[i])) {
      throw NumericError(std::string("non-finite coordinate ") + std::to_string(i) + " in " + what, i);
    }
  }
}

}  // namespace

std::size_t batch_size(std::size_t horizon, std::size_t t) {
  if (t == 0) throw ConfigError("batch size is defined for t >= 1");
  return (horizon + t - 1) / t;
}

Mu2Estimator::Mu2Estimator(ProblemPtr problem, const Point& x1, Schedules schedules, Rng& rng,
                           std::size_t batch_horizon)
    : problem_(std::move(problem)),
      schedules_(schedules),
      horizon_(batch_horizon),
      average_(schedules.weights) {
  require_finite(x1, "initial point");
  average_.push(x1);
  x_prev_ = x1;
  const std::size_t b = current_batch(1);
  last_tokens_.clear();
  for (std::size_t k = 0; k < b; ++k) {
    last_tokens_.push_back(problem_->draw_sample(rng));
    Point gk = problem_->stoch_grad(x1, last_tokens_.back());
    if (k == 0) {
      g_ = std::move(gk);
    } else {
      g_ += gk;
    }
  }
  if (b > 1) g_ /= static_cast<double>(b);
  samples_ = b;
  d_ = g_;
  g_tilde_ = g_;
}

std::size_t Mu2Estimator::current_batch(std::size_t t) const {
  return horizon_ == 0 ? 1 : std::max<std::size_t>(1, batch_size(std::max(horizon_, t), t));
}

void Mu2Estimator::advance(const Point& w_next, Rng& rng) {
  require_finite(w_next, "next iterate");
  x_prev_ = average_.value();
  average_.push(w_next);
  ++t_;
  const Point& x_next = average_.value();

  const std::size_t b = current_batch(t_);
  last_tokens_.clear();
  for (std::size_t k = 0; k < b; ++k) {
    last_tokens_.push_back(problem_->draw_sample(rng));
    const SampleToken& z = last_tokens_.back();
    Point gk = problem_->stoch_grad(x_next, z);
    Point gtk = problem_->stoch_grad(x_prev_, z);
    if (k == 0) {
      g_ = std::move(gk);
      g_tilde_ = std::move(gtk);
    } else {
      g_ += gk;
      g_tilde_ += gtk;
    }
  }
  if (b > 1) {
    g_ /= static_cast<double>(b);
    g_tilde_ /= static_cast<double>(b);
  }
  samples_ += b;

  const double keep = 1.0 - schedules_.beta(t_);
  d_ = g_ + keep * (d_ - g_tilde_);
}

double Mu2Estimator::epsilon_sq() const {
  return (d_ - problem_->exact_grad(average_.value())).squaredNorm();
}

StormEstimator::StormEstimator(ProblemPtr problem, const Point& w1, Schedules schedules, Rng& rng)
    : problem_(std::move(problem)), schedules_(schedules), w_(w1) {
  require_finite(w1, "initial point");
  g_ = problem_->stoch_grad(w_, problem_->draw_sample(rng));
  d_ = g_;
  samples_ = 1;
}

void StormEstimator::advance(const Point& w_next, Rng& rng) {
  require_finite(w_next, "next iterate");
  ++t_;
  const SampleToken z = problem_->draw_sample(rng);
  g_ = problem_->stoch_grad(w_next, z);
  const Point g_prev_point = problem_->stoch_grad(w_, z);
  const double keep = 1.0 - schedules_.beta(t_);
  d_ = g_ + keep * (d_ - g_prev_point);
  w_ = w_next;
  ++samples_;
}

double StormEstimator::epsilon_sq() const { return (d_ - problem_->exact_grad(w_)).squaredNorm(); }

}  // namespace mu2opt

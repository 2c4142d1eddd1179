#include "optimizers.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <set>

#include "errors.hpp"
#include "estimator.hpp"

namespace mu2opt {

namespace {

constexpr std::array<std::pair<Algorithm, std::string_view>, 9> kTags{{
    {Algorithm::sgd, "sgd"},
    {Algorithm::heavy_ball, "heavy_ball"},
    {Algorithm::anytime_sgd, "anytime_sgd"},
    {Algorithm::storm, "storm"},
    {Algorithm::mu2_sgd, "mu2_sgd"},
    {Algorithm::mu2_sgd_uniform, "mu2_sgd_uniform"},
    {Algorithm::mu2_sgd_batched, "mu2_sgd_batched"},
    {Algorithm::mu2_sgd_fixed, "mu2_sgd_fixed"},
    {Algorithm::mu2_extra_sgd, "mu2_extra_sgd"},
}};

/// Collects log points at the precomputed steps.
class Recorder {
 public:
  Recorder(const StochasticProblem& problem, const OptimizerConfig& config, Algorithm algorithm,
           MeasuredAt at)
      : problem_(problem), steps_(log_steps(config.horizon, config.log_points)) {
    traj_.algorithm = algorithm;
    traj_.measured_at = at;
  }

  bool due(std::size_t t) const { return next_ < steps_.size() && steps_[next_] == t; }

  template <class EpsFn>
  void record(std::size_t t, const Point& point, std::size_t samples, EpsFn&& eps) {
    traj_.last_finite_t = t;
    traj_.samples_used = samples;
    if (!due(t)) return;
    ++next_;
    LogPoint p;
    p.t = t;
    p.f_gap = problem_.gap(point);
    p.eps_sq = eps();
    p.iterate_norm = point.norm();
    p.samples_used = samples;
    traj_.points.push_back(p);
  }

  /// Forces a final log point at t when the run ends early.
  template <class EpsFn>
  void record_final(std::size_t t, const Point& point, std::size_t samples, EpsFn&& eps) {
    if (!traj_.points.empty() && traj_.points.back().t == t) return;
    while (next_ < steps_.size() && steps_[next_] < t) ++next_;
    if (next_ >= steps_.size() || steps_[next_] != t) {
      steps_.insert(steps_.begin() + static_cast<std::ptrdiff_t>(next_), t);
    }
    record(t, point, samples, std::forward<EpsFn>(eps));
  }

  Trajectory finish(Point output) {
    traj_.output = std::move(output);
    return std::move(traj_);
  }

  Trajectory& trajectory() { return traj_; }

 private:
  const StochasticProblem& problem_;
  std::vector<std::size_t> steps_;
  std::size_t next_ = 0;
  Trajectory traj_;
};

Point initial_point(const StochasticProblem& problem, const OptimizerConfig& config) {
  if (config.x1) return *config.x1;
  return project(config.set, Point::Zero(problem.dimension()));
}

bool finite(const Point& p) { return p.allFinite(); }

void notify(const StepObserver& observer, const StepView& view) {
  if (observer) observer(view);
}

}  // namespace

std::string_view to_string(Algorithm a) {
  for (const auto& [alg, tag] : kTags) {
    if (alg == a) return tag;
  }
  return "unknown";
}

Algorithm parse_algorithm(std::string_view tag) {
  for (const auto& [alg, name] : kTags) {
    if (name == tag) return alg;
  }
  throw ConfigError("unknown algorithm tag '" + std::string(tag) + "'");
}

const std::vector<Algorithm>& all_algorithms() {
  static const std::vector<Algorithm> algs = [] {
    std::vector<Algorithm> v;
    for (const auto& [alg, tag] : kTags) v.push_back(alg);
    return v;
  }();
  return algs;
}

Schedules default_schedules(Algorithm a) {
  switch (a) {
    case Algorithm::mu2_sgd_uniform:
      return Schedules{WeightSchedule::uniform(), MomentumSchedule::inverse_t()};
    case Algorithm::mu2_sgd_fixed:
      return Schedules{WeightSchedule::fixed_gamma(0.1), MomentumSchedule::fixed(0.9)};
    case Algorithm::storm:
      return Schedules{WeightSchedule::linear(), MomentumSchedule::inverse_t()};
    default:
      return Schedules{WeightSchedule::linear(), MomentumSchedule::inverse_alpha()};
  }
}

std::vector<std::size_t> log_steps(std::size_t horizon, std::size_t count) {
  std::set<std::size_t> steps{1, horizon};
  if (count >= 2 && horizon > 1) {
    const double top = std::log(static_cast<double>(horizon));
    for (std::size_t k = 0; k < count; ++k) {
      const double frac = static_cast<double>(k) / static_cast<double>(count - 1);
      const auto t = static_cast<std::size_t>(std::llround(std::exp(frac * top)));
      steps.insert(std::clamp<std::size_t>(t, 1, horizon));
    }
  }
  return {steps.begin(), steps.end()};
}

void validate(const StochasticProblem& problem, const OptimizerConfig& config) {
  if (!(config.lr >= 0.0) || !std::isfinite(config.lr)) {
    throw ConfigError("learning rate must be a finite nonnegative number");
  }
  if (config.horizon == 0) throw ConfigError("horizon T must be >= 1");
  if (config.set.dimension() >= 0 && config.set.dimension() != problem.dimension()) {
    throw ConfigError("feasible set dimension does not match the problem");
  }
  if (config.x1) {
    if (config.x1->size() != problem.dimension()) throw ConfigError("x1 has the wrong dimension");
    if (!config.set.contains(*config.x1)) throw ConfigError("x1 lies outside the feasible set");
  }
  if (config.algorithm == Algorithm::mu2_extra_sgd) {
    if (!config.set.bounded()) throw ConfigError("mu2_extra_sgd requires a bounded feasible set");
    if (config.effective_schedules().weights.is_fixed_gamma()) {
      throw ConfigError("mu2_extra_sgd does not support fixed-gamma weights");
    }
  }
  if (config.algorithm == Algorithm::heavy_ball) {
    const auto& hb = config.heavy_ball;
    if (!(hb.momentum >= 0.0 && hb.momentum < 1.0) || !(hb.dampening >= 0.0 && hb.dampening < 1.0)) {
      throw ConfigError("heavy-ball momentum and dampening must lie in [0, 1)");
    }
  }
  if (config.stop_threshold < 0.0) throw ConfigError("stop threshold must be >= 0");
}

Trajectory run_sgd(ProblemPtr problem, const OptimizerConfig& config, Rng& rng,
                   const StepObserver& observer) {
  validate(*problem, config);
  Recorder rec(*problem, config, Algorithm::sgd, MeasuredAt::iterate);
  Point w = initial_point(*problem, config);
  std::size_t samples = 0;
  for (std::size_t t = 1; t <= config.horizon; ++t) {
    const SampleToken z = problem->draw_sample(rng);
    ++samples;
    const Point g = problem->stoch_grad(w, z);
    rec.record(t, w, samples, [&] { return (g - problem->exact_grad(w)).squaredNorm(); });
    notify(observer, StepView{t, &w, nullptr, nullptr, nullptr, &g});
    if (t == config.horizon) break;
    Point next = project(config.set, w - config.lr * g);
    if (!finite(next)) {
      rec.trajectory().diverged = true;
      break;
    }
    w = std::move(next);
  }
  return rec.finish(w);
}

Trajectory run_heavy_ball(ProblemPtr problem, const OptimizerConfig& config, Rng& rng,
                          const StepObserver& observer) {
  validate(*problem, config);
  Recorder rec(*problem, config, Algorithm::heavy_ball, MeasuredAt::iterate);
  const auto& hb = config.heavy_ball;
  Point w = initial_point(*problem, config);
  Point buffer;
  std::size_t samples = 0;
  for (std::size_t t = 1; t <= config.horizon; ++t) {
    const SampleToken z = problem->draw_sample(rng);
    ++samples;
    const Point g = problem->stoch_grad(w, z);
    if (t == 1) {
      buffer = g;
    } else {
      buffer = hb.momentum * buffer + (1.0 - hb.dampening) * g;
    }
    rec.record(t, w, samples, [&] { return (g - problem->exact_grad(w)).squaredNorm(); });
    notify(observer, StepView{t, &w, nullptr, &buffer, nullptr, &g});
    if (t == config.horizon) break;
    Point next = project(config.set, w - config.lr * buffer);
    if (!finite(next)) {
      rec.trajectory().diverged = true;
      break;
    }
    w = std::move(next);
  }
  return rec.finish(w);
}

Trajectory run_anytime_sgd(ProblemPtr problem, const OptimizerConfig& config, Rng& rng,
                           const StepObserver& observer) {
  validate(*problem, config);
  Recorder rec(*problem, config, Algorithm::anytime_sgd, MeasuredAt::average);
  const Schedules sched = config.effective_schedules();
  AnytimeAverage average(sched.weights);
  Point w = initial_point(*problem, config);
  average.push(w);
  std::size_t samples = 0;
  for (std::size_t t = 1; t <= config.horizon; ++t) {
    const Point& x = average.value();
    const SampleToken z = problem->draw_sample(rng);
    ++samples;
    const Point g = problem->stoch_grad(x, z);
    rec.record(t, x, samples, [&] { return (g - problem->exact_grad(x)).squaredNorm(); });
    notify(observer, StepView{t, &w, &x, nullptr, nullptr, &g});
    if (t == config.horizon) break;
    const double scale = sched.weights.is_fixed_gamma() ? config.lr : config.lr * sched.alpha(t);
    Point next = project(config.set, w - scale * g);
    if (!finite(next)) {
      rec.trajectory().diverged = true;
      break;
    }
    w = std::move(next);
    average.push(w);
  }
  return rec.finish(average.value());
}

Trajectory run_storm(ProblemPtr problem, const OptimizerConfig& config, Rng& rng,
                     const StepObserver& observer) {
  validate(*problem, config);
  Recorder rec(*problem, config, Algorithm::storm, MeasuredAt::iterate);
  StormEstimator est(problem, initial_point(*problem, config), config.effective_schedules(), rng);
  for (std::size_t t = 1; t <= config.horizon; ++t) {
    const Point& w = est.w();
    rec.record(t, w, est.samples_used(), [&] { return est.epsilon_sq(); });
    notify(observer, StepView{t, &w, nullptr, &est.d(), nullptr, &est.g()});
    if (t == config.horizon) break;
    Point next = project(config.set, w - config.lr * est.d());
    if (!finite(next)) {
      rec.trajectory().diverged = true;
      break;
    }
    est.advance(next, rng);
  }
  return rec.finish(est.w());
}

Trajectory run_mu2_sgd(ProblemPtr problem, const OptimizerConfig& config, Rng& rng,
                       const StepObserver& observer) {
  validate(*problem, config);
  switch (config.algorithm) {
    case Algorithm::mu2_sgd:
    case Algorithm::mu2_sgd_uniform:
    case Algorithm::mu2_sgd_batched:
    case Algorithm::mu2_sgd_fixed:
      break;
    default:
      throw ConfigError("run_mu2_sgd called with algorithm " + std::string(to_string(config.algorithm)));
  }
  Recorder rec(*problem, config, config.algorithm, MeasuredAt::average);
  const Schedules sched = config.effective_schedules();
  const bool heuristic = sched.weights.is_fixed_gamma();
  const std::size_t horizon = config.algorithm == Algorithm::mu2_sgd_batched ? config.horizon : 0;
  Point w = initial_point(*problem, config);
  Mu2Estimator est(problem, w, sched, rng, horizon);
  for (std::size_t t = 1; t <= config.horizon; ++t) {
    const Point& x = est.x();
    rec.record(t, x, est.samples_used(), [&] { return est.epsilon_sq(); });
    notify(observer, StepView{t, &w, &x, &est.d(), nullptr, &est.g(), nullptr, &est.last_tokens()});
    if (t == config.horizon) break;
    if (config.stop_threshold > 0.0 && est.d().norm() <= config.stop_threshold) {
      rec.trajectory().stopped_early = true;
      break;
    }
    const double scale = heuristic ? config.lr : config.lr * sched.alpha(t);
    Point next = project(config.set, w - scale * est.d());
    if (!finite(next)) {
      rec.trajectory().diverged = true;
      break;
    }
    w = std::move(next);
    est.advance(w, rng);
  }
  if (rec.trajectory().stopped_early) {
    rec.record_final(est.t(), est.x(), est.samples_used(), [&] { return est.epsilon_sq(); });
  }
  return rec.finish(est.x());
}

Trajectory run_mu2_extra_sgd(ProblemPtr problem, const OptimizerConfig& config, Rng& rng,
                             const StepObserver& observer) {
  validate(*problem, config);
  Recorder rec(*problem, config, Algorithm::mu2_extra_sgd, MeasuredAt::average);
  const Schedules sched = config.effective_schedules();
  AnytimeAverage average(sched.weights);

  Point y = initial_point(*problem, config);  // y_0
  Point x_hat = y;                            // x^_1 = y_0
  std::vector<SampleToken> tokens{problem->draw_sample(rng)};
  std::size_t samples = 1;
  Point g_hat = problem->stoch_grad(x_hat, tokens.front());
  Point d_hat = g_hat;
  // d_0 = g~_0 = d^_1, so the first correction vanishes.
  Point d_prev = d_hat;
  Point g_tilde_prev = d_hat;
  Point x;
  Point w;
  Point d;
  Point g;

  for (std::size_t t = 1; t <= config.horizon; ++t) {
    const double step = config.lr * sched.alpha(t);
    Point w_next = project(config.set, y - step * d_hat);
    if (!finite(w_next)) {
      rec.trajectory().diverged = true;
      break;
    }
    w = std::move(w_next);
    average.push(w);
    x = average.value();

    g = problem->stoch_grad(x, tokens.front());
    const Point correction = (1.0 - sched.beta(t)) * (d_prev - g_tilde_prev);
    d = g + correction;
    Point y_next = project(config.set, y - step * d);
    if (!finite(y_next)) {
      rec.trajectory().diverged = true;
      break;
    }
    y = std::move(y_next);

    rec.record(t, x, samples, [&] { return (d - problem->exact_grad(x)).squaredNorm(); });
    notify(observer, StepView{t, &w, &x, &d, &d_hat, &g, &g_hat, &tokens});
    if (t == config.horizon) break;

    x_hat = average.peek(y);
    tokens.front() = problem->draw_sample(rng);
    ++samples;
    g_tilde_prev = problem->stoch_grad(x, tokens.front());
    g_hat = problem->stoch_grad(x_hat, tokens.front());
    d_hat = g_hat + (1.0 - sched.beta(t + 1)) * (d - g_tilde_prev);
    d_prev = d;
  }
  return rec.finish(average.count() > 0 ? average.value() : y);
}

Trajectory run_optimizer(ProblemPtr problem, const OptimizerConfig& config, Rng& rng,
                         const StepObserver& observer) {
  switch (config.algorithm) {
    case Algorithm::sgd:
      return run_sgd(std::move(problem), config, rng, observer);
    case Algorithm::heavy_ball:
      return run_heavy_ball(std::move(problem), config, rng, observer);
    case Algorithm::anytime_sgd:
      return run_anytime_sgd(std::move(problem), config, rng, observer);
    case Algorithm::storm:
      return run_storm(std::move(problem), config, rng, observer);
    case Algorithm::mu2_extra_sgd:
      return run_mu2_extra_sgd(std::move(problem), config, rng, observer);
    default:
      return run_mu2_sgd(std::move(problem), config, rng, observer);
  }
}

}  // namespace mu2opt

#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "geometry.hpp"
#include "problems.hpp"
#include "rng.hpp"
#include "schedules.hpp"

namespace mu2opt {

enum class Algorithm {
  sgd,
  heavy_ball,
  anytime_sgd,
  storm,
  mu2_sgd,
  mu2_sgd_uniform,
  mu2_sgd_batched,
  mu2_sgd_fixed,
  mu2_extra_sgd,
};

std::string_view to_string(Algorithm a);
/// Throws ConfigError for unknown tags.
Algorithm parse_algorithm(std::string_view tag);
const std::vector<Algorithm>& all_algorithms();

/// Schedules each algorithm uses unless the configuration overrides them.
Schedules default_schedules(Algorithm a);

struct HeavyBallParams {
  double momentum = 0.9;   // mu_hb
  double dampening = 0.9;  // tau_hb
};

struct OptimizerConfig {
  Algorithm algorithm = Algorithm::mu2_sgd;
  double lr = 0.0;
  std::size_t horizon = 1;  // T: number of query points x_1..x_T
  FeasibleSet set = FeasibleSet::unconstrained(1.0);
  std::optional<Schedules> schedules;
  HeavyBallParams heavy_ball;
  std::optional<Point> x1;  // defaults to the projection of the origin
  std::size_t log_points = 30;
  /// Stop once ||d_t|| drops to this value (mu2 family only; 0 disables).
  double stop_threshold = 0.0;

  Schedules effective_schedules() const { return schedules.value_or(default_schedules(algorithm)); }
};

/// Where f_gap was measured.
enum class MeasuredAt { iterate, average };

struct LogPoint {
  std::size_t t = 0;
  std::optional<double> f_gap;
  std::optional<double> eps_sq;
  double iterate_norm = 0.0;
  std::size_t samples_used = 0;
};

struct Trajectory {
  Algorithm algorithm = Algorithm::sgd;
  MeasuredAt measured_at = MeasuredAt::iterate;
  std::vector<LogPoint> points;
  Point output;
  bool diverged = false;
  std::size_t last_finite_t = 0;
  bool stopped_early = false;
  std::size_t samples_used = 0;
};

/// Per-step internals handed to an observer, valid only during the call.
/// Pointers are null where the algorithm has no such quantity.
struct StepView {
  std::size_t t = 0;
  const Point* w = nullptr;
  const Point* x = nullptr;
  const Point* d = nullptr;
  const Point* d_hat = nullptr;
  const Point* g = nullptr;
  const Point* g_hat = nullptr;
  const std::vector<SampleToken>* tokens = nullptr;
};
using StepObserver = std::function<void(const StepView&)>;

/// Steps at which a run of length T logs: t = 1, t = T, and roughly
/// `count` log-spaced steps in between.
std::vector<std::size_t> log_steps(std::size_t horizon, std::size_t count);

/// Validates `config` against `problem`; throws ConfigError.
void validate(const StochasticProblem& problem, const OptimizerConfig& config);

Trajectory run_sgd(ProblemPtr problem, const OptimizerConfig& config, Rng& rng,
                   const StepObserver& observer = {});
Trajectory run_heavy_ball(ProblemPtr problem, const OptimizerConfig& config, Rng& rng,
                          const StepObserver& observer = {});
Trajectory run_anytime_sgd(ProblemPtr problem, const OptimizerConfig& config, Rng& rng,
                           const StepObserver& observer = {});
Trajectory run_storm(ProblemPtr problem, const OptimizerConfig& config, Rng& rng,
                     const StepObserver& observer = {});
/// Covers mu2_sgd, mu2_sgd_uniform, mu2_sgd_batched and mu2_sgd_fixed.
Trajectory run_mu2_sgd(ProblemPtr problem, const OptimizerConfig& config, Rng& rng,
                       const StepObserver& observer = {});
Trajectory run_mu2_extra_sgd(ProblemPtr problem, const OptimizerConfig& config, Rng& rng,
                             const StepObserver& observer = {});

/// Dispatches on config.algorithm.
Trajectory run_optimizer(ProblemPtr problem, const OptimizerConfig& config, Rng& rng,
                         const StepObserver& observer = {});

}  // namespace mu2opt

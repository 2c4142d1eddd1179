#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "optimizers.hpp"
#include "problems.hpp"

namespace mu2opt {

struct BlobSpec {
  std::size_t n = 500;
  Eigen::Index dimension = 10;
  std::uint64_t seed = 7;
  double margin = 0.5;
};

/// Declarative problem description, as read from a run configuration.
struct ProblemSpec {
  std::string kind = "additive_quadratic";  // additive_quadratic | curvature_quadratic | finite_sum
  Eigen::Index dimension = 2;
  Point x_star;                              // defaults to the origin
  double sigma = 0.0;                        // additive_quadratic
  double c = 0.0;                            // curvature_quadratic
  std::string csv_path;                      // finite_sum from disk
  std::optional<BlobSpec> blobs;             // finite_sum synthetic
  Loss loss = Loss::logistic;
};

/// Builds the problem and, for finite sums, attaches the reference optimum.
ProblemPtr build_problem(const ProblemSpec& spec, const FeasibleSet& set);

struct ReferenceSolution {
  Point point;
  double value = 0.0;
  bool converged = false;
  std::size_t iterations = 0;
};

/// Projected full-gradient descent with step 1/L until the gradient mapping
/// L ||x - P(x - grad f(x)/L)|| falls below `tolerance`. Results are cached
/// per (problem fingerprint, set, tolerance). `value_trace`, when given,
/// receives f at every iterate and bypasses the cache.
ReferenceSolution solve_reference_optimum(const StochasticProblem& problem, const FeasibleSet& set,
                                          double tolerance, std::size_t max_iterations = 1000000,
                                          std::vector<double>* value_trace = nullptr);

/// One executed run.
struct RunRecord {
  Algorithm algorithm = Algorithm::sgd;
  double lr = 0.0;
  std::int64_t seed = 0;
  std::size_t horizon = 0;
  Trajectory trajectory;
  double wall_time_s = 0.0;      // excluded from every deterministic artifact
  std::optional<std::string> error;

  bool diverged() const { return error.has_value() || trajectory.diverged; }
  /// Final f_gap; +infinity for diverged or failed runs.
  double final_f_gap() const;
};

struct RunSpec {
  ProblemSpec problem;
  OptimizerConfig optimizer;
  std::int64_t seed = 0;
};

/// Stream seed of a run: a stable hash of the master seed, the problem,
/// the horizon and the per-run seed. Algorithm and learning rate are left
/// out so every cell of a sweep sees the same sample stream.
std::uint64_t run_stream_seed(std::uint64_t master_seed, const StochasticProblem& problem,
                              const OptimizerConfig& config, std::int64_t seed);

RunRecord run_single(const RunSpec& spec, std::uint64_t master_seed);
RunRecord run_single(ProblemPtr problem, const OptimizerConfig& config, std::int64_t seed,
                     std::uint64_t master_seed);

struct SweepGrid {
  std::vector<Algorithm> algorithms;
  std::vector<double> learning_rates;
  std::vector<std::int64_t> seeds;
  ProblemSpec problem;
  OptimizerConfig base;  // algorithm and lr are replaced per cell
  /// Schedules from the configuration; the uniform and fixed mu2 variants
  /// keep the schedules their tags define.
  std::optional<Schedules> schedules;

  void validate() const;
};

/// n geometrically spaced values from lo to hi inclusive.
std::vector<double> log_spaced(double lo, double hi, std::size_t n);

/// Executes the cartesian product on `workers` threads. Output order is
/// (algorithm, lr, seed) following the grid axes, independent of scheduling.
std::vector<RunRecord> sweep(const SweepGrid& grid, std::uint64_t master_seed, std::size_t workers = 1);

struct StabilityEntry {
  bool defined = false;
  std::size_t grid_points = 0;
  double eta_star = 0.0;
  double best_metric = 0.0;
  double eta_min = 0.0;
  double eta_max = 0.0;
  double ratio = 1.0;
  /// Largest quotient between neighbouring grid learning rates.
  double grid_resolution = 1.0;
  /// The order-optimal range touches a grid endpoint.
  bool lower_bound = false;
};

/// Factor-`factor` order-optimal range around the best learning rate.
/// `metric` is indexed like `lrs` (sorted ascending); +inf marks divergence.
StabilityEntry stability_ratio(const std::vector<double>& lrs, const std::vector<double>& metric,
                               double factor = 2.0);
/// Same, from run records of one algorithm (metric = mean final f_gap).
StabilityEntry stability_ratio(const std::vector<RunRecord>& records, Algorithm algorithm,
                               double factor = 2.0);

/// Least-squares slope of log y against log x. Points with nonpositive or
/// non-finite values are dropped; fewer than 4 left gives nullopt.
std::optional<double> slope_fit(const std::vector<double>& x, const std::vector<double>& y);

enum class SlopeMetric { f_gap_vs_T, eps_sq_vs_t };

/// f_gap_vs_T: mean final f_gap per horizon. eps_sq_vs_t: mean eps_sq at each
/// logged t across the records.
std::optional<double> slope_fit(const std::vector<RunRecord>& records, SlopeMetric metric);

}  // namespace mu2opt

#include "harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include "errors.hpp"

namespace mu2opt {

namespace {

std::string set_fingerprint(const FeasibleSet& set) {
  std::ostringstream os;
  os.precision(17);
  if (const auto* b = std::get_if<EuclideanBall>(&set.shape())) {
    os << "ball|r=" << b->radius << "|c=" << b->center.transpose();
  } else if (const auto* x = std::get_if<Box>(&set.shape())) {
    os << "box|l=" << x->lower.transpose() << "|u=" << x->upper.transpose();
  } else {
    os << "free|D=" << std::get<Unconstrained>(set.shape()).declared_diameter;
  }
  return os.str();
}

double gradient_mapping_norm(const StochasticProblem& p, const FeasibleSet& set, const Point& x,
                             double smoothness, Point* next) {
  *next = project(set, x - p.exact_grad(x) / smoothness);
  return smoothness * (x - *next).norm();
}

}  // namespace

ProblemPtr build_problem(const ProblemSpec& spec, const FeasibleSet& set) {
  Point x_star = spec.x_star.size() ? spec.x_star : Point::Zero(spec.dimension);
  if (spec.kind == "additive_quadratic") {
    return make_additive_quadratic(spec.dimension, x_star, spec.sigma, set);
  }
  if (spec.kind == "curvature_quadratic") {
    return make_curvature_quadratic(spec.dimension, x_star, spec.c, set);
  }
  if (spec.kind == "finite_sum") {
    Records records;
    if (spec.blobs) {
      records = make_separable_blobs(spec.blobs->n, spec.blobs->dimension, spec.blobs->seed,
                                     spec.blobs->margin);
    } else if (!spec.csv_path.empty()) {
      records = load_csv_records(spec.csv_path, spec.loss);
    } else {
      throw ConfigError("finite_sum problem needs either a csv path or a blobs table");
    }
    auto problem = make_finite_sum(std::move(records), spec.loss);
    if (set.dimension() >= 0 && set.dimension() != problem->dimension()) {
      throw ConfigError("feasible set dimension does not match the corpus feature count");
    }
    const auto ref = solve_reference_optimum(*problem, set, 1e-10);
    problem->set_optimum(Optimum{ref.point, ref.value, ref.converged});
    return problem;
  }
  throw ConfigError("unknown problem kind '" + spec.kind + "'");
}

ReferenceSolution solve_reference_optimum(const StochasticProblem& problem, const FeasibleSet& set,
                                          double tolerance, std::size_t max_iterations,
                                          std::vector<double>* value_trace) {
  const auto smoothness = problem.constants().smoothness;
  if (!smoothness || !(*smoothness > 0.0)) {
    throw ConfigError("reference solve needs a declared smoothness constant");
  }
  static std::mutex cache_mutex;
  static std::map<std::string, ReferenceSolution> cache;
  std::ostringstream key_os;
  key_os.precision(17);
  key_os << problem.fingerprint() << "|" << set_fingerprint(set) << "|tol=" << tolerance
         << "|cap=" << max_iterations;
  const std::string key = key_os.str();
  if (!value_trace) {
    std::lock_guard lock(cache_mutex);
    if (auto it = cache.find(key); it != cache.end()) return it->second;
  }

  ReferenceSolution sol;
  Point x = project(set, Point::Zero(problem.dimension()));
  Point next;
  double best_value = problem.exact_value(x);
  Point best = x;
  if (value_trace) value_trace->push_back(best_value);
  for (std::size_t it = 0; it < max_iterations; ++it) {
    const double mapping = gradient_mapping_norm(problem, set, x, *smoothness, &next);
    sol.iterations = it;
    if (mapping <= tolerance) {
      sol.converged = true;
      break;
    }
    x = next;
    const double v = problem.exact_value(x);
    if (value_trace) value_trace->push_back(v);
    if (v <= best_value) {
      best_value = v;
      best = x;
    }
  }
  if (sol.converged) {
    sol.point = x;
    sol.value = problem.exact_value(x);
  } else {
    sol.point = best;
    sol.value = best_value;
  }
  if (!value_trace) {
    std::lock_guard lock(cache_mutex);
    cache.emplace(key, sol);
  }
  return sol;
}

double RunRecord::final_f_gap() const {
  if (diverged() || trajectory.points.empty() || !trajectory.points.back().f_gap) {
    return std::numeric_limits<double>::infinity();
  }
  return *trajectory.points.back().f_gap;
}

std::uint64_t run_stream_seed(std::uint64_t master_seed, const StochasticProblem& problem,
                              const OptimizerConfig& config, std::int64_t seed) {
  std::ostringstream os;
  os << problem.fingerprint() << "|" << set_fingerprint(config.set) << "|T=" << config.horizon
     << "|seed=" << seed;
  return mix_seed(master_seed, fnv1a(os.str()));
}

RunRecord run_single(ProblemPtr problem, const OptimizerConfig& config, std::int64_t seed,
                     std::uint64_t master_seed) {
  validate(*problem, config);
  RunRecord rec;
  rec.algorithm = config.algorithm;
  rec.lr = config.lr;
  rec.seed = seed;
  rec.horizon = config.horizon;
  Rng rng(run_stream_seed(master_seed, *problem, config, seed));
  const auto start = std::chrono::steady_clock::now();
  try {
    rec.trajectory = run_optimizer(problem, config, rng);
  } catch (const NumericError& e) {
    rec.error = e.what();
    rec.trajectory.algorithm = config.algorithm;
    rec.trajectory.diverged = true;
  }
  rec.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rec;
}

RunRecord run_single(const RunSpec& spec, std::uint64_t master_seed) {
  const auto problem = build_problem(spec.problem, spec.optimizer.set);
  return run_single(problem, spec.optimizer, spec.seed, master_seed);
}

void SweepGrid::validate() const {
  if (algorithms.empty() || learning_rates.empty() || seeds.empty()) {
    throw ConfigError("sweep grid axes must be nonempty");
  }
  for (std::size_t i = 0; i < learning_rates.size(); ++i) {
    if (!(learning_rates[i] > 0.0) || !std::isfinite(learning_rates[i])) {
      throw ConfigError("sweep learning rates must be positive and finite");
    }
    if (i > 0 && !(learning_rates[i] > learning_rates[i - 1])) {
      throw ConfigError("sweep learning rates must be strictly increasing");
    }
  }
}

std::vector<double> log_spaced(double lo, double hi, std::size_t n) {
  if (!(lo > 0.0) || !(hi >= lo) || n == 0) throw ConfigError("log_spaced needs 0 < lo <= hi, n >= 1");
  if (n == 1) return {lo};
  std::vector<double> out(n);
  const double a = std::log10(lo);
  const double b = std::log10(hi);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = std::pow(10.0, a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1));
  }
  out.front() = lo;
  out.back() = hi;
  return out;
}

std::vector<RunRecord> sweep(const SweepGrid& grid, std::uint64_t master_seed, std::size_t workers) {
  grid.validate();
  const auto problem = build_problem(grid.problem, grid.base.set);

  std::vector<OptimizerConfig> cells;
  std::vector<std::int64_t> cell_seeds;
  for (const Algorithm alg : grid.algorithms) {
    for (const double lr : grid.learning_rates) {
      for (const auto seed : grid.seeds) {
        OptimizerConfig c = grid.base;
        c.algorithm = alg;
        c.lr = lr;
        const bool tag_defines_schedules =
            alg == Algorithm::mu2_sgd_uniform || alg == Algorithm::mu2_sgd_fixed;
        c.schedules = tag_defines_schedules ? std::nullopt : grid.schedules;
        validate(*problem, c);
        cells.push_back(std::move(c));
        cell_seeds.push_back(seed);
      }
    }
  }

  std::vector<RunRecord> out(cells.size());
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr first_error;
  const auto work = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      try {
        out[i] = run_single(problem, cells[i], cell_seeds[i], master_seed);
      } catch (const std::exception& e) {
        RunRecord failed;
        failed.algorithm = cells[i].algorithm;
        failed.lr = cells[i].lr;
        failed.seed = cell_seeds[i];
        failed.horizon = cells[i].horizon;
        failed.error = e.what();
        failed.trajectory.algorithm = cells[i].algorithm;
        failed.trajectory.diverged = true;
        out[i] = std::move(failed);
      }
    }
  };
  const std::size_t width = std::max<std::size_t>(1, std::min(workers, cells.size()));
  if (width == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t k = 0; k < width; ++k) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  return out;
}

StabilityEntry stability_ratio(const std::vector<double>& lrs, const std::vector<double>& metric,
                               double factor) {
  if (lrs.size() != metric.size()) throw ConfigError("stability: metric/lr length mismatch");
  if (!(factor >= 1.0)) throw ConfigError("stability factor must be >= 1");
  StabilityEntry e;
  e.grid_points = lrs.size();
  for (std::size_t i = 1; i < lrs.size(); ++i) {
    e.grid_resolution = std::max(e.grid_resolution, lrs[i] / lrs[i - 1]);
  }
  std::size_t best = lrs.size();
  for (std::size_t i = 0; i < lrs.size(); ++i) {
    if (!std::isfinite(metric[i])) continue;
    if (best == lrs.size() || metric[i] < metric[best]) best = i;
  }
  if (best == lrs.size()) return e;  // every cell diverged
  e.defined = true;
  e.eta_star = lrs[best];
  e.best_metric = metric[best];
  const double limit = factor * metric[best];
  std::size_t lo = best;
  std::size_t hi = best;
  while (lo > 0 && metric[lo - 1] <= limit) --lo;
  while (hi + 1 < lrs.size() && metric[hi + 1] <= limit) ++hi;
  e.eta_min = lrs[lo];
  e.eta_max = lrs[hi];
  e.ratio = e.eta_max / e.eta_min;
  e.lower_bound = lo == 0 || hi + 1 == lrs.size();
  return e;
}

StabilityEntry stability_ratio(const std::vector<RunRecord>& records, Algorithm algorithm,
                               double factor) {
  std::map<double, std::pair<double, std::size_t>> by_lr;
  for (const auto& r : records) {
    if (r.algorithm != algorithm) continue;
    auto& [sum, count] = by_lr[r.lr];
    sum += r.final_f_gap();
    ++count;
  }
  std::vector<double> lrs;
  std::vector<double> metric;
  for (const auto& [lr, acc] : by_lr) {
    lrs.push_back(lr);
    metric.push_back(acc.first / static_cast<double>(acc.second));
  }
  return stability_ratio(lrs, metric, factor);
}

std::optional<double> slope_fit(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw ConfigError("slope_fit: x/y length mismatch");
  std::vector<double> lx;
  std::vector<double> ly;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] > 0.0 && y[i] > 0.0 && std::isfinite(x[i]) && std::isfinite(y[i])) {
      lx.push_back(std::log(x[i]));
      ly.push_back(std::log(y[i]));
    }
  }
  if (lx.size() < 4) return std::nullopt;
  const double n = static_cast<double>(lx.size());
  const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / n;
  const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / n;
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  if (sxx == 0.0) return std::nullopt;
  return sxy / sxx;
}

std::optional<double> slope_fit(const std::vector<RunRecord>& records, SlopeMetric metric) {
  std::map<std::size_t, std::pair<double, std::size_t>> acc;
  for (const auto& r : records) {
    if (metric == SlopeMetric::f_gap_vs_T) {
      auto& [sum, count] = acc[r.horizon];
      sum += r.final_f_gap();
      ++count;
    } else {
      for (const auto& p : r.trajectory.points) {
        if (!p.eps_sq) continue;
        auto& [sum, count] = acc[p.t];
        sum += *p.eps_sq;
        ++count;
      }
    }
  }
  std::vector<double> x;
  std::vector<double> y;
  for (const auto& [key, v] : acc) {
    x.push_back(static_cast<double>(key));
    y.push_back(v.first / static_cast<double>(v.second));
  }
  return slope_fit(x, y);
}

}  // namespace mu2opt

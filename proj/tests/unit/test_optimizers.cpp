#include <doctest.h>

#include <cmath>
#include <vector>

#include "errors.hpp"
#include "optimizers.hpp"
#include "problems.hpp"

using namespace mu2opt;

namespace {

Point vec(std::initializer_list<double> v) {
  Point p(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) p[i++] = x;
  return p;
}

OptimizerConfig config(Algorithm a, double lr, std::size_t horizon, FeasibleSet set) {
  OptimizerConfig c;
  c.algorithm = a;
  c.lr = lr;
  c.horizon = horizon;
  c.set = std::move(set);
  return c;
}

struct Capture {
  std::vector<Point> w;
  std::vector<Point> x;
  std::vector<Point> d;
  StepObserver observer() {
    return [this](const StepView& v) {
      if (v.w) w.push_back(*v.w);
      if (v.x) x.push_back(*v.x);
      if (v.d) d.push_back(*v.d);
    };
  }
};

Capture run(Algorithm a, ProblemPtr p, OptimizerConfig c, std::uint64_t seed, Trajectory* out = nullptr) {
  c.algorithm = a;
  Capture cap;
  Rng rng(seed);
  auto traj = run_optimizer(std::move(p), c, rng, cap.observer());
  if (out) *out = std::move(traj);
  return cap;
}

}  // namespace

TEST_CASE("sgd: unit step on the identity-Hessian quadratic lands on the minimizer") {
  const Point xs = vec({0.3, -0.4});
  const auto p = make_additive_quadratic(2, xs, 0.0, FeasibleSet::unit_ball(2));
  auto c = config(Algorithm::sgd, 1.0, 3, FeasibleSet::unit_ball(2));
  c.x1 = vec({0.9, 0.1});
  const auto cap = run(Algorithm::sgd, p, c, 1);
  REQUIRE(cap.w.size() == 3);
  CHECK((cap.w[1] - xs).norm() <= 1e-15);
}

TEST_CASE("sgd: geometric contraction with step 0.5") {
  const Point xs = vec({0.0, 0.0});
  const auto p = make_additive_quadratic(2, xs, 0.0, FeasibleSet::unconstrained(4.0));
  auto c = config(Algorithm::sgd, 0.5, 20, FeasibleSet::unconstrained(4.0));
  c.x1 = vec({1.0, 0.0});
  const auto cap = run(Algorithm::sgd, p, c, 1);
  for (std::size_t t = 1; t <= 20; ++t) {
    CHECK(cap.w[t - 1][0] == std::pow(0.5, double(t - 1)));
    CHECK(cap.w[t - 1][1] == 0.0);
  }
}

TEST_CASE("zero learning rate keeps the iterates fixed") {
  const auto p = make_additive_quadratic(2, vec({0.2, 0.2}), 1.0, FeasibleSet::unit_ball(2));
  auto c = config(Algorithm::sgd, 0.0, 30, FeasibleSet::unit_ball(2));
  c.x1 = vec({0.5, -0.5});
  for (Algorithm a : {Algorithm::sgd, Algorithm::heavy_ball, Algorithm::storm}) {
    const auto cap = run(a, p, c, 2);
    for (const auto& w : cap.w) CHECK(w == *c.x1);
  }
  const auto storm = run(Algorithm::storm, p, c, 2);
  CHECK(storm.d.front() != storm.d.back());
}

TEST_CASE("heavy ball with no momentum and no dampening is sgd") {
  const auto p = make_curvature_quadratic(3, vec({0.1, 0.2, 0.0}), 0.5, FeasibleSet::unit_ball(3));
  auto c = config(Algorithm::heavy_ball, 0.3, 200, FeasibleSet::unit_ball(3));
  c.heavy_ball = HeavyBallParams{0.0, 0.0};
  const auto hb = run(Algorithm::heavy_ball, p, c, 3);
  const auto sgd = run(Algorithm::sgd, p, c, 3);
  CHECK(hb.w == sgd.w);
}

TEST_CASE("heavy ball matches a scalar reference recurrence") {
  const auto p = make_additive_quadratic(1, vec({0.25}), 0.0, FeasibleSet::unconstrained(2.0));
  auto c = config(Algorithm::heavy_ball, 0.1, 100, FeasibleSet::unconstrained(2.0));
  c.x1 = vec({1.0});
  const auto cap = run(Algorithm::heavy_ball, p, c, 4);
  double w = 1.0;
  double b = 0.0;
  for (std::size_t t = 1; t <= 100; ++t) {
    CHECK(std::abs(cap.w[t - 1][0] - w) <= 1e-12);
    const double g = w - 0.25;
    b = t == 1 ? g : 0.9 * b + 0.1 * g;
    w -= 0.1 * b;
  }
}

TEST_CASE("anytime sgd with uniform weights outputs the iterate average") {
  const auto p = make_additive_quadratic(2, vec({0.1, 0.3}), 1.0, FeasibleSet::unit_ball(2));
  auto c = config(Algorithm::anytime_sgd, 0.05, 100, FeasibleSet::unit_ball(2));
  c.schedules = Schedules{WeightSchedule::uniform(), MomentumSchedule::inverse_t()};
  Trajectory traj;
  const auto cap = run(Algorithm::anytime_sgd, p, c, 5, &traj);
  REQUIRE(cap.w.size() == 100);
  Point sum = Point::Zero(2);
  for (const auto& w : cap.w) sum += w;
  CHECK(traj.output == sum / 100.0);
}

TEST_CASE("anytime sgd: small steps stay near the start") {
  const auto p = make_additive_quadratic(2, vec({0.0, 0.0}), 0.0, FeasibleSet::unit_ball(2));
  auto c = config(Algorithm::anytime_sgd, 1e-9, 50, FeasibleSet::unit_ball(2));
  c.x1 = vec({0.5, 0.5});
  Trajectory traj;
  run(Algorithm::anytime_sgd, p, c, 6, &traj);
  CHECK((traj.output - *c.x1).norm() <= 1e-6);
}

TEST_CASE("anytime sgd: two hand-unrolled steps in one dimension") {
  const auto p = make_additive_quadratic(1, vec({0.0}), 0.0, FeasibleSet::unconstrained(2.0));
  auto c = config(Algorithm::anytime_sgd, 0.1, 3, FeasibleSet::unconstrained(2.0));
  c.x1 = vec({1.0});
  const auto cap = run(Algorithm::anytime_sgd, p, c, 7);
  // w_2 = w_1 - eta * alpha_1 * x_1 = 1 - 0.2 = 0.8; x_2 = (2 * 1 + 3 * 0.8) / 5 = 0.88.
  CHECK(cap.w[1][0] == doctest::Approx(0.8).epsilon(1e-15));
  CHECK(cap.x[1][0] == doctest::Approx(0.88).epsilon(1e-15));
  // w_3 = 0.8 - 0.1 * 3 * 0.88 = 0.536; x_3 = (5 * 0.88 + 4 * 0.536) / 9.
  CHECK(cap.w[2][0] == doctest::Approx(0.536).epsilon(1e-15));
  CHECK(cap.x[2][0] == doctest::Approx((5 * 0.88 + 4 * 0.536) / 9).epsilon(1e-15));
}

TEST_CASE("storm: noiseless run is gradient descent") {
  const auto p = make_curvature_quadratic(2, vec({0.4, -0.2}), 0.0, FeasibleSet::unit_ball(2));
  auto c = config(Algorithm::storm, 0.2, 100, FeasibleSet::unit_ball(2));
  c.x1 = vec({-0.6, 0.6});
  const auto cap = run(Algorithm::storm, p, c, 8);
  Point w = *c.x1;
  for (std::size_t t = 1; t <= 100; ++t) {
    CHECK((cap.w[t - 1] - w).norm() <= 1e-12);
    w = project(c.set, w - 0.2 * p->exact_grad(w));
  }
}

TEST_CASE("storm with beta = 1 is sgd") {
  const auto p = make_additive_quadratic(3, vec({0.1, 0.1, 0.1}), 1.0, FeasibleSet::unit_ball(3));
  auto c = config(Algorithm::storm, 0.1, 200, FeasibleSet::unit_ball(3));
  c.schedules = Schedules{WeightSchedule::linear(), MomentumSchedule::fixed(1.0)};
  const auto storm = run(Algorithm::storm, p, c, 9);
  const auto sgd = run(Algorithm::sgd, p, c, 9);
  CHECK(storm.w == sgd.w);
}

TEST_CASE("mu2-sgd: noiseless run is deterministic anytime gradient descent") {
  const auto k = FeasibleSet::unit_ball(2);
  const auto p = make_additive_quadratic(2, vec({2.0, 0.0}), 0.0, k);
  auto c = config(Algorithm::mu2_sgd, 1.0 / (8.0 * 300), 300, k);
  c.x1 = vec({0.0, 0.5});
  const auto cap = run(Algorithm::mu2_sgd, p, c, 10);
  AnytimeAverage avg(WeightSchedule::linear());
  Point w = *c.x1;
  avg.push(w);
  for (std::size_t t = 1; t <= 300; ++t) {
    CHECK((cap.x[t - 1] - avg.value()).norm() <= 1e-12);
    w = project(k, w - c.lr * double(t + 1) * p->exact_grad(avg.value()));
    avg.push(w);
  }
}

TEST_CASE("mu2-sgd: first step uses alpha_1 = 2") {
  const auto k = FeasibleSet::unit_ball(2);
  const auto p = make_additive_quadratic(2, vec({0.1, 0.0}), 1.0, k);
  auto c = config(Algorithm::mu2_sgd, 0.05, 2, k);
  const auto cap = run(Algorithm::mu2_sgd, p, c, 11);
  CHECK((cap.w[1] - project(k, cap.w[0] - 0.05 * 2.0 * cap.d[0])).norm() == 0.0);
}

TEST_CASE("mu2-sgd: fixed-gamma heuristic applies the step to d directly") {
  const auto k = FeasibleSet::unit_ball(2);
  const auto p = make_additive_quadratic(2, vec({0.1, 0.0}), 1.0, k);
  auto c = config(Algorithm::mu2_sgd_fixed, 0.05, 10, k);
  const auto cap = run(Algorithm::mu2_sgd_fixed, p, c, 12);
  for (std::size_t t = 1; t < 10; ++t) {
    CHECK((cap.w[t] - project(k, cap.w[t - 1] - 0.05 * cap.d[t - 1])).norm() == 0.0);
  }
}

TEST_CASE("reference learning rates") {
  CHECK(1.0 / (8.0 * 1.0 * 100) == 0.00125);
  CHECK(1.0 / (2.0 * 1.0) == 0.5);
}

TEST_CASE("mu2-extra-sgd: d_t - d^_t = g_t - g^_t every round") {
  const auto k = FeasibleSet::unit_ball(3);
  const auto p = make_curvature_quadratic(3, vec({0.3, 0.0, -0.2}), 0.9, k);
  auto c = config(Algorithm::mu2_extra_sgd, 0.5, 500, k);
  Rng rng(13);
  std::size_t rounds = 0;
  run_mu2_extra_sgd(p, c, rng, [&](const StepView& v) {
    ++rounds;
    CHECK(((*v.d - *v.d_hat) - (*v.g - *v.g_hat)).norm() <= 1e-12);
  });
  CHECK(rounds == 500);
}

TEST_CASE("mu2-extra-sgd beats mu2-sgd on the noiseless quadratic at T = 200") {
  const auto k = FeasibleSet::unit_ball(3);
  const auto p = make_additive_quadratic(3, vec({0.4, -0.3, 0.2}), 0.0, k);
  Trajectory extra;
  Trajectory plain;
  run(Algorithm::mu2_extra_sgd, p, config(Algorithm::mu2_extra_sgd, 0.5, 200, k), 14, &extra);
  run(Algorithm::mu2_sgd, p, config(Algorithm::mu2_sgd, 1.0 / (8.0 * 200), 200, k), 14, &plain);
  CHECK(*extra.points.back().f_gap < *plain.points.back().f_gap);
}

TEST_CASE("mu2-extra-sgd requires a bounded set and weighted averaging") {
  const auto p = make_additive_quadratic(2, vec({0, 0}), 0.0, FeasibleSet::unconstrained(5.0));
  Rng rng(1);
  CHECK_THROWS_AS(run_mu2_extra_sgd(p, config(Algorithm::mu2_extra_sgd, 0.5, 10, FeasibleSet::unconstrained(5.0)), rng),
                  ConfigError);
  auto c = config(Algorithm::mu2_extra_sgd, 0.5, 10, FeasibleSet::unit_ball(2));
  c.schedules = Schedules{WeightSchedule::fixed_gamma(0.1), MomentumSchedule::fixed(0.9)};
  const auto q = make_additive_quadratic(2, vec({0, 0}), 0.0, FeasibleSet::unit_ball(2));
  CHECK_THROWS_AS(run_mu2_extra_sgd(q, c, rng), ConfigError);
}

TEST_CASE("configuration validation") {
  const auto k = FeasibleSet::unit_ball(2);
  const auto p = make_additive_quadratic(2, vec({0, 0}), 0.0, k);
  CHECK_THROWS_AS(validate(*p, config(Algorithm::sgd, -1.0, 10, k)), ConfigError);
  CHECK_THROWS_AS(validate(*p, config(Algorithm::sgd, std::nan(""), 10, k)), ConfigError);
  CHECK_THROWS_AS(validate(*p, config(Algorithm::sgd, 0.1, 0, k)), ConfigError);
  CHECK_THROWS_AS(validate(*p, config(Algorithm::sgd, 0.1, 10, FeasibleSet::unit_ball(3))), ConfigError);
  auto outside = config(Algorithm::sgd, 0.1, 10, k);
  outside.x1 = vec({2, 0});
  CHECK_THROWS_AS(validate(*p, outside), ConfigError);
  auto hb = config(Algorithm::heavy_ball, 0.1, 10, k);
  hb.heavy_ball.momentum = 1.0;
  CHECK_THROWS_AS(validate(*p, hb), ConfigError);
  CHECK_THROWS_AS(parse_algorithm("adam"), ConfigError);
  for (Algorithm a : all_algorithms()) CHECK(parse_algorithm(to_string(a)) == a);
}

TEST_CASE("every algorithm keeps iterates and query points feasible") {
  const auto k = FeasibleSet::unit_ball(3);
  const auto p = make_additive_quadratic(3, vec({3.0, 0.0, 0.0}), 2.0, k);
  for (Algorithm a : all_algorithms()) {
    const auto cap = run(a, p, config(a, 1.0, 200, k), 15);
    for (const auto& w : cap.w) CHECK(k.contains(w, 1e-9));
    for (const auto& x : cap.x) CHECK(k.contains(x, 1e-9));
  }
}

TEST_CASE("trajectories: log steps, gap sign, determinism") {
  const auto k = FeasibleSet::unit_ball(3);
  const auto p = make_curvature_quadratic(3, vec({0.2, 0.1, 0.0}), 0.5, k);
  for (Algorithm a : all_algorithms()) {
    auto c = config(a, 0.01, 500, k);
    Trajectory first;
    Trajectory second;
    run(a, p, c, 16, &first);
    run(a, p, c, 16, &second);
    REQUIRE(!first.points.empty());
    CHECK(first.points.front().t == 1);
    CHECK(first.points.back().t == 500);
    for (std::size_t i = 0; i < first.points.size(); ++i) {
      if (i > 0) CHECK(first.points[i].t > first.points[i - 1].t);
      CHECK(*first.points[i].f_gap >= -1e-9);
      CHECK(first.points[i].f_gap == second.points[i].f_gap);
      CHECK(first.points[i].eps_sq == second.points[i].eps_sq);
    }
    CHECK(first.output == second.output);
    CHECK(first.points.size() <= 31);
  }
}

TEST_CASE("measurement point per algorithm") {
  const auto k = FeasibleSet::unit_ball(2);
  const auto p = make_additive_quadratic(2, vec({0, 0}), 0.0, k);
  for (Algorithm a : all_algorithms()) {
    Trajectory t;
    run(a, p, config(a, 0.01, 5, k), 1, &t);
    const bool at_iterate = a == Algorithm::sgd || a == Algorithm::heavy_ball || a == Algorithm::storm;
    CHECK(t.measured_at == (at_iterate ? MeasuredAt::iterate : MeasuredAt::average));
  }
}

TEST_CASE("single-step horizon logs one point") {
  const auto k = FeasibleSet::unit_ball(2);
  const auto p = make_additive_quadratic(2, vec({0, 0}), 1.0, k);
  for (Algorithm a : all_algorithms()) {
    Trajectory t;
    run(a, p, config(a, 0.1, 1, k), 1, &t);
    REQUIRE(t.points.size() == 1);
    CHECK(t.points.front().t == 1);
  }
  CHECK(log_steps(1, 30) == std::vector<std::size_t>{1});
  const auto steps = log_steps(1000, 30);
  CHECK(steps.front() == 1);
  CHECK(steps.back() == 1000);
}

TEST_CASE("non-finite iterates mark the run diverged") {
  const auto free = FeasibleSet::unconstrained(1.0);
  const auto p = make_additive_quadratic(1, vec({1.0}), 0.0, free);
  auto c = config(Algorithm::sgd, 1e200, 50, free);
  Trajectory t;
  run(Algorithm::sgd, p, c, 1, &t);
  CHECK(t.diverged);
  CHECK(t.last_finite_t < 50);
}

TEST_CASE("early stopping on the estimate norm") {
  const auto k = FeasibleSet::unit_ball(2);
  const auto p = make_additive_quadratic(2, vec({0.3, 0.0}), 0.0, k);
  auto c = config(Algorithm::mu2_sgd, 0.05, 10000, k);
  c.stop_threshold = 1e-3;
  Trajectory t;
  run(Algorithm::mu2_sgd, p, c, 1, &t);
  CHECK(t.stopped_early);
  CHECK(t.points.back().t < 10000);
  CHECK(t.points.back().t == t.last_finite_t);
}

TEST_CASE("fixed learning rate: mu2-sgd degrades gracefully with noise, sgd does not") {
  const auto k = FeasibleSet::unit_ball(3);
  const Point xs = vec({0.5, 0.0, 0.0});
  constexpr std::size_t horizon = 1000;
  constexpr int seeds = 30;
  const auto mean_gap = [&](Algorithm a, double lr, double sigma) {
    const auto p = make_additive_quadratic(3, xs, sigma, k);
    double sum = 0.0;
    for (int s = 0; s < seeds; ++s) {
      Trajectory t;
      run(a, p, config(a, lr, horizon, k), 100 + s, &t);
      sum += *t.points.back().f_gap;
    }
    return sum / seeds;
  };
  const double eta = 1.0 / (8.0 * horizon);
  const double m0 = mean_gap(Algorithm::mu2_sgd, eta, 0.0);
  const double m1 = mean_gap(Algorithm::mu2_sgd, eta, 0.1);
  const double m2 = mean_gap(Algorithm::mu2_sgd, eta, 1.0);
  CHECK(m0 <= m1);
  CHECK(m1 <= m2);
  const double s0 = mean_gap(Algorithm::sgd, 1.0, 0.0);
  const double s1 = mean_gap(Algorithm::sgd, 1.0, 1.0);
  CHECK(s1 >= 10.0 * s0);
}

#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <variant>

#include "geometry.hpp"
#include "rng.hpp"

namespace mu2opt {

/// One draw z from the problem's distribution. The payload depends on the
/// problem: an additive noise vector, a scalar curvature perturbation, or a
/// record index. Tokens are immutable; any number of points may be
/// evaluated against the same token.
using SampleToken = std::variant<Point, double, std::size_t>;

/// Constants of the noise/smoothness assumptions; empty means unknown.
struct DeclaredConstants {
  std::optional<double> smoothness;      // L
  std::optional<double> sigma;           // gradient-noise bound
  std::optional<double> sigma_smooth;    // sigma_L
};

struct Optimum {
  Point point;
  double value = 0.0;
  bool exact = true;  // analytic, or a converged reference solve
};

/// First-order oracle with shared-sample evaluation.
class StochasticProblem {
 public:
  virtual ~StochasticProblem() = default;

  virtual std::string tag() const = 0;
  /// Stable identity string; equal fingerprints mean equal problems.
  virtual std::string fingerprint() const = 0;

  Eigen::Index dimension() const noexcept { return dimension_; }
  const DeclaredConstants& constants() const noexcept { return constants_; }
  const std::optional<Optimum>& optimum() const noexcept { return optimum_; }
  void set_optimum(Optimum opt) { optimum_ = std::move(opt); }

  virtual SampleToken draw_sample(Rng& rng) const = 0;

  /// Number of equally likely tokens when the distribution is a finite
  /// uniform index set; token i is then `std::size_t{i}`.
  virtual std::optional<std::size_t> finite_support() const { return std::nullopt; }

  /// Gradient of f(.; z) at x. Bit-identical for repeated (x, z).
  Point stoch_grad(const Point& x, const SampleToken& z) const;
  /// f(x; z), when the problem defines it.
  std::optional<double> stoch_value(const Point& x, const SampleToken& z) const;

  Point exact_grad(const Point& x) const;
  double exact_value(const Point& x) const;

  /// f(x) - f(w*), or nullopt when the optimum is unknown.
  std::optional<double> gap(const Point& x) const;

 protected:
  StochasticProblem(Eigen::Index dimension, DeclaredConstants constants)
      : dimension_(dimension), constants_(constants) {}

  virtual Point grad_impl(const Point& x, const SampleToken& z) const = 0;
  virtual std::optional<double> value_impl(const Point&, const SampleToken&) const {
    return std::nullopt;
  }
  virtual Point exact_grad_impl(const Point& x) const = 0;
  virtual double exact_value_impl(const Point& x) const = 0;

  Eigen::Index dimension_;
  DeclaredConstants constants_;
  std::optional<Optimum> optimum_;

 private:
  void check_point(const Point& x) const;
};

using ProblemPtr = std::shared_ptr<const StochasticProblem>;

/// f(x; z) = 1/2 ||x - x*||^2 + z.x, z ~ N(0, sigma^2/d I) so E||z||^2 = sigma^2.
/// L = 1, sigma_L = 0. The optimum over K is the projection of x*.
std::shared_ptr<StochasticProblem> make_additive_quadratic(Eigen::Index dimension,
                                                           const Point& x_star, double sigma,
                                                           const FeasibleSet& set);

/// f(x; z) = (1 + zeta)/2 ||x - x*||^2, zeta ~ U[-c, c]. sigma_L^2 = c^2/3,
/// L = 1 + c, sigma^2 = (c^2/3) R^2 with R = max_{x in K} ||x - x*||.
std::shared_ptr<StochasticProblem> make_curvature_quadratic(Eigen::Index dimension,
                                                            const Point& x_star, double c,
                                                            const FeasibleSet& set);

enum class Loss { logistic, squared };

struct Records {
  Eigen::MatrixXd features;  // one row per record
  Eigen::VectorXd labels;
};

/// f(x) = (1/n) sum_i f_i(x); tokens are uniform record indices. For the
/// logistic loss labels must already be in {-1, +1}. The optimum is left
/// unset; the harness fills it from a reference solve.
std::shared_ptr<StochasticProblem> make_finite_sum(Records records, Loss loss);

/// Reads `label,f1,...,fd` CSV. Logistic loss maps labels to {-1,+1} by sign.
Records load_csv_records(const std::filesystem::path& path, Loss loss);
Records parse_csv_records(const std::string& text, Loss loss);

/// Linearly separable two-class data: every record has margin >= `margin`
/// along a hidden unit direction.
Records make_separable_blobs(std::size_t n, Eigen::Index dimension, std::uint64_t seed,
                             double margin = 0.5);

/// Empirical sigma for problems without a declared one: max over a fixed
/// 32-point grid of feasible points of E_z ||grad f(x;z) - grad f(x)||^2,
/// enumerated exactly for finite sums. Returns sigma (not sigma^2).
double estimate_sigma(const StochasticProblem& problem, const FeasibleSet& set,
                      std::uint64_t seed = 0);

/// Fraction of records whose label sign matches sign(a_i . x).
double training_accuracy(const Records& records, const Point& x);

}  // namespace mu2opt

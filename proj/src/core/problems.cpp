#include "problems.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string_view>
#include <vector>

#include "errors.hpp"

namespace mu2opt {

namespace {

std::string vec_text(const Point& v) {
  std::ostringstream os;
  os.precision(17);
  for (Eigen::Index i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
  return os.str();
}

void check_x_star(Eigen::Index dimension, const Point& x_star) {
  if (dimension <= 0) throw ConfigError("problem dimension must be >= 1");
  if (x_star.size() != dimension) {
    throw ConfigError("x_star has dimension " + std::to_string(x_star.size()) +
                      ", expected " + std::to_string(dimension));
  }
  if (!x_star.allFinite()) throw ConfigError("x_star must be finite");
}

void check_set(const FeasibleSet& set, Eigen::Index dimension) {
  if (set.dimension() >= 0 && set.dimension() != dimension) {
    throw ConfigError("feasible set dimension does not match the problem dimension");
  }
}

/// Isotropic quadratics are minimized over K at the projection of x*.
Optimum radial_optimum(const FeasibleSet& set, const Point& x_star) {
  Point p = project(set, x_star);
  const double value = 0.5 * (p - x_star).squaredNorm();
  return Optimum{std::move(p), value, true};
}

class AdditiveQuadratic final : public StochasticProblem {
 public:
  AdditiveQuadratic(Eigen::Index d, Point x_star, double sigma, const FeasibleSet& set)
      : StochasticProblem(d, DeclaredConstants{1.0, sigma, 0.0}),
        x_star_(std::move(x_star)),
        sigma_(sigma),
        scale_(sigma / std::sqrt(static_cast<double>(d))) {
    optimum_ = radial_optimum(set, x_star_);
  }

  std::string tag() const override { return "additive_quadratic"; }
  std::string fingerprint() const override {
    std::ostringstream os;
    os.precision(17);
    os << tag() << "|d=" << dimension_ << "|x*=" << vec_text(x_star_) << "|sigma=" << sigma_;
    return os.str();
  }

  SampleToken draw_sample(Rng& rng) const override {
    Point z(dimension_);
    for (Eigen::Index i = 0; i < dimension_; ++i) z[i] = scale_ * rng.normal();
    return z;
  }

 protected:
  Point grad_impl(const Point& x, const SampleToken& z) const override {
    return (x - x_star_) + std::get<Point>(z);
  }
  std::optional<double> value_impl(const Point& x, const SampleToken& z) const override {
    return 0.5 * (x - x_star_).squaredNorm() + std::get<Point>(z).dot(x);
  }
  Point exact_grad_impl(const Point& x) const override { return x - x_star_; }
  double exact_value_impl(const Point& x) const override { return 0.5 * (x - x_star_).squaredNorm(); }

 private:
  Point x_star_;
  double sigma_;
  double scale_;
};

class CurvatureQuadratic final : public StochasticProblem {
 public:
  CurvatureQuadratic(Eigen::Index d, Point x_star, double c, const FeasibleSet& set)
      : StochasticProblem(d, constants_for(c, set, x_star)), x_star_(std::move(x_star)), c_(c) {
    optimum_ = radial_optimum(set, x_star_);
  }

  std::string tag() const override { return "curvature_quadratic"; }
  std::string fingerprint() const override {
    std::ostringstream os;
    os.precision(17);
    os << tag() << "|d=" << dimension_ << "|x*=" << vec_text(x_star_) << "|c=" << c_;
    return os.str();
  }

  SampleToken draw_sample(Rng& rng) const override { return c_ * rng.uniform(-1.0, 1.0); }

 protected:
  Point grad_impl(const Point& x, const SampleToken& z) const override {
    return (1.0 + std::get<double>(z)) * (x - x_star_);
  }
  std::optional<double> value_impl(const Point& x, const SampleToken& z) const override {
    return (1.0 + std::get<double>(z)) * 0.5 * (x - x_star_).squaredNorm();
  }
  Point exact_grad_impl(const Point& x) const override { return x - x_star_; }
  double exact_value_impl(const Point& x) const override { return 0.5 * (x - x_star_).squaredNorm(); }

 private:
  static DeclaredConstants constants_for(double c, const FeasibleSet& set, const Point& x_star) {
    const double var = c * c / 3.0;
    DeclaredConstants k{1.0 + c, std::nullopt, std::sqrt(var)};
    const double reach = set.max_distance_from(x_star);
    if (std::isfinite(reach)) k.sigma = std::sqrt(var) * reach;
    return k;
  }

  Point x_star_;
  double c_;
};

double softplus(double v) { return std::max(v, 0.0) + std::log1p(std::exp(-std::abs(v))); }

double sigmoid(double v) {
  if (v >= 0) return 1.0 / (1.0 + std::exp(-v));
  const double e = std::exp(v);
  return e / (1.0 + e);
}

class FiniteSum final : public StochasticProblem {
 public:
  FiniteSum(Records records, Loss loss)
      : StochasticProblem(records.features.cols(), constants_for(records, loss)),
        records_(std::move(records)),
        loss_(loss) {}

  std::string tag() const override { return "finite_sum"; }
  std::string fingerprint() const override {
    std::uint64_t h = fnv1a(loss_ == Loss::logistic ? "logistic" : "squared");
    const auto bytes = [&](const double* p, Eigen::Index n) {
      h = fnv1a(std::string_view(reinterpret_cast<const char*>(p), sizeof(double) * n), h);
    };
    bytes(records_.features.data(), records_.features.size());
    bytes(records_.labels.data(), records_.labels.size());
    std::ostringstream os;
    os << tag() << "|n=" << records_.features.rows() << "|d=" << dimension_ << "|h=" << std::hex << h;
    return os.str();
  }

  SampleToken draw_sample(Rng& rng) const override {
    return rng.index(static_cast<std::size_t>(records_.features.rows()));
  }
  std::optional<std::size_t> finite_support() const override {
    return static_cast<std::size_t>(records_.features.rows());
  }

 protected:
  Point grad_impl(const Point& x, const SampleToken& z) const override {
    const auto i = static_cast<Eigen::Index>(std::get<std::size_t>(z));
    return record_grad(i, x);
  }
  std::optional<double> value_impl(const Point& x, const SampleToken& z) const override {
    return record_value(static_cast<Eigen::Index>(std::get<std::size_t>(z)), x);
  }
  Point exact_grad_impl(const Point& x) const override {
    const Eigen::VectorXd margins = records_.features * x;
    Eigen::VectorXd weights(margins.size());
    for (Eigen::Index i = 0; i < margins.size(); ++i) {
      const double y = records_.labels[i];
      weights[i] = loss_ == Loss::logistic ? -y * sigmoid(-y * margins[i]) : margins[i] - y;
    }
    return records_.features.transpose() * weights / static_cast<double>(margins.size());
  }
  double exact_value_impl(const Point& x) const override {
    double total = 0.0;
    for (Eigen::Index i = 0; i < records_.features.rows(); ++i) total += record_value(i, x);
    return total / static_cast<double>(records_.features.rows());
  }

 private:
  static DeclaredConstants constants_for(const Records& r, Loss loss) {
    const double max_sq = r.features.rowwise().squaredNorm().maxCoeff();
    return DeclaredConstants{loss == Loss::logistic ? max_sq / 4.0 : max_sq, std::nullopt,
                             std::nullopt};
  }

  Point record_grad(Eigen::Index i, const Point& x) const {
    const auto a = records_.features.row(i).transpose();
    const double y = records_.labels[i];
    const double m = a.dot(x);
    if (loss_ == Loss::logistic) return (-y * sigmoid(-y * m)) * a;
    return (m - y) * a;
  }

  double record_value(Eigen::Index i, const Point& x) const {
    const double m = records_.features.row(i).dot(x);
    const double y = records_.labels[i];
    if (loss_ == Loss::logistic) return softplus(-y * m);
    return 0.5 * (m - y) * (m - y);
  }

  Records records_;
  Loss loss_;
};

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

}  // namespace

void StochasticProblem::check_point(const Point& x) const {
  if (x.size() != dimension_) {
    throw ConfigError("point has dimension " + std::to_string(x.size()) + ", problem expects " +
                      std::to_string(dimension_));
  }
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i])) {
      throw NumericError("non-finite coordinate " + std::to_string(i) + " in query point", i);
    }
  }
}

Point StochasticProblem::stoch_grad(const Point& x, const SampleToken& z) const {
  check_point(x);
  return grad_impl(x, z);
}

std::optional<double> StochasticProblem::stoch_value(const Point& x, const SampleToken& z) const {
  check_point(x);
  return value_impl(x, z);
}

Point StochasticProblem::exact_grad(const Point& x) const {
  check_point(x);
  return exact_grad_impl(x);
}

double StochasticProblem::exact_value(const Point& x) const {
  check_point(x);
  return exact_value_impl(x);
}

std::optional<double> StochasticProblem::gap(const Point& x) const {
  if (!optimum_) return std::nullopt;
  return exact_value(x) - optimum_->value;
}

std::shared_ptr<StochasticProblem> make_additive_quadratic(Eigen::Index dimension,
                                                           const Point& x_star, double sigma,
                                                           const FeasibleSet& set) {
  check_x_star(dimension, x_star);
  check_set(set, dimension);
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw ConfigError("sigma must be >= 0");
  return std::make_shared<AdditiveQuadratic>(dimension, x_star, sigma, set);
}

std::shared_ptr<StochasticProblem> make_curvature_quadratic(Eigen::Index dimension,
                                                            const Point& x_star, double c,
                                                            const FeasibleSet& set) {
  check_x_star(dimension, x_star);
  check_set(set, dimension);
  if (!(c >= 0.0 && c < 1.0)) throw ConfigError("curvature noise level c must lie in [0, 1)");
  return std::make_shared<CurvatureQuadratic>(dimension, x_star, c, set);
}

std::shared_ptr<StochasticProblem> make_finite_sum(Records records, Loss loss) {
  if (records.features.rows() == 0) throw IngestionError("corpus has no records", 0);
  if (records.features.cols() == 0) throw IngestionError("records have no features", 0);
  if (records.labels.size() != records.features.rows()) {
    throw IngestionError("label count does not match record count", 0);
  }
  for (Eigen::Index i = 0; i < records.features.rows(); ++i) {
    if (!records.features.row(i).allFinite() || !std::isfinite(records.labels[i])) {
      throw IngestionError("non-finite value in record " + std::to_string(i + 1),
                           static_cast<std::size_t>(i + 1));
    }
    if (loss == Loss::logistic && std::abs(records.labels[i]) != 1.0) {
      throw IngestionError("logistic labels must be -1 or +1 (record " + std::to_string(i + 1) + ")",
                           static_cast<std::size_t>(i + 1));
    }
  }
  return std::make_shared<FiniteSum>(std::move(records), loss);
}

Records parse_csv_records(const std::string& text, Loss loss) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw IngestionError("empty corpus: missing header", 1);
  ++line_no;
  const auto header = split(trim(line), ',');
  if (header.size() < 2 || trim(header[0]) != "label") {
    throw IngestionError("header must be label,f1,...,fd", 1);
  }
  for (std::size_t j = 1; j < header.size(); ++j) {
    if (trim(header[j]) != "f" + std::to_string(j)) {
      throw IngestionError("header column " + std::to_string(j + 1) + " must be f" +
                               std::to_string(j),
                           1);
    }
  }
  const std::size_t d = header.size() - 1;
  std::vector<double> values;
  std::vector<double> labels;
  while (std::getline(in, line)) {
    ++line_no;
    const auto body = trim(line);
    if (body.empty()) continue;
    const auto cells = split(body, ',');
    if (cells.size() != d + 1) {
      throw IngestionError("line " + std::to_string(line_no) + " has " +
                               std::to_string(cells.size()) + " fields, expected " +
                               std::to_string(d + 1),
                           line_no);
    }
    for (std::size_t j = 0; j <= d; ++j) {
      const auto cell = trim(cells[j]);
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (ec != std::errc() || ptr != cell.data() + cell.size() || !std::isfinite(v)) {
        throw IngestionError("line " + std::to_string(line_no) + ", column " +
                                 std::to_string(j + 1) + ": not a finite number",
                             line_no);
      }
      if (j == 0) {
        labels.push_back(loss == Loss::logistic ? (v > 0.0 ? 1.0 : -1.0) : v);
      } else {
        values.push_back(v);
      }
    }
  }
  if (labels.empty()) throw IngestionError("empty corpus: no records after header", line_no);
  Records r;
  r.features = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      values.data(), static_cast<Eigen::Index>(labels.size()), static_cast<Eigen::Index>(d));
  r.labels = Eigen::Map<Eigen::VectorXd>(labels.data(), static_cast<Eigen::Index>(labels.size()));
  return r;
}

Records load_csv_records(const std::filesystem::path& path, Loss loss) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open corpus " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_csv_records(buf.str(), loss);
}

Records make_separable_blobs(std::size_t n, Eigen::Index dimension, std::uint64_t seed,
                             double margin) {
  if (n == 0 || dimension <= 0) throw ConfigError("blob size and dimension must be positive");
  Rng rng(seed);
  Point direction(dimension);
  for (Eigen::Index j = 0; j < dimension; ++j) direction[j] = rng.normal();
  direction.normalize();
  Records r;
  r.features.resize(static_cast<Eigen::Index>(n), dimension);
  r.labels.resize(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(n); ++i) {
    const double y = rng.uniform(0.0, 1.0) < 0.5 ? -1.0 : 1.0;
    Point a(dimension);
    for (Eigen::Index j = 0; j < dimension; ++j) a[j] = rng.normal();
    a -= a.dot(direction) * direction;
    a += y * (margin + std::abs(rng.normal())) * direction;
    r.features.row(i) = a.transpose();
    r.labels[i] = y;
  }
  return r;
}

double estimate_sigma(const StochasticProblem& problem, const FeasibleSet& set, std::uint64_t seed) {
  constexpr int kGridPoints = 32;
  constexpr int kMonteCarloDraws = 2000;
  Rng grid_rng(seed ^ 0x5eedULL);
  const double radius = 0.5 * diameter(set);
  const auto d = problem.dimension();
  double worst = 0.0;
  for (int k = 0; k < kGridPoints; ++k) {
    Point x(d);
    for (Eigen::Index j = 0; j < d; ++j) x[j] = grid_rng.normal();
    x *= radius * grid_rng.uniform(0.0, 1.0) / std::max(x.norm(), 1e-300);
    if (const auto* ball = std::get_if<EuclideanBall>(&set.shape())) x += ball->center;
    if (const auto* box = std::get_if<Box>(&set.shape())) x += 0.5 * (box->lower + box->upper);
    x = project(set, x);
    const Point mean = problem.exact_grad(x);
    double var = 0.0;
    if (const auto n = problem.finite_support()) {
      for (std::size_t i = 0; i < *n; ++i) var += (problem.stoch_grad(x, SampleToken{i}) - mean).squaredNorm();
      var /= static_cast<double>(*n);
    } else {
      Rng rng(seed + static_cast<std::uint64_t>(k));
      for (int s = 0; s < kMonteCarloDraws; ++s) {
        var += (problem.stoch_grad(x, problem.draw_sample(rng)) - mean).squaredNorm();
      }
      var /= kMonteCarloDraws;
    }
    worst = std::max(worst, var);
  }
  return std::sqrt(worst);
}

double training_accuracy(const Records& records, const Point& x) {
  const Eigen::VectorXd margins = records.features * x;
  std::size_t hits = 0;
  for (Eigen::Index i = 0; i < margins.size(); ++i) {
    if ((margins[i] > 0.0) == (records.labels[i] > 0.0)) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(margins.size());
}

}  // namespace mu2opt

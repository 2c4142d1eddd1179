#include "report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "errors.hpp"

namespace mu2opt {

using nlohmann::json;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

json real_or_inf(double v) {
  if (std::isnan(v)) return nullptr;
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

json optional_real(const std::optional<double>& v) { return v ? real_or_inf(*v) : json(nullptr); }

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

[[noreturn]] void bad_cell(std::size_t line, std::string_view column, std::string_view cell) {
  throw IngestionError("results csv line " + std::to_string(line) + ": column '" + std::string(column) +
                           "' has invalid value '" + std::string(cell) + "'",
                       line);
}

double parse_real(std::string_view cell, std::size_t line, std::string_view column) {
  if (cell == "inf") return kInf;
  double v = 0.0;
  const auto [p, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec != std::errc() || p != cell.data() + cell.size() || cell.empty()) bad_cell(line, column, cell);
  return v;
}

template <typename Int>
Int parse_int(std::string_view cell, std::size_t line, std::string_view column) {
  Int v = 0;
  const auto [p, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec != std::errc() || p != cell.data() + cell.size() || cell.empty()) bad_cell(line, column, cell);
  return v;
}

/// Linear-interpolation quantile of sorted values; +inf propagates.
double quantile(std::vector<double> v, double q) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  if (frac == 0.0 || lo == hi) return v[lo];
  if (std::isinf(v[hi]) || std::isinf(v[lo])) return kInf;
  return v[lo] + frac * (v[hi] - v[lo]);
}

double mean(const std::vector<double>& v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

void require(const json& j, std::string_view key, bool ok, std::string_view what) {
  if (!ok) throw Error("schema check failed: '" + std::string(key) + "' " + std::string(what));
  (void)j;
}

void require_key(const json& j, const char* key) {
  require(j, key, j.is_object() && j.contains(key), "is missing");
}

bool is_real_like(const json& v) { return v.is_number() || v == "inf" || v == "-inf" || v.is_null(); }

}  // namespace

std::vector<ResultRow> result_rows(const std::vector<RunRecord>& records) {
  std::vector<ResultRow> rows;
  for (const auto& r : records) {
    const std::string algo(to_string(r.algorithm));
    const bool diverged = r.diverged();
    if (r.trajectory.points.empty()) {
      ResultRow row;
      row.algo = algo;
      row.lr = r.lr;
      row.seed = r.seed;
      row.diverged = true;
      rows.push_back(row);
      continue;
    }
    for (const auto& p : r.trajectory.points) {
      rows.push_back(ResultRow{algo, r.lr, r.seed, p.t, p.f_gap, p.eps_sq, p.iterate_norm, p.samples_used,
                               diverged});
    }
  }
  return rows;
}

std::string format_results_csv(const std::vector<ResultRow>& rows) {
  std::string out(kResultsHeader);
  out += '\n';
  for (const auto& r : rows) {
    out += r.algo;
    out += ',' + fmt(r.lr);
    out += ',' + std::to_string(r.seed);
    out += ',' + std::to_string(r.t);
    out += ',' + (r.f_gap ? fmt(*r.f_gap) : std::string());
    out += ',' + (r.eps_sq ? fmt(*r.eps_sq) : std::string());
    out += ',' + fmt(r.iterate_norm);
    out += ',' + std::to_string(r.samples_used);
    out += r.diverged ? ",1\n" : ",0\n";
  }
  return out;
}

std::vector<ResultRow> parse_results_csv(std::string_view text) {
  static const auto columns = split(kResultsHeader);
  std::vector<ResultRow> rows;
  std::size_t line_no = 0;
  std::size_t start = 0;
  bool header_seen = false;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!header_seen) {
      const auto got = split(line);
      for (std::size_t i = 0; i < columns.size(); ++i) {
        if (i >= got.size() || got[i] != columns[i]) {
          throw IngestionError("results csv header mismatch at column '" + std::string(columns[i]) + "'", 1);
        }
      }
      if (got.size() != columns.size()) {
        throw IngestionError("results csv header has unexpected column '" + std::string(got[columns.size()]) + "'", 1);
      }
      header_seen = true;
      continue;
    }
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != columns.size()) {
      throw IngestionError("results csv line " + std::to_string(line_no) + ": expected " +
                               std::to_string(columns.size()) + " cells, got " + std::to_string(cells.size()),
                           line_no);
    }
    ResultRow r;
    r.algo = std::string(cells[0]);
    if (r.algo.empty()) bad_cell(line_no, columns[0], cells[0]);
    r.lr = parse_real(cells[1], line_no, columns[1]);
    r.seed = parse_int<std::int64_t>(cells[2], line_no, columns[2]);
    r.t = parse_int<std::size_t>(cells[3], line_no, columns[3]);
    if (!cells[4].empty()) r.f_gap = parse_real(cells[4], line_no, columns[4]);
    if (!cells[5].empty()) r.eps_sq = parse_real(cells[5], line_no, columns[5]);
    r.iterate_norm = parse_real(cells[6], line_no, columns[6]);
    r.samples_used = parse_int<std::size_t>(cells[7], line_no, columns[7]);
    if (cells[8] == "1") {
      r.diverged = true;
    } else if (cells[8] != "0") {
      bad_cell(line_no, columns[8], cells[8]);
    }
    rows.push_back(std::move(r));
  }
  if (!header_seen) throw IngestionError("results csv is empty", 1);
  return rows;
}

json run_summary(const RunRecord& record, const RunConfiguration& config, const StochasticProblem& problem,
                 std::uint64_t master_seed, const std::vector<std::string>& overrides) {
  const auto& traj = record.trajectory;
  json s;
  s["algo"] = std::string(to_string(record.algorithm));
  s["lr"] = record.lr;
  s["seed"] = record.seed;
  s["master_seed"] = master_seed;
  s["T"] = record.horizon;
  s["final_f_gap"] = real_or_inf(record.final_f_gap());
  s["final_eps_sq"] = traj.points.empty() ? json(nullptr) : optional_real(traj.points.back().eps_sq);
  s["diverged"] = record.diverged();
  s["last_finite_t"] = traj.last_finite_t;
  s["stopped_early"] = traj.stopped_early;
  s["samples_used"] = traj.samples_used;
  s["wall_time_s"] = record.wall_time_s;
  s["measured_at"] = traj.measured_at == MeasuredAt::iterate ? "iterate" : "average";
  json out = json::array();
  for (Eigen::Index i = 0; i < traj.output.size(); ++i) out.push_back(real_or_inf(traj.output[i]));
  s["output"] = out;
  if (record.error) s["error"] = *record.error;

  const auto& k = problem.constants();
  json p;
  p["tag"] = problem.tag();
  p["dimension"] = problem.dimension();
  p["smoothness"] = optional_real(k.smoothness);
  p["sigma"] = optional_real(k.sigma);
  p["sigma_smooth"] = optional_real(k.sigma_smooth);
  p["optimum_value"] = problem.optimum() ? real_or_inf(problem.optimum()->value) : json(nullptr);
  p["optimum_exact"] = problem.optimum() ? json(problem.optimum()->exact) : json(nullptr);
  s["problem"] = p;

  json prov;
  prov["master_seed"] = master_seed;
  prov["overrides"] = overrides;
  prov["config"] = config.document;
  s["provenance"] = prov;
  return s;
}

json analyze_rows(const std::vector<ResultRow>& rows, double factor) {
  if (rows.empty()) throw Error("results csv has no rows");

  struct RunKey {
    std::string algo;
    double lr;
    std::int64_t seed;
    bool operator<(const RunKey& o) const {
      return std::tie(algo, lr, seed) < std::tie(o.algo, o.lr, o.seed);
    }
  };
  struct RunAcc {
    const ResultRow* last = nullptr;
    std::vector<const ResultRow*> rows;
  };
  std::map<RunKey, RunAcc> runs;
  for (const auto& r : rows) {
    auto& acc = runs[RunKey{r.algo, r.lr, r.seed}];
    acc.rows.push_back(&r);
    if (!acc.last || r.t >= acc.last->t) acc.last = &r;
  }

  struct Cell {
    std::vector<double> final_gap;
    std::vector<double> final_eps;
    std::size_t diverged = 0;
    std::vector<const RunAcc*> runs;
  };
  std::map<std::string, std::map<double, Cell>> cells;
  for (const auto& [key, acc] : runs) {
    Cell& c = cells[key.algo][key.lr];
    const ResultRow& last = *acc.last;
    const bool diverged = last.diverged;
    c.final_gap.push_back(diverged || !last.f_gap ? kInf : *last.f_gap);
    if (!diverged && last.eps_sq) c.final_eps.push_back(*last.eps_sq);
    if (diverged) ++c.diverged;
    c.runs.push_back(&acc);
  }

  const auto mean_curve = [](const Cell& c, auto field) {
    std::map<std::size_t, std::pair<double, std::size_t>> by_t;
    for (const auto* run : c.runs) {
      for (const auto* r : run->rows) {
        const std::optional<double> v = field(*r);
        if (!v || r->diverged) continue;
        auto& [sum, n] = by_t[r->t];
        sum += *v;
        ++n;
      }
    }
    std::vector<double> t;
    std::vector<double> y;
    for (const auto& [step, acc] : by_t) {
      t.push_back(static_cast<double>(step));
      y.push_back(acc.first / static_cast<double>(acc.second));
    }
    return std::pair{t, y};
  };

  json out;
  out["factor"] = factor;
  out["runs"] = runs.size();
  out["rows"] = rows.size();
  json per_cell = json::array();
  json stability = json::object();
  json slopes = json::object();
  for (const auto& [algo, by_lr] : cells) {
    std::vector<double> lrs;
    std::vector<double> metric;
    for (const auto& [lr, c] : by_lr) {
      const double m = mean(c.final_gap);
      lrs.push_back(lr);
      metric.push_back(m);
      json e;
      e["algo"] = algo;
      e["lr"] = lr;
      e["seeds"] = c.final_gap.size();
      e["diverged"] = c.diverged;
      e["f_gap_mean"] = real_or_inf(m);
      e["f_gap_max"] = real_or_inf(*std::max_element(c.final_gap.begin(), c.final_gap.end()));
      e["f_gap_q95"] = real_or_inf(quantile(c.final_gap, 0.95));
      e["eps_sq_mean"] = c.final_eps.empty() ? json(nullptr) : real_or_inf(mean(c.final_eps));
      e["eps_sq_q95"] = c.final_eps.empty() ? json(nullptr) : real_or_inf(quantile(c.final_eps, 0.95));
      per_cell.push_back(e);
    }
    const StabilityEntry st = stability_ratio(lrs, metric, factor);
    json s;
    s["defined"] = st.defined;
    s["grid_points"] = st.grid_points;
    s["grid_resolution"] = st.grid_resolution;
    if (st.defined) {
      s["eta_star"] = st.eta_star;
      s["best_metric"] = real_or_inf(st.best_metric);
      s["eta_min"] = st.eta_min;
      s["eta_max"] = st.eta_max;
      s["ratio"] = st.ratio;
      s["lower_bound"] = st.lower_bound;
    }
    stability[algo] = s;

    json sl;
    if (st.defined) {
      const Cell& best = by_lr.at(st.eta_star);
      const auto [te, ye] = mean_curve(best, [](const ResultRow& r) { return r.eps_sq; });
      const auto [tf, yf] = mean_curve(best, [](const ResultRow& r) { return r.f_gap; });
      const auto se = slope_fit(te, ye);
      const auto sf = slope_fit(tf, yf);
      sl["lr"] = st.eta_star;
      sl["eps_sq_vs_t"] = se ? json(*se) : json(nullptr);
      sl["f_gap_vs_t"] = sf ? json(*sf) : json(nullptr);
    } else {
      sl["lr"] = nullptr;
      sl["eps_sq_vs_t"] = nullptr;
      sl["f_gap_vs_t"] = nullptr;
    }
    slopes[algo] = sl;
  }
  out["cells"] = per_cell;
  out["stability"] = stability;
  out["slopes"] = slopes;
  return out;
}

void check_summary_schema(const json& s) {
  for (const char* key : {"algo", "lr", "seed", "master_seed", "T", "final_f_gap", "final_eps_sq", "diverged",
                          "last_finite_t", "stopped_early", "samples_used", "measured_at", "output", "problem",
                          "provenance"}) {
    require_key(s, key);
  }
  require(s, "algo", s["algo"].is_string(), "must be a string");
  require(s, "diverged", s["diverged"].is_boolean(), "must be a boolean");
  require(s, "final_f_gap", is_real_like(s["final_f_gap"]), "must be a number, \"inf\" or null");
  require(s, "output", s["output"].is_array(), "must be an array");
  require_key(s["provenance"], "master_seed");
  require_key(s["provenance"], "overrides");
}

void check_sweep_summary_schema(const json& s) {
  for (const char* key : {"factor", "runs", "rows", "cells", "stability", "slopes"}) require_key(s, key);
  require(s, "cells", s["cells"].is_array(), "must be an array");
  for (const auto& c : s["cells"]) {
    for (const char* key : {"algo", "lr", "seeds", "diverged", "f_gap_mean", "f_gap_max", "f_gap_q95"}) {
      require_key(c, key);
    }
    for (const char* key : {"f_gap_mean", "f_gap_max", "f_gap_q95"}) {
      require(c, key, is_real_like(c[key]), "must be a number, \"inf\" or null");
    }
  }
  require(s, "stability", s["stability"].is_object(), "must be an object");
  for (const auto& [algo, e] : s["stability"].items()) {
    require_key(e, "defined");
    if (e["defined"].get<bool>()) {
      for (const char* key : {"eta_star", "eta_min", "eta_max", "ratio", "lower_bound"}) require_key(e, key);
      require(e, "ratio", e["ratio"].is_number() && e["ratio"].get<double>() >= 1.0, "must be >= 1");
    }
  }
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << content;
    out.flush();
    if (!out) throw IoError("failed writing " + path.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot write " + path.string() + ": " + ec.message());
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void prepare_output_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) {
    throw IoError("cannot create output directory " + dir.string());
  }
  const auto probe = dir / ".mu2opt_write_probe";
  {
    std::ofstream out(probe);
    if (!out) throw IoError("output directory " + dir.string() + " is not writable");
  }
  std::filesystem::remove(probe, ec);
}

std::string dump_json(const json& j) { return j.dump(2) + "\n"; }

}  // namespace mu2opt

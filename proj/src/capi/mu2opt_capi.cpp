#include "mu2opt/mu2opt.h"

#include <cmath>
#include <cstring>
#include <exception>
#include <filesystem>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "config.hpp"
#include "errors.hpp"
#include "harness.hpp"
#include "report.hpp"

struct mu2_config {
  nlohmann::json document;
  std::vector<std::string> overrides;
};

struct mu2_problem {
  mu2opt::ProblemPtr problem;
};

struct mu2_trajectory {
  mu2opt::RunRecord record;
};

namespace {

thread_local std::string last_error;

template <typename F>
mu2_status guarded(F&& body) {
  try {
    last_error.clear();
    return body();
  } catch (const mu2opt::ConfigError& e) {
    last_error = e.what();
    return MU2_ERR_CONFIG;
  } catch (const mu2opt::NumericError& e) {
    last_error = e.what();
    return MU2_ERR_NUMERIC;
  } catch (const mu2opt::IngestionError& e) {
    last_error = e.what();
    return MU2_ERR_INGESTION;
  } catch (const mu2opt::IoError& e) {
    last_error = e.what();
    return MU2_ERR_IO;
  } catch (const mu2opt::DiagnosticUnavailable& e) {
    last_error = e.what();
    return MU2_ERR_DIAGNOSTIC;
  } catch (const std::exception& e) {
    last_error = e.what();
    return MU2_ERR_INTERNAL;
  } catch (...) {
    last_error = "unknown error";
    return MU2_ERR_INTERNAL;
  }
}

mu2_status invalid(const char* what) {
  last_error = what;
  return MU2_ERR_CONFIG;
}

mu2opt::RunConfiguration decoded(const mu2_config* c) { return mu2opt::decode_configuration(c->document); }

std::filesystem::path out_path(const char* dir) { return dir ? std::filesystem::path(dir) : std::filesystem::path("."); }

double nan_if_empty(const std::optional<double>& v) {
  return v ? *v : std::numeric_limits<double>::quiet_NaN();
}

std::string problem_listing() {
  return "additive_quadratic  f(x;z) = 1/2 ||x - x*||^2 + z.x, E||z||^2 = sigma^2  L = 1, sigma = <sigma>, "
         "sigma_L = 0\n"
         "curvature_quadratic f(x;z) = (1 + zeta)/2 ||x - x*||^2, zeta ~ U[-c, c]  L = 1 + c, "
         "sigma_L = c/sqrt(3), sigma = sigma_L * max_K ||x - x*||\n"
         "finite_sum          (1/n) sum_i loss(a_i.x, b_i), loss = logistic | squared  "
         "L = max||a_i||^2/4 (logistic) or max||a_i||^2 (squared), sigma estimated from the data\n";
}

}  // namespace

extern "C" {

const char* mu2_version(void) { return "1.0.0"; }

const char* mu2_status_string(mu2_status status) {
  switch (status) {
    case MU2_OK: return "ok";
    case MU2_ERR_CONFIG: return "configuration error";
    case MU2_ERR_NUMERIC: return "numeric error";
    case MU2_ERR_INGESTION: return "ingestion error";
    case MU2_ERR_IO: return "i/o error";
    case MU2_ERR_DIAGNOSTIC: return "diagnostic unavailable";
    case MU2_ERR_BUFFER: return "buffer too small";
    case MU2_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* mu2_last_error(void) { return last_error.c_str(); }

mu2_status mu2_config_load_file(const char* path, mu2_config** out) {
  if (!path || !out) return invalid("null argument");
  *out = nullptr;
  return guarded([&] {
    auto text = mu2opt::read_text_file(path);
    auto cfg = std::make_unique<mu2_config>();
    cfg->document = mu2opt::parse_toml(text);
    *out = cfg.release();
    return MU2_OK;
  });
}

mu2_status mu2_config_load_string(const char* text, mu2_config** out) {
  if (!text || !out) return invalid("null argument");
  *out = nullptr;
  return guarded([&] {
    auto cfg = std::make_unique<mu2_config>();
    cfg->document = mu2opt::parse_toml(text);
    *out = cfg.release();
    return MU2_OK;
  });
}

mu2_status mu2_config_set(mu2_config* config, const char* assignment) {
  if (!config || !assignment) return invalid("null argument");
  return guarded([&] {
    mu2opt::apply_override(config->document, assignment);
    config->overrides.emplace_back(assignment);
    return MU2_OK;
  });
}

void mu2_config_free(mu2_config* config) { delete config; }

mu2_status mu2_run(const mu2_config* config, const char* out_dir, int* diverged) {
  if (!config) return invalid("null configuration");
  return guarded([&] {
    const auto cfg = decoded(config);
    const auto dir = out_path(out_dir);
    const auto problem = mu2opt::build_problem(cfg.problem, cfg.optimizer.set);
    mu2opt::validate(*problem, cfg.optimizer);
    mu2opt::prepare_output_dir(dir);
    const auto record = mu2opt::run_single(problem, cfg.optimizer, cfg.seed, cfg.master_seed);
    const auto csv = mu2opt::format_results_csv(mu2opt::result_rows({record}));
    mu2opt::parse_results_csv(csv);
    const auto summary = mu2opt::run_summary(record, cfg, *problem, cfg.master_seed, config->overrides);
    mu2opt::check_summary_schema(summary);
    mu2opt::write_text_file(dir / "trajectory.csv", csv);
    mu2opt::write_text_file(dir / "summary.json", mu2opt::dump_json(summary));
    if (diverged) *diverged = record.diverged() ? 1 : 0;
    return MU2_OK;
  });
}

mu2_status mu2_sweep(const mu2_config* config, const char* out_dir, size_t workers) {
  if (!config) return invalid("null configuration");
  return guarded([&] {
    const auto cfg = decoded(config);
    if (!cfg.has_sweep) throw mu2opt::ConfigError("configuration has no [sweep] table");
    const auto dir = out_path(out_dir);
    mu2opt::prepare_output_dir(dir);
    const auto records = mu2opt::sweep(cfg.grid, cfg.master_seed, workers ? workers : cfg.workers);
    const auto rows = mu2opt::result_rows(records);
    const auto csv = mu2opt::format_results_csv(rows);

    nlohmann::json provenance;
    provenance["master_seed"] = cfg.master_seed;
    provenance["factor"] = cfg.stability_factor;
    provenance["overrides"] = config->overrides;
    provenance["config"] = cfg.document;

    auto summary = mu2opt::analyze_rows(mu2opt::parse_results_csv(csv), cfg.stability_factor);
    summary["provenance"] = provenance;
    mu2opt::check_sweep_summary_schema(summary);
    mu2opt::write_text_file(dir / "results.csv", csv);
    mu2opt::write_text_file(dir / "provenance.json", mu2opt::dump_json(provenance));
    mu2opt::write_text_file(dir / "sweep_summary.json", mu2opt::dump_json(summary));
    return MU2_OK;
  });
}

mu2_status mu2_analyze(const char* csv_path, const char* out_dir, double factor) {
  if (!csv_path) return invalid("null csv path");
  return guarded([&] {
    const std::filesystem::path csv(csv_path);
    const auto rows = mu2opt::parse_results_csv(mu2opt::read_text_file(csv));
    nlohmann::json provenance;
    const auto prov_path = csv.parent_path() / "provenance.json";
    if (std::filesystem::exists(prov_path)) {
      try {
        provenance = nlohmann::json::parse(mu2opt::read_text_file(prov_path));
      } catch (const nlohmann::json::exception& e) {
        throw mu2opt::IngestionError(std::string("provenance.json: ") + e.what(), 1);
      }
    }
    if (!(factor > 0.0)) {
      factor = provenance.is_object() && provenance.contains("factor") && provenance["factor"].is_number()
                   ? provenance["factor"].get<double>()
                   : 2.0;
    }
    auto summary = mu2opt::analyze_rows(rows, factor);
    if (!provenance.is_null()) summary["provenance"] = provenance;
    mu2opt::check_sweep_summary_schema(summary);
    const auto dir = out_path(out_dir);
    mu2opt::prepare_output_dir(dir);
    mu2opt::write_text_file(dir / "sweep_summary.json", mu2opt::dump_json(summary));
    return MU2_OK;
  });
}

mu2_status mu2_list_problems(char* buffer, size_t capacity, size_t* needed) {
  const std::string text = problem_listing();
  if (needed) *needed = text.size() + 1;
  if (!buffer || capacity < text.size() + 1) {
    last_error = "buffer too small for the problem listing";
    return MU2_ERR_BUFFER;
  }
  std::memcpy(buffer, text.c_str(), text.size() + 1);
  last_error.clear();
  return MU2_OK;
}

mu2_status mu2_problem_create(const mu2_config* config, mu2_problem** out) {
  if (!config || !out) return invalid("null argument");
  *out = nullptr;
  return guarded([&] {
    const auto cfg = decoded(config);
    auto p = std::make_unique<mu2_problem>();
    p->problem = mu2opt::build_problem(cfg.problem, cfg.optimizer.set);
    *out = p.release();
    return MU2_OK;
  });
}

void mu2_problem_free(mu2_problem* problem) { delete problem; }

int64_t mu2_problem_dimension(const mu2_problem* problem) {
  return problem ? static_cast<int64_t>(problem->problem->dimension()) : -1;
}

mu2_status mu2_problem_exact_grad(const mu2_problem* problem, const double* x, size_t n, double* grad_out) {
  if (!problem || !x || !grad_out) return invalid("null argument");
  return guarded([&] {
    const mu2opt::Point p = Eigen::Map<const Eigen::VectorXd>(x, static_cast<Eigen::Index>(n));
    const auto g = problem->problem->exact_grad(p);
    std::memcpy(grad_out, g.data(), sizeof(double) * n);
    return MU2_OK;
  });
}

mu2_status mu2_problem_exact_value(const mu2_problem* problem, const double* x, size_t n, double* value_out) {
  if (!problem || !x || !value_out) return invalid("null argument");
  return guarded([&] {
    const mu2opt::Point p = Eigen::Map<const Eigen::VectorXd>(x, static_cast<Eigen::Index>(n));
    *value_out = problem->problem->exact_value(p);
    return MU2_OK;
  });
}

mu2_status mu2_optimize(const mu2_config* config, mu2_trajectory** out) {
  if (!config || !out) return invalid("null argument");
  *out = nullptr;
  return guarded([&] {
    const auto cfg = decoded(config);
    const auto problem = mu2opt::build_problem(cfg.problem, cfg.optimizer.set);
    auto t = std::make_unique<mu2_trajectory>();
    t->record = mu2opt::run_single(problem, cfg.optimizer, cfg.seed, cfg.master_seed);
    *out = t.release();
    return MU2_OK;
  });
}

void mu2_trajectory_free(mu2_trajectory* trajectory) { delete trajectory; }

size_t mu2_trajectory_size(const mu2_trajectory* trajectory) {
  return trajectory ? trajectory->record.trajectory.points.size() : 0;
}

mu2_status mu2_trajectory_point(const mu2_trajectory* trajectory, size_t index, mu2_log_point* out) {
  if (!trajectory || !out) return invalid("null argument");
  const auto& pts = trajectory->record.trajectory.points;
  if (index >= pts.size()) return invalid("log point index out of range");
  const auto& p = pts[index];
  *out = mu2_log_point{p.t, nan_if_empty(p.f_gap), nan_if_empty(p.eps_sq), p.iterate_norm, p.samples_used};
  last_error.clear();
  return MU2_OK;
}

int mu2_trajectory_diverged(const mu2_trajectory* trajectory) {
  return trajectory && trajectory->record.diverged() ? 1 : 0;
}

size_t mu2_trajectory_output(const mu2_trajectory* trajectory, double* buffer, size_t capacity) {
  if (!trajectory) return 0;
  const auto& o = trajectory->record.trajectory.output;
  const auto n = static_cast<size_t>(o.size());
  if (buffer && capacity >= n) std::memcpy(buffer, o.data(), sizeof(double) * n);
  return n;
}

}  // extern "C"

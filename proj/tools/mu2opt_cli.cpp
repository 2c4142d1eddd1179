#include <CLI11.hpp>

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "mu2opt/mu2opt.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitDiverged = 3;

int exit_code(mu2_status s) {
  switch (s) {
    case MU2_OK: return kExitOk;
    case MU2_ERR_CONFIG:
    case MU2_ERR_IO: return kExitConfig;
    default: return kExitFailure;
  }
}

int report(mu2_status s, const std::string& context) {
  if (s != MU2_OK) {
    std::cerr << "mu2opt " << context << ": " << mu2_status_string(s) << ": " << mu2_last_error() << "\n";
  }
  return exit_code(s);
}

struct ConfigHandle {
  mu2_config* ptr = nullptr;
  ~ConfigHandle() { mu2_config_free(ptr); }
};

mu2_status load(const std::string& path, const std::vector<std::string>& overrides,
                const std::optional<std::uint64_t>& seed, ConfigHandle& out) {
  if (auto s = mu2_config_load_file(path.c_str(), &out.ptr); s != MU2_OK) return s;
  for (const auto& o : overrides) {
    if (auto s = mu2_config_set(out.ptr, o.c_str()); s != MU2_OK) return s;
  }
  if (seed) {
    const auto assignment = "master_seed=" + std::to_string(*seed);
    if (auto s = mu2_config_set(out.ptr, assignment.c_str()); s != MU2_OK) return s;
  }
  return MU2_OK;
}

std::size_t default_workers() {
  if (const char* env = std::getenv("MU2OPT_WORKERS")) {
    try {
      return static_cast<std::size_t>(std::stoul(env));
    } catch (const std::exception&) {
      std::cerr << "mu2opt: ignoring non-numeric MU2OPT_WORKERS='" << env << "'\n";
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stochastic convex optimization experiments with the mu2 gradient estimator"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = ".";
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::size_t workers = default_workers();
  bool verbose = false;
  std::string csv_path;
  double factor = 0.0;

  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("-c,--config", config_path, "Run configuration file")->required();
    sub->add_option("-o,--out", out_dir, "Output directory");
    sub->add_option("--set", overrides, "Override a configuration key (key=value), repeatable");
    sub->add_option("--seed", seed, "Master seed for every random stream");
    sub->add_flag("-v,--verbose", verbose, "Print a line per completed command");
  };

  auto* run = app.add_subcommand("run", "Execute one configured run");
  add_common(run);
  auto* sweep = app.add_subcommand("sweep", "Execute the configured grid of runs");
  add_common(sweep);
  sweep->add_option("-w,--workers", workers, "Worker threads (default: MU2OPT_WORKERS or the config)");
  auto* analyze = app.add_subcommand("analyze", "Recompute sweep_summary.json from a results CSV");
  analyze->add_option("csv", csv_path, "results.csv written by sweep")->required();
  analyze->add_option("-o,--out", out_dir, "Output directory");
  analyze->add_option("--factor", factor, "Stability factor (default: from provenance.json, else 2)");
  auto* list = app.add_subcommand("list-problems", "Print problem tags and their declared constants");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n\n" << app.help();
    return kExitConfig;
  }

  if (list->parsed()) {
    std::size_t needed = 0;
    mu2_list_problems(nullptr, 0, &needed);
    std::string buf(needed, '\0');
    if (auto s = mu2_list_problems(buf.data(), buf.size(), &needed); s != MU2_OK) return report(s, "list-problems");
    std::cout << buf.c_str();
    return kExitOk;
  }

  if (analyze->parsed()) {
    const auto s = mu2_analyze(csv_path.c_str(), out_dir.c_str(), factor);
    if (s == MU2_OK && verbose) std::cerr << "mu2opt analyze: wrote " << out_dir << "/sweep_summary.json\n";
    return report(s, "analyze");
  }

  ConfigHandle cfg;
  if (auto s = load(config_path, overrides, seed, cfg); s != MU2_OK) {
    const int code = report(s, "config");
    if (code == kExitConfig) std::cerr << (run->parsed() ? run->help() : sweep->help());
    return code;
  }

  if (run->parsed()) {
    int diverged = 0;
    const auto s = mu2_run(cfg.ptr, out_dir.c_str(), &diverged);
    if (s != MU2_OK) return report(s, "run");
    if (verbose) std::cerr << "mu2opt run: wrote " << out_dir << (diverged ? " (diverged)\n" : "\n");
    return diverged ? kExitDiverged : kExitOk;
  }

  const auto s = mu2_sweep(cfg.ptr, out_dir.c_str(), workers);
  if (s == MU2_OK && verbose) std::cerr << "mu2opt sweep: wrote " << out_dir << "\n";
  return report(s, "sweep");
}

#pragma once

#include <cstdint>
#include <filesystem>
#include <json.hpp>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "config.hpp"
#include "harness.hpp"

namespace mu2opt {

inline constexpr std::string_view kResultsHeader =
    "algo,lr,seed,t,f_gap,eps_sq,iterate_norm,samples_used,diverged";

/// One row of a results CSV.
struct ResultRow {
  std::string algo;
  double lr = 0.0;
  std::int64_t seed = 0;
  std::size_t t = 0;
  std::optional<double> f_gap;
  std::optional<double> eps_sq;
  double iterate_norm = 0.0;
  std::size_t samples_used = 0;
  bool diverged = false;
};

/// Rows for the logged steps of every record, in record order. A record with
/// no logged steps (a run that failed before its first step) yields a
/// single t = 0 row marked diverged.
std::vector<ResultRow> result_rows(const std::vector<RunRecord>& records);

std::string format_results_csv(const std::vector<ResultRow>& rows);

/// Strict reader: the header must match exactly; errors name the first
/// offending column or line.
std::vector<ResultRow> parse_results_csv(std::string_view text);

nlohmann::json run_summary(const RunRecord& record, const RunConfiguration& config,
                           const StochasticProblem& problem, std::uint64_t master_seed,
                           const std::vector<std::string>& overrides);

/// Sweep report computed from results rows alone: per-(algo, lr) statistics
/// of the final f_gap, a stability entry per algorithm and decay slopes at
/// each algorithm's best learning rate.
nlohmann::json analyze_rows(const std::vector<ResultRow>& rows, double factor = 2.0);

/// Schema checks run before any file is written; throw Error on violation.
void check_summary_schema(const nlohmann::json& summary);
void check_sweep_summary_schema(const nlohmann::json& summary);

/// Writes through a temporary file and renames; throws IoError.
void write_text_file(const std::filesystem::path& path, const std::string& content);
std::string read_text_file(const std::filesystem::path& path);

/// Creates `dir` if needed and checks that it accepts files; throws IoError.
void prepare_output_dir(const std::filesystem::path& dir);

std::string dump_json(const nlohmann::json& j);

}  // namespace mu2opt

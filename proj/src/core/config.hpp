#pragma once

#include <cstdint>
#include <filesystem>
#include <json.hpp>
#include <string>
#include <string_view>
#include <vector>

#include "harness.hpp"

namespace mu2opt {

/// Parses the TOML subset used by run configurations: comments, [table]
/// and [a.b] headers, dotted keys, strings, numbers, booleans, arrays and
/// inline tables. Throws ConfigError with a line number.
nlohmann::json parse_toml(std::string_view text);

/// Applies one `key=value` override. Dotted keys address nested tables; the
/// value is read as a TOML value, falling back to a bare string.
void apply_override(nlohmann::json& doc, std::string_view assignment);

struct RunConfiguration {
  ProblemSpec problem;
  OptimizerConfig optimizer;
  std::int64_t seed = 0;
  std::uint64_t master_seed = 0;
  std::size_t workers = 1;
  std::string output_dir;
  double stability_factor = 2.0;
  SweepGrid grid;               // filled when a [sweep] table is present
  bool has_sweep = false;
  nlohmann::json document;      // the merged configuration, for provenance
};

/// Decodes a parsed configuration document; throws ConfigError.
RunConfiguration decode_configuration(const nlohmann::json& doc);

RunConfiguration load_configuration(const std::filesystem::path& path,
                                    const std::vector<std::string>& overrides = {});

}  // namespace mu2opt

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "iwatsuka/fields.hpp"
#include "iwatsuka/spectral.hpp"

namespace iwatsuka::pipeline {

enum class Command { bands, current, perturb, invert, extract, selftest };

std::string to_string(Command command);
Command command_from_string(const std::string& name);

/// A validated run configuration. `raw` keeps the parsed document so that the
/// command sections can be read lazily and the config hash is computed on
/// exactly what the user wrote (with the effective seed).
struct RunConfig {
  Command command = Command::bands;
  std::optional<fields::MagneticField> field;
  std::pair<double, double> xi_window{-8.0, 8.0};
  std::size_t xi_count = 161;
  std::size_t grid_n = 2000;
  std::size_t j_max = 3;
  std::uint64_t seed = 0;
  std::string output_path;
  bool lattice = true;
  nlohmann::json raw;

  spectral::WindowOptions window() const;
};

/// Parses and validates. Unknown keys, out-of-range numbers and missing
/// required entries throw InvalidArgument.
RunConfig parse_config(const nlohmann::json& j);
RunConfig parse_config_text(const std::string& text);

struct RunOptions {
  std::string out_dir = ".";
  /// Relative input paths (measurement files) are resolved against this.
  std::string base_dir = ".";
  std::optional<std::uint64_t> seed;
};

struct RunResult {
  int exit_code = 0;
  std::vector<std::string> artifacts;
  /// Human-readable summary, one item per line.
  std::string summary;
};

/// Executes the configured command and writes its artifacts. Throws
/// InvalidArgument or NumericalError; a failing selftest is reported through
/// exit_code = 3 instead.
RunResult run(RunConfig config, const RunOptions& options);

}  // namespace iwatsuka::pipeline

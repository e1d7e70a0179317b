#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "iwatsuka/bands.hpp"
#include "iwatsuka/current.hpp"
#include "iwatsuka/fields.hpp"
#include "iwatsuka/inverse.hpp"
#include "iwatsuka/perturbation.hpp"

namespace iwatsuka::io {

using json = nlohmann::json;

inline constexpr const char* kVersion = "1.0.0";

/// Provenance written into every artifact.
struct Meta {
  std::string version = kVersion;
  std::string config_hash;
  std::uint64_t seed = 0;
};

json meta_to_json(const Meta& meta);
Meta meta_from_json(const json& j);
/// "# iwatsuka <version> config_hash=<hex> seed=<n>"
std::string csv_header_comment(const Meta& meta);
Meta parse_csv_header_comment(const std::string& line);

/// FNV-1a 64 of the canonical (key-sorted, compact) dump, as 16 hex digits.
std::string config_hash(const json& config);

/// Throws InvalidArgument naming the first key of `j` not in `allowed`.
void require_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& context);
/// `j[key]` as a finite double / non-negative integer / string with a contextual error.
double get_number(const json& j, const char* key, const std::string& context);
double get_number_or(const json& j, const char* key, double fallback, const std::string& context);
std::uint64_t get_count(const json& j, const char* key, const std::string& context);
std::uint64_t get_count_or(const json& j, const char* key, std::uint64_t fallback, const std::string& context);
std::vector<double> get_numbers(const json& j, const char* key, const std::string& context);

/// 17 significant digits, '.' decimal separator.
std::string format_double(double value);

json w_to_json(const fields::PerturbationW& w);
fields::PerturbationW w_from_json(const json& j);

/// {kind, b_minus, b_plus, params, allow_gap_inadmissible, perturbation?}
json field_to_json(const fields::MagneticField& field);
fields::MagneticField field_from_json(const json& j);

json chi_to_json(const current::ChiProfile& chi);
current::ChiProfile chi_from_json(const json& j);

json window_to_json(const spectral::WindowOptions& window);
spectral::WindowOptions window_from_json(const json& j);

json xi_grid_to_json(const bands::XiGrid& grid);
bands::XiGrid xi_grid_from_json(const json& j);

/// Columns: xi, lambda_1..lambda_J, vmoment.
std::string bands_csv(const bands::BandTable& table, const Meta& meta);

struct BandsCsv {
  Meta meta;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};
BandsCsv parse_csv(const std::string& text);

struct MeasurementFile {
  Meta meta;
  fields::MagneticField field = fields::MagneticField::constant(1.0);
  bands::XiGrid xi_grid;
  spectral::WindowOptions window;
  std::string route;
  inverse::CurrentData data;
  std::vector<double> error_estimates;
};

json measurements_to_json(const MeasurementFile& file);
MeasurementFile measurements_from_json(const json& j);

json reconstruction_to_json(const inverse::ReconstructionResult& result, const Meta& meta);
inverse::ReconstructionResult reconstruction_from_json(const json& j);
/// Columns: x, a_true, a_recovered (a_true empty when unknown).
std::string reconstruction_csv(const inverse::ReconstructionResult& result, const Meta& meta);

json perturb_report_to_json(const perturbation::PerturbReport& report);
perturbation::PerturbReport perturb_report_from_json(const json& j);

json lambda1_to_json(const inverse::Lambda1Estimate& estimate);

/// LF line endings.
void write_text_file(const std::string& path, const std::string& text);
std::string read_text_file(const std::string& path);

}  // namespace iwatsuka::io

#include "iwatsuka.h"

#include <filesystem>
#include <new>
#include <sstream>
#include <string>

#include "iwatsuka/bands.hpp"
#include "iwatsuka/current.hpp"
#include "iwatsuka/error.hpp"
#include "iwatsuka/fields.hpp"
#include "iwatsuka/parallel.hpp"
#include "iwatsuka/pipeline.hpp"
#include "iwatsuka/selftest.hpp"
#include "iwatsuka/serialize.hpp"

struct iw_field {
  iwatsuka::fields::MagneticField value;
};

struct iw_band_table {
  iwatsuka::bands::BandTable value;
};

namespace {

thread_local std::string last_error;
thread_local std::string last_output;

template <class F>
iw_status guarded(F&& body) {
  last_error.clear();
  try {
    return body();
  } catch (const iwatsuka::InvalidArgument& e) {
    last_error = e.what();
    return IW_INVALID_ARGUMENT;
  } catch (const nlohmann::json::exception& e) {
    last_error = e.what();
    return IW_INVALID_ARGUMENT;
  } catch (const iwatsuka::NumericalError& e) {
    last_error = e.what();
    return IW_NUMERICAL_ERROR;
  } catch (const std::filesystem::filesystem_error& e) {
    last_error = e.what();
    return IW_INVALID_ARGUMENT;
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return IW_INTERNAL_ERROR;
  } catch (const std::exception& e) {
    last_error = e.what();
    return IW_INTERNAL_ERROR;
  } catch (...) {
    last_error = "unknown error";
    return IW_INTERNAL_ERROR;
  }
}

void require(bool condition, const char* message) {
  if (!condition) throw iwatsuka::InvalidArgument(message);
}

iw_status store_field(iwatsuka::fields::MagneticField f, iw_field** out) {
  *out = new iw_field{std::move(f)};
  return IW_OK;
}

}  // namespace

extern "C" {

const char* iw_version(void) { return iwatsuka::io::kVersion; }

const char* iw_last_error(void) { return last_error.c_str(); }

const char* iw_last_output(void) { return last_output.c_str(); }

void iw_set_threads(unsigned threads) { iwatsuka::set_thread_count(threads); }

iw_status iw_field_constant(double b, iw_field** out) {
  return guarded([&] {
    require(out != nullptr, "out must not be NULL");
    return store_field(iwatsuka::fields::MagneticField::constant(b), out);
  });
}

iw_status iw_field_tanh(double b_minus, double b_plus, double scale, iw_field** out) {
  return guarded([&] {
    require(out != nullptr, "out must not be NULL");
    return store_field(iwatsuka::fields::MagneticField::tanh_profile(b_minus, b_plus, scale), out);
  });
}

iw_status iw_field_smoothed_step(double b_minus, double b_plus, double center, double width, iw_field** out) {
  return guarded([&] {
    require(out != nullptr, "out must not be NULL");
    return store_field(iwatsuka::fields::MagneticField::smoothed_step(b_minus, b_plus, center, width), out);
  });
}

iw_status iw_field_from_json(const char* json, iw_field** out) {
  return guarded([&] {
    require(json != nullptr && out != nullptr, "json and out must not be NULL");
    return store_field(iwatsuka::io::field_from_json(nlohmann::json::parse(json)), out);
  });
}

iw_status iw_field_perturb(const iw_field* field, double support_radius, const double* coefficients, size_t count,
                           iw_field** out) {
  return guarded([&] {
    require(field != nullptr && out != nullptr, "field and out must not be NULL");
    require(count == 0 || coefficients != nullptr, "coefficients must not be NULL");
    iwatsuka::fields::PerturbationW w(support_radius, std::vector<double>(coefficients, coefficients + count));
    return store_field(iwatsuka::fields::perturb(field->value, w), out);
  });
}

void iw_field_free(iw_field* field) { delete field; }

iw_status iw_field_eval(const iw_field* field, double x, double* b, double* a) {
  return guarded([&] {
    require(field != nullptr, "field must not be NULL");
    if (b) *b = field->value.eval_b(x);
    if (a) *a = field->value.eval_a(x);
    return IW_OK;
  });
}

iw_status iw_compute_bands(const iw_field* field, double xi_min, double xi_max, size_t count, size_t j_max, size_t n,
                           iw_band_table** out) {
  return guarded([&] {
    require(field != nullptr && out != nullptr, "field and out must not be NULL");
    iwatsuka::bands::BandOptions opts;
    if (n != 0) opts.window.n = n;
    auto table = iwatsuka::bands::compute_bands(field->value, iwatsuka::bands::XiGrid::make(xi_min, xi_max, count),
                                                j_max, opts);
    *out = new iw_band_table{std::move(table)};
    return IW_OK;
  });
}

void iw_band_table_free(iw_band_table* table) { delete table; }

size_t iw_band_table_size(const iw_band_table* table) { return table ? table->value.size() : 0; }

size_t iw_band_table_j_max(const iw_band_table* table) { return table ? table->value.j_max() : 0; }

iw_status iw_band_table_xi(const iw_band_table* table, size_t i, double* xi) {
  return guarded([&] {
    require(table != nullptr && xi != nullptr, "table and xi must not be NULL");
    require(i < table->value.size(), "xi index out of range");
    *xi = table->value.xi_grid().value(i);
    return IW_OK;
  });
}

iw_status iw_band_table_lambda(const iw_band_table* table, size_t i, size_t j, double* lambda) {
  return guarded([&] {
    require(table != nullptr && lambda != nullptr, "table and lambda must not be NULL");
    require(i < table->value.size(), "xi index out of range");
    require(j >= 1 && j <= table->value.j_max(), "band index out of range");
    *lambda = table->value.lambda(i, j);
    return IW_OK;
  });
}

iw_status iw_band_table_vmoment(const iw_band_table* table, size_t i, double* value) {
  return guarded([&] {
    require(table != nullptr && value != nullptr, "table and value must not be NULL");
    require(i < table->value.size(), "xi index out of range");
    *value = table->value.vmoment(i);
    return IW_OK;
  });
}

iw_status iw_theta(const iw_band_table* table, double center, double width, const char* route, double* theta) {
  return guarded([&] {
    require(table != nullptr && theta != nullptr, "table and theta must not be NULL");
    iwatsuka::current::ChiProfile chi;
    chi.center = center;
    chi.width = width;
    chi.validate();
    const auto r = route ? iwatsuka::current::route_from_string(route) : iwatsuka::current::Route::fiber_quadrature;
    *theta = iwatsuka::current::theta(table->value, chi, r).theta;
    return IW_OK;
  });
}

iw_status iw_run_config(const char* config_json, const char* base_dir, const char* out_dir, const uint64_t* seed) {
  last_output.clear();
  return guarded([&] {
    require(config_json != nullptr, "config must not be NULL");
    iwatsuka::pipeline::RunOptions options;
    if (base_dir) options.base_dir = base_dir;
    if (out_dir) options.out_dir = out_dir;
    if (seed) options.seed = *seed;
    const auto result = iwatsuka::pipeline::run(iwatsuka::pipeline::parse_config_text(config_json), options);
    std::ostringstream os;
    os << result.summary;
    for (const auto& a : result.artifacts) os << "wrote " << a << "\n";
    last_output = os.str();
    if (result.exit_code == IW_SELFTEST_FAILED) last_error = "selftest reported failures";
    return static_cast<iw_status>(result.exit_code);
  });
}

iw_status iw_run_config_file(const char* path, const char* out_dir, const uint64_t* seed) {
  last_output.clear();
  std::string text;
  std::string base;
  const auto status = guarded([&] {
    require(path != nullptr, "path must not be NULL");
    text = iwatsuka::io::read_text_file(path);
    base = std::filesystem::path(path).parent_path().string();
    if (base.empty()) base = ".";
    return IW_OK;
  });
  if (status != IW_OK) return status;
  return iw_run_config(text.c_str(), base.c_str(), out_dir, seed);
}

iw_status iw_selftest(size_t* passed, size_t* failed) {
  last_output.clear();
  return guarded([&] {
    const auto report = iwatsuka::selftest::run();
    std::ostringstream os;
    for (const auto& c : report.checks) os << (c.passed ? "PASS " : "FAIL ") << c.name << ": " << c.detail << "\n";
    last_output = os.str();
    if (passed) *passed = report.passed();
    if (failed) *failed = report.failed();
    if (report.failed() != 0) {
      last_error = "selftest reported failures";
      return IW_SELFTEST_FAILED;
    }
    return IW_OK;
  });
}

}  // extern "C"

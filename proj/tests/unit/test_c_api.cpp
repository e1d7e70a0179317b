#include "doctest.h"

#include <cmath>
#include <cstring>
#include <filesystem>
#include <string>

#include "iwatsuka.h"

TEST_CASE("version and error reporting") {
  CHECK(std::strcmp(iw_version(), "1.0.0") == 0);
  iw_field* f = nullptr;
  CHECK(iw_field_tanh(2.0, 1.0, 1.0, &f) == IW_INVALID_ARGUMENT);
  CHECK(f == nullptr);
  CHECK(std::strlen(iw_last_error()) > 0);
  CHECK(iw_field_constant(1.0, &f) == IW_OK);
  CHECK(std::strlen(iw_last_error()) == 0);
  CHECK(iw_field_constant(1.0, nullptr) == IW_INVALID_ARGUMENT);
  iw_field_free(f);
  iw_field_free(nullptr);
}

TEST_CASE("band table through opaque handles") {
  iw_field* f = nullptr;
  REQUIRE(iw_field_constant(2.0, &f) == IW_OK);
  double b = 0.0, a = 0.0;
  CHECK(iw_field_eval(f, 0.5, &b, &a) == IW_OK);
  CHECK(b == 2.0);
  CHECK(a == doctest::Approx(1.0));
  iw_band_table* t = nullptr;
  REQUIRE(iw_compute_bands(f, -2.0, 2.0, 9, 3, 0, &t) == IW_OK);
  CHECK(iw_band_table_size(t) == 9);
  CHECK(iw_band_table_j_max(t) == 3);
  for (size_t j = 1; j <= 3; ++j) {
    double lambda = 0.0;
    CHECK(iw_band_table_lambda(t, 4, j, &lambda) == IW_OK);
    CHECK(lambda == doctest::Approx((2.0 * j - 1.0) * 2.0).epsilon(1e-4));
  }
  double lambda = 0.0;
  CHECK(iw_band_table_lambda(t, 4, 4, &lambda) == IW_INVALID_ARGUMENT);
  CHECK(iw_band_table_lambda(t, 9, 1, &lambda) == IW_INVALID_ARGUMENT);
  double xi = 0.0;
  CHECK(iw_band_table_xi(t, 6, &xi) == IW_OK);
  CHECK(xi == doctest::Approx(1.0));
  double theta = 1.0;
  CHECK(iw_theta(t, 0.0, 1.0, "fiber_quadrature", &theta) == IW_OK);
  CHECK(std::abs(theta) < 1e-9);
  CHECK(iw_theta(t, 0.0, 1.0, "diagonal", &theta) == IW_INVALID_ARGUMENT);
  iw_band_table_free(t);
  iw_field_free(f);
}

TEST_CASE("perturbed field and JSON fields") {
  iw_field* base = nullptr;
  REQUIRE(iw_field_from_json(R"({"kind":"smoothed_step","b_minus":1,"b_plus":2,"params":{"center":0,"width":1}})",
                             &base) == IW_OK);
  const double c[] = {0.05};
  iw_field* pert = nullptr;
  REQUIRE(iw_field_perturb(base, 0.2, c, 1, &pert) == IW_OK);
  double a0 = 0.0, a1 = 0.0;
  iw_field_eval(base, 0.0, nullptr, &a0);
  iw_field_eval(pert, 0.0, nullptr, &a1);
  CHECK(a1 - a0 == doctest::Approx(0.05));
  const double steep[] = {0.5};
  iw_field* bad = nullptr;
  CHECK(iw_field_perturb(base, 0.2, steep, 1, &bad) == IW_INVALID_ARGUMENT);
  CHECK(iw_field_from_json("{", &bad) == IW_INVALID_ARGUMENT);
  iw_field_free(pert);
  iw_field_free(base);
}

TEST_CASE("run configs map failures to status codes") {
  const auto out = (std::filesystem::temp_directory_path() / "iwatsuka_capi").string();
  CHECK(iw_run_config(R"({"command":"bands"})", nullptr, out.c_str(), nullptr) == IW_INVALID_ARGUMENT);
  CHECK(std::string(iw_last_error()).find("field") != std::string::npos);
  CHECK(iw_run_config(R"({"command":"perturb",
    "field":{"kind":"smoothed_step","b_minus":1,"b_plus":2,"params":{"center":0,"width":1}},
    "perturb":{"w":{"support_radius":0.2,"coefficients":[0.05]},"xi":[0.5],"epsilons":[1.5]}})",
                      nullptr, out.c_str(), nullptr) == IW_NUMERICAL_ERROR);
  const std::uint64_t seed = 9;
  CHECK(iw_run_config(R"({"command":"bands","field":{"kind":"constant","b_minus":1,"b_plus":1},"xi_count":5})",
                      nullptr, out.c_str(), &seed) == IW_OK);
  CHECK(std::string(iw_last_output()).find("bands.csv") != std::string::npos);
  CHECK(iw_run_config_file("/nonexistent/config.json", out.c_str(), nullptr) == IW_INVALID_ARGUMENT);
}

TEST_CASE("selftest through the C API") {
  iw_set_threads(2);
  size_t passed = 0, failed = 1;
  CHECK(iw_selftest(&passed, &failed) == IW_OK);
  CHECK(failed == 0);
  CHECK(passed > 10);
  iw_set_threads(0);
}

#include "doctest.h"

#include <cmath>
#include <limits>

#include "iwatsuka/error.hpp"
#include "iwatsuka/serialize.hpp"

using namespace iwatsuka;
using fields::MagneticField;
using json = io::json;

TEST_CASE("every field kind round-trips through its JSON form") {
  const std::vector<MagneticField> all{
      MagneticField::constant(1.3),
      MagneticField::tanh_profile(1.0, 2.0, 0.4),
      MagneticField::smoothed_step(1.0, 2.5, 0.2, 0.9),
      MagneticField::piecewise_linear({{-1.0, 1.0}, {0.0, 1.5}, {0.0, 1.7}, {1.0, 2.0}}),
      fields::perturb(MagneticField::smoothed_step(1.0, 2.0), fields::PerturbationW(0.2, {0.01, 0.02, 0.01})),
  };
  for (const auto& f : all) {
    const auto j = io::field_to_json(f);
    const auto g = io::field_from_json(j);
    CHECK(io::field_to_json(g) == j);
    for (double x : {-2.0, -0.1, 0.0, 0.15, 3.0}) {
      CHECK(g.eval_a(x) == f.eval_a(x));
      CHECK(g.eval_b(x) == f.eval_b(x));
    }
  }
}

TEST_CASE("field parsing is strict") {
  CHECK_THROWS_AS(io::field_from_json(json::parse(R"({"kind":"constant","b_minus":1,"b_plus":1,"colour":2})")),
                  InvalidArgument);
  CHECK_THROWS_AS(io::field_from_json(json::parse(R"({"kind":"spiral","b_minus":1,"b_plus":1})")), InvalidArgument);
  CHECK_THROWS_AS(io::field_from_json(json::parse(R"({"kind":"tanh","b_minus":"one","b_plus":2})")), InvalidArgument);
  CHECK_THROWS_AS(io::field_from_json(json::parse(R"({"kind":"tanh","b_minus":1,"b_plus":2,"params":{"width":1}})")),
                  InvalidArgument);
}

TEST_CASE("doubles print with 17 significant digits and parse back exactly") {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0}) {
    const auto s = io::format_double(v);
    CHECK(std::stod(s) == v);
    CHECK(s.find(',') == std::string::npos);
  }
}

TEST_CASE("config hash ignores key order and tracks values") {
  const auto a = json::parse(R"({"x":1,"y":[1,2],"z":{"p":0.5}})");
  const auto b = json::parse(R"({"z":{"p":0.5},"y":[1,2],"x":1})");
  const auto c = json::parse(R"({"z":{"p":0.25},"y":[1,2],"x":1})");
  CHECK(io::config_hash(a) == io::config_hash(b));
  CHECK(io::config_hash(a) != io::config_hash(c));
  CHECK(io::config_hash(a).size() == 16);
}

TEST_CASE("band CSV round-trips with its provenance header") {
  const auto t = bands::compute_bands(MagneticField::tanh_profile(1.0, 2.0), bands::XiGrid::make(-1.0, 1.0, 5), 2);
  io::Meta meta{io::kVersion, "0123456789abcdef", 42};
  const auto text = io::bands_csv(t, meta);
  CHECK(text.find('\r') == std::string::npos);
  const auto parsed = io::parse_csv(text);
  CHECK(parsed.meta.config_hash == meta.config_hash);
  CHECK(parsed.meta.seed == 42);
  CHECK(parsed.columns == std::vector<std::string>{"xi", "lambda_1", "lambda_2", "vmoment"});
  REQUIRE(parsed.rows.size() == 5);
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(parsed.rows[i][1] == t.lambda(i, 1));
    CHECK(parsed.rows[i][3] == t.vmoment(i));
  }
}

TEST_CASE("measurement files round-trip") {
  io::MeasurementFile f;
  f.meta = {io::kVersion, "feedfacecafebeef", 7};
  f.field = fields::perturb(MagneticField::smoothed_step(1.0, 2.0), fields::PerturbationW::single_hat(0.2, 0.05));
  f.xi_grid = bands::XiGrid::make(-2.0, 2.0, 161);
  f.window.lattice = true;
  f.window.n = 1500;
  f.route = "fiber_quadrature";
  current::ChiProfile chi;
  chi.center = 0.3;
  chi.width = 0.5;
  f.data.records.push_back({chi, 0.0123, 1e-4});
  f.error_estimates.push_back(1e-12);
  const auto j = io::measurements_to_json(f);
  const auto g = io::measurements_from_json(j);
  CHECK(io::measurements_to_json(g) == j);
  CHECK(g.window.lattice);
  CHECK(g.window.n == 1500);
  auto bad = j;
  bad["extra"] = 1;
  CHECK_THROWS_AS(io::measurements_from_json(bad), InvalidArgument);
}

TEST_CASE("reconstruction and perturbation reports round-trip") {
  inverse::ReconstructionResult r;
  r.x = {-0.1, 0.0, 0.1};
  r.a_recovered = {-0.1, 0.0, 0.11};
  r.a_true = {-0.1, 0.0, 0.1};
  r.misfit_history = {1.0, 0.5};
  r.linf_error = 0.01;
  r.coefficients = {0.05};
  r.iterations = 2;
  r.gradient_norm = 1e-12;
  r.status = inverse::FitStatus::converged;
  const io::Meta meta{io::kVersion, "0000000000000001", 3};
  const auto j = io::reconstruction_to_json(r, meta);
  CHECK(io::reconstruction_to_json(io::reconstruction_from_json(j), meta) == j);
  const auto csv = io::parse_csv(io::reconstruction_csv(r, meta));
  CHECK(csv.columns == std::vector<std::string>{"x", "a_true", "a_recovered"});
  CHECK(csv.rows[2][2] == 0.11);

  perturbation::PerturbReport p;
  p.xi = 0.5;
  p.epsilons = {1e-3};
  p.lambda_eps1 = {1.2};
  p.F_values = {1e-4};
  p.F_inner = {1e-4};
  p.A2_fit = std::numeric_limits<double>::quiet_NaN();
  p.kappa = 0.75;
  p.window = std::make_pair(-0.1, 0.1);
  const auto pj = io::perturb_report_to_json(p);
  CHECK(pj["A2_fit"].is_null());
  const auto back = io::perturb_report_from_json(pj);
  CHECK(std::isnan(back.A2_fit));
  CHECK(io::perturb_report_to_json(back) == pj);
}

#include "iwatsuka/selftest.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>

#include "iwatsuka/bands.hpp"
#include "iwatsuka/current.hpp"
#include "iwatsuka/inverse.hpp"
#include "iwatsuka/parallel.hpp"
#include "iwatsuka/perturbation.hpp"
#include "iwatsuka/serialize.hpp"
#include "iwatsuka/spectral.hpp"

namespace iwatsuka::selftest {

std::size_t Report::passed() const {
  return static_cast<std::size_t>(std::count_if(checks.begin(), checks.end(), [](const Check& c) { return c.passed; }));
}

std::size_t Report::failed() const { return checks.size() - passed(); }

namespace {

struct Outcome {
  double value;
  double tolerance;
};

std::string describe(const Outcome& o) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "%.3e (tolerance %.1e)", o.value, o.tolerance);
  return buf;
}

void add(Report& r, const std::string& name, const std::function<Outcome()>& body) {
  Check c;
  c.name = name;
  try {
    const auto o = body();
    c.passed = std::isfinite(o.value) && o.value <= o.tolerance;
    c.detail = describe(o);
  } catch (const std::exception& e) {
    c.detail = std::string("exception: ") + e.what();
  }
  r.checks.push_back(std::move(c));
}

}  // namespace

Report run() {
  Report report;
  const auto step = fields::MagneticField::smoothed_step(1.0, 2.0);
  const auto tanh = fields::MagneticField::tanh_profile(1.0, 2.0);

  add(report, "landau_levels", [] {
    double worst = 0.0;
    for (double b : {0.5, 2.0}) {
      const auto fiber = spectral::solve_fiber(fields::MagneticField::constant(b), 0.7, 3);
      for (std::size_t j = 0; j < 3; ++j) {
        const double exact = (2.0 * static_cast<double>(j) + 1.0) * b;
        worst = std::max(worst, std::abs(fiber.pairs[j].lambda - exact) / exact);
      }
    }
    return Outcome{worst, 1e-4};
  });

  const auto table = bands::compute_bands(step, bands::XiGrid::make(-4.0, 4.0, 81), 3);

  add(report, "band_bounds", [&] { return Outcome{bands::band_bound_violation(table), 2e-3}; });

  add(report, "feynman_hellmann", [&] {
    const auto fd = bands::band_derivative_fd(table, 1);
    double worst = 0.0;
    for (std::size_t i = 1; i + 1 < table.size(); ++i) worst = std::max(worst, std::abs(fd[i] - table.vmoment(i)));
    const double dx = table.xi_grid().spacing();
    return Outcome{worst, std::max(1e-5, 5.0 * dx * dx)};
  });

  add(report, "current_routes", [&] {
    double worst = 0.0;
    for (double centre : {-1.5, 0.0, 0.8}) {
      current::ChiProfile chi;
      chi.center = centre;
      chi.width = 1.2;
      const double a = current::theta_fiber(table, chi).theta;
      for (auto route : {current::Route::band_derivative, current::Route::by_parts, current::Route::evolution}) {
        worst = std::max(worst, std::abs(current::theta(table, chi, route).theta - a) / (1.0 + std::abs(a)));
      }
    }
    const double dx = table.xi_grid().spacing();
    return Outcome{worst, std::max(1e-4, 10.0 * dx * dx)};
  });

  add(report, "current_time_independence", [&] {
    current::ChiProfile chi;
    chi.width = 1.5;
    const auto v = current::evolve_velocity(table, chi, {0.0, 0.5, 1.0, 5.0});
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    return Outcome{*hi - *lo, 1e-12};
  });

  add(report, "contour_projection", [&] {
    const auto fiber = spectral::solve_fiber(step, 0.3, 2);
    const auto spec = perturbation::ContourSpec::default_for(step);
    std::mt19937_64 rng(7);
    std::normal_distribution<double> normal;
    std::vector<double> f(fiber.op.size());
    for (auto& x : f) x = normal(rng);
    const auto pc = perturbation::project_contour(fiber.op, fiber.pairs[0].lambda, spec, f);
    const auto pd = perturbation::project_direct(fiber.op, fiber.pairs[0].phi, f);
    double worst = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) worst = std::max(worst, std::abs(pc[i] - pd[i]));
    return Outcome{worst, 1e-8};
  });

  const auto hat = fields::PerturbationW::single_hat(0.2, 0.05);

  add(report, "perturbation_eigenvalue_bound", [&] {
    const perturbation::Problem p(step, hat, 0.0, perturbation::ContourSpec::default_for(step));
    double worst = -1.0;
    for (double e : {1e-3, 1e-2, 1e-1}) {
      if (!(e < p.eps_star())) continue;
      worst = std::max(worst, std::abs(p.lambda1() - p.lambda_eps1(e)) - e * p.C());
    }
    return Outcome{worst, 0.0};
  });

  add(report, "second_order_coefficient_forms", [&] {
    const perturbation::Problem p(step, hat, 0.0, perturbation::ContourSpec::default_for(step));
    const double sum = p.A2_sum(p.op().size()).value;
    return Outcome{std::abs(sum - p.A2_contour()) / std::abs(sum), 1e-6};
  });

  add(report, "extract_round_trip", [&] {
    std::vector<double> x;
    for (int i = -200; i <= 200; ++i) x.push_back(0.025 * i);
    const double xi0 = 0.3;
    const auto r = inverse::extract_a_from_band_data(inverse::sample_q(tanh, xi0, x), inverse::sample_q(tanh, -xi0, x), xi0);
    double worst = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) worst = std::max(worst, std::abs(r.a.y[i] - tanh.eval_a(x[i])));
    return Outcome{worst, 1e-8};
  });

  add(report, "lambda1_recovery_constant_field", [] {
    const auto field = fields::MagneticField::constant(1.0);
    const auto grid = bands::XiGrid::make(-2.4, 2.4, 97);
    const auto t = bands::compute_bands(field, grid, 1);
    const auto data = inverse::synthesize(t, inverse::bump_family(-2.0, 2.0, 0.2, 0.2));
    const auto est = inverse::recover_lambda1(data, 1.0, 1.0);
    double worst = 0.0;
    for (double l : est.lambda1) worst = std::max(worst, std::abs(l - 1.0));
    return Outcome{worst, 2e-3};
  });

  add(report, "lemma1_identical_fields", [&] {
    const auto r = inverse::lemma1_residual(step, step, 0.5, 12);
    return Outcome{r.residual + (r.q_equal && r.phi_equal ? 0.0 : 1.0), 1e-10};
  });

  add(report, "fit_jacobian", [&] {
    const auto grid = bands::XiGrid::make(-1.2, 1.2, 97);
    const auto truth = bands::compute_bands(fields::perturb(step, hat), grid, 1);
    const auto data = inverse::synthesize(truth, inverse::bump_family(-0.8, 0.8, 0.4, 0.4));
    const fields::PerturbationW w(0.2, {0.01, 0.03, -0.02});
    const auto ev = inverse::evaluate_model(step, w, data, grid, {});
    const double h = 1e-4;
    double worst = 0.0;
    for (std::size_t k = 0; k < w.basis_size(); ++k) {
      auto cp = w.coefficients(), cm = cp;
      cp[k] += h;
      cm[k] -= h;
      const auto ep = inverse::evaluate_model(step, fields::PerturbationW(0.2, cp), data, grid, {});
      const auto em = inverse::evaluate_model(step, fields::PerturbationW(0.2, cm), data, grid, {});
      for (std::size_t i = 0; i < ev.theta.size(); ++i) {
        worst = std::max(worst, std::abs((ep.theta[i] - em.theta[i]) / (2.0 * h) - ev.jacobian[i][k]));
      }
    }
    return Outcome{worst, std::max(1e-6, 5.0 * h * h)};
  });

  add(report, "thread_count_independence", [&] {
    const auto grid = bands::XiGrid::make(-2.0, 2.0, 9);
    const unsigned before = thread_count();
    set_thread_count(1);
    const auto one = io::bands_csv(bands::compute_bands(tanh, grid, 2), {});
    set_thread_count(3);
    const auto three = io::bands_csv(bands::compute_bands(tanh, grid, 2), {});
    set_thread_count(before);
    return Outcome{one == three ? 0.0 : 1.0, 0.0};
  });

  add(report, "field_schema_round_trip", [&] {
    const auto f = fields::perturb(tanh, hat);
    const auto j = io::field_to_json(f);
    return Outcome{io::field_to_json(io::field_from_json(j)) == j ? 0.0 : 1.0, 0.0};
  });

  return report;
}

}  // namespace iwatsuka::selftest

// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "iwatsuka/bands.hpp"
#include "iwatsuka/current.hpp"
#include "iwatsuka/inverse.hpp"
#include "iwatsuka/parallel.hpp"
#include "iwatsuka/perturbation.hpp"
#include "iwatsuka/pipeline.hpp"
#include "iwatsuka/serialize.hpp"
#include "iwatsuka/spectral.hpp"

using namespace iwatsuka;
using fields::MagneticField;
using fields::PerturbationW;

namespace {

struct Outcome {
  double value = 0.0;
  double tolerance = 0.0;
  std::string note;
};

int failures = 0;

void criterion(int id, const char* name, const std::function<Outcome()>& body) {
  const auto start = std::chrono::steady_clock::now();
  bool ok = false;
  std::string detail;
  try {
    const auto o = body();
    ok = std::isfinite(o.value) && o.value <= o.tolerance;
    char buf[160];
    std::snprintf(buf, sizeof buf, "value=%.3e tol=%.3e", o.value, o.tolerance);
    detail = buf;
    if (!o.note.empty()) detail += " " + o.note;
  } catch (const std::exception& e) {
    detail = std::string("exception: ") + e.what();
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::printf("%s %2d %s: %s (%.1fs)\n", ok ? "PASS" : "FAIL", id, name, detail.c_str(), secs);
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(const char* f, double a, double b = 0.0) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

spectral::WindowOptions lattice() {
  spectral::WindowOptions w;
  w.lattice = true;
  return w;
}

std::size_t node(const bands::XiGrid& g, double xi) {
  return static_cast<std::size_t>(std::llround((xi - g.xi_min) / g.spacing()));
}

}  // namespace

int main() {
  const auto step = MagneticField::smoothed_step(1.0, 2.0);
  const auto tanh = MagneticField::tanh_profile(1.0, 2.0);
  const auto desk = bands::XiGrid::make(-8.0, 8.0, 161);

  criterion(1, "landau_levels", [] {
    double worst = 0.0;
    for (double b : {0.5, 1.0, 2.0}) {
      for (double xi : {-3.0, 0.0, 1.7}) {
        const auto fiber = spectral::solve_fiber(MagneticField::constant(b), xi, 3);
        for (std::size_t j = 0; j < 3; ++j) {
          const double exact = (2.0 * static_cast<double>(j) + 1.0) * b;
          worst = std::max(worst, std::abs(fiber.pairs[j].lambda - exact) / exact);
        }
      }
    }
    return Outcome{worst, 1e-4, ""};
  });

  std::vector<bands::BandTable> tables;
  criterion(2, "band_bounds", [&] {
    for (const auto* f : {&tanh, &step}) tables.push_back(bands::compute_bands(*f, desk, 6));
    double worst = -1e300;
    for (const auto& t : tables) worst = std::max(worst, bands::band_bound_violation(t));
    // band_bound_violation is <= 0 when every lambda_j sits in its interval.
    return Outcome{worst, 2e-3, "j_max=6"};
  });

  criterion(3, "feynman_hellmann", [&] {
    if (tables.size() != 2) throw std::runtime_error("band tables unavailable");
    double worst = 0.0;
    for (const auto& t : tables) {
      const auto fd = bands::band_derivative_fd(t, 1);
      for (std::size_t i = 1; i + 1 < t.size(); ++i) worst = std::max(worst, std::abs(fd[i] - t.vmoment(i)));
    }
    const double d = desk.spacing();
    return Outcome{worst, std::max(1e-5, 5.0 * d * d), ""};
  });

  criterion(4, "current_routes", [&] {
    if (tables.size() != 2) throw std::runtime_error("band tables unavailable");
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> centre(-4.0, 4.0), width(0.6, 3.0), unit(0.0, 1.0);
    const double d = desk.spacing();
    const double route_tol = std::max(1e-4, 10.0 * d * d);
    double worst_route = 0.0;
    double worst_spread = 0.0;
    for (int k = 0; k < 20; ++k) {
      const auto& t = tables[static_cast<std::size_t>(k % 2)];
      current::ChiProfile chi;
      chi.center = centre(rng);
      chi.width = width(rng);
      chi.amplitude = 0.5 + unit(rng);
      if (k % 3 == 2) {
        chi.kind = current::ChiKind::raised_cosine;
        chi.plateau = 0.5 * chi.width * unit(rng);
      }
      std::vector<double> th;
      for (auto route : {current::Route::fiber_quadrature, current::Route::band_derivative, current::Route::by_parts})
        th.push_back(current::theta(t, chi, route).theta);
      const auto v = current::evolve_velocity(t, chi, {0.0, 0.5, 1.0, 5.0});
      th.push_back(v[0]);
      for (std::size_t a = 0; a < th.size(); ++a)
        for (std::size_t b = a + 1; b < th.size(); ++b)
          worst_route = std::max(worst_route, std::abs(th[a] - th[b]) / (route_tol * (1.0 + std::abs(th[a]))));
      const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
      worst_spread = std::max(worst_spread, *hi - *lo);
    }
    // Both parts scaled to their own tolerance; value <= 1 means both hold.
    return Outcome{std::max(worst_route, worst_spread / 1e-12), 1.0,
                   fmt("(route ratio %.3e, time spread %.3e)", worst_route, worst_spread)};
  });

  criterion(5, "total_rise_current", [&] {
    if (tables.empty()) throw std::runtime_error("band tables unavailable");
    current::ChiProfile chi;
    chi.kind = current::ChiKind::raised_cosine;
    chi.width = 7.5;
    chi.plateau = 6.5;
    const double theta = current::theta_fiber(tables[0], chi).theta;
    return Outcome{std::abs(theta - 1.0), 5e-2, fmt("(theta=%.6f)", theta)};
  });

  criterion(6, "contour_projection", [&] {
    const auto spec = perturbation::ContourSpec::default_for(step);
    std::mt19937_64 rng(6);
    std::normal_distribution<double> normal;
    double worst = 0.0;
    for (double xi : {-1.0, 0.3}) {
      const auto fiber = spectral::solve_fiber(step, xi, 2);
      const auto& phi1 = fiber.pairs[0].phi;
      for (int k = 0; k < 5; ++k) {
        std::vector<double> f(fiber.op.size());
        for (auto& x : f) x = normal(rng);
        const auto pc = perturbation::project_contour(fiber.op, fiber.pairs[0].lambda, spec, f);
        const auto pd = perturbation::project_direct(fiber.op, phi1, f);
        for (std::size_t i = 0; i < f.size(); ++i) worst = std::max(worst, std::abs(pc[i] - pd[i]));
      }
      const auto p1 = perturbation::project_contour(fiber.op, fiber.pairs[0].lambda, spec, phi1);
      const auto p2 = perturbation::project_contour(fiber.op, fiber.pairs[0].lambda, spec, fiber.pairs[1].phi);
      for (std::size_t i = 0; i < p1.size(); ++i) {
        worst = std::max(worst, std::abs(p1[i] - phi1[i]));
        worst = std::max(worst, std::abs(p2[i]));
      }
    }
    return Outcome{worst, 1e-8, ""};
  });

  criterion(7, "perturbation_bounds", [&] {
    const auto w = PerturbationW::single_hat(0.2, 0.05);
    const auto spec = perturbation::ContourSpec::default_for(step);
    std::vector<double> ladder;
    for (int i = 1; i <= 10; ++i) ladder.push_back(1e-3 * i);
    double bound = -1e300, fit_rel = 0.0, contour_rel = 0.0;
    for (double xi : {-0.5, 0.0, 0.5}) {
      const perturbation::Problem p(step, w, xi, spec);
      for (double e : {1e-3, 1e-2, 1e-1}) {
        if (!(e < p.eps_star())) throw std::runtime_error("epsilon above eps_star");
        bound = std::max(bound, std::abs(p.lambda1() - p.lambda_eps1(e)) - e * p.C());
      }
      const double a2 = p.A2_sum(p.op().size()).value;
      fit_rel = std::max(fit_rel, std::abs(p.fit(ladder).coefficients[1] - a2) / std::abs(a2));
      contour_rel = std::max(contour_rel, std::abs(p.A2_contour() - a2) / std::abs(a2));
    }
    const bool bound_ok = bound <= 0.0;
    return Outcome{std::max({bound_ok ? 0.0 : 1e300, fit_rel / 1e-4, contour_rel / 1e-6}), 1.0,
                   fmt("(bound slack %.3e, ", bound) + fmt("fit rel %.3e, ", fit_rel) +
                       fmt("contour rel %.3e)", contour_rel)};
  });

  criterion(8, "kappa_window_positivity", [&] {
    const auto w = PerturbationW::single_hat(0.1, 0.05);
    const auto rows = perturbation::kappa_positivity(step, w, 0.75, 9, 12);
    double worst = -1e300;
    for (const auto& r : rows) worst = std::max(worst, -r.margin);
    const auto win = perturbation::kappa_window(step, 0.1, 0.75);
    return Outcome{worst, 0.0, fmt("(window (%.4f, %.4f))", win.first, win.second)};
  });

  criterion(9, "lambda1_round_trip", [&] {
    const auto grid = bands::XiGrid::make(-8.4, 8.4, 673);
    const auto bumps = inverse::bump_family(-8.0, 8.0, 0.2, 0.2);
    if (bumps.size() != 81) throw std::runtime_error("expected 81 bumps");
    double worst = 0.0;
    for (const auto* f : {&tanh, &step}) {
      const auto t = bands::compute_bands(*f, grid, 1);
      const auto est = inverse::recover_lambda1(inverse::synthesize(t, bumps), 1.0, 2.0);
      for (std::size_t i = 0; i < est.xi.size(); ++i)
        worst = std::max(worst, std::abs(est.lambda1[i] - t.lambda(node(grid, est.xi[i]), 1)));
    }
    return Outcome{worst, 2e-3, ""};
  });

  criterion(10, "extract_round_trip", [&] {
    std::vector<double> x;
    for (int i = -500; i <= 500; ++i) x.push_back(0.01 * i);
    double worst = 0.0;
    std::size_t ambiguous = 0;
    for (const auto& f : {MagneticField::constant(1.0), tanh}) {
      for (double xi0 : {0.3, 0.7}) {
        const auto r = inverse::extract_a_from_band_data(inverse::sample_q(f, xi0, x), inverse::sample_q(f, -xi0, x), xi0);
        ambiguous += r.ambiguous.size();
        for (std::size_t i = 0; i < x.size(); ++i) worst = std::max(worst, std::abs(r.a.y[i] - f.eval_a(x[i])));
      }
    }
    return Outcome{worst, 1e-8, fmt("(%.0f nodes resolved by continuity)", static_cast<double>(ambiguous))};
  });

  criterion(11, "potential_ground_state_dichotomy", [&] {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    double worst_rel = 0.0;
    int inconsistent = 0, identical = 0;
    for (int k = 0; k < 20; ++k) {
      const double r = 0.05 + 0.19 * unit(rng);
      const std::size_t basis = 1 + static_cast<std::size_t>(3.0 * unit(rng)) % 3;
      // Every fourth trial is the zero perturbation, so both branches occur.
      const double scale = k % 4 == 0 ? 0.0 : 0.3 * r / static_cast<double>(basis + 1);
      std::vector<double> c(basis);
      for (auto& v : c) v = scale * (2.0 * unit(rng) - 1.0);
      const double xi0 = 0.2 + 1.3 * unit(rng);
      const auto tilde = fields::perturb(step, PerturbationW(r, c));
      const auto res = inverse::lemma1_residual(step, tilde, xi0, spectral::WindowOptions{}.n, 1e-8);
      if (!res.consistent()) ++inconsistent;
      if (res.q_equal) ++identical;
      const double rhs = std::max(res.plus.rhs, res.minus.rhs);
      // Zero right-hand side: the identity must then hold absolutely.
      worst_rel = std::max(worst_rel, rhs > 0.0 ? res.relative_residual : res.residual);
    }
    return Outcome{inconsistent > 0 ? 1e300 : worst_rel, 1e-6,
                   fmt("(%.0f of 20 trials with equal potentials, ", static_cast<double>(identical)) +
                       fmt("%.0f inconsistent)", static_cast<double>(inconsistent))};
  });

  criterion(12, "single_hat_inversion", [&] {
    const auto grid = bands::XiGrid::make(-8.4, 8.4, 673);
    const auto truth = PerturbationW::single_hat(0.2, 0.05);
    const auto table = bands::compute_bands(fields::perturb(step, truth), grid, 1, {lattice(), nullptr});
    const auto bumps = inverse::bump_family(-8.0, 8.0, 0.2, 0.2);
    inverse::FitOptions o;
    o.xi_grid = grid;
    o.window = lattice();
    o.truth = truth;
    o.basis_size = 1;
    o.support_radius = 0.2;
    const double clean = inverse::fit_field(inverse::synthesize(table, bumps), step, o).linf_error;
    o.reg = 1e-6;
    double noisy = 0.0;
    for (unsigned long long seed = 1; seed <= 10; ++seed) {
      const auto r = inverse::fit_field(inverse::synthesize(table, bumps, 1e-4, seed), step, o);
      noisy = std::max(noisy, r.linf_error);
    }
    const bool ok = clean >= 0.0 && clean <= 1e-3 && noisy >= 0.0;
    return Outcome{ok ? noisy : 1e300, 1e-2, fmt("(noiseless %.3e, worst of 10 noisy %.3e)", clean, noisy)};
  });

  criterion(13, "determinism", [&] {
    namespace fs = std::filesystem;
    const std::vector<std::string> configs{
        R"({"command":"bands","field":{"kind":"tanh","b_minus":1,"b_plus":2,"params":{"scale":1}},"j_max":3})",
        R"({"command":"current","seed":4,"field":{"kind":"tanh","b_minus":1,"b_plus":2,"params":{"scale":1}},
            "xi_window":[-4.4,4.4],"xi_count":177,
            "current":{"bumps":{"first":-4,"last":4,"step":0.2,"width":0.2},"noise_sigma":1e-4}})",
        R"({"command":"perturb","field":{"kind":"smoothed_step","b_minus":1,"b_plus":2,"params":{"center":0,"width":1}},
            "perturb":{"w":{"support_radius":0.1,"coefficients":[0.05]},"xi":[-0.1,0.1],
                       "epsilons":[0.002,0.004,0.006,0.008,0.01],"kappa":0.75}})",
        R"({"command":"extract","field":{"kind":"tanh","b_minus":1,"b_plus":2,"params":{"scale":1}},
            "extract":{"xi0":0.3,"source":"ground_state"}})",
    };
    std::vector<std::string> all = configs;
    all.push_back(io::read_text_file(std::string(IWATSUKA_FIXTURES) + "/invert_hat.config.json"));
    const unsigned before = thread_count();
    std::size_t compared = 0, differing = 0;
    for (std::size_t k = 0; k < all.size(); ++k) {
      std::vector<std::vector<std::string>> contents;
      for (unsigned threads : {1u, 4u}) {
        const auto dir = fs::temp_directory_path() / ("iwatsuka_acceptance_" + std::to_string(k) + "_" + std::to_string(threads));
        fs::remove_all(dir);
        fs::create_directories(dir);
        set_thread_count(threads);
        pipeline::RunOptions opts;
        opts.out_dir = dir.string();
        opts.base_dir = IWATSUKA_FIXTURES;
        const auto r = pipeline::run(pipeline::parse_config_text(all[k]), opts);
        std::vector<std::string> texts;
        for (const auto& a : r.artifacts) texts.push_back(io::read_text_file(a));
        contents.push_back(std::move(texts));
      }
      if (contents[0].size() != contents[1].size() || contents[0].empty()) ++differing;
      for (std::size_t i = 0; i < std::min(contents[0].size(), contents[1].size()); ++i) {
        ++compared;
        if (contents[0][i] != contents[1][i]) ++differing;
      }
    }
    set_thread_count(before);
    return Outcome{static_cast<double>(differing), 0.0,
                   fmt("(%.0f artifacts compared at 1 and 4 threads)", static_cast<double>(compared))};
  });

  std::printf("acceptance: %d of 13 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}

#include "doctest.h"

#include <cmath>

#include "iwatsuka/bands.hpp"
#include "iwatsuka/error.hpp"
#include "iwatsuka/parallel.hpp"
#include "iwatsuka/quadrature.hpp"

using namespace iwatsuka;
using fields::MagneticField;

TEST_CASE("constant field gives flat bands with zero velocity") {
  const auto t = bands::compute_bands(MagneticField::constant(1.0), bands::XiGrid::make(-3.0, 3.0, 7), 3);
  for (std::size_t i = 0; i < t.size(); ++i) {
    for (std::size_t j = 1; j <= 3; ++j) CHECK(t.lambda(i, j) == doctest::Approx(2.0 * j - 1.0).epsilon(1e-4));
    CHECK(std::abs(t.vmoment(i)) < 1e-9);
  }
}

TEST_CASE("velocity moment equals the derivative of separately solved eigenvalues") {
  const auto f = MagneticField::tanh_profile(1.0, 2.0);
  const auto t = bands::compute_bands(f, bands::XiGrid::make(-2.0, 2.0, 9), 1);
  const double d = 1e-4;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double xi = t.xi_grid().value(i);
    const double up = spectral::solve_fiber(f, xi + d, 1).pairs[0].lambda;
    const double down = spectral::solve_fiber(f, xi - d, 1).pairs[0].lambda;
    CHECK(t.vmoment(i) == doctest::Approx((up - down) / (2.0 * d)).epsilon(1e-5));
  }
}

TEST_CASE("finite-difference band derivative is second order") {
  const auto f = MagneticField::smoothed_step(1.0, 2.0);
  double prev = 0.0;
  for (std::size_t m : {41u, 81u}) {
    const auto t = bands::compute_bands(f, bands::XiGrid::make(-2.0, 2.0, m), 1);
    const auto fd = bands::band_derivative_fd(t, 1);
    double worst = 0.0;
    for (std::size_t i = 1; i + 1 < m; ++i) worst = std::max(worst, std::abs(fd[i] - t.vmoment(i)));
    if (prev > 0.0) CHECK(worst < 0.35 * prev);
    prev = worst;
  }
}

TEST_CASE("bands respect the Landau-level bounds and the first band is isolated") {
  for (const auto& f : {MagneticField::tanh_profile(1.0, 2.0), MagneticField::smoothed_step(1.0, 2.0)}) {
    const auto t = bands::compute_bands(f, bands::XiGrid::make(-8.0, 8.0, 33), 3);
    CHECK(bands::band_bound_violation(t) <= 2e-3);
    CHECK(bands::first_band_isolation(t) > 0.9);
    CHECK(t.lambda(0, 1) == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(t.lambda(t.size() - 1, 1) == doctest::Approx(2.0).epsilon(1e-3));
  }
}

TEST_CASE("integrated velocity moment equals the rise of the first band") {
  const auto t = bands::compute_bands(MagneticField::tanh_profile(1.0, 2.0), bands::XiGrid::make(-3.0, 3.0, 121), 1);
  const auto s = quad::simpson(t.vmoments(), t.xi_grid().spacing());
  CHECK(s.value == doctest::Approx(t.lambda(t.size() - 1, 1) - t.lambda(0, 1)).epsilon(1e-6));
}

TEST_CASE("ground-state overlaps are one on the diagonal and close to one for neighbours") {
  const auto t = bands::compute_bands(MagneticField::smoothed_step(1.0, 2.0), bands::XiGrid::make(-1.0, 1.0, 21), 1);
  CHECK(bands::ground_state_overlap(t, 4, 4) == doctest::Approx(1.0).epsilon(1e-12));
  const double o = bands::ground_state_overlap(t, 4, 5);
  CHECK(o < 1.0);
  CHECK(o > 0.99);
}

TEST_CASE("sweeps are identical for any thread count") {
  const auto f = MagneticField::tanh_profile(1.0, 2.0);
  const auto grid = bands::XiGrid::make(-2.0, 2.0, 11);
  set_thread_count(1);
  const auto a = bands::compute_bands(f, grid, 2);
  set_thread_count(4);
  const auto b = bands::compute_bands(f, grid, 2);
  set_thread_count(0);
  for (std::size_t i = 0; i < grid.m; ++i) {
    CHECK(a.lambda(i, 1) == b.lambda(i, 1));
    CHECK(a.lambda(i, 2) == b.lambda(i, 2));
    CHECK(a.vmoment(i) == b.vmoment(i));
  }
}

TEST_CASE("invalid sweeps are rejected") {
  const auto f = MagneticField::constant(1.0);
  CHECK_THROWS_AS(bands::compute_bands(f, bands::XiGrid::make(-1.0, 1.0, 5), 13), InvalidArgument);
  CHECK_THROWS_AS(bands::compute_bands(f, bands::XiGrid::make(-1.0, 1.0, 5), 0), InvalidArgument);
  CHECK_THROWS_AS(bands::XiGrid::make(1.0, -1.0, 5), InvalidArgument);
}

TEST_CASE("reflection x -> -x maps (xi, a) to (-xi, -a(-x)) with the velocity moment flipped in sign") {
  const auto f = MagneticField::tanh_profile(1.0, 2.0, 0.8);
  const auto t = bands::compute_bands(f, bands::XiGrid::make(-2.0, 2.0, 5), 2);
  // The reflected profile has a decreasing b, so it is assembled from its primitive directly.
  const auto reflected = [&](double x) { return -f.eval_a(-x); };
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double xi = t.xi_grid().value(i);
    const auto& g = t.fiber(i).grid;
    const auto mirror = spectral::Grid::make(-g.x_right, -g.x_left, g.n);
    const auto op = spectral::assemble(reflected, -xi, mirror);
    const auto pairs = spectral::lowest_eigenpairs(op, 2);
    CHECK(pairs[0].lambda == doctest::Approx(t.lambda(i, 1)).epsilon(1e-12));
    CHECK(pairs[1].lambda == doctest::Approx(t.lambda(i, 2)).epsilon(1e-12));
    double vm = 0.0;
    for (std::size_t k = 0; k < op.size(); ++k) vm += op.v(k) * pairs[0].phi[k] * pairs[0].phi[k];
    vm *= mirror.h();
    CHECK(vm == doctest::Approx(-t.vmoment(i)).epsilon(1e-10));
  }
}

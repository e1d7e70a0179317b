#include "doctest.h"

#include <Eigen/Dense>
#include <cmath>

#include "iwatsuka/spectral.hpp"

using namespace iwatsuka;
using fields::MagneticField;

TEST_CASE("constant field reproduces the Landau levels") {
  for (double b : {0.5, 1.0, 2.0}) {
    for (double xi : {-3.0, 0.0, 1.7}) {
      const auto fiber = spectral::solve_fiber(MagneticField::constant(b), xi, 4);
      for (std::size_t j = 0; j < 4; ++j) {
        const double exact = (2.0 * static_cast<double>(j) + 1.0) * b;
        CHECK(fiber.pairs[j].lambda == doctest::Approx(exact).epsilon(1e-4));
      }
    }
  }
}

TEST_CASE("ground state of the constant field is the shifted Gaussian") {
  const double b = 1.0, xi = 0.8;
  const auto fiber = spectral::solve_fiber(MagneticField::constant(b), xi, 1);
  const auto& g = fiber.op.grid;
  const auto& phi = fiber.pairs[0].phi;
  double worst = 0.0;
  for (std::size_t i = 0; i < g.n; ++i) {
    const double x = g.node(i) - xi / b;
    const double exact = std::pow(b / M_PI, 0.25) * std::exp(-0.5 * b * x * x);
    worst = std::max(worst, std::abs(phi[i] - exact));
  }
  CHECK(worst < 1e-4);
  CHECK(spectral::inner(g, phi, phi) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("eigenpairs agree with a dense solve of the same stencil") {
  const auto f = MagneticField::smoothed_step(1.0, 2.0);
  spectral::WindowOptions opts;
  opts.n = 300;
  const auto fiber = spectral::solve_fiber(f, 0.4, 3, opts);
  const auto& t = fiber.op.matrix;
  const auto n = static_cast<Eigen::Index>(t.size());
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    m(i, i) = t.diag[static_cast<std::size_t>(i)];
    if (i + 1 < n) m(i, i + 1) = m(i + 1, i) = t.off[static_cast<std::size_t>(i)];
  }
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  const double h = fiber.op.grid.h();
  for (std::size_t j = 0; j < 3; ++j) {
    const auto jj = static_cast<Eigen::Index>(j);
    CHECK(fiber.pairs[j].lambda == doctest::Approx(es.eigenvalues()(jj)).epsilon(1e-11));
    // Same vector up to sign, after converting to the trapezoid normalisation.
    double dot = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) dot += fiber.pairs[j].phi[static_cast<std::size_t>(i)] * es.eigenvectors()(i, jj);
    CHECK(std::abs(dot) * std::sqrt(h) == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("the stencil carries q = (xi - a)^2 on the diagonal") {
  const auto f = MagneticField::tanh_profile(1.0, 2.0);
  const auto grid = spectral::Grid::make(-5.0, 5.0, 99);
  const auto op = spectral::assemble(f, 0.6, grid);
  const double h = grid.h();
  for (std::size_t i = 0; i < grid.n; i += 17) {
    const double a = f.eval_a(grid.node(i));
    CHECK(op.matrix.diag[i] == doctest::Approx(2.0 / (h * h) + (0.6 - a) * (0.6 - a)).epsilon(1e-14));
    CHECK(op.v(i) == doctest::Approx(2.0 * (0.6 - a)));
  }
  for (double o : op.matrix.off) CHECK(o == doctest::Approx(-1.0 / (h * h)));
}

TEST_CASE("window is centred at the classical turning point and satisfies the margin") {
  const auto f = MagneticField::smoothed_step(1.0, 2.0);
  for (double xi : {-6.0, 0.0, 6.0}) {
    const auto g = spectral::choose_window(f, xi, 3);
    const double centre = fields::inverse_a(f, xi);
    CHECK(0.5 * (g.x_left + g.x_right) == doctest::Approx(centre).epsilon(1e-12));
    const double need = (2.0 * 3 + 1.0 + 25.0) * f.b_plus();
    CHECK((xi - f.eval_a(g.x_left)) * (xi - f.eval_a(g.x_left)) >= need);
    CHECK((xi - f.eval_a(g.x_right)) * (xi - f.eval_a(g.x_right)) >= need);
  }
}

TEST_CASE("lattice windows share node positions across xi") {
  const auto f = MagneticField::smoothed_step(1.0, 2.0);
  spectral::WindowOptions opts;
  opts.lattice = true;
  const auto a = spectral::choose_window(f, 0.3, 1, opts);
  const auto b = spectral::choose_window(f, -0.7, 1, opts);
  CHECK(a.h() == doctest::Approx(b.h()).epsilon(1e-15));
  const double shift = (a.x_left - b.x_left) / a.h();
  CHECK(std::abs(shift - std::round(shift)) < 1e-9);
}

TEST_CASE("odd primitive: diagonals at xi and -xi mirror each other in the node index") {
  const auto f = MagneticField::constant(1.3);
  const auto grid = spectral::Grid::make(-6.0, 6.0, 301);
  const auto plus = spectral::assemble(f, 0.8, grid);
  const auto minus = spectral::assemble(f, -0.8, grid);
  for (std::size_t i = 0; i < grid.n; ++i) {
    CHECK(plus.matrix.diag[i] == doctest::Approx(minus.matrix.diag[grid.n - 1 - i]).epsilon(1e-14));
  }
}

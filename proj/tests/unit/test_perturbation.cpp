#include "doctest.h"

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "iwatsuka/error.hpp"
#include "iwatsuka/perturbation.hpp"

using namespace iwatsuka;
using fields::MagneticField;
using fields::PerturbationW;
using perturbation::ContourSpec;
using perturbation::Problem;

namespace {

const MagneticField& step() {
  static const auto f = MagneticField::smoothed_step(1.0, 2.0);
  return f;
}

spectral::WindowOptions small_window() {
  spectral::WindowOptions w;
  w.n = 400;
  return w;
}

Eigen::MatrixXd dense(const spectral::FiberOperator& op, const std::vector<double>& extra = {}) {
  const auto n = static_cast<Eigen::Index>(op.size());
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    m(i, i) = op.matrix.diag[k] + (extra.empty() ? 0.0 : extra[k]);
    if (i + 1 < n) m(i, i + 1) = m(i + 1, i) = op.matrix.off[k];
  }
  return m;
}

double lowest_dense(const Eigen::MatrixXd& m) {
  return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(m, Eigen::EigenvaluesOnly).eigenvalues()(0);
}

}  // namespace

TEST_CASE("contour projection equals the rank-one spectral projection") {
  const auto fiber = spectral::solve_fiber(step(), -0.4, 2);
  const auto spec = ContourSpec::default_for(step());
  std::mt19937_64 rng(11);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 3; ++trial) {
    std::vector<double> f(fiber.op.size());
    for (auto& x : f) x = normal(rng);
    const auto pc = perturbation::project_contour(fiber.op, fiber.pairs[0].lambda, spec, f);
    const auto pd = perturbation::project_direct(fiber.op, fiber.pairs[0].phi, f);
    for (std::size_t i = 0; i < f.size(); ++i) CHECK(std::abs(pc[i] - pd[i]) < 1e-8);
  }
  const auto p1 = perturbation::project_contour(fiber.op, fiber.pairs[0].lambda, spec, fiber.pairs[0].phi);
  const auto p2 = perturbation::project_contour(fiber.op, fiber.pairs[0].lambda, spec, fiber.pairs[1].phi);
  for (std::size_t i = 0; i < p1.size(); ++i) {
    CHECK(std::abs(p1[i] - fiber.pairs[0].phi[i]) < 1e-8);
    CHECK(std::abs(p2[i]) < 1e-8);
  }
}

TEST_CASE("contours enclosing no or two eigenvalues are rejected") {
  const auto fiber = spectral::solve_fiber(step(), 0.0, 2);
  std::vector<double> f(fiber.op.size(), 1.0);
  ContourSpec wide;
  wide.rho = 3.0;
  CHECK_THROWS_AS(perturbation::project_contour(fiber.op, fiber.pairs[0].lambda, wide, f), NumericalError);
  ContourSpec off;
  off.rho = 0.1;
  CHECK_THROWS_AS(perturbation::project_contour(fiber.op, fiber.pairs[0].lambda + 0.5, off, f), NumericalError);
}

TEST_CASE("bound constants follow from the sup norm of w and of xi - a on its support") {
  const auto w = PerturbationW::single_hat(0.2, 0.05);
  const auto spec = ContourSpec::default_for(step());
  const Problem p(step(), w, 0.3, spec);
  const double m = 2.0 * std::max(std::abs(0.3 - step().eval_a(-0.2)), std::abs(0.3 - step().eval_a(0.2)));
  CHECK(p.delta() == doctest::Approx(0.05));
  CHECK(p.M() == doctest::Approx(m));
  CHECK(p.C() == doctest::Approx(0.05 * (m + 0.05)));
  const double expected = std::min({1.0, (3.0 - 2.0 - spec.rho) / p.C(), spec.rho / p.C()});
  CHECK(p.eps_star() == doctest::Approx(expected));
}

TEST_CASE("first band moves by at most eps C") {
  const auto w = PerturbationW::single_hat(0.2, 0.05);
  for (double xi : {-1.0, 0.0, 0.7}) {
    const Problem p(step(), w, xi, ContourSpec::default_for(step()));
    for (double e : {1e-3, 1e-2, 1e-1}) {
      REQUIRE(e < p.eps_star());
      CHECK(std::abs(p.lambda_eps1(e) - p.lambda1()) <= e * p.C());
    }
  }
}

TEST_CASE("perturbed eigenvalue matches a dense solve of h + eps omega + eps^2 w^2") {
  const auto w = PerturbationW(0.2, {0.02, 0.04, -0.01});
  const Problem p(step(), w, 0.2, ContourSpec::default_for(step()), small_window());
  const double e = 0.05;
  std::vector<double> ell(p.op().size());
  for (std::size_t i = 0; i < ell.size(); ++i) ell[i] = e * p.omega()[i] + e * e * p.w_values()[i] * p.w_values()[i];
  CHECK(p.lambda_eps1(e) == doctest::Approx(lowest_dense(dense(p.op(), ell))).epsilon(1e-12));
  const auto fv = p.F(e);
  CHECK(fv.value == doctest::Approx(fv.inner_form).epsilon(1e-8));
  CHECK(fv.value == doctest::Approx(fv.lambda_eps1 - p.lambda1()).epsilon(1e-8));
}

TEST_CASE("second-order coefficient: spectral sum, contour form and symmetric difference quotient") {
  const auto w = PerturbationW::single_hat(0.2, 0.05);
  const Problem p(step(), w, 0.1, ContourSpec::default_for(step()), small_window());
  const double sum = p.A2_sum(p.op().size()).value;
  CHECK(p.A2_sum(p.op().size()).tail_bound == 0.0);
  CHECK(p.A2_contour() == doctest::Approx(sum).epsilon(1e-6));
  // (lambda(eps) + lambda(-eps) - 2 lambda(0)) / (2 eps^2) = A2 + O(eps^2) for
  // l_eps = eps omega + eps^2 w^2, from dense eigenvalues only.
  const double e = 1e-3;
  std::vector<double> plus(p.op().size()), minus(p.op().size());
  for (std::size_t i = 0; i < plus.size(); ++i) {
    const double w2 = p.w_values()[i] * p.w_values()[i];
    plus[i] = e * p.omega()[i] + e * e * w2;
    minus[i] = -e * p.omega()[i] + e * e * w2;
  }
  const double l0 = lowest_dense(dense(p.op()));
  const double quotient = (lowest_dense(dense(p.op(), plus)) + lowest_dense(dense(p.op(), minus)) - 2.0 * l0) / (2.0 * e * e);
  CHECK(quotient == doctest::Approx(sum).epsilon(1e-4));
}

TEST_CASE("truncated spectral sum is bracketed by its tail bound") {
  const auto w = PerturbationW::single_hat(0.2, 0.05);
  const Problem p(step(), w, -0.2, ContourSpec::default_for(step()));
  const auto full = p.A2_sum(p.op().size());
  for (std::size_t j : {6u, 12u, 40u}) {
    const auto s = p.A2_sum(j);
    CHECK(s.value >= full.value - 1e-12);
    CHECK(s.value - s.tail_bound <= full.value + 1e-12);
  }
}

TEST_CASE("polynomial fit of F recovers the first two coefficients") {
  const auto w = PerturbationW::single_hat(0.2, 0.05);
  const Problem p(step(), w, 0.0, ContourSpec::default_for(step()));
  std::vector<double> eps;
  for (int i = 1; i <= 10; ++i) eps.push_back(1e-3 * i);
  const auto fit = p.fit(eps);
  CHECK(fit.coefficients[0] == doctest::Approx(p.A1()).epsilon(1e-8));
  CHECK(fit.coefficients[1] == doctest::Approx(p.A2_sum(p.op().size()).value).epsilon(1e-4));
}

TEST_CASE("kappa window radius and positivity for (1, 2)") {
  CHECK(perturbation::r_kappa(1.0, 2.0, 0.75) == doctest::Approx(0.125).epsilon(1e-15));
  const auto w = PerturbationW::single_hat(0.1, 0.05);
  const auto rows = perturbation::kappa_positivity(step(), w, 0.75, 5, 12);
  REQUIRE(rows.size() == 5);
  for (const auto& r : rows) CHECK(r.A2 >= 0.75 * r.w_norm_sq - r.tail_bound);
  CHECK_THROWS_AS(perturbation::kappa_window(step(), 0.2, 0.75), InvalidArgument);
}

TEST_CASE("epsilons outside (0, eps_star) are rejected") {
  const Problem p(step(), PerturbationW::single_hat(0.2, 0.05), 0.0, ContourSpec::default_for(step()));
  CHECK_THROWS_AS(p.F(0.0), InvalidArgument);
  CHECK_THROWS_AS(p.F(2.0 * p.eps_star()), InvalidArgument);
}

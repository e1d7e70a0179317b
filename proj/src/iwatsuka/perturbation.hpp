#pragma once

#include <complex>
#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "iwatsuka/fields.hpp"
#include "iwatsuka/spectral.hpp"

namespace iwatsuka::perturbation {

/// Circle of radius rho around lambda_1 sampled at `nodes` trapezoid points.
struct ContourSpec {
  double rho = 0.5;
  std::size_t nodes = 64;

  /// rho = (3 b- - b+) / 2, 64 nodes.
  static ContourSpec default_for(const fields::MagneticField& field);
  /// 0 < rho < 3 b- - b+, nodes >= 16 and even.
  void validate(const fields::MagneticField& field) const;
};

/// p_1 f = -(1 / 2 pi i) \oint (T - z)^{-1} f dz over C(lambda1, rho), one
/// complex tridiagonal solve per conjugate pair of nodes. Requires
/// lambda_2 - lambda_1 > rho and no eigenvalue within 1e-6 of a node.
std::vector<double> project_contour(const spectral::FiberOperator& op, double lambda1, const ContourSpec& spec,
                                    std::span<const double> f);

/// Rank-one reference phi_1 <phi_1, f>.
std::vector<double> project_direct(const spectral::FiberOperator& op, std::span<const double> phi1,
                                   std::span<const double> f);

struct FValue {
  double epsilon = 0.0;
  double lambda_eps1 = 0.0;
  double value = 0.0;        // (lambda_eps1 - lambda_1) <p_eps phi_1, phi_1>
  double inner_form = 0.0;   // <p_eps phi_1, l_eps phi_1>
  double projection_weight = 0.0;  // <p_eps phi_1, phi_1>
};

struct A2Sum {
  double value = 0.0;        // ||w phi_1||^2 - sum_{2<=j<=J} |omega_j|^2 / (lambda_j - lambda_1)
  double tail_bound = 0.0;   // bound on the omitted j > J terms
  std::size_t j_max = 0;
  double w_norm_sq = 0.0;     // ||w phi_1||^2
  double omega_norm_sq = 0.0; // ||omega phi_1||^2
};

struct PolyFit {
  std::vector<double> coefficients;  // A_1, A_2, ... of F(eps) = sum A_n eps^n
  double residual = 0.0;             // max |F - fit| over the ladder
};

/// One fiber xi of the base field with a fixed compact perturbation w. The
/// perturbed operators h_eps(xi) = h(xi) + l_eps live on the same grid as h(xi).
class Problem {
 public:
  Problem(fields::MagneticField field, fields::PerturbationW w, double xi, ContourSpec spec,
          spectral::WindowOptions window = {});

  double xi() const { return xi_; }
  const fields::MagneticField& field() const { return field_; }
  const fields::PerturbationW& w() const { return w_; }
  const ContourSpec& contour() const { return spec_; }
  const spectral::FiberOperator& op() const { return op_; }
  double lambda1() const { return lambda1_; }
  double lambda2() const { return lambda2_; }
  const std::vector<double>& phi1() const { return phi1_; }
  /// omega(x_i, xi) = -v(x_i, xi) w(x_i) and w(x_i) on the grid.
  const std::vector<double>& omega() const { return omega_; }
  const std::vector<double>& w_values() const { return w_values_; }

  /// delta = ||w||_inf, M = 2 ||xi - a||_{L^inf[-r, r]}, C = delta (M + delta).
  double delta() const;
  double M() const;
  double C() const;
  /// eps_* = min(1, (3b- - b+ - rho) / C) and eps_star = min(eps_*, rho / C).
  double eps_star_gap() const;
  double eps_star() const;

  /// max over the grid of |eps omega + eps^2 w^2|.
  double ell_sup(double epsilon) const;
  /// Lowest eigenvalue of h_eps(xi) on the shared grid.
  double lambda_eps1(double epsilon) const;
  /// Both forms of F_xi(eps). Throws InvalidArgument unless 0 < eps < eps_star.
  FValue F(double epsilon) const;

  /// <omega phi_1, phi_1>, the first-order coefficient.
  double A1() const;
  /// Spectral sum with the lowest j_max eigenpairs (j_max >= 6, up to n).
  A2Sum A2_sum(std::size_t j_max) const;
  /// <p_1 phi_1, w^2 phi_1> + (1 / 2 pi i) \oint <r omega r phi_1, omega phi_1> dz.
  double A2_contour() const;
  /// Least-squares fit of F(eps) / eps by a polynomial of the given degree.
  PolyFit fit(std::span<const double> epsilons, std::size_t degree = 3) const;

 private:
  spectral::FiberOperator perturbed_op(double epsilon) const;

  fields::MagneticField field_;
  fields::PerturbationW w_;
  double xi_;
  ContourSpec spec_;
  spectral::FiberOperator op_;
  double lambda1_ = 0.0;
  double lambda2_ = 0.0;
  std::vector<double> phi1_;
  std::vector<double> omega_;
  std::vector<double> w_values_;
};

/// F_xi(eps) (eigenvalue-difference form). Both forms must agree within
/// 1e-8 (1 + |F|), otherwise NumericalError.
double F_xi(const fields::MagneticField& field, const fields::PerturbationW& w, double xi, double epsilon,
            const ContourSpec& spec);

double A2_sum(const fields::MagneticField& field, const fields::PerturbationW& w, double xi, std::size_t j_max);

/// r(kappa) = sqrt(1 - kappa) sqrt(3b- - b+) / (2 b+).
double r_kappa(double b_minus, double b_plus, double kappa);
/// (-xi(kappa), xi(kappa)) with xi(kappa) = b+ (r(kappa) - r).
std::pair<double, double> kappa_window(const fields::MagneticField& field, double r, double kappa);

/// Grid max of |v(., xi)| over [-r, r].
double v_sup_on_support(const fields::MagneticField& field, double xi, double r);

struct KappaRow {
  double xi = 0.0;
  double A2 = 0.0;
  double tail_bound = 0.0;
  double w_norm_sq = 0.0;
  double margin = 0.0;  // A2 - kappa ||w phi_1||^2 + tail_bound (>= 0 when the claim holds)
  double v_sup = 0.0;
  double v_bound = 0.0;  // sqrt(1 - kappa) sqrt(3b- - b+)
};

/// A2 positivity on `count` equispaced points strictly inside the kappa window.
std::vector<KappaRow> kappa_positivity(const fields::MagneticField& field, const fields::PerturbationW& w,
                                       double kappa, std::size_t count, std::size_t j_max);

struct PerturbReport {
  double xi = 0.0;
  double C = 0.0;
  double eps_star = 0.0;
  std::vector<double> epsilons;
  std::vector<double> lambda_eps1;
  std::vector<double> F_values;
  std::vector<double> F_inner;
  double lambda1 = 0.0;
  double A1 = 0.0;
  double A2 = 0.0;
  double A2_tail_bound = 0.0;
  double A2_contour = 0.0;
  double A2_fit = 0.0;
  std::optional<double> kappa;
  std::optional<std::pair<double, double>> window;
};

/// Report for one xi. Epsilons at or above eps_star are rejected. A2_fit is
/// NaN with fewer than 5 epsilons.
PerturbReport perturb_report(const fields::MagneticField& field, const fields::PerturbationW& w, double xi,
                             std::span<const double> epsilons, std::optional<double> kappa, std::size_t j_max,
                             const ContourSpec& spec, const spectral::WindowOptions& window = {});

}  // namespace iwatsuka::perturbation

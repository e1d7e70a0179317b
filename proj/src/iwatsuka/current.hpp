#pragma once

#include <string>
#include <utility>
#include <vector>

#include "iwatsuka/bands.hpp"

namespace iwatsuka::current {

enum class ChiKind { smooth_bump, raised_cosine };

std::string to_string(ChiKind kind);
ChiKind chi_kind_from_string(const std::string& name);

/// Compactly supported frequency profile chi on [center - width, center + width].
/// smooth_bump: amplitude * exp(-1 / (1 - s^2)), s = (xi - center) / width.
/// raised_cosine: amplitude on |xi - center| <= plateau, then a cosine taper
/// down to zero at |xi - center| = width.
struct ChiProfile {
  ChiKind kind = ChiKind::smooth_bump;
  double center = 0.0;
  double width = 1.0;
  double amplitude = 1.0;
  double plateau = 0.0;  // raised_cosine only

  void validate() const;
  double support_min() const { return center - width; }
  double support_max() const { return center + width; }
  double operator()(double xi) const;
  /// d/dxi chi(xi)^2
  double square_derivative(double xi) const;
  /// ||chi||_2^2 by adaptive quadrature.
  double norm_squared() const;
};

enum class Route { fiber_quadrature, band_derivative, by_parts, evolution };

std::string to_string(Route route);
Route route_from_string(const std::string& name);

struct CurrentResult {
  double theta = 0.0;
  Route route = Route::fiber_quadrature;
  double quad_error_estimate = 0.0;
};

/// Simpson quadrature over the table nodes of chi^2 <v phi_1, phi_1>.
CurrentResult theta_fiber(const bands::BandTable& table, const ChiProfile& chi);
/// Same integral with lambda_1' from band_derivative_fd.
CurrentResult theta_band(const bands::BandTable& table, const ChiProfile& chi);
/// -int (chi^2)' lambda_1 (compact support, no boundary terms).
CurrentResult theta_by_parts(const bands::BandTable& table, const ChiProfile& chi);
CurrentResult theta(const bands::BandTable& table, const ChiProfile& chi, Route route);

/// Fiber-level weight form: int g(xi) <v phi_1, phi_1> dxi for g = chi^2
/// sampled on the table nodes (used for sums of squared profiles).
CurrentResult theta_weight(const bands::BandTable& table, const std::vector<double>& weight);

/// Velocity expectation of exp(-itH) u_{0,chi}, evaluated in the fiber
/// representation exp(-it lambda_1) chi phi_1. One value per time.
std::vector<double> evolve_velocity(const bands::BandTable& table, const ChiProfile& chi,
                                    const std::vector<double>& times);

struct EnergyReport {
  double higher_band_fraction = 0.0;  // zero by construction of u_{0,chi}
  std::vector<double> escapes;        // xi in supp chi with lambda_1 outside [b- - tol, b+ + tol]
  double isolation_margin = 0.0;      // min lambda_2 - max lambda_1 over the table
  bool isolated = true;               // isolation_margin > 0
};

/// Checks lambda_1(xi) in [b-, b+] on supp chi (default tol = 1e-3 b+) and the
/// first-band isolation certificate. Needs j_max >= 3.
EnergyReport energy_concentration_check(const bands::BandTable& table, const ChiProfile& chi, double tol = -1.0);

/// max over interior table nodes of || d^2/dxi^2 (chi phi_1) ||_2 estimated by
/// second differences of resampled fibers.
double state_smoothness(const bands::BandTable& table, const ChiProfile& chi);

}  // namespace iwatsuka::current

#include "iwatsuka/current.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <sstream>

#include "iwatsuka/error.hpp"
#include "iwatsuka/quadrature.hpp"

namespace iwatsuka::current {

std::string to_string(ChiKind kind) { return kind == ChiKind::smooth_bump ? "smooth_bump" : "raised_cosine"; }

ChiKind chi_kind_from_string(const std::string& name) {
  if (name == "smooth_bump") return ChiKind::smooth_bump;
  if (name == "raised_cosine") return ChiKind::raised_cosine;
  throw InvalidArgument("unknown chi kind '" + name + "'");
}

std::string to_string(Route route) {
  switch (route) {
    case Route::fiber_quadrature: return "fiber_quadrature";
    case Route::band_derivative: return "band_derivative";
    case Route::by_parts: return "by_parts";
    case Route::evolution: return "evolution";
  }
  return "unknown";
}

Route route_from_string(const std::string& name) {
  for (auto r : {Route::fiber_quadrature, Route::band_derivative, Route::by_parts, Route::evolution}) {
    if (to_string(r) == name) return r;
  }
  throw InvalidArgument("unknown current route '" + name + "'");
}

void ChiProfile::validate() const {
  if (!(width > 0.0) || !std::isfinite(width)) throw InvalidArgument("chi width must be positive");
  if (!std::isfinite(center) || !std::isfinite(amplitude)) throw InvalidArgument("chi parameters must be finite");
  if (kind == ChiKind::raised_cosine && !(plateau >= 0.0 && plateau < width)) {
    throw InvalidArgument("raised_cosine plateau must lie in [0, width)");
  }
  if (kind == ChiKind::smooth_bump && plateau != 0.0) throw InvalidArgument("smooth_bump has no plateau");
}

double ChiProfile::operator()(double xi) const {
  const double d = std::abs(xi - center);
  if (d >= width) return 0.0;
  if (kind == ChiKind::smooth_bump) {
    const double s = d / width;
    return amplitude * std::exp(-1.0 / (1.0 - s * s));
  }
  if (d <= plateau) return amplitude;
  const double s = (d - plateau) / (width - plateau);
  return amplitude * 0.5 * (1.0 + std::cos(std::numbers::pi * s));
}

double ChiProfile::square_derivative(double xi) const {
  const double d = std::abs(xi - center);
  if (d >= width) return 0.0;
  const double sign = xi < center ? -1.0 : 1.0;
  const double chi = (*this)(xi);
  if (kind == ChiKind::smooth_bump) {
    const double s = (xi - center) / width;
    const double one_minus = 1.0 - s * s;
    // chi' = chi * (-2 s / (1 - s^2)^2) / width
    return 2.0 * chi * chi * (-2.0 * s / (one_minus * one_minus)) / width;
  }
  if (d <= plateau) return 0.0;
  const double taper = width - plateau;
  const double s = (d - plateau) / taper;
  const double dchi = -amplitude * 0.5 * std::numbers::pi * std::sin(std::numbers::pi * s) / taper * sign;
  return 2.0 * chi * dchi;
}

double ChiProfile::norm_squared() const {
  const auto f = [this](double xi) {
    const double c = (*this)(xi);
    return c * c;
  };
  if (kind == ChiKind::raised_cosine && plateau > 0.0) {
    return 2.0 * quad::integrate(f, center - width, center - plateau) + 2.0 * plateau * amplitude * amplitude;
  }
  return 2.0 * quad::integrate(f, center - width, center);
}

namespace {

void check_support(const bands::BandTable& table, const ChiProfile& chi) {
  chi.validate();
  const auto& g = table.xi_grid();
  const double slack = 1e-12 * std::max(1.0, std::abs(g.xi_max) + std::abs(g.xi_min));
  if (chi.support_min() < g.xi_min - slack || chi.support_max() > g.xi_max + slack) {
    std::ostringstream os;
    os << "chi support [" << chi.support_min() << ", " << chi.support_max() << "] exceeds the table range ["
       << g.xi_min << ", " << g.xi_max << "]";
    throw InvalidArgument(os.str());
  }
  if (table.size() < 5) throw InvalidArgument("current routes need at least 5 xi nodes");
  // Fewer than 4 intervals under the support leaves the step-halving estimate meaningless.
  if (2.0 * chi.width < 4.0 * g.spacing() * (1.0 - 1e-12)) {
    std::ostringstream os;
    os << "chi of half-width " << chi.width << " is under-resolved by the xi spacing " << g.spacing()
       << " (need 2 width >= 4 spacing)";
    throw InvalidArgument(os.str());
  }
}

std::vector<double> chi_squared_samples(const bands::BandTable& table, const ChiProfile& chi) {
  std::vector<double> g(table.size());
  for (std::size_t i = 0; i < table.size(); ++i) {
    const double c = chi(table.xi_grid().value(i));
    g[i] = c * c;
  }
  return g;
}

CurrentResult integrate_samples(const std::vector<double>& samples, double h, Route route) {
  const auto est = quad::simpson(samples, h);
  return CurrentResult{est.value, route, est.error};
}

}  // namespace

CurrentResult theta_weight(const bands::BandTable& table, const std::vector<double>& weight) {
  if (weight.size() != table.size()) throw InvalidArgument("theta_weight: weight length must match the table");
  std::vector<double> s(table.size());
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = weight[i] * table.vmoment(i);
  return integrate_samples(s, table.xi_grid().spacing(), Route::fiber_quadrature);
}

CurrentResult theta_fiber(const bands::BandTable& table, const ChiProfile& chi) {
  check_support(table, chi);
  return theta_weight(table, chi_squared_samples(table, chi));
}

CurrentResult theta_band(const bands::BandTable& table, const ChiProfile& chi) {
  check_support(table, chi);
  const auto g = chi_squared_samples(table, chi);
  const auto d = bands::band_derivative_fd(table, 1);
  std::vector<double> s(table.size());
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = g[i] * d[i];
  return integrate_samples(s, table.xi_grid().spacing(), Route::band_derivative);
}

CurrentResult theta_by_parts(const bands::BandTable& table, const ChiProfile& chi) {
  check_support(table, chi);
  std::vector<double> s(table.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    s[i] = -chi.square_derivative(table.xi_grid().value(i)) * table.lambda(i, 1);
  }
  return integrate_samples(s, table.xi_grid().spacing(), Route::by_parts);
}

CurrentResult theta(const bands::BandTable& table, const ChiProfile& chi, Route route) {
  switch (route) {
    case Route::fiber_quadrature: return theta_fiber(table, chi);
    case Route::band_derivative: return theta_band(table, chi);
    case Route::by_parts: return theta_by_parts(table, chi);
    case Route::evolution: {
      auto base = theta_fiber(table, chi);
      return CurrentResult{evolve_velocity(table, chi, {0.0}).front(), Route::evolution, base.quad_error_estimate};
    }
  }
  throw InvalidArgument("unknown route");
}

std::vector<double> evolve_velocity(const bands::BandTable& table, const ChiProfile& chi,
                                    const std::vector<double>& times) {
  check_support(table, chi);
  for (double t : times) {
    if (!(t >= 0.0) || !std::isfinite(t)) throw InvalidArgument("evolve_velocity: times must be finite and >= 0");
  }
  const auto& xg = table.xi_grid();
  const auto weights = quad::simpson_weights(table.size(), xg.spacing());
  std::vector<double> out;
  out.reserve(times.size());
  for (double t : times) {
    double total = 0.0;
    for (std::size_t i = 0; i < table.size(); ++i) {
      const double xi = xg.value(i);
      const double c = chi(xi);
      if (c == 0.0) continue;
      const auto& f = table.fiber(i);
      const std::complex<double> phase = std::polar(1.0, -t * table.lambda(i, 1));
      double inner = 0.0;
      for (std::size_t n = 0; n < f.phi1.size(); ++n) {
        const std::complex<double> psi = phase * (c * f.phi1[n]);  // fiber of exp(-itH) u_{0,chi}
        const double v = 2.0 * (xi - table.field().eval_a(f.grid.node(n)));
        inner += v * std::norm(psi);
      }
      total += weights[i] * f.grid.h() * inner;
    }
    out.push_back(total);
  }
  return out;
}

EnergyReport energy_concentration_check(const bands::BandTable& table, const ChiProfile& chi, double tol) {
  check_support(table, chi);
  if (table.j_max() < 3) throw InvalidArgument("energy_concentration_check: need j_max >= 3");
  const double bm = table.field().b_minus();
  const double bp = table.field().b_plus();
  if (tol < 0.0) tol = 1e-3 * bp;
  EnergyReport r;
  for (std::size_t i = 0; i < table.size(); ++i) {
    const double xi = table.xi_grid().value(i);
    if (chi(xi) == 0.0) continue;
    const double l = table.lambda(i, 1);
    if (l < bm - tol || l > bp + tol) r.escapes.push_back(xi);
  }
  r.isolation_margin = bands::first_band_isolation(table);
  r.isolated = r.isolation_margin > 0.0;
  return r;
}

double state_smoothness(const bands::BandTable& table, const ChiProfile& chi) {
  check_support(table, chi);
  const auto& xg = table.xi_grid();
  const double h2 = xg.spacing() * xg.spacing();
  double worst = 0.0;
  for (std::size_t i = 1; i + 1 < table.size(); ++i) {
    const double c[3] = {chi(xg.value(i - 1)), chi(xg.value(i)), chi(xg.value(i + 1))};
    if (c[0] == 0.0 && c[1] == 0.0 && c[2] == 0.0) continue;
    const double coef[3] = {c[0], -2.0 * c[1], c[2]};
    double norm2 = 0.0;
    for (int p = 0; p < 3; ++p) {
      for (int q = 0; q < 3; ++q) {
        norm2 += coef[p] * coef[q] * bands::ground_state_overlap(table, i - 1 + p, i - 1 + q);
      }
    }
    worst = std::max(worst, std::sqrt(std::max(norm2, 0.0)) / h2);
  }
  return worst;
}

}  // namespace iwatsuka::current

#include "iwatsuka/bands.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "iwatsuka/error.hpp"
#include "iwatsuka/parallel.hpp"

namespace iwatsuka::bands {

XiGrid XiGrid::make(double xi_min, double xi_max, std::size_t m) {
  if (m < 2) throw InvalidArgument("xi grid needs at least two nodes");
  if (!(xi_max > xi_min) || !std::isfinite(xi_min) || !std::isfinite(xi_max)) {
    throw InvalidArgument("xi grid needs finite xi_min < xi_max");
  }
  return XiGrid{xi_min, xi_max, m};
}

XiGrid XiGrid::default_for(const fields::MagneticField& field) {
  const double span = 8.0 * std::sqrt(field.b_plus());
  return make(-span, span, 161);
}

std::vector<double> XiGrid::values() const {
  std::vector<double> v(m);
  for (std::size_t i = 0; i < m; ++i) v[i] = value(i);
  return v;
}

BandTable::BandTable(fields::MagneticField field, XiGrid grid, std::size_t j_max)
    : field_(std::move(field)), grid_(grid), j_max_(j_max) {}

std::vector<double> BandTable::band(std::size_t j) const {
  if (j == 0 || j > j_max_) throw InvalidArgument("band index out of range");
  std::vector<double> out(grid_.m);
  for (std::size_t i = 0; i < grid_.m; ++i) out[i] = lambda(i, j);
  return out;
}

BandTable compute_bands(const fields::MagneticField& field, const XiGrid& grid, std::size_t j_max,
                        const BandOptions& options) {
  if (!field.gap_admissible() && !field.allow_gap_inadmissible()) {
    throw InvalidArgument("compute_bands: field is gap-inadmissible");
  }
  if (j_max == 0 || j_max > 12) throw InvalidArgument("compute_bands: j_max must lie in [1, 12]");
  BandTable table(field, grid, j_max);
  table.lambda_.assign(grid.m * j_max, 0.0);
  table.vmoment_.assign(grid.m, 0.0);
  table.fibers_.resize(grid.m);
  const fields::MagneticField& window_field = options.window_field ? *options.window_field : field;
  parallel_for(grid.m, [&](std::size_t i) {
    const double xi = grid.value(i);
    try {
      const auto window = spectral::choose_window(window_field, xi, j_max, options.window);
      const auto op = spectral::assemble(field, xi, window);
      auto pairs = spectral::lowest_eigenpairs(op, j_max);
      for (std::size_t j = 0; j < j_max; ++j) table.lambda_[i * j_max + j] = pairs[j].lambda;
      const auto& phi = pairs[0].phi;
      double s = 0.0;
      for (std::size_t n = 0; n < phi.size(); ++n) s += op.v(n) * phi[n] * phi[n];
      table.vmoment_[i] = window.h() * s;
      table.fibers_[i] = StoredFiber{window, std::move(pairs[0].phi)};
    } catch (const NumericalError& e) {
      std::ostringstream os;
      os << "band sweep failed at xi = " << xi << ": " << e.what();
      throw NumericalError(os.str());
    }
  });
  return table;
}

double velocity_moment(const BandTable& table, std::size_t xi_index) {
  const auto& f = table.fiber(xi_index);
  const double xi = table.xi_grid().value(xi_index);
  double s = 0.0;
  for (std::size_t n = 0; n < f.phi1.size(); ++n) {
    const double v = 2.0 * (xi - table.field().eval_a(f.grid.node(n)));
    s += v * f.phi1[n] * f.phi1[n];
  }
  return f.grid.h() * s;
}

std::vector<double> band_derivative_fd(const BandTable& table, std::size_t j) {
  const std::size_t m = table.size();
  if (m < 5) throw InvalidArgument("band_derivative_fd: need at least 5 xi nodes");
  const auto lam = table.band(j);
  const double h = table.xi_grid().spacing();
  std::vector<double> d(m);
  d[0] = (lam[1] - lam[0]) / h;
  d[m - 1] = (lam[m - 1] - lam[m - 2]) / h;
  for (std::size_t i = 1; i + 1 < m; ++i) d[i] = (lam[i + 1] - lam[i - 1]) / (2.0 * h);
  return d;
}

namespace {

double sample_linear(const StoredFiber& f, double x) {
  const double h = f.grid.h();
  const double s = (x - f.grid.x_left) / h;  // node i+1 sits at s = i+1
  if (!(s > 0.0) || !(s < static_cast<double>(f.grid.n + 1))) return 0.0;
  const auto cell = static_cast<std::size_t>(s);
  const double t = s - static_cast<double>(cell);
  // Grid index g in [0, n+1]; values at g = 0 and g = n+1 are the Dirichlet zeros.
  auto value_at = [&](std::size_t g) { return (g == 0 || g > f.grid.n) ? 0.0 : f.phi1[g - 1]; };
  return (1.0 - t) * value_at(cell) + t * value_at(cell + 1);
}

}  // namespace

double ground_state_overlap(const BandTable& table, std::size_t i, std::size_t k) {
  const auto& a = table.fiber(i);
  const auto& b = table.fiber(k);
  const double lo = std::min(a.grid.x_left, b.grid.x_left);
  const double hi = std::max(a.grid.x_right, b.grid.x_right);
  const double h = std::min(a.grid.h(), b.grid.h());
  const auto n = static_cast<std::size_t>(std::ceil((hi - lo) / h));
  const double step = (hi - lo) / static_cast<double>(n);
  double s = 0.0;
  for (std::size_t p = 1; p < n; ++p) {
    const double x = lo + static_cast<double>(p) * step;
    s += sample_linear(a, x) * sample_linear(b, x);
  }
  return step * s;
}

double band_bound_violation(const BandTable& table) {
  const double bm = table.field().b_minus();
  const double bp = table.field().b_plus();
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < table.size(); ++i) {
    for (std::size_t j = 1; j <= table.j_max(); ++j) {
      const double l = table.lambda(i, j);
      const double odd = 2.0 * static_cast<double>(j) - 1.0;
      worst = std::max({worst, odd * bm - l, l - odd * bp});
    }
  }
  return worst;
}

double first_band_isolation(const BandTable& table) {
  if (table.j_max() < 2) throw InvalidArgument("first_band_isolation: need j_max >= 2");
  const auto l1 = table.band(1);
  const auto l2 = table.band(2);
  return *std::min_element(l2.begin(), l2.end()) - *std::max_element(l1.begin(), l1.end());
}

}  // namespace iwatsuka::bands

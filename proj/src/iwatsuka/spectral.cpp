#include "iwatsuka/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "iwatsuka/error.hpp"

namespace iwatsuka::spectral {

Grid Grid::make(double x_left, double x_right, std::size_t n) {
  if (n < 3) throw InvalidArgument("grid needs at least 3 interior nodes");
  if (!(x_right > x_left) || !std::isfinite(x_left) || !std::isfinite(x_right)) {
    throw InvalidArgument("grid needs finite x_left < x_right");
  }
  return Grid{x_left, x_right, n};
}

std::vector<double> Grid::nodes() const {
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = node(i);
  return x;
}

Grid choose_window(const fields::MagneticField& field, double xi, std::size_t k, const WindowOptions& options) {
  if (!field.gap_admissible() && !field.allow_gap_inadmissible()) {
    throw InvalidArgument("choose_window: field is gap-inadmissible");
  }
  if (k == 0) throw InvalidArgument("choose_window: k must be positive");
  const double center = fields::inverse_a(field, xi);
  const double root_b = std::sqrt(field.b_minus());
  const double required = (2.0 * static_cast<double>(k) + 1.0 + options.margin) * field.b_plus();
  double half = options.half_width_factor / root_b;
  const double limit = options.max_half_width_factor / root_b;
  for (;;) {
    const double ql = xi - field.eval_a(center - half);
    const double qr = xi - field.eval_a(center + half);
    if (ql * ql >= required && qr * qr >= required) break;
    half *= 1.25;
    if (half > limit) {
      std::ostringstream os;
      os << "choose_window: cannot meet the truncation margin at xi = " << xi;
      throw NumericalError(os.str());
    }
  }
  if (!options.lattice) return Grid::make(center - half, center + half, options.n);
  const double h = 2.0 * half / static_cast<double>(options.n + 1);
  const double left = h * std::round((center - half) / h);
  return Grid::make(left, left + static_cast<double>(options.n + 1) * h, options.n);
}

FiberOperator assemble(const std::function<double(double)>& a, double xi, const Grid& grid) {
  FiberOperator op;
  op.xi = xi;
  op.grid = grid;
  const std::size_t n = grid.n;
  const double h = grid.h();
  const double inv_h2 = 1.0 / (h * h);
  op.a_values.resize(n);
  op.matrix.diag.resize(n);
  op.matrix.off.assign(n - 1, -inv_h2);
  for (std::size_t i = 0; i < n; ++i) {
    op.a_values[i] = a(grid.node(i));
    op.matrix.diag[i] = 2.0 * inv_h2 + op.q(i);
  }
  return op;
}

FiberOperator assemble(const fields::MagneticField& field, double xi, const Grid& grid) {
  return assemble([&field](double x) { return field.eval_a(x); }, xi, grid);
}

double inner(const Grid& grid, std::span<const double> u, std::span<const double> v) {
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) s += u[i] * v[i];
  return grid.h() * s;
}

std::vector<EigenPair> lowest_eigenpairs(const FiberOperator& op, std::size_t k) {
  const std::size_t n = op.size();
  if (k == 0 || k > n) throw InvalidArgument("lowest_eigenpairs: k must lie in [1, n]");
  const auto values = tridiag::lowest_eigenvalues(op.matrix, k);
  for (std::size_t j = 1; j < k; ++j) {
    if (values[j] - values[j - 1] < 1e-8) {
      std::ostringstream os;
      os << "lowest_eigenpairs: eigenvalues " << j << " and " << j + 1 << " are not separated at xi = " << op.xi;
      throw NumericalError(os.str());
    }
  }
  const double scale = std::max(op.matrix.norm_inf(), 1.0);
  const double sqrt_h = std::sqrt(op.grid.h());
  std::vector<std::vector<double>> unit_vectors;
  unit_vectors.reserve(k);
  std::vector<EigenPair> pairs(k);
  for (std::size_t j = 0; j < k; ++j) {
    // Deflate against eigenvectors whose eigenvalues are close enough for
    // inverse iteration to lose orthogonality.
    std::vector<std::vector<double>> close;
    for (std::size_t i = j; i-- > 0;) {
      if (values[j] - values[i] > 1e-5 * scale) break;
      close.push_back(unit_vectors[i]);
    }
    auto it = tridiag::inverse_iteration(op.matrix, values[j], close);
    if (!(it.residual <= 1e-9 * std::max(std::abs(values[j]), 1e-3))) {
      std::ostringstream os;
      os << "lowest_eigenpairs: inverse iteration stagnated for eigenvalue " << j + 1 << " at xi = " << op.xi
         << " (residual " << it.residual << ")";
      throw NumericalError(os.str());
    }
    auto& u = it.vector;
    double sign = 1.0;
    if (j == 0) {
      double sum = 0.0;
      for (double x : u) sum += x;
      sign = sum < 0.0 ? -1.0 : 1.0;
    } else {
      double peak = 0.0;
      for (double x : u) peak = std::max(peak, std::abs(x));
      for (double x : u) {
        if (std::abs(x) > 1e-3 * peak) {
          sign = x < 0.0 ? -1.0 : 1.0;
          break;
        }
      }
    }
    if (sign < 0.0) {
      for (double& x : u) x = -x;
    }
    EigenPair p;
    p.lambda = values[j];
    p.residual = it.residual;
    p.phi.resize(n);
    for (std::size_t i = 0; i < n; ++i) p.phi[i] = u[i] / sqrt_h;
    p.norm = std::sqrt(inner(op.grid, p.phi, p.phi));
    pairs[j] = std::move(p);
    unit_vectors.push_back(std::move(u));
  }
  return pairs;
}

Fiber solve_fiber(const fields::MagneticField& field, double xi, std::size_t k, const WindowOptions& options) {
  const std::size_t physical = std::min<std::size_t>(k, 12);
  Fiber f{assemble(field, xi, choose_window(field, xi, physical, options)), {}};
  f.pairs = lowest_eigenpairs(f.op, k);
  return f;
}

}  // namespace iwatsuka::spectral

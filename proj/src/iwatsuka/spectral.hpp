#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "iwatsuka/fields.hpp"
#include "iwatsuka/tridiagonal.hpp"

namespace iwatsuka::spectral {

/// Uniform grid with n interior nodes x_i = x_left + i h, i = 1..n, and
/// homogeneous Dirichlet values at x_left and x_right.
struct Grid {
  double x_left = -1.0;
  double x_right = 1.0;
  std::size_t n = 3;

  static Grid make(double x_left, double x_right, std::size_t n);

  double h() const { return (x_right - x_left) / static_cast<double>(n + 1); }
  /// 0-based interior node: x_left + (i + 1) h.
  double node(std::size_t i) const { return x_left + static_cast<double>(i + 1) * h(); }
  std::vector<double> nodes() const;
  double center() const { return 0.5 * (x_left + x_right); }
};

struct WindowOptions {
  double half_width_factor = 12.0;  // W = c / sqrt(b_minus)
  std::size_t n = 2000;
  double margin = 25.0;             // q at the ends >= (2k + 1 + margin) b_plus
  double max_half_width_factor = 1e4;
  /// Snap the window ends to the lattice x = k h, so that every fiber of a
  /// sweep shares node positions. The centre then moves by at most h / 2.
  bool lattice = false;
};

/// Grid centred at a^{-1}(xi). The half-width starts at c / sqrt(b_minus) and
/// grows until q(x_left), q(x_right) >= (2k + 1 + margin) b_plus.
Grid choose_window(const fields::MagneticField& field, double xi, std::size_t k, const WindowOptions& options = {});

/// h(xi) = -d^2/dx^2 + (xi - a(x))^2 on a grid: 3-point stencil plus diagonal
/// potential.
struct FiberOperator {
  double xi = 0.0;
  Grid grid;
  tridiag::SymTridiag matrix;
  std::vector<double> a_values;  // a at the interior nodes

  std::size_t size() const { return grid.n; }
  double q(std::size_t i) const { return (xi - a_values[i]) * (xi - a_values[i]); }
  /// v(x_i, xi) = 2 (xi - a(x_i)).
  double v(std::size_t i) const { return 2.0 * (xi - a_values[i]); }
};

FiberOperator assemble(const fields::MagneticField& field, double xi, const Grid& grid);
/// Same stencil for an arbitrary primitive a (used for symmetry oracles on
/// profiles outside the field class).
FiberOperator assemble(const std::function<double(double)>& a, double xi, const Grid& grid);

struct EigenPair {
  double lambda = 0.0;
  std::vector<double> phi;  // trapezoid-L2 normalised grid values
  double norm = 1.0;        // trapezoid L2 norm of phi (1 after normalisation)
  double residual = 0.0;    // ||(T - lambda) u||_2 for the Euclidean-unit vector u
};

/// The k lowest eigenpairs: Sturm bisection for the values, inverse iteration
/// for the vectors. The ground state is signed so that its grid sum is
/// positive; higher states so that their first significant entry is positive.
/// Throws NumericalError on stagnating inverse iteration or on eigenvalues
/// closer than 1e-8.
std::vector<EigenPair> lowest_eigenpairs(const FiberOperator& op, std::size_t k);

/// Discrete L2 inner product h * sum u_i v_i (trapezoid with zero ends).
double inner(const Grid& grid, std::span<const double> u, std::span<const double> v);

/// Fiber solution bundle for one xi.
struct Fiber {
  FiberOperator op;
  std::vector<EigenPair> pairs;
};

Fiber solve_fiber(const fields::MagneticField& field, double xi, std::size_t k, const WindowOptions& options = {});

}  // namespace iwatsuka::spectral

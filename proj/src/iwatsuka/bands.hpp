#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "iwatsuka/fields.hpp"
#include "iwatsuka/spectral.hpp"

namespace iwatsuka::bands {

/// Uniform xi sampling: values[i] = xi_min + i * spacing, i < m.
struct XiGrid {
  double xi_min = -1.0;
  double xi_max = 1.0;
  std::size_t m = 2;

  static XiGrid make(double xi_min, double xi_max, std::size_t m);
  /// [-8 sqrt(b+), 8 sqrt(b+)] with 161 nodes.
  static XiGrid default_for(const fields::MagneticField& field);

  double spacing() const { return (xi_max - xi_min) / static_cast<double>(m - 1); }
  double value(std::size_t i) const { return xi_min + static_cast<double>(i) * spacing(); }
  std::vector<double> values() const;
};

/// Ground-state fiber kept for later inner products. Each xi has its own window.
struct StoredFiber {
  spectral::Grid grid;
  std::vector<double> phi1;
};

struct BandOptions {
  spectral::WindowOptions window;
  /// When set, windows are chosen from this field instead of the swept one.
  /// Sweeps of nearby fields then share grids, which keeps parameter
  /// derivatives consistent.
  const fields::MagneticField* window_field = nullptr;
};

/// lambda_j(xi) for j <= j_max and the velocity moment <v phi_1, phi_1> over
/// an xi grid. Band indices in this API are 1-based (j = 1 is the first band).
class BandTable {
 public:
  BandTable(fields::MagneticField field, XiGrid grid, std::size_t j_max);

  const fields::MagneticField& field() const { return field_; }
  const XiGrid& xi_grid() const { return grid_; }
  std::size_t size() const { return grid_.m; }
  std::size_t j_max() const { return j_max_; }

  double lambda(std::size_t i, std::size_t j) const { return lambda_[i * j_max_ + (j - 1)]; }
  /// lambda_j over the whole grid.
  std::vector<double> band(std::size_t j) const;
  double vmoment(std::size_t i) const { return vmoment_[i]; }
  const std::vector<double>& vmoments() const { return vmoment_; }
  const StoredFiber& fiber(std::size_t i) const { return fibers_[i]; }

 private:
  friend BandTable compute_bands(const fields::MagneticField&, const XiGrid&, std::size_t, const BandOptions&);
  fields::MagneticField field_;
  XiGrid grid_;
  std::size_t j_max_;
  std::vector<double> lambda_;  // row-major m x j_max
  std::vector<double> vmoment_;
  std::vector<StoredFiber> fibers_;
};

/// Per-xi window, assembly and eigensolve (parallel over xi). Failures carry
/// the offending xi.
BandTable compute_bands(const fields::MagneticField& field, const XiGrid& grid, std::size_t j_max,
                        const BandOptions& options = {});

/// Trapezoid quadrature of 2 (xi - a(x)) phi_1(x, xi)^2 over the stored window.
double velocity_moment(const BandTable& table, std::size_t xi_index);

/// Central differences of lambda_j along the xi grid, first-order one-sided
/// at the two ends. Requires m >= 5.
std::vector<double> band_derivative_fd(const BandTable& table, std::size_t j);

/// <phi_1(., xi_i), phi_1(., xi_k)> after linear resampling of both vectors
/// onto the union of their windows (zero outside each window).
double ground_state_overlap(const BandTable& table, std::size_t i, std::size_t k);

/// Largest violation of (2j-1) b- <= lambda_j <= (2j-1) b+ over the table
/// (<= 0 when all bounds hold).
double band_bound_violation(const BandTable& table);

/// min_xi lambda_2 - max_xi lambda_1 (needs j_max >= 2).
double first_band_isolation(const BandTable& table);

}  // namespace iwatsuka::bands

#include "iwatsuka/tridiagonal.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "iwatsuka/error.hpp"

namespace iwatsuka::tridiag {
namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

// Smallest admissible pivot magnitude in the Sturm recurrence.
double pivot_floor(const SymTridiag& t) {
  double m = 1.0;
  for (double e : t.off) m = std::max(m, e * e);
  return std::numeric_limits<double>::min() * m;
}

}  // namespace

double SymTridiag::norm_inf() const {
  double m = 0.0;
  const std::size_t n = size();
  for (std::size_t i = 0; i < n; ++i) {
    double row = std::abs(diag[i]);
    if (i > 0) row += std::abs(off[i - 1]);
    if (i + 1 < n) row += std::abs(off[i]);
    m = std::max(m, row);
  }
  return m;
}

std::vector<double> SymTridiag::apply(std::span<const double> x) const {
  const std::size_t n = size();
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = diag[i] * x[i];
    if (i > 0) s += off[i - 1] * x[i - 1];
    if (i + 1 < n) s += off[i] * x[i + 1];
    y[i] = s;
  }
  return y;
}

namespace {

// Sturm recurrence with precomputed squared off-diagonals.
std::size_t sturm_count_impl(std::span<const double> diag, std::span<const double> off2, double floor, double x) {
  const std::size_t n = diag.size();
  std::size_t count = 0;
  double q = diag[0] - x;
  if (std::abs(q) < floor) q = -floor;
  count += q < 0;
  for (std::size_t i = 1; i < n; ++i) {
    q = diag[i] - x - off2[i - 1] / q;
    if (std::abs(q) < floor) q = -floor;
    count += q < 0;
  }
  return count;
}

// Three Sturm counts in one sweep; the independent recurrences overlap in the
// pipeline so a sweep costs about as much as a single count.
std::array<std::size_t, 3> sturm_count3(std::span<const double> diag, std::span<const double> off2, double floor,
                                        const std::array<double, 3>& x) {
  const std::size_t n = diag.size();
  std::array<std::size_t, 3> count{0, 0, 0};
  double q0 = diag[0] - x[0], q1 = diag[0] - x[1], q2 = diag[0] - x[2];
  auto fix = [floor](double& q) {
    if (std::abs(q) < floor) q = -floor;
  };
  fix(q0), fix(q1), fix(q2);
  count[0] += q0 < 0, count[1] += q1 < 0, count[2] += q2 < 0;
  for (std::size_t i = 1; i < n; ++i) {
    const double d = diag[i];
    const double e2 = off2[i - 1];
    q0 = d - x[0] - e2 / q0;
    q1 = d - x[1] - e2 / q1;
    q2 = d - x[2] - e2 / q2;
    fix(q0), fix(q1), fix(q2);
    count[0] += q0 < 0, count[1] += q1 < 0, count[2] += q2 < 0;
  }
  return count;
}

std::vector<double> squared(std::span<const double> v) {
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] * v[i];
  return out;
}

}  // namespace

std::size_t sturm_count(const SymTridiag& t, double x) {
  const auto off2 = squared(t.off);
  return sturm_count_impl(t.diag, off2, pivot_floor(t), x);
}

std::pair<double, double> gershgorin(const SymTridiag& t) {
  const std::size_t n = t.size();
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (std::size_t i = 0; i < n; ++i) {
    double r = 0.0;
    if (i > 0) r += std::abs(t.off[i - 1]);
    if (i + 1 < n) r += std::abs(t.off[i]);
    lo = std::min(lo, t.diag[i] - r);
    hi = std::max(hi, t.diag[i] + r);
  }
  const double pad = 2.0 * kEps * std::max(std::abs(lo), std::abs(hi)) + std::numeric_limits<double>::min();
  return {lo - pad, hi + pad};
}

std::vector<double> lowest_eigenvalues(const SymTridiag& t, std::size_t k) {
  const std::size_t n = t.size();
  if (k == 0 || k > n) throw InvalidArgument("lowest_eigenvalues: k must lie in [1, n]");
  const auto [glo, ghi] = gershgorin(t);
  const auto off2 = squared(t.off);
  const double floor = pivot_floor(t);
  std::vector<double> values(k);
  // lower[j] / upper[j] bracket eigenvalue j; every Sturm count refines the
  // brackets of all later eigenvalues as well.
  std::vector<double> lower(k, glo), upper(k, ghi);
  for (std::size_t j = 0; j < k; ++j) {
    double lo = j > 0 ? std::max(lower[j], values[j - 1]) : lower[j];
    double hi = upper[j];
    auto record = [&](double x, std::size_t c) {
      for (std::size_t i = j + 1; i < std::min(c, k); ++i) upper[i] = std::min(upper[i], x);
      for (std::size_t i = std::max(c, j + 1); i < k; ++i) lower[i] = std::max(lower[i], x);
    };
    for (int it = 0; it < 200; ++it) {
      if (hi - lo <= 2.0 * kEps * std::max(std::abs(lo), std::abs(hi))) break;
      const double step = 0.25 * (hi - lo);
      const std::array<double, 3> x{lo + step, lo + 2.0 * step, lo + 3.0 * step};
      if (!(x[0] > lo && x[2] < hi && x[0] < x[1] && x[1] < x[2])) {
        // Interval too narrow for quadrisection; finish with plain bisection.
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        const std::size_t c = sturm_count_impl(t.diag, off2, floor, mid);
        record(mid, c);
        (c > j ? hi : lo) = mid;
        continue;
      }
      const auto c = sturm_count3(t.diag, off2, floor, x);
      double new_lo = lo, new_hi = hi;
      for (int s3 = 0; s3 < 3; ++s3) {
        record(x[s3], c[s3]);
        if (c[s3] > j) {
          new_hi = std::min(new_hi, x[s3]);
        } else {
          new_lo = std::max(new_lo, x[s3]);
        }
      }
      lo = new_lo;
      hi = new_hi;
    }
    values[j] = 0.5 * (lo + hi);
  }
  return values;
}

template <typename T>
bool solve_general(std::span<const T> sub, std::span<const T> diag, std::span<const T> sup,
                   std::span<T> rhs) {
  const std::size_t n = diag.size();
  if (n == 0) return true;
  std::vector<T> d(diag.begin(), diag.end());
  std::vector<T> du(sup.begin(), sup.end());
  std::vector<T> dl(sub.begin(), sub.end());
  std::vector<T> du2(n > 2 ? n - 2 : 0, T{});
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (std::abs(d[i]) >= std::abs(dl[i])) {
      if (d[i] == T{}) return false;
      const T f = dl[i] / d[i];
      d[i + 1] -= f * du[i];
      rhs[i + 1] -= f * rhs[i];
      dl[i] = T{};
    } else {
      // Row interchange.
      const T f = d[i] / dl[i];
      d[i] = dl[i];
      const T tmp = d[i + 1];
      d[i + 1] = du[i] - f * tmp;
      if (i + 2 < n) {
        du2[i] = du[i + 1];
        du[i + 1] = -f * du2[i];
      }
      du[i] = tmp;
      std::swap(rhs[i], rhs[i + 1]);
      rhs[i + 1] -= f * rhs[i];
    }
  }
  if (d[n - 1] == T{}) return false;
  rhs[n - 1] /= d[n - 1];
  if (n > 1) rhs[n - 2] = (rhs[n - 2] - du[n - 2] * rhs[n - 1]) / d[n - 2];
  if (n > 2) {
    for (std::size_t ii = n - 2; ii-- > 0;) {
      rhs[ii] = (rhs[ii] - du[ii] * rhs[ii + 1] - du2[ii] * rhs[ii + 2]) / d[ii];
    }
  }
  return true;
}

template bool solve_general<double>(std::span<const double>, std::span<const double>,
                                    std::span<const double>, std::span<double>);
template bool solve_general<std::complex<double>>(std::span<const std::complex<double>>,
                                                  std::span<const std::complex<double>>,
                                                  std::span<const std::complex<double>>,
                                                  std::span<std::complex<double>>);

InverseIterationResult inverse_iteration(const SymTridiag& t, double lambda,
                                         std::span<const std::vector<double>> deflate,
                                         int max_iterations) {
  const std::size_t n = t.size();
  const double scale = std::max(t.norm_inf(), 1.0);
  // A tiny shift away from the computed eigenvalue keeps the factorization
  // nonsingular while leaving the amplification enormous.
  const double shift = lambda + 8.0 * kEps * scale;
  std::vector<double> shifted(n);
  for (std::size_t i = 0; i < n; ++i) shifted[i] = t.diag[i] - shift;

  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) {
    // Deterministic start vector with components along every mode.
    v[i] = 1.0 + 0.5 * std::sin(0.7 * static_cast<double>(i) + 0.3);
  }
  auto orthonormalize = [&](std::vector<double>& x) {
    for (const auto& u : deflate) {
      double dot = 0.0;
      for (std::size_t i = 0; i < n; ++i) dot += u[i] * x[i];
      for (std::size_t i = 0; i < n; ++i) x[i] -= dot * u[i];
    }
    double nrm = 0.0;
    for (double xi : x) nrm += xi * xi;
    nrm = std::sqrt(nrm);
    if (nrm == 0.0 || !std::isfinite(nrm)) return false;
    for (double& xi : x) xi /= nrm;
    return true;
  };
  if (!orthonormalize(v)) throw NumericalError("inverse_iteration: degenerate start vector");

  InverseIterationResult out;
  out.iterations = 0;
  out.residual = std::numeric_limits<double>::infinity();
  for (int it = 1; it <= max_iterations; ++it) {
    std::vector<double> rhs = v;
    if (!solve_general<double>(t.off, shifted, t.off, rhs)) {
      // Exact singularity means the shift is an eigenvalue: perturb and retry.
      for (double& d : shifted) d -= 16.0 * kEps * scale;
      continue;
    }
    if (!orthonormalize(rhs)) throw NumericalError("inverse_iteration: iterate collapsed");
    v = std::move(rhs);
    const auto tv = t.apply(v);
    double r = 0.0;
    for (std::size_t i = 0; i < n; ++i) r += (tv[i] - lambda * v[i]) * (tv[i] - lambda * v[i]);
    out.residual = std::sqrt(r);
    out.iterations = it;
    if (it >= 2 && out.residual <= 64.0 * kEps * scale) break;
  }
  out.vector = std::move(v);
  return out;
}

std::vector<std::complex<double>> shifted_solve(const SymTridiag& t, std::complex<double> z,
                                                std::span<const std::complex<double>> f) {
  const std::size_t n = t.size();
  std::vector<std::complex<double>> d(n), o(t.off.begin(), t.off.end());
  for (std::size_t i = 0; i < n; ++i) d[i] = t.diag[i] - z;
  std::vector<std::complex<double>> u(f.begin(), f.end());
  if (!solve_general<std::complex<double>>(o, d, o, u)) {
    throw NumericalError("shifted_solve: singular resolvent at the requested point");
  }
  return u;
}

}  // namespace iwatsuka::tridiag

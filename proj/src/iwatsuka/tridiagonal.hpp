#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace iwatsuka::tridiag {

/// Symmetric tridiagonal matrix: diag has n entries, off has n-1 entries.
struct SymTridiag {
  std::vector<double> diag;
  std::vector<double> off;

  std::size_t size() const { return diag.size(); }
  double norm_inf() const;
  /// y = T x
  std::vector<double> apply(std::span<const double> x) const;
};

/// Number of eigenvalues strictly below x (Sturm sequence count).
std::size_t sturm_count(const SymTridiag& t, double x);

/// Closed interval containing the whole spectrum.
std::pair<double, double> gershgorin(const SymTridiag& t);

/// The k smallest eigenvalues (ascending), each bisected to machine precision.
std::vector<double> lowest_eigenvalues(const SymTridiag& t, std::size_t k);

struct InverseIterationResult {
  std::vector<double> vector;  // unit Euclidean norm
  double residual;             // ||(T - lambda) v||_2
  int iterations;
};

/// Eigenvector for an (accurately known) eigenvalue. The iterate is kept
/// orthogonal to every vector in `deflate`, which should hold the vectors of
/// eigenvalues close to lambda.
InverseIterationResult inverse_iteration(const SymTridiag& t, double lambda,
                                         std::span<const std::vector<double>> deflate,
                                         int max_iterations = 8);

/// Solves a general tridiagonal system by Gaussian elimination with partial
/// pivoting. sub and sup have n-1 entries. Returns false on an exactly singular
/// pivot.
template <typename T>
bool solve_general(std::span<const T> sub, std::span<const T> diag, std::span<const T> sup,
                   std::span<T> rhs);

/// Solves (T - z) u = f for complex z.
std::vector<std::complex<double>> shifted_solve(const SymTridiag& t, std::complex<double> z,
                                                std::span<const std::complex<double>> f);

}  // namespace iwatsuka::tridiag

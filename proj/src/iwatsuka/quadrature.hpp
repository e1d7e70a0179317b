#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace iwatsuka::quad {

/// Composite Simpson weights for m uniformly spaced samples with spacing h.
/// Even m closes the last three panels with the 3/8 rule. m >= 3.
std::vector<double> simpson_weights(std::size_t m, double h);

struct Estimate {
  double value;
  double error;  // |S(h) - S(2h)| / 15
};

/// Simpson integral of uniformly spaced samples plus a step-halving error
/// estimate from the every-other-sample rule.
Estimate simpson(std::span<const double> samples, double h);

/// Running trapezoid integral; out[0] = 0.
std::vector<double> cumulative_trapezoid(std::span<const double> x, std::span<const double> y);

/// Adaptive 61-point Gauss-Kronrod integration of f over [a, b].
double integrate(const std::function<double(double)>& f, double a, double b, double abs_tol = 1e-13,
                 double* error = nullptr);

}  // namespace iwatsuka::quad

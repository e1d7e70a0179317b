#include "iwatsuka/quadrature.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>

#include "iwatsuka/error.hpp"

namespace iwatsuka::quad {

std::vector<double> simpson_weights(std::size_t m, double h) {
  if (m < 3) throw InvalidArgument("simpson_weights: need at least 3 samples");
  std::vector<double> w(m, 0.0);
  const std::size_t simpson_end = (m % 2 == 1) ? m - 1 : m - 4;  // last index covered by 1/3 rule
  for (std::size_t i = 0; i + 2 <= simpson_end; i += 2) {
    w[i] += h / 3.0;
    w[i + 1] += 4.0 * h / 3.0;
    w[i + 2] += h / 3.0;
  }
  if (m % 2 == 0) {
    const std::size_t s = m - 4;
    w[s] += 3.0 * h / 8.0;
    w[s + 1] += 9.0 * h / 8.0;
    w[s + 2] += 9.0 * h / 8.0;
    w[s + 3] += 3.0 * h / 8.0;
  }
  return w;
}

Estimate simpson(std::span<const double> samples, double h) {
  const auto w = simpson_weights(samples.size(), h);
  double fine = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) fine += w[i] * samples[i];
  std::vector<double> coarse_samples;
  for (std::size_t i = 0; i < samples.size(); i += 2) coarse_samples.push_back(samples[i]);
  double err = 0.0;
  if (coarse_samples.size() >= 3) {
    // The coarse rule stops at the last even index; add the leftover panel
    // with the fine trapezoid so both rules cover the same interval.
    const auto wc = simpson_weights(coarse_samples.size(), 2.0 * h);
    double coarse = 0.0;
    for (std::size_t i = 0; i < coarse_samples.size(); ++i) coarse += wc[i] * coarse_samples[i];
    if (samples.size() % 2 == 0) coarse += 0.5 * h * (samples[samples.size() - 2] + samples.back());
    err = std::abs(fine - coarse) / 15.0;
  }
  return {fine, err};
}

std::vector<double> cumulative_trapezoid(std::span<const double> x, std::span<const double> y) {
  std::vector<double> out(x.size(), 0.0);
  for (std::size_t i = 1; i < x.size(); ++i) out[i] = out[i - 1] + 0.5 * (x[i] - x[i - 1]) * (y[i] + y[i - 1]);
  return out;
}

double integrate(const std::function<double(double)>& f, double a, double b, double abs_tol, double* error) {
  if (a == b) {
    if (error) *error = 0.0;
    return 0.0;
  }
  double err = 0.0;
  double l1 = 0.0;
  // Relative tolerance driven from the requested absolute tolerance.
  const double scale = std::max(1.0, std::abs(b - a));
  const double value = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      f, a, b, 30, abs_tol / scale, &err, &l1);
  if (error) *error = err;
  return value;
}

}  // namespace iwatsuka::quad

#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "iwatsuka/bands.hpp"
#include "iwatsuka/current.hpp"
#include "iwatsuka/fields.hpp"

namespace iwatsuka::inverse {

struct CurrentRecord {
  current::ChiProfile chi;
  double theta = 0.0;
  double noise_sigma = 0.0;
};

struct CurrentData {
  std::vector<CurrentRecord> records;
  void validate() const;
};

/// Currents of every profile by `route`, plus optional Gaussian noise of standard
/// deviation sigma drawn from a seeded std::mt19937_64.
CurrentData synthesize(const bands::BandTable& table, const std::vector<current::ChiProfile>& profiles,
                       double sigma = 0.0, unsigned long long seed = 0,
                       current::Route route = current::Route::fiber_quadrature);

/// Unit-norm bumps of half-width `width` centred at first, first + step, ..., last.
std::vector<current::ChiProfile> bump_family(double first, double last, double step, double width);

enum class Anchor { plus_infinity, minus_infinity };

struct Lambda1Estimate {
  std::vector<double> xi;          // bump centres, ascending
  std::vector<double> lambda1;
  std::vector<double> derivative;  // theta_i / ||chi_i||^2
  Anchor anchor = Anchor::plus_infinity;
  double left_end_mismatch = 0.0;  // lambda1.front() - b_minus
};

/// Midpoint deconvolution lambda_1'(c_i) ~ theta_i / ||chi_i||^2, cumulative
/// trapezoid, constant fixed by lambda_1(right end) = b_plus. Throws when the
/// centres leave a gap wider than twice the smallest spacing; warns when the
/// left end misses b_minus by more than tail_tolerance.
Lambda1Estimate recover_lambda1(const CurrentData& data, double b_minus, double b_plus, double tail_tolerance = 2e-2);

struct Lemma1Side {
  double xi = 0.0;
  double lambda1 = 0.0;
  double lambda1_tilde = 0.0;
  double lhs_truncated = 0.0;  // sum_{j <= J} (lambda_j - lambda~_1)^2 <phi~_1, phi_j>^2
  double tail = 0.0;           // ||(T - lambda~_1) phi~_1||^2 - lhs_truncated, clipped at 0
  double rhs = 0.0;            // ||(q~ - q) phi~_1||^2
  double q_difference = 0.0;   // max |q~ - q| on the grid
  double phi_difference = 0.0; // ||phi~_1 - phi_1||_2
};

struct Lemma1Result {
  Lemma1Side plus;
  Lemma1Side minus;
  double residual = 0.0;           // max |lhs + tail - rhs| over both signs
  double relative_residual = 0.0;  // residual / max(rhs, tiny)
  bool q_equal = false;            // q~ = q at +-xi0 within threshold
  bool phi_equal = false;          // phi~_1 = phi_1 at +-xi0 within threshold
  bool consistent() const { return q_equal == phi_equal; }
};

/// Plancherel identity behind the ground-state / potential equivalence at
/// +-xi0, computed on a shared grid for both fields. The j = 1 term is kept,
/// so the identity holds without assuming lambda_1 = lambda~_1. Throws when
/// a~ - a is not compactly supported.
Lemma1Result lemma1_residual(const fields::MagneticField& field, const fields::MagneticField& field_tilde, double xi0,
                             std::size_t j_max, double threshold = 1e-8);

struct Sampled {
  std::vector<double> x;
  std::vector<double> y;
};

/// (xi - a(x))^2 on the given nodes.
Sampled sample_q(const fields::MagneticField& field, double xi, const std::vector<double>& x);

/// q(x, xi) read back from the computed ground state through the eigenvalue
/// equation, q = lambda_1 + phi_1'' / phi_1 (discrete stencil), on the nodes
/// where |phi_1| >= cutoff * max |phi_1|.
Sampled q_from_ground_state(const fields::MagneticField& field, double xi, const spectral::WindowOptions& window,
                            double cutoff = 1e-3);

struct ExtractResult {
  Sampled a;
  std::vector<std::size_t> ambiguous;  // indices resolved by continuity
};

/// a(x) from q(x, xi0) and q(x, -xi0): candidate roots xi0 -+ sqrt(q_plus) are
/// ranked by consistency with q_minus after discarding those that break
/// sign(a) = sign(x). Ties are resolved by linear extrapolation from resolved
/// neighbours; a(0) = 0.
ExtractResult extract_a_from_band_data(const Sampled& q_plus, const Sampled& q_minus, double xi0);

enum class FitStatus { converged, stagnated, max_iterations };
std::string to_string(FitStatus status);

struct FitOptions {
  double support_radius = 0.2;
  std::size_t basis_size = 3;
  double reg = 0.0;
  std::size_t max_iterations = 200;
  double gradient_tolerance = 1e-10;
  /// Table on which the model currents are evaluated. Defaults to a grid over
  /// the union of the chi supports with spacing <= (smallest width) / 8.
  std::optional<bands::XiGrid> xi_grid;
  spectral::WindowOptions window;
  bool allow_outside_regime = false;
  /// Ground truth for the error report.
  std::optional<fields::PerturbationW> truth;
};

struct ReconstructionResult {
  std::vector<double> x;
  std::vector<double> a_recovered;
  std::vector<double> a_true;  // empty without ground truth
  std::vector<double> misfit_history;
  double linf_error = -1.0;    // sup |a~ - a_true| on [-r, r]; -1 without ground truth
  std::string method = "gauss_newton";
  std::vector<double> coefficients;
  std::size_t iterations = 0;
  double gradient_norm = 0.0;
  FitStatus status = FitStatus::max_iterations;
};

/// Model currents (fiber quadrature route) on fields prior + w(c) with windows
/// fixed by the prior, and their exact derivatives in the coefficients.
struct ModelEvaluation {
  std::vector<double> theta;
  std::vector<std::vector<double>> jacobian;  // [record][coefficient]
};
ModelEvaluation evaluate_model(const fields::MagneticField& prior, const fields::PerturbationW& w,
                               const CurrentData& data, const bands::XiGrid& grid,
                               const spectral::WindowOptions& window = {});

/// Slopes of w clipped so that b_minus <= b + w' <= b_plus, shifted to keep
/// w(r) = 0, then re-integrated.
fields::PerturbationW project_admissible(const fields::MagneticField& prior, const fields::PerturbationW& w);

/// Levenberg-Marquardt fit of hat coefficients to current data.
ReconstructionResult fit_field(const CurrentData& data, const fields::MagneticField& prior, const FitOptions& options);

}  // namespace iwatsuka::inverse

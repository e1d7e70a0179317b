#pragma once

#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace iwatsuka::fields {

enum class FieldKind { constant, tanh, smoothed_step, piecewise_linear, perturbed };

std::string to_string(FieldKind kind);
FieldKind field_kind_from_string(const std::string& name);

/// Constraint applied to the perturbed field b~ = b + w'.
enum class AdmissibilityCheck {
  none,      // accept any coefficients
  bounds,    // b_minus <= b~(x) <= b_plus on the check grid
  monotone,  // bounds, and b~ non-decreasing on the check grid
};

std::string to_string(AdmissibilityCheck check);
AdmissibilityCheck admissibility_from_string(const std::string& name);

/// Compactly supported correction w = a~ - a in a hat-function basis. The
/// basis_size interior nodes are uniformly spaced inside [-r, r]; the end
/// nodes -r and r carry no coefficient, so w(+-r) = 0 exactly.
class PerturbationW {
 public:
  PerturbationW() = default;
  PerturbationW(double support_radius, std::vector<double> coefficients);

  /// One hat of the given height on [-r, r] (basis_size 1).
  static PerturbationW single_hat(double support_radius, double height);

  double support_radius() const { return radius_; }
  const std::vector<double>& coefficients() const { return coefficients_; }
  std::size_t basis_size() const { return coefficients_.size(); }
  double spacing() const;
  /// Position of the k-th coefficient node (0-based).
  double node(std::size_t k) const;

  double eval(double x) const;
  /// Right-continuous derivative w'(x).
  double slope(double x) const;
  /// k-th hat function psi_k(x).
  double basis(std::size_t k, double x) const;
  /// max |w| (attained at a node).
  double sup_norm() const;
  bool is_zero() const;

  PerturbationW scaled(double factor) const;

 private:
  double radius_ = 1.0;
  std::vector<double> coefficients_;
};

/// An Iwatsuka field b(x): non-decreasing with limits b_minus, b_plus, together
/// with its primitive a(x) = int_0^x b. Immutable after construction.
class MagneticField {
 public:
  static MagneticField constant(double b);
  /// b = (b+ + b-)/2 + (b+ - b-)/2 tanh(x/scale)
  static MagneticField tanh_profile(double b_minus, double b_plus, double scale = 1.0,
                                    bool allow_gap_inadmissible = false);
  /// C^1 cubic transition (smoothstep) on [center - width, center + width].
  static MagneticField smoothed_step(double b_minus, double b_plus, double center = 0.0,
                                     double width = 1.0, bool allow_gap_inadmissible = false);
  /// Linear interpolation of (x, b) knots, constant outside. Repeated x
  /// values encode jumps.
  static MagneticField piecewise_linear(std::vector<std::pair<double, double>> knots,
                                        bool allow_gap_inadmissible = false);

  FieldKind kind() const { return kind_; }
  double b_minus() const { return b_minus_; }
  double b_plus() const { return b_plus_; }
  bool allow_gap_inadmissible() const { return allow_inadmissible_; }
  /// 0 < b- <= b+ < 3 b- (a constant field is the flat degenerate case).
  bool gap_admissible() const;
  /// 3 b- - b+, the guaranteed separation between the first two bands.
  double spectral_gap() const { return 3.0 * b_minus_ - b_plus_; }

  double eval_b(double x) const;
  double eval_a(double x) const;

  // Profile parameters.
  double scale() const { return scale_; }
  double center() const { return center_; }
  double width() const { return width_; }
  const std::vector<std::pair<double, double>>& knots() const { return knots_; }

  /// Only for kind() == perturbed.
  const MagneticField& base() const;
  const PerturbationW& perturbation() const;
  AdmissibilityCheck admissibility() const { return check_; }

  /// The unperturbed ancestor (the field itself when not perturbed).
  const MagneticField& root() const;

 private:
  MagneticField() = default;
  void validate_limits() const;

  FieldKind kind_ = FieldKind::constant;
  double b_minus_ = 1.0;
  double b_plus_ = 1.0;
  bool allow_inadmissible_ = false;
  double scale_ = 1.0;
  double center_ = 0.0;
  double width_ = 1.0;
  std::vector<std::pair<double, double>> knots_;
  std::vector<double> knot_primitive_;  // int_{x_0}^{x_k} b
  double primitive_at_zero_ = 0.0;
  std::shared_ptr<const MagneticField> base_;
  std::optional<PerturbationW> w_;
  AdmissibilityCheck check_ = AdmissibilityCheck::none;

  friend MagneticField perturb(const MagneticField&, const PerturbationW&, AdmissibilityCheck);
};

/// r0 = sqrt(3 b- - b+) / (2 b+), the support threshold of the uniqueness
/// regime for compact perturbations.
double r0_bound(double b_minus, double b_plus);

/// Field with primitive a + w. Throws InvalidArgument when `check` rejects the
/// induced b~ on a grid of spacing 1e-3 r. Warns when r >= r0_bound.
MagneticField perturb(const MagneticField& field, const PerturbationW& w,
                      AdmissibilityCheck check = AdmissibilityCheck::bounds);

/// Solves a(x) = value by bisection (a is strictly increasing for admissible
/// fields).
double inverse_a(const MagneticField& field, double value);

}  // namespace iwatsuka::fields

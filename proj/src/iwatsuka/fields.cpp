#include "iwatsuka/fields.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "iwatsuka/error.hpp"

namespace iwatsuka::fields {
namespace {

constexpr double kTanhCutoff = 20.0;  // tanh(20) == 1 in double precision

// log cosh(y) without overflow.
double log_cosh(double y) {
  const double ay = std::abs(y);
  return ay + std::log1p(std::exp(-2.0 * ay)) - std::log(2.0);
}

void check_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    std::ostringstream os;
    os << what << " must be positive and finite, got " << v;
    throw InvalidArgument(os.str());
  }
}

}  // namespace

std::string to_string(FieldKind kind) {
  switch (kind) {
    case FieldKind::constant: return "constant";
    case FieldKind::tanh: return "tanh";
    case FieldKind::smoothed_step: return "smoothed_step";
    case FieldKind::piecewise_linear: return "piecewise_linear";
    case FieldKind::perturbed: return "perturbed";
  }
  return "unknown";
}

FieldKind field_kind_from_string(const std::string& name) {
  for (auto k : {FieldKind::constant, FieldKind::tanh, FieldKind::smoothed_step, FieldKind::piecewise_linear,
                 FieldKind::perturbed}) {
    if (to_string(k) == name) return k;
  }
  throw InvalidArgument("unknown field kind '" + name + "'");
}

std::string to_string(AdmissibilityCheck check) {
  switch (check) {
    case AdmissibilityCheck::none: return "none";
    case AdmissibilityCheck::bounds: return "bounds";
    case AdmissibilityCheck::monotone: return "monotone";
  }
  return "unknown";
}

AdmissibilityCheck admissibility_from_string(const std::string& name) {
  for (auto c : {AdmissibilityCheck::none, AdmissibilityCheck::bounds, AdmissibilityCheck::monotone}) {
    if (to_string(c) == name) return c;
  }
  throw InvalidArgument("unknown admissibility check '" + name + "'");
}

// ---------------------------------------------------------------------------
// PerturbationW

PerturbationW::PerturbationW(double support_radius, std::vector<double> coefficients)
    : radius_(support_radius), coefficients_(std::move(coefficients)) {
  check_positive(radius_, "perturbation support_radius");
  if (coefficients_.empty()) throw InvalidArgument("perturbation needs at least one basis coefficient");
  for (double c : coefficients_) {
    if (!std::isfinite(c)) throw InvalidArgument("perturbation coefficients must be finite");
  }
}

PerturbationW PerturbationW::single_hat(double support_radius, double height) {
  return PerturbationW(support_radius, {height});
}

double PerturbationW::spacing() const { return 2.0 * radius_ / static_cast<double>(coefficients_.size() + 1); }

double PerturbationW::node(std::size_t k) const { return -radius_ + static_cast<double>(k + 1) * spacing(); }

double PerturbationW::eval(double x) const {
  if (!(std::abs(x) < radius_)) return 0.0;
  const double dx = spacing();
  const double s = (x + radius_) / dx;
  const auto cell = std::min(static_cast<std::size_t>(s), coefficients_.size());
  const double t = s - static_cast<double>(cell);
  // Node values: index 0 and K+1 are the zero end nodes.
  const double left = cell == 0 ? 0.0 : coefficients_[cell - 1];
  const double right = cell >= coefficients_.size() ? 0.0 : coefficients_[cell];
  return (1.0 - t) * left + t * right;
}

double PerturbationW::slope(double x) const {
  if (x < -radius_ || x >= radius_) return 0.0;
  const double dx = spacing();
  const auto cell = std::min(static_cast<std::size_t>((x + radius_) / dx), coefficients_.size());
  const double left = cell == 0 ? 0.0 : coefficients_[cell - 1];
  const double right = cell >= coefficients_.size() ? 0.0 : coefficients_[cell];
  return (right - left) / dx;
}

double PerturbationW::basis(std::size_t k, double x) const {
  const double d = std::abs(x - node(k)) / spacing();
  return d < 1.0 ? 1.0 - d : 0.0;
}

double PerturbationW::sup_norm() const {
  double m = 0.0;
  for (double c : coefficients_) m = std::max(m, std::abs(c));
  return m;
}

bool PerturbationW::is_zero() const {
  return std::all_of(coefficients_.begin(), coefficients_.end(), [](double c) { return c == 0.0; });
}

PerturbationW PerturbationW::scaled(double factor) const {
  auto c = coefficients_;
  for (double& v : c) v *= factor;
  return PerturbationW(radius_, std::move(c));
}

// ---------------------------------------------------------------------------
// MagneticField

bool MagneticField::gap_admissible() const {
  return b_minus_ > 0.0 && b_minus_ <= b_plus_ && b_plus_ < 3.0 * b_minus_;
}

void MagneticField::validate_limits() const {
  check_positive(b_minus_, "b_minus");
  check_positive(b_plus_, "b_plus");
  if (b_plus_ < b_minus_) throw InvalidArgument("b_plus must not be smaller than b_minus (b is non-decreasing)");
  if (!gap_admissible() && !allow_inadmissible_) {
    std::ostringstream os;
    os << "field is gap-inadmissible: need b_plus < 3 b_minus, got b_minus=" << b_minus_ << " b_plus=" << b_plus_
       << " (set allow_gap_inadmissible to override)";
    throw InvalidArgument(os.str());
  }
}

MagneticField MagneticField::constant(double b) {
  MagneticField f;
  f.kind_ = FieldKind::constant;
  f.b_minus_ = f.b_plus_ = b;
  f.validate_limits();
  return f;
}

MagneticField MagneticField::tanh_profile(double b_minus, double b_plus, double scale, bool allow_gap_inadmissible) {
  MagneticField f;
  f.kind_ = FieldKind::tanh;
  f.b_minus_ = b_minus;
  f.b_plus_ = b_plus;
  f.scale_ = scale;
  f.allow_inadmissible_ = allow_gap_inadmissible;
  check_positive(scale, "tanh scale");
  f.validate_limits();
  return f;
}

MagneticField MagneticField::smoothed_step(double b_minus, double b_plus, double center, double width,
                                           bool allow_gap_inadmissible) {
  MagneticField f;
  f.kind_ = FieldKind::smoothed_step;
  f.b_minus_ = b_minus;
  f.b_plus_ = b_plus;
  f.center_ = center;
  f.width_ = width;
  f.allow_inadmissible_ = allow_gap_inadmissible;
  check_positive(width, "smoothed_step width");
  if (!std::isfinite(center)) throw InvalidArgument("smoothed_step center must be finite");
  f.validate_limits();
  return f;
}

MagneticField MagneticField::piecewise_linear(std::vector<std::pair<double, double>> knots,
                                              bool allow_gap_inadmissible) {
  if (knots.size() < 2) throw InvalidArgument("piecewise_linear needs at least two knots");
  for (std::size_t k = 1; k < knots.size(); ++k) {
    if (knots[k].first < knots[k - 1].first) throw InvalidArgument("piecewise_linear knot positions must be sorted");
    if (knots[k].second < knots[k - 1].second) throw InvalidArgument("piecewise_linear knot values must be non-decreasing");
  }
  MagneticField f;
  f.kind_ = FieldKind::piecewise_linear;
  f.b_minus_ = knots.front().second;
  f.b_plus_ = knots.back().second;
  f.allow_inadmissible_ = allow_gap_inadmissible;
  f.knots_ = std::move(knots);
  f.validate_limits();
  f.knot_primitive_.assign(f.knots_.size(), 0.0);
  for (std::size_t k = 1; k < f.knots_.size(); ++k) {
    const auto [x0, b0] = f.knots_[k - 1];
    const auto [x1, b1] = f.knots_[k];
    f.knot_primitive_[k] = f.knot_primitive_[k - 1] + 0.5 * (x1 - x0) * (b0 + b1);
  }
  f.primitive_at_zero_ = 0.0;
  f.primitive_at_zero_ = f.eval_a(0.0);
  return f;
}

const MagneticField& MagneticField::base() const {
  if (!base_) throw InvalidArgument("field is not perturbed");
  return *base_;
}

const PerturbationW& MagneticField::perturbation() const {
  if (!w_) throw InvalidArgument("field is not perturbed");
  return *w_;
}

const MagneticField& MagneticField::root() const { return base_ ? base_->root() : *this; }

double MagneticField::eval_b(double x) const {
  switch (kind_) {
    case FieldKind::constant:
      return b_minus_;
    case FieldKind::tanh: {
      const double y = x / scale_;
      if (y >= kTanhCutoff) return b_plus_;
      if (y <= -kTanhCutoff) return b_minus_;
      return 0.5 * (b_plus_ + b_minus_) + 0.5 * (b_plus_ - b_minus_) * std::tanh(y);
    }
    case FieldKind::smoothed_step: {
      const double t = (x - (center_ - width_)) / (2.0 * width_);
      if (t <= 0.0) return b_minus_;
      if (t >= 1.0) return b_plus_;
      return b_minus_ + (b_plus_ - b_minus_) * t * t * (3.0 - 2.0 * t);
    }
    case FieldKind::piecewise_linear: {
      if (x < knots_.front().first) return b_minus_;
      if (x >= knots_.back().first) return b_plus_;
      // Right-continuous at jumps: the last knot with position <= x starts the segment.
      auto it = std::upper_bound(knots_.begin(), knots_.end(), x,
                                 [](double v, const std::pair<double, double>& k) { return v < k.first; });
      const auto& [x1, b1] = *it;
      const auto& [x0, b0] = *(it - 1);
      if (x1 == x0) return b1;
      return b0 + (b1 - b0) * (x - x0) / (x1 - x0);
    }
    case FieldKind::perturbed:
      return base_->eval_b(x) + w_->slope(x);
  }
  return b_minus_;
}

double MagneticField::eval_a(double x) const {
  switch (kind_) {
    case FieldKind::constant:
      return b_minus_ * x;
    case FieldKind::tanh: {
      const double mean = 0.5 * (b_plus_ + b_minus_);
      const double half = 0.5 * (b_plus_ - b_minus_);
      return mean * x + half * scale_ * log_cosh(x / scale_);
    }
    case FieldKind::smoothed_step: {
      const double span = 2.0 * width_;
      const double start = center_ - width_;
      auto primitive = [&](double s) {
        // int_{start}^{s} b
        const double t = (s - start) / span;
        if (t <= 0.0) return b_minus_ * (s - start);
        if (t >= 1.0) return b_minus_ * span + 0.5 * (b_plus_ - b_minus_) * span + b_plus_ * (s - start - span);
        return b_minus_ * (s - start) + (b_plus_ - b_minus_) * span * (t * t * t - 0.5 * t * t * t * t);
      };
      return primitive(x) - primitive(0.0);
    }
    case FieldKind::piecewise_linear: {
      double p;
      if (x <= knots_.front().first) {
        p = b_minus_ * (x - knots_.front().first);
      } else if (x >= knots_.back().first) {
        p = knot_primitive_.back() + b_plus_ * (x - knots_.back().first);
      } else {
        auto it = std::upper_bound(knots_.begin(), knots_.end(), x,
                                   [](double v, const std::pair<double, double>& k) { return v < k.first; });
        const std::size_t k = static_cast<std::size_t>(it - knots_.begin()) - 1;
        const auto [x0, b0] = knots_[k];
        const auto [x1, b1] = knots_[k + 1];
        const double bx = x1 == x0 ? b1 : b0 + (b1 - b0) * (x - x0) / (x1 - x0);
        p = knot_primitive_[k] + 0.5 * (x - x0) * (b0 + bx);
      }
      return p - primitive_at_zero_;
    }
    case FieldKind::perturbed:
      return base_->eval_a(x) + w_->eval(x);
  }
  return 0.0;
}

double r0_bound(double b_minus, double b_plus) {
  if (!(b_minus > 0.0) || !(b_plus >= b_minus) || !(b_plus < 3.0 * b_minus)) {
    std::ostringstream os;
    os << "r0_bound: gap-inadmissible pair (b_minus=" << b_minus << ", b_plus=" << b_plus
       << "); need 0 < b_minus <= b_plus < 3 b_minus";
    throw InvalidArgument(os.str());
  }
  return std::sqrt(3.0 * b_minus - b_plus) / (2.0 * b_plus);
}

MagneticField perturb(const MagneticField& field, const PerturbationW& w, AdmissibilityCheck check) {
  if (check != AdmissibilityCheck::none) {
    const double r = w.support_radius();
    const double step = 1e-3 * r;
    const auto count = static_cast<std::size_t>(std::ceil(2.0 * r / step));
    constexpr double tol = 1e-12;
    double previous = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i <= count; ++i) {
      const double x = -r + static_cast<double>(i) * step;
      const double b = field.eval_b(x) + w.slope(x);
      if (b < field.b_minus() - tol || b > field.b_plus() + tol) {
        std::ostringstream os;
        os << "perturbation leaves the field class: b~(" << x << ") = " << b << " outside [" << field.b_minus()
           << ", " << field.b_plus() << "]";
        throw InvalidArgument(os.str());
      }
      if (check == AdmissibilityCheck::monotone && b < previous - tol) {
        std::ostringstream os;
        os << "perturbation leaves the field class: b~ decreases near x = " << x;
        throw InvalidArgument(os.str());
      }
      previous = b;
    }
  }
  if (field.gap_admissible() && field.b_minus() < field.b_plus() &&
      w.support_radius() >= r0_bound(field.b_minus(), field.b_plus())) {
    std::ostringstream os;
    os << "perturbation support radius " << w.support_radius() << " is not below r0 = "
       << r0_bound(field.b_minus(), field.b_plus()) << "; outside the compact-perturbation uniqueness regime";
    warn(os.str());
  }
  MagneticField out;
  out.kind_ = FieldKind::perturbed;
  out.b_minus_ = field.b_minus();
  out.b_plus_ = field.b_plus();
  out.allow_inadmissible_ = field.allow_gap_inadmissible();
  out.base_ = std::make_shared<const MagneticField>(field);
  out.w_ = w;
  out.check_ = check;
  return out;
}

double inverse_a(const MagneticField& field, double value) {
  const double reach = (std::abs(value) + (field.kind() == FieldKind::perturbed ? field.perturbation().sup_norm() : 0.0)) /
                           field.b_minus() + 1.0;
  double lo = -reach, hi = reach;
  if (field.eval_a(lo) > value || field.eval_a(hi) < value) {
    throw NumericalError("inverse_a: root not bracketed (is a increasing?)");
  }
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (field.eval_a(mid) < value) lo = mid; else hi = mid;
  }
  // Pick the endpoint with the smaller residual.
  return std::abs(field.eval_a(lo) - value) <= std::abs(field.eval_a(hi) - value) ? lo : hi;
}

}  // namespace iwatsuka::fields

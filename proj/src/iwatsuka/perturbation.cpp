#include "iwatsuka/perturbation.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "iwatsuka/error.hpp"
#include "iwatsuka/parallel.hpp"
#include "iwatsuka/tridiagonal.hpp"

namespace iwatsuka::perturbation {

using cplx = std::complex<double>;

ContourSpec ContourSpec::default_for(const fields::MagneticField& field) {
  return ContourSpec{0.5 * field.spectral_gap(), 64};
}

void ContourSpec::validate(const fields::MagneticField& field) const {
  if (!(rho > 0.0) || !(rho < field.spectral_gap())) {
    std::ostringstream os;
    os << "contour radius must lie in (0, 3 b_minus - b_plus) = (0, " << field.spectral_gap() << "), got " << rho;
    throw InvalidArgument(os.str());
  }
  if (nodes < 16 || nodes % 2 != 0) throw InvalidArgument("contour nodes must be even and at least 16");
}

namespace {

double angle(std::size_t k, std::size_t nodes) {
  // Offset by half a step so nodes come in conjugate pairs k, N-1-k.
  return 2.0 * std::numbers::pi * (static_cast<double>(k) + 0.5) / static_cast<double>(nodes);
}

void check_contour(const spectral::FiberOperator& op, double center, const ContourSpec& spec) {
  const auto& t = op.matrix;
  const std::size_t inside = tridiag::sturm_count(t, center + spec.rho) - tridiag::sturm_count(t, center - spec.rho);
  if (inside != 1) {
    std::ostringstream os;
    os << "contour of radius " << spec.rho << " around " << center << " encloses " << inside
       << " eigenvalues at xi = " << op.xi;
    throw NumericalError(os.str());
  }
  for (std::size_t k = 0; k < spec.nodes / 2; ++k) {
    const double th = angle(k, spec.nodes);
    if (spec.rho * std::abs(std::sin(th)) >= 1e-6) continue;
    const double re = center + spec.rho * std::cos(th);
    if (tridiag::sturm_count(t, re + 1e-6) != tridiag::sturm_count(t, re - 1e-6)) {
      throw NumericalError("contour node within 1e-6 of an eigenvalue");
    }
  }
}

std::vector<cplx> complexify(std::span<const double> f) { return {f.begin(), f.end()}; }

double dot(const spectral::Grid& g, std::span<const double> u, std::span<const double> v) {
  return spectral::inner(g, u, v);
}

}  // namespace

std::vector<double> project_contour(const spectral::FiberOperator& op, double lambda1, const ContourSpec& spec,
                                    std::span<const double> f) {
  if (f.size() != op.size()) throw InvalidArgument("project_contour: vector length mismatch");
  check_contour(op, lambda1, spec);
  const auto rhs = complexify(f);
  std::vector<double> out(op.size(), 0.0);
  const double scale = -2.0 * spec.rho / static_cast<double>(spec.nodes);
  for (std::size_t k = 0; k < spec.nodes / 2; ++k) {
    const cplx e = std::polar(1.0, angle(k, spec.nodes));
    const auto u = tridiag::shifted_solve(op.matrix, lambda1 + spec.rho * e, rhs);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += scale * (e * u[i]).real();
  }
  return out;
}

std::vector<double> project_direct(const spectral::FiberOperator& op, std::span<const double> phi1,
                                   std::span<const double> f) {
  const double c = dot(op.grid, phi1, f);
  std::vector<double> out(phi1.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = c * phi1[i];
  return out;
}

Problem::Problem(fields::MagneticField field, fields::PerturbationW w, double xi, ContourSpec spec,
                 spectral::WindowOptions window)
    : field_(std::move(field)), w_(std::move(w)), xi_(xi), spec_(spec) {
  if (!field_.gap_admissible()) throw InvalidArgument("perturbation experiments need a gap-admissible field");
  spec_.validate(field_);
  op_ = spectral::assemble(field_, xi, spectral::choose_window(field_, xi, 12, window));
  const auto pairs = spectral::lowest_eigenpairs(op_, 2);
  lambda1_ = pairs[0].lambda;
  lambda2_ = pairs[1].lambda;
  if (!(lambda2_ - lambda1_ > spec_.rho)) {
    std::ostringstream os;
    os << "gap lambda_2 - lambda_1 = " << lambda2_ - lambda1_ << " does not exceed the contour radius at xi = " << xi;
    throw NumericalError(os.str());
  }
  phi1_ = pairs[0].phi;
  const std::size_t n = op_.size();
  omega_.resize(n);
  w_values_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    w_values_[i] = w_.eval(op_.grid.node(i));
    omega_[i] = -op_.v(i) * w_values_[i];
  }
}

double Problem::delta() const { return w_.sup_norm(); }

double Problem::M() const {
  const double r = w_.support_radius();
  return 2.0 * std::max(std::abs(xi_ - field_.eval_a(-r)), std::abs(xi_ - field_.eval_a(r)));
}

double Problem::C() const { return delta() * (M() + delta()); }

double Problem::eps_star_gap() const {
  const double c = C();
  if (c == 0.0) return 1.0;
  return std::min(1.0, (field_.spectral_gap() - spec_.rho) / c);
}

double Problem::eps_star() const {
  const double c = C();
  if (c == 0.0) return 1.0;
  return std::min(eps_star_gap(), spec_.rho / c);
}

double Problem::ell_sup(double epsilon) const {
  double m = 0.0;
  for (std::size_t i = 0; i < omega_.size(); ++i) {
    m = std::max(m, std::abs(epsilon * omega_[i] + epsilon * epsilon * w_values_[i] * w_values_[i]));
  }
  return m;
}

spectral::FiberOperator Problem::perturbed_op(double epsilon) const {
  spectral::FiberOperator p = op_;
  for (std::size_t i = 0; i < p.size(); ++i) {
    p.matrix.diag[i] += epsilon * omega_[i] + epsilon * epsilon * w_values_[i] * w_values_[i];
    p.a_values[i] += epsilon * w_values_[i];
  }
  return p;
}

double Problem::lambda_eps1(double epsilon) const {
  return tridiag::lowest_eigenvalues(perturbed_op(epsilon).matrix, 1).front();
}

FValue Problem::F(double epsilon) const {
  const double limit = eps_star();
  if (!(epsilon > 0.0) || !(epsilon < limit)) {
    std::ostringstream os;
    os << "epsilon = " << epsilon << " outside the admissible range (0, " << limit << ") at xi = " << xi_;
    throw InvalidArgument(os.str());
  }
  FValue out;
  out.epsilon = epsilon;
  if (w_.is_zero()) {
    out.lambda_eps1 = lambda1_;
    out.projection_weight = 1.0;
    return out;
  }
  const auto pert = perturbed_op(epsilon);
  out.lambda_eps1 = tridiag::lowest_eigenvalues(pert.matrix, 1).front();
  // The contour stays centred at lambda_1: |lambda_eps1 - lambda_1| <= eps C < rho.
  const auto p = project_contour(pert, lambda1_, spec_, phi1_);
  std::vector<double> ell_phi(phi1_.size());
  for (std::size_t i = 0; i < ell_phi.size(); ++i) {
    ell_phi[i] = (epsilon * omega_[i] + epsilon * epsilon * w_values_[i] * w_values_[i]) * phi1_[i];
  }
  out.projection_weight = dot(op_.grid, p, phi1_);
  out.value = (out.lambda_eps1 - lambda1_) * out.projection_weight;
  out.inner_form = dot(op_.grid, p, ell_phi);
  return out;
}

double Problem::A1() const {
  double s = 0.0;
  for (std::size_t i = 0; i < phi1_.size(); ++i) s += omega_[i] * phi1_[i] * phi1_[i];
  return op_.grid.h() * s;
}

A2Sum Problem::A2_sum(std::size_t j_max) const {
  if (j_max < 6 || j_max > op_.size()) throw InvalidArgument("A2_sum: j_max must lie in [6, n]");
  A2Sum out;
  out.j_max = j_max;
  std::vector<double> wphi(phi1_.size()), omphi(phi1_.size());
  for (std::size_t i = 0; i < phi1_.size(); ++i) {
    wphi[i] = w_values_[i] * phi1_[i];
    omphi[i] = omega_[i] * phi1_[i];
  }
  out.w_norm_sq = dot(op_.grid, wphi, wphi);
  out.omega_norm_sq = dot(op_.grid, omphi, omphi);
  if (w_.is_zero()) return out;
  const auto pairs = spectral::lowest_eigenpairs(op_, j_max);
  double captured = 0.0;
  double sum = 0.0;
  for (std::size_t j = 0; j < j_max; ++j) {
    const double oj = dot(op_.grid, omphi, pairs[j].phi);
    captured += oj * oj;
    if (j > 0) sum += oj * oj / (pairs[j].lambda - pairs[0].lambda);
  }
  out.value = out.w_norm_sq - sum;
  const double gap = (2.0 * static_cast<double>(j_max) + 1.0) * field_.b_minus() - field_.b_plus();
  out.tail_bound = j_max == op_.size() ? 0.0 : std::max(0.0, out.omega_norm_sq - captured) / gap;
  return out;
}

double Problem::A2_contour() const {
  if (w_.is_zero()) return 0.0;
  check_contour(op_, lambda1_, spec_);
  std::vector<double> w2phi(phi1_.size()), omphi(phi1_.size());
  for (std::size_t i = 0; i < phi1_.size(); ++i) {
    w2phi[i] = w_values_[i] * w_values_[i] * phi1_[i];
    omphi[i] = omega_[i] * phi1_[i];
  }
  const auto p = project_contour(op_, lambda1_, spec_, phi1_);
  const double first = dot(op_.grid, p, w2phi);
  const auto phi_c = complexify(phi1_);
  const double h = op_.grid.h();
  double second = 0.0;
  const double scale = 2.0 * spec_.rho / static_cast<double>(spec_.nodes);
  for (std::size_t k = 0; k < spec_.nodes / 2; ++k) {
    const cplx e = std::polar(1.0, angle(k, spec_.nodes));
    const cplx z = lambda1_ + spec_.rho * e;
    auto g = tridiag::shifted_solve(op_.matrix, z, phi_c);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] *= omega_[i];
    const auto u = tridiag::shifted_solve(op_.matrix, z, g);
    cplx integrand = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) integrand += u[i] * omphi[i];
    second += scale * (e * (h * integrand)).real();
  }
  return first + second;
}

PolyFit Problem::fit(std::span<const double> epsilons, std::size_t degree) const {
  if (epsilons.size() < degree + 2) throw InvalidArgument("fit: need at least degree + 2 epsilons");
  const double emax = *std::max_element(epsilons.begin(), epsilons.end());
  const auto rows = static_cast<Eigen::Index>(epsilons.size());
  const auto cols = static_cast<Eigen::Index>(degree + 1);
  Eigen::MatrixXd A(rows, cols);
  Eigen::VectorXd b(rows);
  std::vector<double> values(epsilons.size());
  for (Eigen::Index r = 0; r < rows; ++r) {
    const double e = epsilons[static_cast<std::size_t>(r)];
    const auto fv = F(e);
    values[static_cast<std::size_t>(r)] = fv.inner_form;
    b(r) = fv.inner_form / e;
    for (Eigen::Index c = 0; c < cols; ++c) A(r, c) = std::pow(e / emax, static_cast<double>(c));
  }
  const Eigen::VectorXd c = A.colPivHouseholderQr().solve(b);
  PolyFit out;
  out.coefficients.resize(degree + 1);
  for (std::size_t k = 0; k <= degree; ++k) {
    out.coefficients[k] = c(static_cast<Eigen::Index>(k)) / std::pow(emax, static_cast<double>(k));
  }
  for (std::size_t r = 0; r < epsilons.size(); ++r) {
    double model = 0.0;
    for (std::size_t k = degree + 1; k-- > 0;) model = model * epsilons[r] + out.coefficients[k];
    out.residual = std::max(out.residual, std::abs(model * epsilons[r] - values[r]));
  }
  return out;
}

double F_xi(const fields::MagneticField& field, const fields::PerturbationW& w, double xi, double epsilon,
            const ContourSpec& spec) {
  const Problem p(field, w, xi, spec);
  const auto fv = p.F(epsilon);
  if (std::abs(fv.value - fv.inner_form) > 1e-8 * (1.0 + std::abs(fv.value))) {
    std::ostringstream os;
    os << "F_xi: the two forms disagree at xi = " << xi << ", epsilon = " << epsilon << " (" << fv.value << " vs "
       << fv.inner_form << ")";
    throw NumericalError(os.str());
  }
  return fv.value;
}

double A2_sum(const fields::MagneticField& field, const fields::PerturbationW& w, double xi, std::size_t j_max) {
  return Problem(field, w, xi, ContourSpec::default_for(field)).A2_sum(j_max).value;
}

double r_kappa(double b_minus, double b_plus, double kappa) {
  if (!(kappa > 0.0 && kappa < 1.0)) throw InvalidArgument("kappa must lie in (0, 1)");
  return std::sqrt(1.0 - kappa) * std::sqrt(3.0 * b_minus - b_plus) / (2.0 * b_plus);
}

std::pair<double, double> kappa_window(const fields::MagneticField& field, double r, double kappa) {
  if (!field.gap_admissible() || field.spectral_gap() <= 0.0) throw InvalidArgument("kappa_window: gap-inadmissible field");
  const double rk = r_kappa(field.b_minus(), field.b_plus(), kappa);
  if (!(r >= 0.0) || !(r < rk)) {
    std::ostringstream os;
    os << "kappa_window: need 0 <= r < r(kappa) = " << rk << ", got r = " << r;
    throw InvalidArgument(os.str());
  }
  const double x = field.b_plus() * (rk - r);
  return {-x, x};
}

double v_sup_on_support(const fields::MagneticField& field, double xi, double r) {
  constexpr int samples = 1000;
  double m = 0.0;
  for (int i = 0; i <= samples; ++i) {
    const double x = -r + 2.0 * r * i / samples;
    m = std::max(m, std::abs(2.0 * (xi - field.eval_a(x))));
  }
  return m;
}

std::vector<KappaRow> kappa_positivity(const fields::MagneticField& field, const fields::PerturbationW& w,
                                       double kappa, std::size_t count, std::size_t j_max) {
  if (count == 0) throw InvalidArgument("kappa_positivity: count must be positive");
  const double r = w.support_radius();
  const auto win = kappa_window(field, r, kappa);
  const double bound = std::sqrt(1.0 - kappa) * std::sqrt(field.spectral_gap());
  std::vector<KappaRow> rows(count);
  parallel_for(count, [&](std::size_t i) {
    KappaRow row;
    row.xi = win.first + (win.second - win.first) * static_cast<double>(i + 1) / static_cast<double>(count + 1);
    const Problem p(field, w, row.xi, ContourSpec::default_for(field));
    const auto s = p.A2_sum(j_max);
    row.A2 = s.value;
    row.tail_bound = s.tail_bound;
    row.w_norm_sq = s.w_norm_sq;
    row.margin = s.value - kappa * s.w_norm_sq + s.tail_bound;
    row.v_sup = v_sup_on_support(field, row.xi, r);
    row.v_bound = bound;
    rows[i] = row;
  });
  return rows;
}

PerturbReport perturb_report(const fields::MagneticField& field, const fields::PerturbationW& w, double xi,
                             std::span<const double> epsilons, std::optional<double> kappa, std::size_t j_max,
                             const ContourSpec& spec, const spectral::WindowOptions& window) {
  const Problem p(field, w, xi, spec, window);
  PerturbReport rep;
  rep.xi = xi;
  rep.C = p.C();
  rep.eps_star = p.eps_star();
  rep.lambda1 = p.lambda1();
  rep.A1 = p.A1();
  for (double e : epsilons) {
    const auto fv = p.F(e);
    rep.epsilons.push_back(e);
    rep.lambda_eps1.push_back(fv.lambda_eps1);
    rep.F_values.push_back(fv.value);
    rep.F_inner.push_back(fv.inner_form);
  }
  const auto s = p.A2_sum(j_max);
  rep.A2 = s.value;
  rep.A2_tail_bound = s.tail_bound;
  rep.A2_contour = p.A2_contour();
  rep.A2_fit = epsilons.size() >= 5 ? p.fit(epsilons).coefficients[1] : std::numeric_limits<double>::quiet_NaN();
  rep.kappa = kappa;
  if (kappa) rep.window = kappa_window(field, w.support_radius(), *kappa);
  return rep;
}

}  // namespace iwatsuka::perturbation

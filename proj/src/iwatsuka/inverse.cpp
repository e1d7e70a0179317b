#include "iwatsuka/inverse.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>

#include "iwatsuka/error.hpp"
#include "iwatsuka/parallel.hpp"
#include "iwatsuka/quadrature.hpp"
#include "iwatsuka/tridiagonal.hpp"

namespace iwatsuka::inverse {

void CurrentData::validate() const {
  if (records.empty()) throw InvalidArgument("current data has no records");
  for (const auto& r : records) {
    r.chi.validate();
    if (!std::isfinite(r.theta)) throw InvalidArgument("current data contains a non-finite theta");
    if (!(r.noise_sigma >= 0.0)) throw InvalidArgument("noise_sigma must be non-negative");
  }
}

CurrentData synthesize(const bands::BandTable& table, const std::vector<current::ChiProfile>& profiles, double sigma,
                       unsigned long long seed, current::Route route) {
  if (!(sigma >= 0.0)) throw InvalidArgument("noise sigma must be non-negative");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  CurrentData data;
  for (const auto& chi : profiles) {
    double theta = current::theta(table, chi, route).theta;
    if (sigma > 0.0) theta += sigma * normal(rng);
    data.records.push_back({chi, theta, sigma});
  }
  return data;
}

std::vector<current::ChiProfile> bump_family(double first, double last, double step, double width) {
  if (!(step > 0.0) || !(last >= first)) throw InvalidArgument("bump_family: need step > 0 and last >= first");
  const auto count = static_cast<std::size_t>(std::llround((last - first) / step)) + 1;
  std::vector<current::ChiProfile> out;
  for (std::size_t i = 0; i < count; ++i) {
    current::ChiProfile chi;
    chi.center = first + static_cast<double>(i) * step;
    chi.width = width;
    chi.amplitude = 1.0 / std::sqrt(chi.norm_squared());
    out.push_back(chi);
  }
  return out;
}

Lambda1Estimate recover_lambda1(const CurrentData& data, double b_minus, double b_plus, double tail_tolerance) {
  data.validate();
  if (data.records.size() < 2) throw InvalidArgument("recover_lambda1: need at least two bumps");
  if (!(b_minus > 0.0) || !(b_plus >= b_minus)) throw InvalidArgument("recover_lambda1: need 0 < b_minus <= b_plus");
  std::vector<const CurrentRecord*> recs;
  for (const auto& r : data.records) recs.push_back(&r);
  std::sort(recs.begin(), recs.end(), [](auto* a, auto* b) { return a->chi.center < b->chi.center; });
  double min_gap = std::numeric_limits<double>::infinity();
  double max_gap = 0.0;
  for (std::size_t i = 1; i < recs.size(); ++i) {
    const double g = recs[i]->chi.center - recs[i - 1]->chi.center;
    min_gap = std::min(min_gap, g);
    max_gap = std::max(max_gap, g);
  }
  if (!(min_gap > 0.0)) throw InvalidArgument("recover_lambda1: bump centres must be distinct");
  if (max_gap > 2.0 * min_gap * (1.0 + 1e-9)) {
    std::ostringstream os;
    os << "recover_lambda1: bump coverage has a gap of " << max_gap << " (spacing " << min_gap << ")";
    throw InvalidArgument(os.str());
  }
  for (auto* r : recs) {
    if (r->chi.width > 2.0 * max_gap * (1.0 + 1e-9)) {
      throw InvalidArgument("recover_lambda1: bump half-width exceeds twice the centre spacing");
    }
  }
  Lambda1Estimate est;
  for (auto* r : recs) {
    est.xi.push_back(r->chi.center);
    est.derivative.push_back(r->theta / r->chi.norm_squared());
  }
  est.lambda1 = quad::cumulative_trapezoid(est.xi, est.derivative);
  const double shift = b_plus - est.lambda1.back();
  for (double& l : est.lambda1) l += shift;
  est.left_end_mismatch = est.lambda1.front() - b_minus;
  if (std::abs(est.left_end_mismatch) > tail_tolerance) {
    std::ostringstream os;
    os << "recovered lambda_1 at the left end differs from b_minus by " << est.left_end_mismatch;
    warn(os.str());
  }
  return est;
}

namespace {

double perturbation_radius(const fields::MagneticField& f) {
  return f.kind() == fields::FieldKind::perturbed ? f.perturbation().support_radius() : 0.0;
}

void check_compact_difference(const fields::MagneticField& a, const fields::MagneticField& b) {
  const double radius = std::max(perturbation_radius(a), perturbation_radius(b));
  constexpr int samples = 4000;
  for (int i = 0; i <= samples; ++i) {
    const double x = -60.0 + 120.0 * i / samples;
    if (std::abs(x) <= radius) continue;
    const double va = a.eval_a(x);
    const double vb = b.eval_a(x);
    if (std::abs(va - vb) > 1e-12 * (1.0 + std::abs(va))) {
      std::ostringstream os;
      os << "the two potentials differ at x = " << x << ", outside any compact perturbation support";
      throw InvalidArgument(os.str());
    }
  }
}

Lemma1Side lemma1_side(const fields::MagneticField& field, const fields::MagneticField& tilde, double xi,
                       std::size_t j_max) {
  const auto grid = spectral::choose_window(field, xi, std::min<std::size_t>(j_max, 12));
  if (j_max > grid.n) throw InvalidArgument("lemma1_residual: j_max exceeds the grid size");
  const auto op = spectral::assemble(field, xi, grid);
  const auto opt = spectral::assemble(tilde, xi, grid);
  const auto pairs = spectral::lowest_eigenpairs(op, j_max);
  const auto tp = spectral::lowest_eigenpairs(opt, 1);
  const auto& pt = tp[0].phi;
  Lemma1Side s;
  s.xi = xi;
  s.lambda1 = pairs[0].lambda;
  s.lambda1_tilde = tp[0].lambda;
  for (const auto& p : pairs) {
    const double c = spectral::inner(grid, pt, p.phi);
    const double d = p.lambda - s.lambda1_tilde;
    s.lhs_truncated += d * d * c * c;
  }
  if (j_max < grid.n) {
    auto y = op.matrix.apply(pt);
    for (std::size_t i = 0; i < y.size(); ++i) y[i] -= s.lambda1_tilde * pt[i];
    s.tail = std::max(0.0, spectral::inner(grid, y, y) - s.lhs_truncated);
  }
  double rhs = 0.0;
  double diff = 0.0;
  for (std::size_t i = 0; i < grid.n; ++i) {
    const double dq = opt.q(i) - op.q(i);
    rhs += dq * dq * pt[i] * pt[i];
    s.q_difference = std::max(s.q_difference, std::abs(dq));
    const double dp = pt[i] - pairs[0].phi[i];
    diff += dp * dp;
  }
  s.rhs = grid.h() * rhs;
  s.phi_difference = std::sqrt(grid.h() * diff);
  return s;
}

}  // namespace

Lemma1Result lemma1_residual(const fields::MagneticField& field, const fields::MagneticField& field_tilde, double xi0,
                             std::size_t j_max, double threshold) {
  if (!(xi0 > 0.0)) throw InvalidArgument("lemma1_residual: xi0 must be positive");
  if (j_max < 2) throw InvalidArgument("lemma1_residual: j_max must be at least 2");
  check_compact_difference(field, field_tilde);
  Lemma1Result r;
  r.plus = lemma1_side(field, field_tilde, xi0, j_max);
  r.minus = lemma1_side(field, field_tilde, -xi0, j_max);
  double rel = 0.0;
  for (const auto* s : {&r.plus, &r.minus}) {
    const double res = std::abs(s->lhs_truncated + s->tail - s->rhs);
    r.residual = std::max(r.residual, res);
    rel = std::max(rel, s->rhs > 0.0 ? res / s->rhs : res);
  }
  r.relative_residual = rel;
  r.q_equal = std::max(r.plus.q_difference, r.minus.q_difference) <= threshold;
  r.phi_equal = std::max(r.plus.phi_difference, r.minus.phi_difference) <= threshold;
  return r;
}

Sampled sample_q(const fields::MagneticField& field, double xi, const std::vector<double>& x) {
  Sampled s{x, std::vector<double>(x.size())};
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = xi - field.eval_a(x[i]);
    s.y[i] = d * d;
  }
  return s;
}

Sampled q_from_ground_state(const fields::MagneticField& field, double xi, const spectral::WindowOptions& window,
                            double cutoff) {
  if (!(cutoff > 0.0 && cutoff < 1.0)) throw InvalidArgument("q_from_ground_state: cutoff must lie in (0, 1)");
  const auto fiber = spectral::solve_fiber(field, xi, 1, window);
  const auto& phi = fiber.pairs.front().phi;
  const double lambda = fiber.pairs.front().lambda;
  const auto& grid = fiber.op.grid;
  const double h = grid.h();
  double peak = 0.0;
  for (double p : phi) peak = std::max(peak, std::abs(p));
  Sampled out;
  const std::size_t n = phi.size();
  for (std::size_t p = 0; p < n; ++p) {
    if (std::abs(phi[p]) < cutoff * peak) continue;
    const double left = p > 0 ? phi[p - 1] : 0.0;
    const double right = p + 1 < n ? phi[p + 1] : 0.0;
    out.x.push_back(grid.node(p));
    out.y.push_back(lambda + (left - 2.0 * phi[p] + right) / (h * h * phi[p]));
  }
  return out;
}

ExtractResult extract_a_from_band_data(const Sampled& q_plus, const Sampled& q_minus, double xi0) {
  const std::size_t n = q_plus.x.size();
  if (!(xi0 > 0.0)) throw InvalidArgument("extract: xi0 must be positive");
  if (n == 0 || q_plus.y.size() != n || q_minus.x.size() != n || q_minus.y.size() != n) {
    throw InvalidArgument("extract: q_plus and q_minus must share one non-empty grid");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (q_plus.x[i] != q_minus.x[i]) throw InvalidArgument("extract: q_plus and q_minus must share one grid");
    if (i > 0 && !(q_plus.x[i] > q_plus.x[i - 1])) throw InvalidArgument("extract: grid must be increasing");
  }
  ExtractResult out;
  out.a.x = q_plus.x;
  out.a.y.assign(n, 0.0);
  std::vector<bool> resolved(n, false);
  std::vector<std::array<double, 2>> cands(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = q_plus.x[i];
    if (x == 0.0) {
      resolved[i] = true;
      continue;
    }
    const double s = std::sqrt(std::max(q_plus.y[i], 0.0));
    cands[i] = {xi0 - s, xi0 + s};
    const double tie = 1e-12 * (1.0 + q_minus.y[i] + q_plus.y[i] + 4.0 * xi0 * xi0);
    double err[2];
    bool feasible[2];
    for (int k = 0; k < 2; ++k) {
      const double c = cands[i][k];
      const double d = xi0 + c;
      err[k] = std::abs(d * d - q_minus.y[i]);
      feasible[k] = c * x >= -1e-12 * (1.0 + std::abs(c)) * std::abs(x);
    }
    if (feasible[0] != feasible[1]) {
      out.a.y[i] = feasible[0] ? cands[i][0] : cands[i][1];
      resolved[i] = true;
    } else if (std::abs(err[0] - err[1]) > tie) {
      out.a.y[i] = err[0] < err[1] ? cands[i][0] : cands[i][1];
      resolved[i] = true;
    } else {
      out.ambiguous.push_back(i);
    }
  }
  // a is Lipschitz, so unresolved points follow the linear trend of their
  // resolved neighbours.
  auto predict = [&](std::size_t i) -> std::optional<double> {
    std::vector<std::size_t> left, right;
    for (std::size_t k = i; k-- > 0 && left.size() < 2;) {
      if (resolved[k]) left.push_back(k);
    }
    for (std::size_t k = i + 1; k < n && right.size() < 2; ++k) {
      if (resolved[k]) right.push_back(k);
    }
    auto line = [&](std::size_t p, std::size_t q) {
      const double t = (out.a.x[i] - out.a.x[p]) / (out.a.x[q] - out.a.x[p]);
      return out.a.y[p] + t * (out.a.y[q] - out.a.y[p]);
    };
    if (!left.empty() && !right.empty()) return line(left[0], right[0]);
    if (left.size() == 2) return line(left[1], left[0]);
    if (right.size() == 2) return line(right[0], right[1]);
    return std::nullopt;
  };
  for (std::size_t i : out.ambiguous) {
    const auto p = predict(i);
    if (!p) throw NumericalError("extract: ambiguous points could not be resolved by continuity");
    out.a.y[i] = std::abs(cands[i][0] - *p) <= std::abs(cands[i][1] - *p) ? cands[i][0] : cands[i][1];
    resolved[i] = true;
  }
  return out;
}

std::string to_string(FitStatus status) {
  switch (status) {
    case FitStatus::converged: return "converged";
    case FitStatus::stagnated: return "stagnated";
    case FitStatus::max_iterations: return "max_iterations";
  }
  return "unknown";
}

ModelEvaluation evaluate_model(const fields::MagneticField& prior, const fields::PerturbationW& w,
                               const CurrentData& data, const bands::XiGrid& grid,
                               const spectral::WindowOptions& window) {
  const auto field = fields::perturb(prior, w, fields::AdmissibilityCheck::none);
  bands::BandOptions opts;
  opts.window = window;
  opts.window_field = &prior;
  const auto table = bands::compute_bands(field, grid, 1, opts);
  const std::size_t m = grid.m;
  const std::size_t K = w.basis_size();
  // Derivative of the velocity moment <v phi, phi> with respect to c_k:
  //   -2 <psi_k phi, phi> + 2 <v psi_k phi, u>,  u = R (v - lambda') phi,
  // where R is the reduced resolvent of the fiber at lambda_1.
  std::vector<double> dvm(m * K, 0.0);
  const double r = w.support_radius();
  parallel_for(m, [&](std::size_t i) {
    const auto& f = table.fiber(i);
    const double xi = grid.value(i);
    const auto op = spectral::assemble(field, xi, f.grid);
    const std::size_t n = f.grid.n;
    const double h = f.grid.h();
    const auto& phi = f.phi1;
    const double lambda = table.lambda(i, 1);
    const double slope = table.vmoment(i);
    std::vector<double> sub(op.matrix.off), sup(op.matrix.off), diag(op.matrix.diag), u(n);
    for (std::size_t p = 0; p < n; ++p) {
      diag[p] -= lambda;
      u[p] = (op.v(p) - slope) * phi[p];
    }
    if (!tridiag::solve_general<double>(sub, diag, sup, u)) {
      std::ostringstream os;
      os << "reduced resolvent solve failed at xi = " << xi;
      throw NumericalError(os.str());
    }
    const double along = spectral::inner(f.grid, u, phi);
    for (std::size_t p = 0; p < n; ++p) u[p] -= along * phi[p];
    const auto lo = static_cast<std::ptrdiff_t>(std::floor((-r - f.grid.x_left) / h)) - 1;
    const auto hi = static_cast<std::ptrdiff_t>(std::ceil((r - f.grid.x_left) / h)) + 1;
    for (std::ptrdiff_t q = std::max<std::ptrdiff_t>(lo, 0); q < std::min<std::ptrdiff_t>(hi, n); ++q) {
      const auto p = static_cast<std::size_t>(q);
      const double x = f.grid.node(p);
      if (std::abs(x) >= r) continue;
      for (std::size_t k = 0; k < K; ++k) {
        const double psi = w.basis(k, x);
        dvm[i * K + k] += h * (-2.0 * psi * phi[p] * phi[p] + 2.0 * op.v(p) * psi * phi[p] * u[p]);
      }
    }
  });
  const auto weights = quad::simpson_weights(m, grid.spacing());
  ModelEvaluation ev;
  for (const auto& rec : data.records) {
    ev.theta.push_back(current::theta_fiber(table, rec.chi).theta);
    std::vector<double> row(K, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
      const double c = rec.chi(grid.value(i));
      if (c == 0.0) continue;
      for (std::size_t k = 0; k < K; ++k) row[k] += weights[i] * c * c * dvm[i * K + k];
    }
    ev.jacobian.push_back(std::move(row));
  }
  return ev;
}

fields::PerturbationW project_admissible(const fields::MagneticField& prior, const fields::PerturbationW& w) {
  const std::size_t K = w.basis_size();
  const double dx = w.spacing();
  const double r = w.support_radius();
  const auto& c = w.coefficients();
  std::vector<double> s(K + 1), lo(K + 1), hi(K + 1);
  bool inside = true;
  constexpr int samples = 200;
  for (std::size_t k = 0; k <= K; ++k) {
    const double left = k == 0 ? 0.0 : c[k - 1];
    const double right = k == K ? 0.0 : c[k];
    s[k] = (right - left) / dx;
    double bmin = std::numeric_limits<double>::infinity();
    double bmax = -bmin;
    const double x0 = -r + static_cast<double>(k) * dx;
    for (int p = 0; p <= samples; ++p) {
      // Points just inside the segment catch one-sided jumps of b at its ends;
      // the ends themselves catch the extremes of a monotone b.
      for (double x : {x0 + dx * (1e-9 + (1.0 - 2e-9) * p / samples), x0 + dx * p / samples}) {
        const double b = prior.eval_b(x);
        bmin = std::min(bmin, b);
        bmax = std::max(bmax, b);
      }
    }
    lo[k] = prior.b_minus() - bmin;
    hi[k] = prior.b_plus() - bmax;
    if (s[k] < lo[k] || s[k] > hi[k]) inside = false;
  }
  if (inside) return w;
  auto total = [&](double t) {
    double sum = 0.0;
    for (std::size_t k = 0; k <= K; ++k) sum += std::clamp(s[k] - t, lo[k], hi[k]);
    return sum;
  };
  double tl = std::numeric_limits<double>::infinity();
  double th = -tl;
  for (std::size_t k = 0; k <= K; ++k) {
    tl = std::min(tl, s[k] - hi[k]);
    th = std::max(th, s[k] - lo[k]);
  }
  for (int it = 0; it < 200 && th - tl > 1e-16 * (1.0 + std::abs(th)); ++it) {
    const double mid = 0.5 * (tl + th);
    (total(mid) > 0.0 ? tl : th) = mid;
  }
  const double t = 0.5 * (tl + th);
  std::vector<double> out(K);
  double acc = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    acc += std::clamp(s[k] - t, lo[k], hi[k]) * dx;
    out[k] = acc;
  }
  return fields::PerturbationW(r, std::move(out));
}

namespace {

bands::XiGrid default_fit_grid(const CurrentData& data) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  double width = lo;
  for (const auto& r : data.records) {
    lo = std::min(lo, r.chi.support_min());
    hi = std::max(hi, r.chi.support_max());
    width = std::min(width, r.chi.width);
  }
  const auto m = static_cast<std::size_t>(std::ceil((hi - lo) / (width / 8.0))) + 1;
  return bands::XiGrid::make(lo, hi, std::max<std::size_t>(m, 5));
}

double cost_of(const std::vector<double>& theta, const CurrentData& data, const std::vector<double>& c, double reg) {
  double s = 0.0;
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double d = theta[i] - data.records[i].theta;
    s += d * d;
  }
  for (double x : c) s += reg * x * x;
  return s;
}

}  // namespace

ReconstructionResult fit_field(const CurrentData& data, const fields::MagneticField& prior, const FitOptions& options) {
  data.validate();
  if (options.basis_size == 0) throw InvalidArgument("fit_field: basis_size must be positive");
  if (!(options.reg >= 0.0)) throw InvalidArgument("fit_field: reg must be non-negative");
  if (!prior.gap_admissible() || !(prior.b_minus() < prior.b_plus())) {
    throw InvalidArgument("fit_field: prior must be gap-admissible with b_minus < b_plus");
  }
  const double r = options.support_radius;
  const double r0 = fields::r0_bound(prior.b_minus(), prior.b_plus());
  if (!(r > 0.0)) throw InvalidArgument("fit_field: support_radius must be positive");
  if (r >= r0) {
    std::ostringstream os;
    os << "fit_field: basis support radius " << r << " is not below r0 = " << r0
       << ", outside the uniqueness regime for compact perturbations";
    if (!options.allow_outside_regime) throw InvalidArgument(os.str());
    warn(os.str());
  }
  const auto grid = options.xi_grid ? *options.xi_grid : default_fit_grid(data);
  for (const auto& rec : data.records) {
    if (rec.chi.support_min() < grid.xi_min - 1e-12 || rec.chi.support_max() > grid.xi_max + 1e-12) {
      throw InvalidArgument("fit_field: a chi support exceeds the model xi grid");
    }
  }
  const std::size_t K = options.basis_size;
  const std::size_t N = data.records.size();
  const double reg = options.reg;

  ReconstructionResult res;
  fields::PerturbationW w(r, std::vector<double>(K, 0.0));
  auto ev = evaluate_model(prior, w, data, grid, options.window);
  double cost = cost_of(ev.theta, data, w.coefficients(), reg);
  res.misfit_history.push_back(cost);
  double mu = -1.0;
  // Accepted steps in a row that barely lowered the misfit; an optimum on the
  // boundary of the admissible set has a nonzero gradient and ends this way.
  int slow_steps = 0;
  res.status = FitStatus::max_iterations;
  for (std::size_t iter = 0; iter < options.max_iterations; ++iter) {
    Eigen::MatrixXd J(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(K));
    Eigen::VectorXd resid(static_cast<Eigen::Index>(N));
    for (std::size_t i = 0; i < N; ++i) {
      resid(static_cast<Eigen::Index>(i)) = ev.theta[i] - data.records[i].theta;
      for (std::size_t k = 0; k < K; ++k) J(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = ev.jacobian[i][k];
    }
    const Eigen::VectorXd c = Eigen::Map<const Eigen::VectorXd>(w.coefficients().data(), static_cast<Eigen::Index>(K));
    const Eigen::VectorXd grad = J.transpose() * resid + reg * c;
    res.gradient_norm = grad.norm();
    res.iterations = iter;
    if (res.gradient_norm < options.gradient_tolerance) {
      res.status = FitStatus::converged;
      break;
    }
    Eigen::MatrixXd A = J.transpose() * J;
    A.diagonal().array() += reg;
    const double scale = std::max(A.diagonal().maxCoeff(), std::numeric_limits<double>::min());
    if (mu < 0.0) mu = 1e-6 * scale;
    bool accepted = false;
    bool negligible = false;
    while (mu <= 1e12 * scale) {
      Eigen::MatrixXd damped = A;
      damped.diagonal().array() += mu;
      const Eigen::VectorXd step = damped.ldlt().solve(-grad);
      std::vector<double> trial(K);
      for (std::size_t k = 0; k < K; ++k) trial[k] = c(static_cast<Eigen::Index>(k)) + step(static_cast<Eigen::Index>(k));
      const auto cand = project_admissible(prior, fields::PerturbationW(r, trial));
      double moved = 0.0;
      for (std::size_t k = 0; k < K; ++k) moved = std::max(moved, std::abs(cand.coefficients()[k] - w.coefficients()[k]));
      if (moved <= 1e-15 * (1.0 + w.sup_norm())) {
        negligible = true;
        break;
      }
      auto cand_ev = evaluate_model(prior, cand, data, grid, options.window);
      const double cand_cost = cost_of(cand_ev.theta, data, cand.coefficients(), reg);
      if (cand_cost < cost) {
        slow_steps = cost - cand_cost <= 1e-12 * cost ? slow_steps + 1 : 0;
        w = cand;
        ev = std::move(cand_ev);
        cost = cand_cost;
        res.misfit_history.push_back(cost);
        mu = std::max(mu / 10.0, 1e-12 * scale);
        accepted = true;
        break;
      }
      mu *= 10.0;
    }
    if (!accepted || negligible || slow_steps >= 3) {
      res.iterations = iter + 1;
      res.status = FitStatus::stagnated;
      break;
    }
    res.iterations = iter + 1;
  }
  if (res.status == FitStatus::max_iterations || res.status == FitStatus::stagnated) {
    // Refresh the gradient for the final iterate when the loop left early.
    double g2 = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
      double g = reg * w.coefficients()[k];
      for (std::size_t i = 0; i < N; ++i) g += ev.jacobian[i][k] * (ev.theta[i] - data.records[i].theta);
      g2 += g * g;
    }
    res.gradient_norm = std::sqrt(g2);
    if (res.gradient_norm < options.gradient_tolerance) res.status = FitStatus::converged;
  }
  if (res.status != FitStatus::converged) {
    std::ostringstream os;
    os << "fit_field did not reach the gradient tolerance (" << to_string(res.status) << ", gradient norm "
       << res.gradient_norm << ")";
    warn(os.str());
  }
  res.coefficients = w.coefficients();
  const double reach = std::max(r, options.truth ? options.truth->support_radius() : 0.0);
  constexpr std::size_t points = 401;
  for (std::size_t i = 0; i < points; ++i) {
    const double x = -2.0 * reach + 4.0 * reach * static_cast<double>(i) / (points - 1);
    res.x.push_back(x);
    res.a_recovered.push_back(prior.eval_a(x) + w.eval(x));
    if (options.truth) res.a_true.push_back(prior.eval_a(x) + options.truth->eval(x));
  }
  if (options.truth) {
    double err = 0.0;
    constexpr int fine = 4000;
    for (int i = 0; i <= fine; ++i) {
      const double x = -reach + 2.0 * reach * i / fine;
      err = std::max(err, std::abs(w.eval(x) - options.truth->eval(x)));
    }
    res.linf_error = err;
  }
  return res;
}

}  // namespace iwatsuka::inverse

#include "iwatsuka/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <sstream>

#include "iwatsuka/bands.hpp"
#include "iwatsuka/current.hpp"
#include "iwatsuka/error.hpp"
#include "iwatsuka/inverse.hpp"
#include "iwatsuka/perturbation.hpp"
#include "iwatsuka/selftest.hpp"
#include "iwatsuka/serialize.hpp"

namespace iwatsuka::pipeline {

namespace fs = std::filesystem;
using json = nlohmann::json;

std::string to_string(Command command) {
  switch (command) {
    case Command::bands: return "bands";
    case Command::current: return "current";
    case Command::perturb: return "perturb";
    case Command::invert: return "invert";
    case Command::extract: return "extract";
    case Command::selftest: return "selftest";
  }
  return "unknown";
}

Command command_from_string(const std::string& name) {
  for (auto c : {Command::bands, Command::current, Command::perturb, Command::invert, Command::extract,
                 Command::selftest}) {
    if (to_string(c) == name) return c;
  }
  throw InvalidArgument("config: unknown command '" + name + "'");
}

spectral::WindowOptions RunConfig::window() const {
  spectral::WindowOptions w;
  w.n = grid_n;
  w.lattice = lattice;
  return w;
}

namespace {

const char* default_output(Command c) {
  switch (c) {
    case Command::bands: return "bands.csv";
    case Command::current: return "measurements.json";
    case Command::perturb: return "perturb.json";
    case Command::invert: return "reconstruction.json";
    case Command::extract: return "extract.csv";
    case Command::selftest: return "";
  }
  return "";
}

std::size_t count_in(const json& j, const char* key, std::size_t fallback, std::size_t lo, std::size_t hi,
                     const std::string& ctx) {
  const auto v = io::get_count_or(j, key, fallback, ctx);
  if (v < lo || v > hi) {
    std::ostringstream os;
    os << ctx << ": '" << key << "' must lie in [" << lo << ", " << hi << "]";
    throw InvalidArgument(os.str());
  }
  return static_cast<std::size_t>(v);
}

bool bool_or(const json& j, const char* key, bool fallback, const std::string& ctx) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_boolean()) throw InvalidArgument(ctx + ": '" + key + "' must be a boolean");
  return j.at(key).get<bool>();
}

std::string string_or(const json& j, const char* key, const std::string& fallback, const std::string& ctx) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_string()) throw InvalidArgument(ctx + ": '" + key + "' must be a string");
  return j.at(key).get<std::string>();
}

std::pair<double, double> interval(const json& j, const char* key, std::pair<double, double> fallback,
                                   const std::string& ctx) {
  if (!j.contains(key)) return fallback;
  const auto v = io::get_numbers(j, key, ctx);
  if (v.size() != 2 || !(v[0] < v[1])) throw InvalidArgument(ctx + ": '" + key + "' must be [lo, hi] with lo < hi");
  return {v[0], v[1]};
}

const json& section(const RunConfig& c) {
  static const json empty = json::object();
  const auto name = to_string(c.command);
  return c.raw.contains(name) ? c.raw.at(name) : empty;
}

struct Output {
  fs::path primary;
  fs::path with_extension(const char* ext) const { return fs::path(primary).replace_extension(ext); }
};

Output resolve_output(const RunConfig& c, const RunOptions& o) {
  Output out;
  out.primary = fs::path(o.out_dir) / c.output_path;
  if (out.primary.has_parent_path()) fs::create_directories(out.primary.parent_path());
  return out;
}

std::string xi_context(double xi) {
  std::ostringstream os;
  os.precision(17);
  os << "xi=" << xi << ": ";
  return os.str();
}

// Rethrows with the offending xi prefixed, keeping the error category.
template <class F>
auto at_xi(double xi, F&& body) {
  try {
    return body();
  } catch (const InvalidArgument& e) {
    throw InvalidArgument(xi_context(xi) + e.what());
  } catch (const NumericalError& e) {
    throw NumericalError(xi_context(xi) + e.what());
  }
}

bands::XiGrid config_grid(const RunConfig& c) {
  return bands::XiGrid::make(c.xi_window.first, c.xi_window.second, c.xi_count);
}

RunResult run_bands(const RunConfig& c, const RunOptions& o, const io::Meta& meta) {
  bands::BandOptions opts;
  opts.window = c.window();
  const auto table = bands::compute_bands(*c.field, config_grid(c), c.j_max, opts);
  const auto out = resolve_output(c, o);
  io::write_text_file(out.primary.string(), io::bands_csv(table, meta));
  double lo = table.lambda(0, 1), hi = lo;
  for (std::size_t i = 0; i < table.size(); ++i) {
    lo = std::min(lo, table.lambda(i, 1));
    hi = std::max(hi, table.lambda(i, 1));
  }
  std::ostringstream os;
  os << "bands: " << table.size() << " xi nodes, j_max " << c.j_max << ", lambda_1 in [" << io::format_double(lo)
     << ", " << io::format_double(hi) << "]\n";
  return {0, {out.primary.string()}, os.str()};
}

std::vector<current::ChiProfile> config_profiles(const json& s) {
  const bool has_bumps = s.contains("bumps");
  const bool has_profiles = s.contains("profiles");
  if (has_bumps == has_profiles) throw InvalidArgument("current: give exactly one of 'bumps' or 'profiles'");
  if (has_bumps) {
    const auto& b = s.at("bumps");
    io::require_keys(b, {"first", "last", "step", "width"}, "current.bumps");
    return inverse::bump_family(io::get_number(b, "first", "current.bumps"), io::get_number(b, "last", "current.bumps"),
                                io::get_number(b, "step", "current.bumps"),
                                io::get_number(b, "width", "current.bumps"));
  }
  if (!s.at("profiles").is_array() || s.at("profiles").empty()) {
    throw InvalidArgument("current: 'profiles' must be a non-empty array");
  }
  std::vector<current::ChiProfile> out;
  for (const auto& p : s.at("profiles")) out.push_back(io::chi_from_json(p));
  return out;
}

RunResult run_current(const RunConfig& c, const RunOptions& o, const io::Meta& meta) {
  const auto& s = section(c);
  io::require_keys(s, {"bumps", "profiles", "route", "noise_sigma"}, "current");
  const auto profiles = config_profiles(s);
  const auto route = current::route_from_string(string_or(s, "route", "fiber_quadrature", "current"));
  const double sigma = io::get_number_or(s, "noise_sigma", 0.0, "current");
  if (!(sigma >= 0.0)) throw InvalidArgument("current: 'noise_sigma' must be non-negative");

  io::MeasurementFile file;
  file.meta = meta;
  file.field = *c.field;
  file.xi_grid = config_grid(c);
  file.window = c.window();
  file.route = current::to_string(route);
  bands::BandOptions opts;
  opts.window = file.window;
  const auto table = bands::compute_bands(file.field, file.xi_grid, 1, opts);
  file.data = inverse::synthesize(table, profiles, sigma, c.seed, route);
  for (const auto& chi : profiles) file.error_estimates.push_back(current::theta(table, chi, route).quad_error_estimate);

  const auto out = resolve_output(c, o);
  io::write_text_file(out.primary.string(), io::measurements_to_json(file).dump(2) + "\n");
  std::ostringstream os;
  os << "current: " << profiles.size() << " profiles by " << file.route << " on " << table.size() << " xi nodes\n";
  return {0, {out.primary.string()}, os.str()};
}

std::string perturb_csv(const std::vector<perturbation::PerturbReport>& reports, const io::Meta& meta) {
  std::ostringstream os;
  os << io::csv_header_comment(meta) << "\n";
  os << "xi,epsilon,C,eps_star,lambda1,lambda_eps1,F,F_inner,A1,A2,A2_tail_bound,A2_contour,A2_fit\n";
  for (const auto& r : reports) {
    for (std::size_t k = 0; k < r.epsilons.size(); ++k) {
      const double row[] = {r.xi, r.epsilons[k], r.C, r.eps_star, r.lambda1, r.lambda_eps1[k], r.F_values[k],
                            r.F_inner[k], r.A1, r.A2, r.A2_tail_bound, r.A2_contour, r.A2_fit};
      bool first = true;
      for (double v : row) {
        if (!first) os << ",";
        first = false;
        if (std::isfinite(v)) os << io::format_double(v);
      }
      os << "\n";
    }
  }
  return os.str();
}

RunResult run_perturb(const RunConfig& c, const RunOptions& o, const io::Meta& meta) {
  const auto& s = section(c);
  io::require_keys(s, {"w", "xi", "epsilons", "kappa", "a2_terms", "contour"}, "perturb");
  if (!s.contains("w")) throw InvalidArgument("perturb: missing 'w'");
  if (!s.contains("epsilons")) throw InvalidArgument("perturb: missing 'epsilons'");
  const auto w = io::w_from_json(s.at("w"));
  const auto epsilons = io::get_numbers(s, "epsilons", "perturb");
  if (epsilons.empty()) throw InvalidArgument("perturb: 'epsilons' must not be empty");
  for (double e : epsilons) {
    if (!(e > 0.0)) throw InvalidArgument("perturb: epsilons must be positive");
  }
  std::vector<double> xis = s.contains("xi") ? io::get_numbers(s, "xi", "perturb") : config_grid(c).values();
  if (xis.empty()) throw InvalidArgument("perturb: 'xi' must not be empty");
  std::optional<double> kappa;
  if (s.contains("kappa") && !s.at("kappa").is_null()) kappa = io::get_number(s, "kappa", "perturb");
  const std::size_t terms = count_in(s, "a2_terms", 12, 6, c.grid_n, "perturb");
  auto spec = perturbation::ContourSpec::default_for(*c.field);
  if (s.contains("contour")) {
    const auto& cs = s.at("contour");
    io::require_keys(cs, {"rho", "nodes"}, "perturb.contour");
    spec.rho = io::get_number_or(cs, "rho", spec.rho, "perturb.contour");
    spec.nodes = io::get_count_or(cs, "nodes", spec.nodes, "perturb.contour");
  }
  spec.validate(*c.field);

  std::vector<perturbation::PerturbReport> reports;
  for (double xi : xis) {
    reports.push_back(at_xi(xi, [&] {
      const perturbation::Problem probe(*c.field, w, xi, spec, c.window());
      for (double e : epsilons) {
        if (!(e < probe.eps_star())) {
          std::ostringstream os;
          os.precision(17);
          os << "epsilon=" << e << " is not below eps_star=" << probe.eps_star();
          throw NumericalError(os.str());
        }
      }
      return perturbation::perturb_report(*c.field, w, xi, epsilons, kappa, terms, spec, c.window());
    }));
  }

  json doc{{"schema", "iwatsuka.perturb/1"}, {"meta", io::meta_to_json(meta)}, {"reports", json::array()}};
  for (const auto& r : reports) doc["reports"].push_back(io::perturb_report_to_json(r));
  const auto out = resolve_output(c, o);
  const auto csv = out.with_extension(".csv");
  io::write_text_file(out.primary.string(), doc.dump(2) + "\n");
  io::write_text_file(csv.string(), perturb_csv(reports, meta));
  std::ostringstream os;
  os << "perturb: " << reports.size() << " xi values x " << epsilons.size() << " epsilons\n";
  return {0, {out.primary.string(), csv.string()}, os.str()};
}

RunResult run_invert(const RunConfig& c, const RunOptions& o, const io::Meta& meta) {
  const auto& s = section(c);
  io::require_keys(s, {"measurements", "basis_size", "reg", "support_radius", "max_iterations", "gradient_tolerance",
                       "allow_outside_regime", "truth"},
                   "invert");
  const auto rel = string_or(s, "measurements", "", "invert");
  if (rel.empty()) throw InvalidArgument("invert: missing 'measurements'");
  fs::path path(rel);
  if (path.is_relative()) path = fs::path(o.base_dir) / path;
  json doc;
  try {
    doc = json::parse(io::read_text_file(path.string()));
  } catch (const json::parse_error& e) {
    throw InvalidArgument("invert: " + path.string() + " is not valid JSON: " + e.what());
  }
  const auto file = io::measurements_from_json(doc);

  // The prior is the configured field, or the unperturbed root of the field
  // that produced the measurements.
  const fields::MagneticField prior = c.field ? *c.field : file.field.root();
  inverse::FitOptions fo;
  fo.basis_size = count_in(s, "basis_size", fo.basis_size, 1, 64, "invert");
  fo.reg = io::get_number_or(s, "reg", fo.reg, "invert");
  fo.support_radius = io::get_number_or(s, "support_radius", fo.support_radius, "invert");
  fo.max_iterations = count_in(s, "max_iterations", fo.max_iterations, 1, 10000, "invert");
  fo.gradient_tolerance = io::get_number_or(s, "gradient_tolerance", fo.gradient_tolerance, "invert");
  fo.allow_outside_regime = bool_or(s, "allow_outside_regime", false, "invert");
  fo.xi_grid = file.xi_grid;
  fo.window = file.window;
  if (!(fo.reg >= 0.0)) throw InvalidArgument("invert: 'reg' must be non-negative");
  if (s.contains("truth")) {
    fo.truth = io::w_from_json(s.at("truth"));
  } else if (file.field.kind() == fields::FieldKind::perturbed) {
    fo.truth = file.field.perturbation();
  }
  const auto result = inverse::fit_field(file.data, prior, fo);

  const auto out = resolve_output(c, o);
  const auto csv = out.with_extension(".csv");
  io::write_text_file(out.primary.string(), io::reconstruction_to_json(result, meta).dump(2) + "\n");
  io::write_text_file(csv.string(), io::reconstruction_csv(result, meta));
  std::ostringstream os;
  os << "invert: " << inverse::to_string(result.status) << " after " << result.iterations
     << " iterations, gradient norm " << io::format_double(result.gradient_norm);
  if (result.linf_error >= 0.0) os << ", linf error " << io::format_double(result.linf_error);
  os << "\n";
  return {0, {out.primary.string(), csv.string()}, os.str()};
}

// Intersection of two node sets that share a lattice of spacing h.
std::pair<inverse::Sampled, inverse::Sampled> common_nodes(const inverse::Sampled& a, const inverse::Sampled& b) {
  if (a.x.size() < 2 || b.x.size() < 2) throw NumericalError("extract: ground states too narrow to sample q");
  const double h = a.x[1] - a.x[0];
  std::map<long long, double> right;
  for (std::size_t i = 0; i < b.x.size(); ++i) right[std::llround(b.x[i] / h)] = b.y[i];
  inverse::Sampled pa, pb;
  for (std::size_t i = 0; i < a.x.size(); ++i) {
    const auto it = right.find(std::llround(a.x[i] / h));
    if (it == right.end()) continue;
    pa.x.push_back(a.x[i]);
    pa.y.push_back(a.y[i]);
    pb.x.push_back(a.x[i]);
    pb.y.push_back(it->second);
  }
  if (pa.x.empty()) throw NumericalError("extract: the ground states at +xi0 and -xi0 share no nodes");
  return {pa, pb};
}

RunResult run_extract(const RunConfig& c, const RunOptions& o, const io::Meta& meta) {
  const auto& s = section(c);
  io::require_keys(s, {"xi0", "x_window", "x_count", "source", "cutoff"}, "extract");
  const double xi0 = io::get_number(s, "xi0", "extract");
  if (!(xi0 > 0.0)) throw InvalidArgument("extract: 'xi0' must be positive");
  const auto source = string_or(s, "source", "closed_form", "extract");
  inverse::Sampled qp, qm;
  if (source == "closed_form") {
    const auto xw = interval(s, "x_window", {-5.0, 5.0}, "extract");
    const std::size_t count = count_in(s, "x_count", 1001, 2, 10000000, "extract");
    std::vector<double> x(count);
    for (std::size_t i = 0; i < count; ++i) {
      x[i] = xw.first + (xw.second - xw.first) * static_cast<double>(i) / static_cast<double>(count - 1);
    }
    qp = inverse::sample_q(*c.field, xi0, x);
    qm = inverse::sample_q(*c.field, -xi0, x);
  } else if (source == "ground_state") {
    if (s.contains("x_window") || s.contains("x_count")) {
      throw InvalidArgument("extract: 'x_window' and 'x_count' apply to the closed_form source only");
    }
    auto window = c.window();
    window.lattice = true;
    const double cutoff = io::get_number_or(s, "cutoff", 1e-3, "extract");
    auto [p, m] = common_nodes(at_xi(xi0, [&] { return inverse::q_from_ground_state(*c.field, xi0, window, cutoff); }),
                               at_xi(-xi0, [&] { return inverse::q_from_ground_state(*c.field, -xi0, window, cutoff); }));
    qp = std::move(p);
    qm = std::move(m);
  } else {
    throw InvalidArgument("extract: unknown source '" + source + "' (closed_form, ground_state)");
  }
  if (source == "closed_form" && s.contains("cutoff")) throw InvalidArgument("extract: 'cutoff' applies to ground_state");
  const auto result = inverse::extract_a_from_band_data(qp, qm, xi0);

  std::vector<bool> flagged(result.a.x.size(), false);
  for (auto i : result.ambiguous) flagged[i] = true;
  std::ostringstream csv;
  csv << io::csv_header_comment(meta) << "\n" << "x,a_true,a_extracted,ambiguous\n";
  double err = 0.0;
  for (std::size_t i = 0; i < result.a.x.size(); ++i) {
    const double truth = c.field->eval_a(result.a.x[i]);
    err = std::max(err, std::abs(truth - result.a.y[i]));
    csv << io::format_double(result.a.x[i]) << "," << io::format_double(truth) << ","
        << io::format_double(result.a.y[i]) << "," << (flagged[i] ? 1 : 0) << "\n";
  }
  const auto out = resolve_output(c, o);
  io::write_text_file(out.primary.string(), csv.str());
  std::ostringstream os;
  os << "extract: " << result.a.x.size() << " nodes from " << source << ", " << result.ambiguous.size()
     << " resolved by continuity, sup error " << io::format_double(err) << "\n";
  return {0, {out.primary.string()}, os.str()};
}

RunResult run_selftest(const RunConfig& c, const RunOptions& o, const io::Meta& meta) {
  const auto report = selftest::run();
  std::ostringstream os;
  for (const auto& check : report.checks) {
    os << (check.passed ? "PASS " : "FAIL ") << check.name << ": " << check.detail << "\n";
  }
  os << "selftest: " << report.passed() << " passed, " << report.failed() << " failed\n";
  RunResult r{report.failed() == 0 ? 0 : 3, {}, os.str()};
  if (!c.output_path.empty()) {
    const auto out = resolve_output(c, o);
    io::write_text_file(out.primary.string(), io::csv_header_comment(meta) + "\n" + os.str());
    r.artifacts.push_back(out.primary.string());
  }
  return r;
}

}  // namespace

RunConfig parse_config(const json& j) {
  if (!j.is_object()) throw InvalidArgument("config: expected a JSON object");
  io::require_keys(j, {"command", "field", "xi_window", "xi_count", "grid_n", "j_max", "seed", "output_path", "lattice",
                       "current", "perturb", "invert", "extract"},
                   "config");
  RunConfig c;
  c.raw = j;
  if (!j.contains("command") || !j.at("command").is_string()) throw InvalidArgument("config: missing 'command'");
  c.command = command_from_string(j.at("command").get<std::string>());
  for (const char* name : {"current", "perturb", "invert", "extract"}) {
    if (!j.contains(name)) continue;
    if (name != to_string(c.command)) {
      throw InvalidArgument(std::string("config: section '") + name + "' does not apply to command '" +
                            to_string(c.command) + "'");
    }
    if (!j.at(name).is_object()) throw InvalidArgument(std::string("config: '") + name + "' must be an object");
  }
  if (j.contains("field")) c.field = io::field_from_json(j.at("field"));
  const bool needs_field = c.command != Command::invert && c.command != Command::selftest;
  if (needs_field && !c.field) throw InvalidArgument("config: missing 'field'");
  c.xi_window = interval(j, "xi_window", c.xi_window, "config");
  c.xi_count = count_in(j, "xi_count", c.xi_count, 5, 100001, "config");
  c.grid_n = count_in(j, "grid_n", c.grid_n, 50, 200000, "config");
  c.j_max = count_in(j, "j_max", c.j_max, 1, 12, "config");
  c.seed = io::get_count_or(j, "seed", 0, "config");
  c.lattice = bool_or(j, "lattice", true, "config");
  c.output_path = string_or(j, "output_path", default_output(c.command), "config");
  if (c.command != Command::selftest && c.output_path.empty()) {
    throw InvalidArgument("config: 'output_path' must not be empty");
  }
  return c;
}

RunConfig parse_config_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InvalidArgument(std::string("config: invalid JSON: ") + e.what());
  }
  return parse_config(j);
}

RunResult run(RunConfig config, const RunOptions& options) {
  if (options.seed) {
    config.seed = *options.seed;
    config.raw["seed"] = config.seed;
  }
  io::Meta meta;
  meta.config_hash = io::config_hash(config.raw);
  meta.seed = config.seed;
  switch (config.command) {
    case Command::bands: return run_bands(config, options, meta);
    case Command::current: return run_current(config, options, meta);
    case Command::perturb: return run_perturb(config, options, meta);
    case Command::invert: return run_invert(config, options, meta);
    case Command::extract: return run_extract(config, options, meta);
    case Command::selftest: return run_selftest(config, options, meta);
  }
  throw InvalidArgument("config: unknown command");
}

}  // namespace iwatsuka::pipeline

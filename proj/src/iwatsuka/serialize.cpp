#include "iwatsuka/serialize.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "iwatsuka/error.hpp"

namespace iwatsuka::io {

namespace {

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

double number_from(const json& v) {
  if (v.is_null()) return std::numeric_limits<double>::quiet_NaN();
  if (!v.is_number()) throw InvalidArgument("expected a number");
  return v.get<double>();
}

std::vector<double> numbers_from(const json& v, const std::string& context) {
  if (!v.is_array()) throw InvalidArgument(context + ": expected an array of numbers");
  std::vector<double> out;
  for (const auto& e : v) {
    if (!e.is_number() && !e.is_null()) throw InvalidArgument(context + ": expected an array of numbers");
    out.push_back(number_from(e));
  }
  return out;
}

}  // namespace

json meta_to_json(const Meta& meta) {
  return json{{"version", meta.version}, {"config_hash", meta.config_hash}, {"seed", meta.seed}};
}

Meta meta_from_json(const json& j) {
  require_keys(j, {"version", "config_hash", "seed"}, "meta");
  Meta m;
  m.version = j.at("version").get<std::string>();
  m.config_hash = j.at("config_hash").get<std::string>();
  m.seed = j.at("seed").get<std::uint64_t>();
  return m;
}

std::string csv_header_comment(const Meta& meta) {
  return "# iwatsuka " + meta.version + " config_hash=" + meta.config_hash + " seed=" + std::to_string(meta.seed);
}

Meta parse_csv_header_comment(const std::string& line) {
  std::istringstream is(line);
  std::string hash_tok, name, seed_tok, hash_word;
  Meta m;
  if (!(is >> hash_tok >> name >> m.version >> hash_word >> seed_tok) || hash_tok != "#" || name != "iwatsuka" ||
      hash_word.rfind("config_hash=", 0) != 0 || seed_tok.rfind("seed=", 0) != 0) {
    throw InvalidArgument("malformed CSV header comment");
  }
  m.config_hash = hash_word.substr(12);
  m.seed = std::stoull(seed_tok.substr(5));
  return m;
}

std::string config_hash(const json& config) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : config.dump()) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void require_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& context) {
  if (!j.is_object()) throw InvalidArgument(context + ": expected an object");
  for (const auto& item : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || item.key() == a;
    if (!ok) throw InvalidArgument(context + ": unknown key '" + item.key() + "'");
  }
}

double get_number(const json& j, const char* key, const std::string& context) {
  if (!j.contains(key)) throw InvalidArgument(context + ": missing key '" + key + "'");
  const auto& v = j.at(key);
  if (!v.is_number() || !std::isfinite(v.get<double>())) {
    throw InvalidArgument(context + ": '" + key + "' must be a finite number");
  }
  return v.get<double>();
}

double get_number_or(const json& j, const char* key, double fallback, const std::string& context) {
  return j.contains(key) ? get_number(j, key, context) : fallback;
}

std::uint64_t get_count(const json& j, const char* key, const std::string& context) {
  if (!j.contains(key)) throw InvalidArgument(context + ": missing key '" + key + "'");
  const auto& v = j.at(key);
  if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<long long>() < 0)) {
    throw InvalidArgument(context + ": '" + key + "' must be a non-negative integer");
  }
  return v.get<std::uint64_t>();
}

std::uint64_t get_count_or(const json& j, const char* key, std::uint64_t fallback, const std::string& context) {
  return j.contains(key) ? get_count(j, key, context) : fallback;
}

std::vector<double> get_numbers(const json& j, const char* key, const std::string& context) {
  if (!j.contains(key)) throw InvalidArgument(context + ": missing key '" + key + "'");
  auto v = numbers_from(j.at(key), context + "." + key);
  for (double x : v) {
    if (!std::isfinite(x)) throw InvalidArgument(context + ": '" + key + "' must hold finite numbers");
  }
  return v;
}

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

json w_to_json(const fields::PerturbationW& w) {
  return json{{"support_radius", w.support_radius()}, {"coefficients", w.coefficients()}};
}

fields::PerturbationW w_from_json(const json& j) {
  require_keys(j, {"support_radius", "coefficients"}, "perturbation");
  return fields::PerturbationW(get_number(j, "support_radius", "perturbation"),
                               get_numbers(j, "coefficients", "perturbation"));
}

json field_to_json(const fields::MagneticField& field) {
  const auto& root = field.kind() == fields::FieldKind::perturbed ? field.base() : field;
  if (root.kind() == fields::FieldKind::perturbed) throw InvalidArgument("nested perturbations are not serializable");
  json params = json::object();
  switch (root.kind()) {
    case fields::FieldKind::tanh: params["scale"] = root.scale(); break;
    case fields::FieldKind::smoothed_step:
      params["center"] = root.center();
      params["width"] = root.width();
      break;
    case fields::FieldKind::piecewise_linear: {
      json knots = json::array();
      for (const auto& [x, b] : root.knots()) knots.push_back({x, b});
      params["knots"] = knots;
      break;
    }
    default: break;
  }
  json j{{"kind", fields::to_string(root.kind())},
         {"b_minus", root.b_minus()},
         {"b_plus", root.b_plus()},
         {"params", params},
         {"allow_gap_inadmissible", root.allow_gap_inadmissible()}};
  if (field.kind() == fields::FieldKind::perturbed) {
    auto w = w_to_json(field.perturbation());
    w["check"] = fields::to_string(field.admissibility());
    j["perturbation"] = w;
  }
  return j;
}

fields::MagneticField field_from_json(const json& j) {
  const std::string ctx = "field";
  require_keys(j, {"kind", "b_minus", "b_plus", "params", "allow_gap_inadmissible", "perturbation"}, ctx);
  if (!j.contains("kind") || !j.at("kind").is_string()) throw InvalidArgument("field: 'kind' must be a string");
  const auto kind = fields::field_kind_from_string(j.at("kind").get<std::string>());
  const double bm = get_number(j, "b_minus", ctx);
  const double bp = get_number(j, "b_plus", ctx);
  bool allow = false;
  if (j.contains("allow_gap_inadmissible")) {
    if (!j.at("allow_gap_inadmissible").is_boolean()) throw InvalidArgument("field: 'allow_gap_inadmissible' must be a boolean");
    allow = j.at("allow_gap_inadmissible").get<bool>();
  }
  const json params = j.value("params", json::object());
  const std::string pctx = "field.params";
  std::optional<fields::MagneticField> base;
  switch (kind) {
    case fields::FieldKind::constant:
      require_keys(params, {}, pctx);
      if (bm != bp) throw InvalidArgument("field: a constant field needs b_minus == b_plus");
      base = fields::MagneticField::constant(bm);
      break;
    case fields::FieldKind::tanh:
      require_keys(params, {"scale"}, pctx);
      base = fields::MagneticField::tanh_profile(bm, bp, get_number_or(params, "scale", 1.0, pctx), allow);
      break;
    case fields::FieldKind::smoothed_step:
      require_keys(params, {"center", "width"}, pctx);
      base = fields::MagneticField::smoothed_step(bm, bp, get_number_or(params, "center", 0.0, pctx),
                                                  get_number_or(params, "width", 1.0, pctx), allow);
      break;
    case fields::FieldKind::piecewise_linear: {
      require_keys(params, {"knots"}, pctx);
      if (!params.contains("knots") || !params.at("knots").is_array()) throw InvalidArgument("field.params: 'knots' must be an array");
      std::vector<std::pair<double, double>> knots;
      for (const auto& k : params.at("knots")) {
        if (!k.is_array() || k.size() != 2 || !k[0].is_number() || !k[1].is_number()) {
          throw InvalidArgument("field.params: each knot must be [x, b]");
        }
        knots.emplace_back(k[0].get<double>(), k[1].get<double>());
      }
      base = fields::MagneticField::piecewise_linear(std::move(knots), allow);
      if (base->b_minus() != bm || base->b_plus() != bp) {
        throw InvalidArgument("field: b_minus/b_plus must equal the first/last knot values");
      }
      break;
    }
    case fields::FieldKind::perturbed:
      throw InvalidArgument("field: use a base kind with a 'perturbation' entry instead of kind 'perturbed'");
  }
  if (!j.contains("perturbation")) return *base;
  json pj = j.at("perturbation");
  auto check = fields::AdmissibilityCheck::bounds;
  if (pj.is_object() && pj.contains("check")) {
    if (!pj.at("check").is_string()) throw InvalidArgument("perturbation: 'check' must be a string");
    check = fields::admissibility_from_string(pj.at("check").get<std::string>());
    pj.erase("check");
  }
  return fields::perturb(*base, w_from_json(pj), check);
}

json chi_to_json(const current::ChiProfile& chi) {
  json j{{"kind", current::to_string(chi.kind)}, {"center", chi.center}, {"width", chi.width}, {"amplitude", chi.amplitude}};
  if (chi.kind == current::ChiKind::raised_cosine) j["plateau"] = chi.plateau;
  return j;
}

current::ChiProfile chi_from_json(const json& j) {
  const std::string ctx = "chi";
  require_keys(j, {"kind", "center", "width", "amplitude", "plateau"}, ctx);
  current::ChiProfile chi;
  if (j.contains("kind")) {
    if (!j.at("kind").is_string()) throw InvalidArgument("chi: 'kind' must be a string");
    chi.kind = current::chi_kind_from_string(j.at("kind").get<std::string>());
  }
  chi.center = get_number(j, "center", ctx);
  chi.width = get_number(j, "width", ctx);
  chi.amplitude = get_number_or(j, "amplitude", 1.0, ctx);
  chi.plateau = get_number_or(j, "plateau", 0.0, ctx);
  chi.validate();
  return chi;
}

json xi_grid_to_json(const bands::XiGrid& grid) {
  return json{{"xi_min", grid.xi_min}, {"xi_max", grid.xi_max}, {"count", grid.m}};
}

bands::XiGrid xi_grid_from_json(const json& j) {
  require_keys(j, {"xi_min", "xi_max", "count"}, "xi_grid");
  return bands::XiGrid::make(get_number(j, "xi_min", "xi_grid"), get_number(j, "xi_max", "xi_grid"),
                             get_count(j, "count", "xi_grid"));
}

std::string bands_csv(const bands::BandTable& table, const Meta& meta) {
  std::string out = csv_header_comment(meta) + "\n";
  out += "xi";
  for (std::size_t j = 1; j <= table.j_max(); ++j) out += ",lambda_" + std::to_string(j);
  out += ",vmoment\n";
  for (std::size_t i = 0; i < table.size(); ++i) {
    out += format_double(table.xi_grid().value(i));
    for (std::size_t j = 1; j <= table.j_max(); ++j) out += "," + format_double(table.lambda(i, j));
    out += "," + format_double(table.vmoment(i)) + "\n";
  }
  return out;
}

BandsCsv parse_csv(const std::string& text) {
  BandsCsv out;
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line)) throw InvalidArgument("csv: empty input");
  out.meta = parse_csv_header_comment(line);
  if (!std::getline(is, line)) throw InvalidArgument("csv: missing column header");
  {
    std::istringstream ls(line);
    std::string col;
    while (std::getline(ls, col, ',')) out.columns.push_back(col);
  }
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) {
      if (cell.empty()) {
        row.push_back(std::numeric_limits<double>::quiet_NaN());
        continue;
      }
      std::size_t used = 0;
      row.push_back(std::stod(cell, &used));
      if (used != cell.size()) throw InvalidArgument("csv: malformed number '" + cell + "'");
    }
    if (!line.empty() && line.back() == ',') row.push_back(std::numeric_limits<double>::quiet_NaN());
    if (row.size() != out.columns.size()) throw InvalidArgument("csv: row length does not match the header");
    out.rows.push_back(std::move(row));
  }
  return out;
}

json window_to_json(const spectral::WindowOptions& window) {
  return json{{"n", window.n},
              {"half_width_factor", window.half_width_factor},
              {"margin", window.margin},
              {"lattice", window.lattice}};
}

spectral::WindowOptions window_from_json(const json& j) {
  if (!j.is_object()) throw InvalidArgument("window: expected an object");
  require_keys(j, {"n", "half_width_factor", "margin", "lattice"}, "window");
  spectral::WindowOptions w;
  w.n = get_count_or(j, "n", w.n, "window");
  w.half_width_factor = get_number_or(j, "half_width_factor", w.half_width_factor, "window");
  w.margin = get_number_or(j, "margin", w.margin, "window");
  if (j.contains("lattice")) {
    if (!j.at("lattice").is_boolean()) throw InvalidArgument("window: 'lattice' must be a boolean");
    w.lattice = j.at("lattice").get<bool>();
  }
  if (w.n < 50 || w.n > 200000) throw InvalidArgument("window: 'n' must lie in [50, 200000]");
  if (!(w.half_width_factor > 0.0) || !(w.margin >= 0.0)) {
    throw InvalidArgument("window: need half_width_factor > 0 and margin >= 0");
  }
  return w;
}

json measurements_to_json(const MeasurementFile& file) {
  json recs = json::array();
  for (std::size_t i = 0; i < file.data.records.size(); ++i) {
    const auto& r = file.data.records[i];
    recs.push_back(json{{"chi", chi_to_json(r.chi)},
                        {"theta", r.theta},
                        {"route", file.route},
                        {"error_estimate", i < file.error_estimates.size() ? file.error_estimates[i] : 0.0},
                        {"noise_sigma", r.noise_sigma}});
  }
  return json{{"schema", "iwatsuka.measurements/1"},
              {"meta", meta_to_json(file.meta)},
              {"field", field_to_json(file.field)},
              {"xi_grid", xi_grid_to_json(file.xi_grid)},
              {"window", window_to_json(file.window)},
              {"records", recs}};
}

MeasurementFile measurements_from_json(const json& j) {
  require_keys(j, {"schema", "meta", "field", "xi_grid", "window", "records"}, "measurements");
  if (j.value("schema", "") != "iwatsuka.measurements/1") throw InvalidArgument("measurements: unsupported schema");
  MeasurementFile f;
  f.meta = meta_from_json(j.at("meta"));
  f.field = field_from_json(j.at("field"));
  f.xi_grid = xi_grid_from_json(j.at("xi_grid"));
  if (j.contains("window")) f.window = window_from_json(j.at("window"));
  if (!j.at("records").is_array()) throw InvalidArgument("measurements: 'records' must be an array");
  for (const auto& r : j.at("records")) {
    require_keys(r, {"chi", "theta", "route", "error_estimate", "noise_sigma"}, "measurements.records");
    f.route = r.value("route", "fiber_quadrature");
    f.data.records.push_back({chi_from_json(r.at("chi")), get_number(r, "theta", "record"),
                              get_number_or(r, "noise_sigma", 0.0, "record")});
    f.error_estimates.push_back(get_number_or(r, "error_estimate", 0.0, "record"));
  }
  f.data.validate();
  return f;
}

json reconstruction_to_json(const inverse::ReconstructionResult& result, const Meta& meta) {
  return json{{"schema", "iwatsuka.reconstruction/1"},
              {"meta", meta_to_json(meta)},
              {"method", result.method},
              {"status", inverse::to_string(result.status)},
              {"iterations", result.iterations},
              {"gradient_norm", result.gradient_norm},
              {"coefficients", result.coefficients},
              {"misfit_history", result.misfit_history},
              {"linf_error", result.linf_error >= 0.0 ? json(result.linf_error) : json(nullptr)},
              {"x", result.x},
              {"a_recovered", result.a_recovered},
              {"a_true", result.a_true}};
}

inverse::ReconstructionResult reconstruction_from_json(const json& j) {
  require_keys(j, {"schema", "meta", "method", "status", "iterations", "gradient_norm", "coefficients",
                   "misfit_history", "linf_error", "x", "a_recovered", "a_true"},
               "reconstruction");
  if (j.value("schema", "") != "iwatsuka.reconstruction/1") throw InvalidArgument("reconstruction: unsupported schema");
  inverse::ReconstructionResult r;
  r.method = j.at("method").get<std::string>();
  const auto status = j.at("status").get<std::string>();
  for (auto s : {inverse::FitStatus::converged, inverse::FitStatus::stagnated, inverse::FitStatus::max_iterations}) {
    if (inverse::to_string(s) == status) r.status = s;
  }
  r.iterations = j.at("iterations").get<std::size_t>();
  r.gradient_norm = j.at("gradient_norm").get<double>();
  r.coefficients = numbers_from(j.at("coefficients"), "coefficients");
  r.misfit_history = numbers_from(j.at("misfit_history"), "misfit_history");
  r.linf_error = j.at("linf_error").is_null() ? -1.0 : j.at("linf_error").get<double>();
  r.x = numbers_from(j.at("x"), "x");
  r.a_recovered = numbers_from(j.at("a_recovered"), "a_recovered");
  r.a_true = numbers_from(j.at("a_true"), "a_true");
  return r;
}

std::string reconstruction_csv(const inverse::ReconstructionResult& result, const Meta& meta) {
  std::string out = csv_header_comment(meta) + "\nx,a_true,a_recovered\n";
  for (std::size_t i = 0; i < result.x.size(); ++i) {
    out += format_double(result.x[i]) + "," + (result.a_true.empty() ? "" : format_double(result.a_true[i])) + "," +
           format_double(result.a_recovered[i]) + "\n";
  }
  return out;
}

json perturb_report_to_json(const perturbation::PerturbReport& r) {
  json j{{"xi", r.xi},
         {"C", r.C},
         {"eps_star", r.eps_star},
         {"epsilons", r.epsilons},
         {"lambda1", r.lambda1},
         {"lambda_eps1", r.lambda_eps1},
         {"F_values", r.F_values},
         {"F_inner", r.F_inner},
         {"A1", r.A1},
         {"A2", r.A2},
         {"A2_tail_bound", r.A2_tail_bound},
         {"A2_contour", r.A2_contour},
         {"A2_fit", number_or_null(r.A2_fit)},
         {"kappa", r.kappa ? json(*r.kappa) : json(nullptr)},
         {"window", r.window ? json::array({r.window->first, r.window->second}) : json(nullptr)}};
  return j;
}

perturbation::PerturbReport perturb_report_from_json(const json& j) {
  require_keys(j, {"xi", "C", "eps_star", "epsilons", "lambda1", "lambda_eps1", "F_values", "F_inner", "A1", "A2",
                   "A2_tail_bound", "A2_contour", "A2_fit", "kappa", "window"},
               "perturb report");
  perturbation::PerturbReport r;
  r.xi = number_from(j.at("xi"));
  r.C = number_from(j.at("C"));
  r.eps_star = number_from(j.at("eps_star"));
  r.epsilons = numbers_from(j.at("epsilons"), "epsilons");
  r.lambda1 = number_from(j.at("lambda1"));
  r.lambda_eps1 = numbers_from(j.at("lambda_eps1"), "lambda_eps1");
  r.F_values = numbers_from(j.at("F_values"), "F_values");
  r.F_inner = numbers_from(j.at("F_inner"), "F_inner");
  r.A1 = number_from(j.at("A1"));
  r.A2 = number_from(j.at("A2"));
  r.A2_tail_bound = number_from(j.at("A2_tail_bound"));
  r.A2_contour = number_from(j.at("A2_contour"));
  r.A2_fit = number_from(j.at("A2_fit"));
  if (!j.at("kappa").is_null()) r.kappa = number_from(j.at("kappa"));
  if (!j.at("window").is_null()) {
    const auto w = numbers_from(j.at("window"), "window");
    if (w.size() != 2) throw InvalidArgument("perturb report: window must have two entries");
    r.window = std::make_pair(w[0], w[1]);
  }
  return r;
}

json lambda1_to_json(const inverse::Lambda1Estimate& e) {
  return json{{"xi", e.xi},
              {"lambda1", e.lambda1},
              {"derivative", e.derivative},
              {"anchor", e.anchor == inverse::Anchor::plus_infinity ? "plus_infinity" : "minus_infinity"},
              {"left_end_mismatch", e.left_end_mismatch}};
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw InvalidArgument("cannot open '" + path + "' for writing");
  os << text;
  if (!os) throw InvalidArgument("failed to write '" + path + "'");
}

std::string read_text_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InvalidArgument("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

}  // namespace iwatsuka::io

#include "rdl/cli.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <new>
#include <set>
#include <sstream>

#include "CLI11.hpp"

#include "rdl/asymptotics.hpp"
#include "rdl/error.hpp"
#include "rdl/io.hpp"

namespace rdl {

namespace {

using nlohmann::json;

const std::set<std::string> kCommands{"sample",   "ids", "negative", "classical", "laplace",
                                      "constants", "fk",  "fit",      "lifshitz1d"};

std::string join_path(const std::string& where, const std::string& key) {
  return where.empty() ? key : where + "." + key;
}

void merge_into(json& base, const json& user, const std::string& where) {
  if (!user.is_object())
    throw ConfigError((where.empty() ? std::string("config") : where) + " must be a JSON object",
                      where);
  for (const auto& [key, value] : user.items()) {
    const std::string path = join_path(where, key);
    if (!base.contains(key)) throw ConfigError("unknown key \"" + path + "\"", path);
    json& slot = base[key];
    if (slot.is_object() && value.is_object())
      merge_into(slot, value, path);
    else
      slot = value;
  }
}

void apply_override(json& base, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ConfigError("--set expects key=value, got \"" + assignment + "\"", "--set");
  const std::string path = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(text);
  } catch (const json::exception&) {
    value = text;
  }
  json* node = &base;
  std::string walked;
  std::stringstream ss(path);
  std::string part;
  std::vector<std::string> parts;
  while (std::getline(ss, part, '.')) parts.push_back(part);
  for (std::size_t i = 0; i < parts.size(); ++i) {
    walked = join_path(walked, parts[i]);
    if (!node->is_object() || !node->contains(parts[i]))
      throw ConfigError("unknown key \"" + walked + "\"", walked);
    node = &(*node)[parts[i]];
  }
  if (node->is_object() && value.is_object())
    merge_into(*node, value, path);
  else
    *node = value;
}

template <class T>
T field(const json& j, const std::string& key, const std::string& where) {
  const std::string path = join_path(where, key);
  const json& v = j.at(key);
  if constexpr (std::is_same_v<T, bool>) {
    if (!v.is_boolean()) throw ConfigError(path + " must be a boolean", path);
  } else if constexpr (std::is_same_v<T, std::string>) {
    if (!v.is_string()) throw ConfigError(path + " must be a string", path);
  } else if constexpr (std::is_integral_v<T>) {
    if (!v.is_number_integer()) throw ConfigError(path + " must be an integer", path);
    if (std::is_unsigned_v<T> && v.get<long long>() < 0)
      throw ConfigError(path + " must be >= 0", path);
  } else {
    if (!v.is_number()) throw ConfigError(path + " must be a number", path);
  }
  return v.get<T>();
}

std::optional<double> optional_number(const json& j, const std::string& key, const std::string& where) {
  if (j.at(key).is_null()) return std::nullopt;
  return field<double>(j, key, where);
}

std::vector<double> number_list(const json& v, const std::string& path) {
  if (!v.is_array()) throw ConfigError(path + " must be an array of numbers", path);
  std::vector<double> out;
  for (const json& e : v) {
    if (!e.is_number()) throw ConfigError(path + " must be an array of numbers", path);
    out.push_back(e.get<double>());
  }
  return out;
}

std::pair<double, double> number_pair(const json& v, const std::string& path) {
  const std::vector<double> p = number_list(v, path);
  if (p.size() != 2) throw ConfigError(path + " must be [lo, hi]", path);
  return {p[0], p[1]};
}

// Array of values, or {lo, hi, n, spacing} with spacing linear or log.
std::vector<double> parse_axis(const json& j, const std::string& where) {
  if (j.is_array()) return number_list(j, where);
  if (!j.is_object()) throw ConfigError(where + " must be an array or {lo, hi, n, spacing}", where);
  require_known_keys(j, {"lo", "hi", "n", "spacing"}, where);
  for (const char* k : {"lo", "hi", "n", "spacing"})
    if (!j.contains(k)) throw ConfigError(join_path(where, k) + " is required", join_path(where, k));
  const double lo = field<double>(j, "lo", where), hi = field<double>(j, "hi", where);
  const int n = field<int>(j, "n", where);
  const std::string spacing = field<std::string>(j, "spacing", where);
  if (n < 1) throw ConfigError(where + ".n must be >= 1", where + ".n");
  if (spacing != "linear" && spacing != "log")
    throw ConfigError(where + ".spacing must be \"linear\" or \"log\"", where + ".spacing");
  if (spacing == "log" && !(lo > 0.0))
    throw ConfigError(where + ".lo must be > 0 for log spacing", where + ".lo");
  std::vector<double> out;
  for (int i = 0; i < n; ++i) {
    const double f = n == 1 ? 0.0 : static_cast<double>(i) / (n - 1);
    out.push_back(spacing == "log" ? lo * std::pow(hi / lo, f) : lo + (hi - lo) * f);
  }
  if (n > 1) out.back() = hi;
  return out;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot write " + path.string(), "out");
  os << text;
  if (!os) throw ConfigError("failed writing " + path.string(), "out");
}

struct Artifacts {
  std::filesystem::path dir;
  std::vector<std::string> files;

  void text(const std::string& name, const std::string& body) {
    write_file(dir / name, body);
    files.push_back(name);
  }
  template <class Curve>
  void csv(const std::string& name, const Curve& c) {
    std::ostringstream os;
    write_csv(c, os);
    text(name, os.str());
  }
};

void write_sidecar(Artifacts& a, const std::string& name, const RunConfig& cfg, const json& result) {
  const json doc = {{"command", cfg.command},
                    {"artifacts", a.files},
                    {"result", result},
                    {"run_config", cfg.resolved}};
  a.text(name, doc.dump(2) + "\n");
}

json laplace_result(const LaplaceCurve& c) {
  json flagged = json::array();
  for (std::size_t k = 0; k < c.t_grid.size(); ++k)
    if (k < c.flagged.size() && c.flagged[k]) flagged.push_back(c.t_grid[k]);
  json r = {{"kind", to_string(c.kind)}, {"stderr", c.std_err}, {"flagged_t", flagged}, {"meta", c.meta}};
  if (!c.log_upper.empty()) r["log_upper"] = c.log_upper;
  if (!c.remainder.empty()) r["remainder"] = c.remainder;
  if (!c.ess.empty()) r["ess"] = c.ess;
  return r;
}

json ids_result(const IdsCurve& c) {
  return {{"replicates", c.replicates},
          {"states_per_volume", c.states_per_volume},
          {"box_r", c.box_r},
          {"dx", c.dx},
          {"meta", c.meta}};
}

IdsOptions ids_options(const RunConfig& cfg) { return IdsOptions{cfg.truncation}; }

// Reads the abscissa, log value and standard error columns of any curve CSV.
LogCurve read_curve_csv(const std::string& path, const std::string& kind) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot read " + path, "fit.input");
  std::string header;
  std::getline(is, header);
  is.seekg(0);
  std::string k = kind;
  if (k == "auto") {
    if (header == "lambda,n_hat,stderr") k = "ids";
    else if (header == "t,log_value,kind") k = "laplace";
    else if (header == "t,log_s,stderr") k = "fk";
    else throw ConfigError("unrecognised CSV header \"" + header + "\" in " + path, "fit.input");
  }
  if (k == "ids") return log_curve(read_ids_csv(is));
  if (k == "laplace") return log_curve(read_laplace_csv(is));
  if (k != "fk") throw ConfigError("fit.kind must be ids, laplace, fk or auto", "fit.kind");
  if (header != "t,log_s,stderr")
    throw ConfigError("path-estimate CSV must start with t,log_s,stderr", "fit.input");
  std::getline(is, header);
  LogCurve c;
  std::string line;
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::stringstream ls(line);
    std::string a, b, e;
    if (!std::getline(ls, a, ',') || !std::getline(ls, b, ',') || !std::getline(ls, e))
      throw ConfigError("CSV line " + std::to_string(lineno) + ": expected 3 columns", "fit.input");
    try {
      c.x.push_back(std::stod(a));
      c.log_value.push_back(std::stod(b));
      c.std_err.push_back(std::stod(e));
    } catch (const std::exception&) {
      throw ConfigError("CSV line " + std::to_string(lineno) + ": cannot parse numbers", "fit.input");
    }
  }
  return c;
}

std::string box_label(double r) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%g", r);
  return buf;
}

json run_command(const RunConfig& cfg, Artifacts& out) {
  const std::string& cmd = cfg.command;
  if (cmd == "sample") {
    const Configuration c =
        sample_configuration(cfg.params, cfg.spec, cfg.sample.box_r, cfg.sample.replicate, cfg.truncation);
    out.text("configuration.json", to_json(c).dump() + "\n");
    std::ostringstream os;
    const int d = c.d();
    for (int i = 0; i < d; ++i) os << (i ? ",q" : "q") << i;
    for (int i = 0; i < d; ++i) os << ",xi" << i;
    os << '\n';
    for (std::size_t s = 0; s < c.site_count(); ++s) {
      const Site q = c.site(s);
      const Point& xi = c.xi_at(s);
      for (int i = 0; i < d; ++i) os << (i ? "," : "") << q[i];
      for (int i = 0; i < d; ++i) os << ',' << format_double(xi[i]);
      os << '\n';
    }
    out.text("sample.csv", os.str());
    json r = {{"margin", c.margin()}, {"tail_bound", c.tail_bound()}, {"site_count", c.site_count()}};
    if (d == 1) r["max_gap"] = max_gap(c);
    return r;
  }
  if (cmd == "ids" || cmd == "negative" || cmd == "classical") {
    const IdsCurve c =
        cmd == "ids"        ? empirical_ids(cfg.params, cfg.spec, cfg.grid, cfg.lambda_grid, cfg.replicates, ids_options(cfg))
        : cmd == "negative" ? negative_ids(cfg.params, cfg.spec, cfg.grid, cfg.lambda_grid, cfg.replicates, ids_options(cfg))
                            : classical_ids(cfg.params, cfg.spec, cfg.grid, cfg.lambda_grid, cfg.replicates, ids_options(cfg));
    out.csv(cmd + ".csv", c);
    return ids_result(c);
  }
  if (cmd == "laplace") {
    LaplaceCurve l;
    if (cfg.laplace.source == "ids") {
      const IdsCurve c = empirical_ids(cfg.params, cfg.spec, cfg.grid, cfg.lambda_grid,
                                       cfg.replicates, ids_options(cfg));
      out.csv("laplace_ids.csv", c);
      l = laplace_from_ids(c, cfg.t_grid);
    } else if (cfg.laplace.source == "n1_quadrature") {
      l = n1_quadrature_curve(cfg.params, cfg.spec, cfg.t_grid, N1Options{.x_nodes = cfg.laplace.x_nodes});
    } else {
      l = n1_mc(cfg.params, cfg.spec, cfg.t_grid, cfg.replicates,
                N1McOptions{.xi_samples = cfg.laplace.xi_samples});
    }
    out.csv("laplace.csv", l);
    return laplace_result(l);
  }
  if (cmd == "constants") {
    PasturOptions po;
    const AsymptoticConstants k = asymptotic_constants(cfg.params.d, cfg.params.theta, cfg.spec.alpha,
                                                       cfg.spec.c0, cfg.params.h, cfg.spec.sup(), po);
    json r = to_json(k, po);
    r["pastur_ids_coefficient"] = kasahara_map(k.kappa, k.pastur_k).limit_coefficient;
    if (!cfg.constants.k0_sigma_grid.empty()) {
      K0Options ko;
      ko.kernel_exponent = cfg.constants.k0_kernel_exponent;
      const K0WidthScan scan = optimize_k0_width(cfg.params, cfg.spec.c0, cfg.constants.k0_sigma_grid, ko);
      r["k0_upper_bound"] = {{"sigma", scan.sigma},
                             {"objective", scan.objective},
                             {"best_sigma", scan.best_sigma},
                             {"best_objective", scan.best_objective},
                             {"test_function", "cos(pi x / (2 sigma)) / sqrt(sigma)"}};
    }
    return r;
  }
  if (cmd == "fk") {
    FkOptions o;
    o.constant_potential = cfg.fk.constant_potential;
    o.truncation = cfg.truncation;
    const PathEstimate e =
        cfg.fk.mode == "survival"
            ? survival(cfg.params, cfg.spec, cfg.fk.x, cfg.t_grid, cfg.fk.n_paths, cfg.fk.n_configs, cfg.fk.dt, o)
            : growth(cfg.params, cfg.spec, cfg.fk.x, cfg.t_grid, cfg.fk.n_paths, cfg.fk.n_configs, cfg.fk.dt, o);
    out.csv("fk.csv", e);
    json r = sidecar_json(e);
    if (cfg.fk.lemma61_eps) {
      if (cfg.fk.mode != "survival")
        throw ConfigError("fk.lemma61_eps applies to survival runs", "fk.lemma61_eps");
      const double eps = *cfg.fk.lemma61_eps;
      std::vector<double> shifted;
      for (double t : cfg.t_grid)
        if (t - eps > 0.0) shifted.push_back(t - eps);
      if (shifted.empty()) throw ConfigError("no t in t_grid exceeds fk.lemma61_eps", "fk.lemma61_eps");
      const IdsCurve c = empirical_ids(cfg.params, cfg.spec, cfg.grid, cfg.lambda_grid,
                                       cfg.replicates, ids_options(cfg));
      const LaplaceCurve l = laplace_from_ids(c, shifted);
      out.csv("fk_laplace.csv", l);
      r["lemma61"] = to_json(lemma61_check(e, l, eps, cfg.params.d, cfg.params.h));
    }
    return r;
  }
  if (cmd == "fit") {
    if (cfg.fit.input.empty()) throw ConfigError("fit.input must name a curve CSV", "fit.input");
    const LogCurve c = read_curve_csv(cfg.fit.input, cfg.fit.kind);
    const FitResult f = cfg.fit.model == FitModel::log_corrected_2d
                            ? fit_log_corrected(c, cfg.fit.theta.value_or(cfg.params.theta), cfg.fit.options)
                            : fit_power(c, cfg.fit.model, cfg.fit.options);
    return to_json(f);
  }
  // lifshitz1d
  const LifshitzReport report = pipeline_lifshitz_1d(cfg);
  std::ostringstream table;
  table << "box_r,exponent,stderr_exponent,target_exponent,coefficient_fixed,target_coefficient,verdict\n";
  for (const LifshitzRow& row : report.rows) {
    out.csv("lifshitz1d_R" + box_label(row.box_r) + ".csv", row.curve);
    table << format_double(row.box_r) << ','
          << format_double(row.free_fit ? row.free_fit->exponent : NAN) << ','
          << format_double(row.free_fit ? row.free_fit->stderr_exponent : NAN) << ','
          << format_double(row.target_exponent) << ','
          << format_double(row.fixed_fit ? row.fixed_fit->coefficient : NAN) << ','
          << format_double(row.target_coefficient) << ',' << to_string(row.verdict) << '\n';
  }
  out.text("lifshitz1d_verdicts.csv", table.str());
  return to_json(report);
}

const char* kind_name(const Error& e) {
  switch (e.kind()) {
    case ErrorKind::config: return "config";
    case ErrorKind::numerical: return "numerical";
    case ErrorKind::resource: break;
  }
  return "resource";
}

void report_error(std::ostream& err, const std::string& kind, const std::string& message,
                  const std::string& field, int code) {
  json j = {{"error", kind}, {"message", message}, {"exit_code", code}};
  if (!field.empty()) j["field"] = field;
  err << j.dump() << '\n';
}

}  // namespace

json default_run_config() {
  json grid = to_json(GridSpec{});
  grid["d"] = nullptr;
  return {{"command", "ids"},
          {"params", to_json(ModelParams{})},
          {"spec", to_json(PotentialSpec{})},
          {"grid", grid},
          {"truncation", to_json(TruncationPolicy{})},
          {"lambda_grid", {{"lo", 0.05}, {"hi", 0.5}, {"n", 19}, {"spacing", "linear"}}},
          {"t_grid", {{"lo", 1.0}, {"hi", 100.0}, {"n", 21}, {"spacing", "log"}}},
          {"replicates", 20},
          {"sample", {{"box_r", 20.0}, {"replicate", 0}}},
          {"laplace", {{"source", "ids"}, {"x_nodes", 40}, {"xi_samples", 128}}},
          {"fk",
           {{"mode", "survival"},
            {"x", {0.0, 0.0, 0.0}},
            {"n_paths", 1000},
            {"n_configs", 20},
            {"dt", 0.01},
            {"constant_potential", nullptr},
            {"lemma61_eps", nullptr}}},
          {"fit",
           {{"input", ""},
            {"kind", "auto"},
            {"model", "power_lambda"},
            {"window", nullptr},
            {"growth", false},
            {"fixed_exponent", nullptr},
            {"theta", nullptr},
            {"min_depth", 10.0},
            {"max_rel_stderr", 0.2}}},
          {"constants", {{"k0_sigma_grid", json::array()}, {"k0_kernel_exponent", 0.0}}},
          {"lifshitz1d",
           {{"box_sizes", {400.0}},
            {"dx", 0.05},
            {"lambda_window", {0.05, 0.5}},
            {"exponent_tol", 0.2},
            {"coefficient_tol", 0.3}}}};
}

json resolve_run_config(const json& user, const std::vector<std::string>& sets,
                        std::optional<std::uint64_t> seed, std::optional<int> workers) {
  json resolved = default_run_config();
  const json& body = user.is_object() && user.contains("run_config") ? user.at("run_config") : user;
  if (!body.is_null()) merge_into(resolved, body, "");
  for (const std::string& s : sets) apply_override(resolved, s);
  if (seed) resolved["params"]["seed"] = *seed;
  if (workers) resolved["params"]["workers"] = *workers;
  if (resolved["grid"]["d"].is_null()) resolved["grid"]["d"] = resolved["params"]["d"];
  return resolved;
}

RunConfig parse_run_config(const json& r) {
  RunConfig c;
  c.resolved = r;
  c.command = field<std::string>(r, "command", "");
  if (!kCommands.count(c.command))
    throw ConfigError("unknown command \"" + c.command + "\"", "command");
  c.params = model_params_from_json(r.at("params"), "params");
  c.params.validate();
  c.spec = potential_spec_from_json(r.at("spec"), "spec");
  c.grid = grid_spec_from_json(r.at("grid"), "grid");
  c.truncation = truncation_from_json(r.at("truncation"), "truncation");
  c.lambda_grid = parse_axis(r.at("lambda_grid"), "lambda_grid");
  c.t_grid = parse_axis(r.at("t_grid"), "t_grid");
  c.replicates = field<std::size_t>(r, "replicates", "");

  const json& s = r.at("sample");
  c.sample.box_r = field<double>(s, "box_r", "sample");
  c.sample.replicate = field<std::uint64_t>(s, "replicate", "sample");

  const json& l = r.at("laplace");
  c.laplace.source = field<std::string>(l, "source", "laplace");
  if (c.laplace.source != "ids" && c.laplace.source != "n1_quadrature" && c.laplace.source != "n1_mc")
    throw ConfigError("laplace.source must be ids, n1_quadrature or n1_mc", "laplace.source");
  c.laplace.x_nodes = field<int>(l, "x_nodes", "laplace");
  c.laplace.xi_samples = field<int>(l, "xi_samples", "laplace");

  const json& f = r.at("fk");
  c.fk.mode = field<std::string>(f, "mode", "fk");
  if (c.fk.mode != "survival" && c.fk.mode != "growth")
    throw ConfigError("fk.mode must be survival or growth", "fk.mode");
  const std::vector<double> x = number_list(f.at("x"), "fk.x");
  if (x.size() < static_cast<std::size_t>(c.params.d) || x.size() > 3)
    throw ConfigError("fk.x needs between d and 3 coordinates", "fk.x");
  for (std::size_t i = 0; i < x.size(); ++i) c.fk.x[i] = i < static_cast<std::size_t>(c.params.d) ? x[i] : 0.0;
  c.fk.n_paths = field<std::size_t>(f, "n_paths", "fk");
  c.fk.n_configs = field<std::size_t>(f, "n_configs", "fk");
  c.fk.dt = field<double>(f, "dt", "fk");
  c.fk.constant_potential = optional_number(f, "constant_potential", "fk");
  c.fk.lemma61_eps = optional_number(f, "lemma61_eps", "fk");

  const json& ft = r.at("fit");
  c.fit.input = field<std::string>(ft, "input", "fit");
  c.fit.kind = field<std::string>(ft, "kind", "fit");
  c.fit.model = fit_model_from_string(field<std::string>(ft, "model", "fit"));
  if (!ft.at("window").is_null()) c.fit.options.window = number_pair(ft.at("window"), "fit.window");
  c.fit.options.growth = field<bool>(ft, "growth", "fit");
  c.fit.options.fixed_exponent = optional_number(ft, "fixed_exponent", "fit");
  c.fit.theta = optional_number(ft, "theta", "fit");
  c.fit.options.min_depth = field<double>(ft, "min_depth", "fit");
  c.fit.options.max_rel_stderr = field<double>(ft, "max_rel_stderr", "fit");

  const json& k = r.at("constants");
  c.constants.k0_sigma_grid = number_list(k.at("k0_sigma_grid"), "constants.k0_sigma_grid");
  c.constants.k0_kernel_exponent = field<double>(k, "k0_kernel_exponent", "constants");

  const json& p = r.at("lifshitz1d");
  c.lifshitz1d.box_sizes = number_list(p.at("box_sizes"), "lifshitz1d.box_sizes");
  if (c.lifshitz1d.box_sizes.empty())
    throw ConfigError("lifshitz1d.box_sizes must not be empty", "lifshitz1d.box_sizes");
  c.lifshitz1d.dx = field<double>(p, "dx", "lifshitz1d");
  if (!(c.lifshitz1d.dx > 0.0)) throw ConfigError("lifshitz1d.dx must be > 0", "lifshitz1d.dx");
  c.lifshitz1d.lambda_window = number_pair(p.at("lambda_window"), "lifshitz1d.lambda_window");
  c.lifshitz1d.exponent_tol = field<double>(p, "exponent_tol", "lifshitz1d");
  c.lifshitz1d.coefficient_tol = field<double>(p, "coefficient_tol", "lifshitz1d");
  return c;
}

LifshitzReport pipeline_lifshitz_1d(const RunConfig& cfg) {
  if (cfg.params.d != 1) throw ConfigError("lifshitz1d requires params.d = 1", "params.d");
  if (cfg.spec.sign != 1) throw ConfigError("lifshitz1d requires spec.sign = +1", "spec.sign");
  if (!cfg.spec.is_compact() && !(cfg.spec.alpha > 3.0))
    throw ConfigError("lifshitz1d requires alpha > 3", "spec.alpha");
  const double theta = cfg.params.theta;
  const auto [lo, hi] = cfg.lifshitz1d.lambda_window;
  LifshitzReport report;
  for (double r : cfg.lifshitz1d.box_sizes) {
    LifshitzRow row;
    row.box_r = r;
    row.n_per_side = static_cast<int>(std::lround(r / cfg.lifshitz1d.dx)) - 1;
    row.target_exponent = 0.5 * (1.0 + theta);
    row.target_coefficient = lifshitz_1d_constant(theta, cfg.params.h);
    GridSpec g = cfg.grid;
    g.d = 1;
    g.box_r = r;
    g.n_per_side = row.n_per_side;
    g.bc = Boundary::dirichlet;
    row.curve = empirical_ids(cfg.params, cfg.spec, g, cfg.lambda_grid, cfg.replicates, ids_options(cfg));

    LogCurve usable;
    const LogCurve all = log_curve(row.curve);
    double deepest = 0.0;
    for (std::size_t i = 0; i < all.x.size(); ++i) {
      if (all.x[i] < lo || all.x[i] > hi) continue;
      if (!std::isfinite(all.log_value[i])) {
        ++row.zero_points;
        continue;
      }
      usable.x.push_back(all.x[i]);
      usable.log_value.push_back(all.log_value[i]);
      usable.std_err.push_back(all.std_err[i]);
      deepest = std::max(deepest, -all.log_value[i]);
    }
    row.used_points = usable.x.size();
    if (row.used_points < 5) {
      row.note = "fewer than 5 window points with a nonzero count";
    } else if (!(deepest >= 5.0)) {
      row.note = "no tail: -log N stays above -5 on the window";
    } else {
      FitOptions o;
      o.window = std::pair{lo, hi};
      row.free_fit = fit_power(usable, FitModel::power_lambda, o);
      o.fixed_exponent = row.target_exponent;
      row.fixed_fit = fit_power(usable, FitModel::power_lambda, o);
      row.exponent_ok =
          std::abs(row.free_fit->exponent - row.target_exponent) <= cfg.lifshitz1d.exponent_tol;
      row.coefficient_ok = std::abs(row.fixed_fit->coefficient / row.target_coefficient - 1.0) <=
                           cfg.lifshitz1d.coefficient_tol;
      row.verdict = row.exponent_ok && row.coefficient_ok ? Verdict::pass : Verdict::fail;
    }
    report.rows.push_back(std::move(row));
  }
  std::size_t largest = 0;
  for (std::size_t i = 1; i < report.rows.size(); ++i)
    if (report.rows[i].box_r > report.rows[largest].box_r) largest = i;
  report.verdict = report.rows[largest].verdict;
  return report;
}

json to_json(const LifshitzReport& report) {
  json rows = json::array();
  for (const LifshitzRow& r : report.rows) {
    json j = {{"box_r", r.box_r},
              {"n_per_side", r.n_per_side},
              {"used_points", r.used_points},
              {"zero_points", r.zero_points},
              {"target_exponent", r.target_exponent},
              {"target_coefficient", r.target_coefficient},
              {"exponent_ok", r.exponent_ok},
              {"coefficient_ok", r.coefficient_ok},
              {"verdict", to_string(r.verdict)},
              {"ids_meta", r.curve.meta}};
    if (r.free_fit) j["free_fit"] = to_json(*r.free_fit);
    if (r.fixed_fit) j["fixed_exponent_fit"] = to_json(*r.fixed_fit);
    if (!r.note.empty()) j["note"] = r.note;
    rows.push_back(j);
  }
  return {{"verdict", to_string(report.verdict)}, {"rows", rows}};
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"rdlab: spectral statistics of random displacement Schrodinger operators"};
  std::string command, config_path, out_dir = ".";
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  app.add_option("command", command, "sample, ids, negative, classical, laplace, constants, fk, fit or lifshitz1d");
  app.add_option("--config", config_path, "JSON run configuration (or a sidecar from an earlier run)");
  app.add_option("--set", sets, "dotted-path override key=value (repeatable)");
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--seed", seed, "overrides params.seed");
  app.add_option("--workers", workers, "overrides params.workers");
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    report_error(err, "config", e.what(), "", 2);
    return 2;
  }

  try {
    json user = json::object();
    if (!config_path.empty()) {
      std::ifstream is(config_path);
      if (!is) throw ConfigError("cannot read " + config_path, "--config");
      try {
        user = json::parse(is);
      } catch (const json::parse_error& e) {
        throw ConfigError(config_path + ": " + e.what(), "--config");
      }
    }
    if (!command.empty()) sets.insert(sets.begin(), "command=\"" + command + "\"");
    const RunConfig cfg = parse_run_config(resolve_run_config(user, sets, seed, workers));
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw ConfigError("cannot create output directory " + out_dir, "--out");
    Artifacts artifacts{out_dir, {}};
    const json result = run_command(cfg, artifacts);
    write_sidecar(artifacts, cfg.command + ".json", cfg, result);
    out << json{{"command", cfg.command}, {"out", out_dir}, {"artifacts", artifacts.files}}.dump() << '\n';
    return 0;
  } catch (const Error& e) {
    report_error(err, kind_name(e), e.what(), e.field(), e.exit_code());
    return e.exit_code();
  } catch (const std::bad_alloc&) {
    report_error(err, "resource", "out of memory", "", 4);
    return 4;
  } catch (const std::exception& e) {
    report_error(err, "numerical", e.what(), "", 3);
    return 3;
  }
}

}  // namespace rdl

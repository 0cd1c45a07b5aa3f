#include "rdl/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "rdl/error.hpp"

namespace rdl {

namespace {

template <typename T>
T get_field(const nlohmann::json& j, const char* key, const std::string& where, T fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError("wrong type for " + where + "." + key, where + "." + key);
  }
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void require_known_keys(const nlohmann::json& j, const std::vector<std::string>& allowed,
                        const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be a JSON object", where);
  for (const auto& [key, value] : j.items())
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      throw ConfigError("unknown key " + where + "." + key, where + "." + key);
}

nlohmann::json to_json(const ModelParams& p) {
  return {{"d", p.d}, {"theta", p.theta}, {"h", p.h}, {"seed", p.seed}, {"workers", p.workers}};
}

nlohmann::json to_json(const PotentialSpec& s) {
  nlohmann::json j{{"c0", s.c0},       {"alpha", s.alpha}, {"r0", s.r0},
                   {"sign", s.sign},   {"u_cap", s.u_cap}, {"obstacle_rho", s.obstacle_rho}};
  j["compact_r"] = s.compact_r ? nlohmann::json(*s.compact_r) : nlohmann::json(nullptr);
  return j;
}

nlohmann::json to_json(const GridSpec& g) {
  return {{"d", g.d},
          {"box_r", g.box_r},
          {"n_per_side", g.n_per_side},
          {"bc", g.bc == Boundary::dirichlet ? "dirichlet" : "neumann"},
          {"max_points", g.max_points}};
}

nlohmann::json to_json(const TruncationPolicy& t) {
  return {{"tail_tol", t.tail_tol},
          {"max_margin", t.max_margin},
          {"memory_budget_bytes", t.memory_budget_bytes}};
}

ModelParams model_params_from_json(const nlohmann::json& j, const std::string& where) {
  require_known_keys(j, {"d", "theta", "h", "seed", "workers"}, where);
  ModelParams p;
  p.d = get_field(j, "d", where, p.d);
  p.theta = get_field(j, "theta", where, p.theta);
  p.h = get_field(j, "h", where, p.h);
  p.seed = get_field(j, "seed", where, p.seed);
  p.workers = get_field(j, "workers", where, p.workers);
  return p;
}

PotentialSpec potential_spec_from_json(const nlohmann::json& j, const std::string& where) {
  require_known_keys(j, {"c0", "alpha", "r0", "sign", "compact_r", "u_cap", "obstacle_rho"}, where);
  PotentialSpec s;
  s.c0 = get_field(j, "c0", where, s.c0);
  s.alpha = get_field(j, "alpha", where, s.alpha);
  s.r0 = get_field(j, "r0", where, s.r0);
  s.sign = get_field(j, "sign", where, s.sign);
  s.u_cap = get_field(j, "u_cap", where, s.u_cap);
  s.obstacle_rho = get_field(j, "obstacle_rho", where, s.obstacle_rho);
  if (j.contains("compact_r") && !j.at("compact_r").is_null())
    s.compact_r = get_field(j, "compact_r", where, 0.0);
  return s;
}

GridSpec grid_spec_from_json(const nlohmann::json& j, const std::string& where) {
  require_known_keys(j, {"d", "box_r", "n_per_side", "bc", "max_points"}, where);
  GridSpec g;
  g.d = get_field(j, "d", where, g.d);
  g.box_r = get_field(j, "box_r", where, g.box_r);
  g.n_per_side = get_field(j, "n_per_side", where, g.n_per_side);
  g.max_points = get_field(j, "max_points", where, g.max_points);
  const std::string bc = get_field<std::string>(j, "bc", where, "dirichlet");
  if (bc == "dirichlet")
    g.bc = Boundary::dirichlet;
  else if (bc == "neumann")
    g.bc = Boundary::neumann;
  else
    throw ConfigError("bc must be \"dirichlet\" or \"neumann\"", where + ".bc");
  return g;
}

TruncationPolicy truncation_from_json(const nlohmann::json& j, const std::string& where) {
  require_known_keys(j, {"tail_tol", "max_margin", "memory_budget_bytes"}, where);
  TruncationPolicy t;
  t.tail_tol = get_field(j, "tail_tol", where, t.tail_tol);
  t.max_margin = get_field(j, "max_margin", where, t.max_margin);
  t.memory_budget_bytes = get_field(j, "memory_budget_bytes", where, t.memory_budget_bytes);
  return t;
}

}  // namespace rdl

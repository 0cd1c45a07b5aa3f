#include "rdl/fit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rdl/error.hpp"
#include "rdl/io.hpp"
#include "rdl/math.hpp"

namespace rdl {

namespace {

constexpr std::size_t kMinPoints = 5;

void check_curve(const LogCurve& c) {
  if (c.x.size() != c.log_value.size() || (!c.std_err.empty() && c.std_err.size() != c.x.size()))
    throw ConfigError("curve columns have different lengths", "curve");
  if (c.x.empty()) throw ConfigError("curve is empty", "curve");
}

struct Regression {
  double slope = 0.0;
  double intercept = 0.0;
  double stderr_slope = 0.0;
  double stderr_intercept = 0.0;
  double r_squared = 0.0;
};

double clamp_unit(double r) { return std::isfinite(r) ? std::clamp(r, 0.0, 1.0) : 0.0; }

// Weighted least squares z = a + b x; b is held when `fixed` is set.
Regression weighted_line(const std::vector<double>& x, const std::vector<double>& z,
                         const std::vector<double>& w, std::optional<double> fixed) {
  const std::size_t n = x.size();
  CompensatedSum sw, sx, sz;
  for (std::size_t i = 0; i < n; ++i) {
    sw.add(w[i]);
    sx.add(w[i] * x[i]);
    sz.add(w[i] * z[i]);
  }
  const double total = sw.value(), xm = sx.value() / total, zm = sz.value() / total;
  CompensatedSum sxx, sxz, szz;
  for (std::size_t i = 0; i < n; ++i) {
    sxx.add(w[i] * (x[i] - xm) * (x[i] - xm));
    sxz.add(w[i] * (x[i] - xm) * (z[i] - zm));
    szz.add(w[i] * (z[i] - zm) * (z[i] - zm));
  }
  Regression r;
  r.slope = fixed ? *fixed : sxz.value() / sxx.value();
  r.intercept = zm - r.slope * xm;
  CompensatedSum res;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = z[i] - r.intercept - r.slope * x[i];
    res.add(w[i] * e * e);
  }
  const double dof = static_cast<double>(n) - (fixed ? 1.0 : 2.0);
  const double s2 = res.value() / dof;
  if (fixed) {
    r.stderr_intercept = std::sqrt(s2 / total);
  } else {
    r.stderr_slope = std::sqrt(s2 / sxx.value());
    r.stderr_intercept = std::sqrt(s2 * (1.0 / total + xm * xm / sxx.value()));
  }
  r.r_squared = szz.value() > 0.0 ? clamp_unit(1.0 - res.value() / szz.value()) : 1.0;
  return r;
}

struct Prepared {
  std::vector<double> lx, lz, w;
  std::pair<double, double> window;
};

Prepared prepare(const LogCurve& c, const std::vector<std::size_t>& idx, bool growth) {
  if (idx.size() < kMinPoints)
    throw ConfigError("insufficient data: the fit window holds " + std::to_string(idx.size()) +
                          " points, at least 5 are needed",
                      "window");
  std::string bad;
  for (std::size_t i : idx) {
    const double y = c.log_value[i];
    if (!std::isfinite(y) || (growth ? y <= 0.0 : y >= 0.0))
      bad += (bad.empty() ? "" : ", ") + std::string("(") + format_double(c.x[i]) + ", " +
             format_double(y) + ")";
    if (!(c.x[i] > 0.0))
      throw DomainError("abscissa must be > 0 on the fit window", "curve.x");
  }
  if (!bad.empty())
    throw DomainError(std::string(growth ? "log values must be > 0" : "log values must be < 0") +
                          " on the fit window; offending points " + bad,
                      "curve.log_value");
  Prepared p;
  // relative variances; exact points borrow the smallest positive one
  double floor_rel = std::numeric_limits<double>::infinity();
  if (!c.std_err.empty())
    for (std::size_t i : idx)
      if (c.std_err[i] > 0.0) floor_rel = std::min(floor_rel, c.std_err[i] / std::abs(c.log_value[i]));
  const bool any_err = std::isfinite(floor_rel);
  const double first = c.log_value[idx.front()];
  bool constant = true;
  for (std::size_t i : idx) {
    const double y = std::abs(c.log_value[i]);
    p.lx.push_back(std::log(c.x[i]));
    p.lz.push_back(std::log(y));
    const double rel = any_err ? std::max(c.std_err[i] / y, floor_rel) : 1.0;
    p.w.push_back(1.0 / (rel * rel));
    constant = constant && c.log_value[i] == first;
  }
  if (constant) throw DomainError("curve is constant on the fit window", "curve.log_value");
  p.window = {c.x[idx.front()], c.x[idx.back()]};
  for (std::size_t i : idx) {
    p.window.first = std::min(p.window.first, c.x[i]);
    p.window.second = std::max(p.window.second, c.x[i]);
  }
  return p;
}

}  // namespace

const char* to_string(FitModel m) noexcept {
  switch (m) {
    case FitModel::power_lambda: return "power_lambda";
    case FitModel::power_t: return "power_t";
    case FitModel::log_corrected_2d: break;
  }
  return "log_corrected_2d";
}

FitModel fit_model_from_string(const std::string& s) {
  if (s == "power_lambda") return FitModel::power_lambda;
  if (s == "power_t") return FitModel::power_t;
  if (s == "log_corrected_2d") return FitModel::log_corrected_2d;
  throw ConfigError("unknown fit model \"" + s + "\"", "model");
}

LogCurve log_curve(const IdsCurve& curve) {
  LogCurve c;
  for (std::size_t i = 0; i < curve.lambda_grid.size(); ++i) {
    const double n = curve.n_hat[i];
    c.x.push_back(curve.lambda_grid[i]);
    c.log_value.push_back(n > 0.0 ? std::log(n) : -std::numeric_limits<double>::infinity());
    c.std_err.push_back(n > 0.0 && i < curve.std_err.size() ? curve.std_err[i] / n
                                                             : std::numeric_limits<double>::infinity());
  }
  return c;
}

LogCurve log_curve(const LaplaceCurve& curve) {
  LogCurve c;
  c.x = curve.t_grid;
  c.log_value = curve.log_values;
  c.std_err = curve.std_err;
  if (c.std_err.size() != c.x.size()) c.std_err.clear();
  return c;
}

std::vector<std::size_t> fit_window(const LogCurve& curve, FitModel model, const FitOptions& options) {
  check_curve(curve);
  std::vector<std::size_t> idx;
  if (options.window) {
    const auto [lo, hi] = *options.window;
    if (!(lo <= hi)) throw ConfigError("fit window must satisfy lo <= hi", "window");
    const double slack = 1e-12 * std::max(std::abs(lo), std::abs(hi));
    for (std::size_t i = 0; i < curve.x.size(); ++i)
      if (curve.x[i] >= lo - slack && curve.x[i] <= hi + slack) idx.push_back(i);
    return idx;
  }
  std::vector<std::size_t> eligible;
  for (std::size_t i = 0; i < curve.x.size(); ++i) {
    const double y = curve.log_value[i];
    if (!std::isfinite(y) || (options.growth ? y <= 0.0 : y >= 0.0)) continue;
    if (std::abs(y) < options.min_depth) continue;
    if (!curve.std_err.empty() && !(curve.std_err[i] < options.max_rel_stderr * std::abs(y)))
      continue;
    eligible.push_back(i);
  }
  if (eligible.empty())
    throw ConfigError("no point is deep enough for the automatic fit window", "window");
  const bool deep_is_small = model != FitModel::power_t;
  double anchor = curve.x[eligible.front()];
  for (std::size_t i : eligible)
    anchor = deep_is_small ? std::min(anchor, curve.x[i]) : std::max(anchor, curve.x[i]);
  const double lo = deep_is_small ? anchor : anchor / 10.0;
  const double hi = deep_is_small ? anchor * 10.0 : anchor;
  for (std::size_t i : eligible)
    if (curve.x[i] >= lo && curve.x[i] <= hi) idx.push_back(i);
  return idx;
}

FitResult fit_power(const LogCurve& curve, FitModel model, const FitOptions& options) {
  if (model == FitModel::log_corrected_2d)
    throw ConfigError("use fit_log_corrected for the log-corrected model", "model");
  const Prepared p = prepare(curve, fit_window(curve, model, options), options.growth);
  const double dir = model == FitModel::power_lambda ? -1.0 : 1.0;
  std::optional<double> fixed;
  if (options.fixed_exponent) fixed = dir * *options.fixed_exponent;
  const Regression r = weighted_line(p.lx, p.lz, p.w, fixed);
  FitResult out;
  out.model = model;
  out.exponent = dir * r.slope;
  out.coefficient = std::exp(r.intercept);
  out.stderr_exponent = r.stderr_slope;
  out.stderr_log_coefficient = r.stderr_intercept;
  out.r_squared = r.r_squared;
  out.window = p.window;
  out.n_points = p.lx.size();
  out.exponent_fixed = fixed.has_value();
  if (!std::isfinite(out.exponent)) throw NumericalError("fitted exponent is not finite");
  return out;
}

FitResult fit_log_corrected(const LogCurve& curve, double theta, const FitOptions& options) {
  if (!(theta > 0.0)) throw DomainError("theta must be > 0", "theta");
  const std::vector<std::size_t> idx = fit_window(curve, FitModel::log_corrected_2d, options);
  for (std::size_t i : idx)
    if (!(curve.x[i] < 1.0))
      throw DomainError("log-corrected model needs lambda < 1 on the fit window; found " +
                            format_double(curve.x[i]),
                        "window");
  const Prepared p = prepare(curve, idx, false);
  // subtract the fixed shape, then fit the constant alone
  const double expo = 1.0 + 0.5 * theta;
  std::vector<double> shifted(p.lz.size());
  for (std::size_t i = 0; i < p.lz.size(); ++i)
    shifted[i] = p.lz[i] + expo * p.lx[i] + 0.5 * theta * std::log(-p.lx[i]);
  const Regression r = weighted_line(p.lx, shifted, p.w, 0.0);
  CompensatedSum sw, sz;
  for (std::size_t i = 0; i < p.lz.size(); ++i) {
    sw.add(p.w[i]);
    sz.add(p.w[i] * p.lz[i]);
  }
  const double zm = sz.value() / sw.value();
  CompensatedSum res, tot;
  for (std::size_t i = 0; i < p.lz.size(); ++i) {
    const double e = shifted[i] - r.intercept;
    res.add(p.w[i] * e * e);
    tot.add(p.w[i] * (p.lz[i] - zm) * (p.lz[i] - zm));
  }
  FitResult out;
  out.model = FitModel::log_corrected_2d;
  out.exponent = expo;
  out.coefficient = std::exp(r.intercept);
  out.stderr_log_coefficient = r.stderr_intercept;
  out.r_squared = tot.value() > 0.0 ? clamp_unit(1.0 - res.value() / tot.value()) : 1.0;
  out.window = p.window;
  out.n_points = p.lz.size();
  out.exponent_fixed = true;
  FitOptions same = options;
  same.window = p.window;
  same.fixed_exponent.reset();
  out.r_squared_power = fit_power(curve, FitModel::power_lambda, same).r_squared;
  return out;
}

nlohmann::json to_json(const FitResult& r) {
  nlohmann::json j = {{"model", to_string(r.model)},
                      {"exponent", r.exponent},
                      {"coefficient", r.coefficient},
                      {"stderr_exponent", r.stderr_exponent},
                      {"stderr_log_coefficient", r.stderr_log_coefficient},
                      {"r_squared", r.r_squared},
                      {"window", {r.window.first, r.window.second}},
                      {"n_points", r.n_points},
                      {"exponent_fixed", r.exponent_fixed}};
  if (r.r_squared_power) j["r_squared_power"] = *r.r_squared_power;
  return j;
}

}  // namespace rdl

#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "rdl/ids.hpp"

namespace rdl {

enum class FitModel { power_lambda, power_t, log_corrected_2d };

const char* to_string(FitModel m) noexcept;
FitModel fit_model_from_string(const std::string& s);

/// power_lambda: log N ~ -coefficient * lambda^-exponent.
/// power_t:      log L ~ -coefficient * t^exponent (or +coefficient with growth).
/// log_corrected_2d: log N ~ -coefficient * lambda^-(1+theta/2) log(1/lambda)^-(theta/2).
struct FitResult {
  FitModel model = FitModel::power_lambda;
  double exponent = 0.0;
  double coefficient = 0.0;
  double stderr_exponent = 0.0;
  double stderr_log_coefficient = 0.0;
  double r_squared = 0.0;
  std::pair<double, double> window{0.0, 0.0};
  std::size_t n_points = 0;
  bool exponent_fixed = false;
  /// log_corrected_2d only: r^2 of the free power law on the same points.
  std::optional<double> r_squared_power;
};

struct FitOptions {
  /// Abscissa range [lo, hi]; unset selects the deepest decade automatically.
  std::optional<std::pair<double, double>> window;
  /// Fit log(+log value) for curves that grow (attractive potentials).
  bool growth = false;
  /// Holds the exponent at this value and fits only the coefficient.
  std::optional<double> fixed_exponent;
  /// Automatic window: |log value| at least this deep.
  double min_depth = 10.0;
  /// Automatic window: standard error below this fraction of |log value|.
  double max_rel_stderr = 0.2;
};

/// Samples of a log curve: abscissa, log value and its standard error (may be empty).
struct LogCurve {
  std::vector<double> x;
  std::vector<double> log_value;
  std::vector<double> std_err;
};

LogCurve log_curve(const IdsCurve& curve);
LogCurve log_curve(const LaplaceCurve& curve);

FitResult fit_power(const LogCurve& curve, FitModel model, const FitOptions& options = {});
FitResult fit_log_corrected(const LogCurve& curve, double theta, const FitOptions& options = {});

/// Indices of the fit window under `options` (explicit range or deepest decade).
std::vector<std::size_t> fit_window(const LogCurve& curve, FitModel model,
                                    const FitOptions& options);

nlohmann::json to_json(const FitResult& r);

}  // namespace rdl

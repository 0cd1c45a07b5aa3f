#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "rdl/ids.hpp"
#include "rdl/randfield.hpp"

namespace rdl {

/// Annealed path functional log E[exp(-sign * integral V(B_s) ds); survival] on a time grid.
struct PathEstimate {
  std::vector<double> t_grid;
  std::vector<double> log_s;
  std::vector<double> std_err;  ///< delta-method error of log_s over configurations
  std::vector<double> ess;      ///< effective sample size of the pooled path weights
  std::vector<bool> flagged;    ///< ess below 10
  Point x{0.0, 0.0, 0.0};
  std::size_t n_paths = 0;      ///< per configuration
  std::size_t n_configs = 0;
  double dt = 0.0;
  int sign = +1;
  nlohmann::json meta;
};

struct FkOptions {
  /// Replaces the sampled field by this constant (no obstacles); an exact oracle.
  std::optional<double> constant_potential;
  TruncationPolicy truncation;
};

/// Survival among soft potentials and hard obstacles; paths are -h Laplacian diffusions
/// (increments of variance 2 h dt per axis), potential integrated by the trapezoid rule.
PathEstimate survival(const ModelParams& params, const PotentialSpec& spec, const Point& x,
                      std::span<const double> t_grid, std::size_t n_paths, std::size_t n_configs,
                      double dt, const FkOptions& options = {});

/// Growth functional E[exp(+integral u-field)] for sign -1, bounded u and no obstacles.
PathEstimate growth(const ModelParams& params, const PotentialSpec& spec, const Point& x,
                    std::span<const double> t_grid, std::size_t n_paths, std::size_t n_configs,
                    double dt, const FkOptions& options = {});

enum class Verdict { pass, inconclusive, fail };
const char* to_string(Verdict v) noexcept;

struct Lemma61Row {
  double t = 0.0;
  double log_s = 0.0;
  double log_bound = 0.0;  ///< log L(t - eps) + (d/2) log(4 pi h (t - eps))
  double sigma = 0.0;      ///< combined standard error
  bool resolved = false;   ///< sigma below the gap |log_s - log_bound|
  bool holds = false;      ///< log_s <= log_bound + 2 sigma
};

struct Lemma61Report {
  Verdict verdict = Verdict::inconclusive;
  double eps = 0.0;
  std::vector<Lemma61Row> rows;
};

/// Compares survival with the Laplace transform of the IDS shifted by eps. A point can
/// only fail when resolved; if no point is resolved the verdict is inconclusive.
Lemma61Report lemma61_check(const PathEstimate& path, const LaplaceCurve& laplace, double eps,
                            int d, double h);
nlohmann::json to_json(const Lemma61Report& report);

void write_csv(const PathEstimate& est, std::ostream& os);
nlohmann::json sidecar_json(const PathEstimate& est);

}  // namespace rdl

#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "rdl/operator.hpp"
#include "rdl/randfield.hpp"

namespace rdl {

/// Empirical integrated density of states with Monte Carlo error bars.
struct IdsCurve {
  std::vector<double> lambda_grid;
  std::vector<double> n_hat;
  std::vector<double> std_err;
  std::size_t replicates = 0;
  /// Per-replicate counts / R^d, kept so transforms get exact error bars.
  std::vector<std::vector<double>> per_replicate;
  /// Grid points per unit volume; bounds N from above.
  double states_per_volume = 0.0;
  double box_r = 0.0;
  double dx = 0.0;
  nlohmann::json meta;
};

enum class LaplaceKind { n1_quadrature, n1_mc, from_ids, negative };

const char* to_string(LaplaceKind kind) noexcept;
LaplaceKind laplace_kind_from_string(const std::string& s);

struct LaplaceCurve {
  LaplaceKind kind = LaplaceKind::from_ids;
  std::vector<double> t_grid;
  std::vector<double> log_values;
  std::vector<double> std_err;  ///< standard error of log_values
  /// from_ids only: upper bracket (left-endpoint lumping plus truncation remainder).
  std::vector<double> log_upper;
  /// from_ids only: e^{-t lambda_max} * states_per_volume.
  std::vector<double> remainder;
  /// Points whose effective sample size fell below 10.
  std::vector<bool> flagged;
  std::vector<double> ess;
  nlohmann::json meta;
};

struct IdsOptions {
  TruncationPolicy truncation;
};

/// N(lambda) = E[#{eigenvalues <= lambda}] / R^d for -h Laplacian + V (Dirichlet).
IdsCurve empirical_ids(const ModelParams& params, const PotentialSpec& spec, const GridSpec& grid,
                       std::span<const double> lambda_grid, std::size_t replicates,
                       const IdsOptions& options = {});

/// Same estimator for -h Laplacian - V; requires sign -1, no obstacles, bounded u.
IdsCurve negative_ids(const ModelParams& params, const PotentialSpec& spec, const GridSpec& grid,
                      std::span<const double> lambda_grid, std::size_t replicates,
                      const IdsOptions& options = {});

/// Classical phase-space IDS; the x-integral is a midpoint rule on n_per_side cells per axis.
IdsCurve classical_ids(const ModelParams& params, const PotentialSpec& spec, const GridSpec& grid,
                       std::span<const double> lambda_grid, std::size_t replicates,
                       const IdsOptions& options = {});

/// Pool-adjacent-violators nondecreasing fit (unit weights).
std::vector<double> isotonic_nondecreasing(std::span<const double> y);

/// Stieltjes sum of e^{-t lambda} dN over the curve's grid, mass lumped at right endpoints.
LaplaceCurve laplace_from_ids(const IdsCurve& curve, std::span<const double> t_grid);

struct N1Options {
  int x_nodes = 40;  ///< Gauss-Legendre nodes on [0, 1/2]: 20, 30, 40, 50 or 60
  double rel_tol = 1e-10;        ///< per-factor quadrature tolerance
  int max_depth = 18;
};

/// log of the single-cell Laplace functional (d = 1, sign +1) by factorized quadrature.
double n1_quadrature(const ModelParams& params, const PotentialSpec& spec, double t,
                     const N1Options& options = {});
LaplaceCurve n1_quadrature_curve(const ModelParams& params, const PotentialSpec& spec,
                                 std::span<const double> t_grid, const N1Options& options = {});

struct N1McOptions {
  int xi_samples = 128;  ///< importance samples per site and replicate
};

/// Monte Carlo estimate of the same functional (any d; sign +1 or -1).
LaplaceCurve n1_mc(const ModelParams& params, const PotentialSpec& spec,
                   std::span<const double> t_grid, std::size_t replicates,
                   const N1McOptions& options = {});

/// Sites with |q|_inf <= this radius are treated exactly by the N1 estimators.
int n1_exact_radius(const ModelParams& params, const PotentialSpec& spec, double t);

/// Sum over sites |q|_inf > exact_radius of the second-order cumulant
/// approximation of log E[exp(-sign t u(x - q - xi))].
double n1_far_tail(const ModelParams& params, const PotentialSpec& spec, double t,
                   const Point& x, int exact_radius);

void write_csv(const IdsCurve& curve, std::ostream& os);
void write_csv(const LaplaceCurve& curve, std::ostream& os);
IdsCurve read_ids_csv(std::istream& is);
LaplaceCurve read_laplace_csv(std::istream& is);

}  // namespace rdl

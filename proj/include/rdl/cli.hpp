#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "rdl/fit.hpp"
#include "rdl/fk.hpp"
#include "rdl/ids.hpp"
#include "rdl/operator.hpp"
#include "rdl/randfield.hpp"

namespace rdl {

struct RunConfig {
  std::string command;
  ModelParams params;
  PotentialSpec spec;
  GridSpec grid;
  TruncationPolicy truncation;
  std::vector<double> lambda_grid;
  std::vector<double> t_grid;
  std::size_t replicates = 20;

  struct Sample {
    double box_r = 20.0;
    std::uint64_t replicate = 0;
  } sample;

  struct Laplace {
    std::string source = "ids";  ///< ids, n1_quadrature or n1_mc
    int x_nodes = 40;
    int xi_samples = 128;
  } laplace;

  struct Fk {
    std::string mode = "survival";
    Point x{0.0, 0.0, 0.0};
    std::size_t n_paths = 1000;
    std::size_t n_configs = 20;
    double dt = 0.01;
    std::optional<double> constant_potential;
    std::optional<double> lemma61_eps;
  } fk;

  struct Fit {
    std::string input;
    std::string kind = "auto";  ///< ids, laplace or auto (from the CSV header)
    FitModel model = FitModel::power_lambda;
    FitOptions options;
    std::optional<double> theta;
  } fit;

  struct Constants {
    std::vector<double> k0_sigma_grid;
    double k0_kernel_exponent = 0.0;
  } constants;

  struct Lifshitz {
    std::vector<double> box_sizes{400.0};
    double dx = 0.05;
    std::pair<double, double> lambda_window{0.05, 0.5};
    double exponent_tol = 0.2;
    double coefficient_tol = 0.3;
  } lifshitz1d;

  /// Fully resolved configuration, echoed into every sidecar.
  nlohmann::json resolved;
};

/// Every recognised key with its default value.
nlohmann::json default_run_config();

/// Merges `user` over the defaults (unknown keys rejected), applies dotted
/// `key=value` overrides, then the seed/workers flags. A sidecar document is
/// accepted in place of a config and its `run_config` block is used.
nlohmann::json resolve_run_config(const nlohmann::json& user, const std::vector<std::string>& sets,
                                  std::optional<std::uint64_t> seed, std::optional<int> workers);

RunConfig parse_run_config(const nlohmann::json& resolved);

struct LifshitzRow {
  double box_r = 0.0;
  int n_per_side = 0;
  std::size_t used_points = 0;
  std::size_t zero_points = 0;
  std::optional<FitResult> free_fit;
  std::optional<FitResult> fixed_fit;
  double target_exponent = 0.0;
  double target_coefficient = 0.0;
  bool exponent_ok = false;
  bool coefficient_ok = false;
  Verdict verdict = Verdict::inconclusive;
  std::string note;
  IdsCurve curve;
};

struct LifshitzReport {
  std::vector<LifshitzRow> rows;
  Verdict verdict = Verdict::inconclusive;  ///< verdict of the largest box
};

/// Empirical IDS at each box size, power-law fit on the lambda window, and comparison of
/// the exponent with (1+theta)/2 and the fixed-exponent coefficient with the 1-D constant.
LifshitzReport pipeline_lifshitz_1d(const RunConfig& config);
nlohmann::json to_json(const LifshitzReport& report);

/// Entry point of the rdlab executable; returns the process exit status.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace rdl

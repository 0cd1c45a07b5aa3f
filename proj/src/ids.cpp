#include "rdl/ids.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>

#include "rdl/error.hpp"
#include "rdl/io.hpp"
#include "rdl/math.hpp"
#include "rdl/parallel.hpp"
#include "rdl/spectra.hpp"

namespace rdl {

namespace {

void check_increasing(std::span<const double> grid, const char* field) {
  if (grid.empty()) throw ConfigError(std::string(field) + " must not be empty", field);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!std::isfinite(grid[i])) throw ConfigError(std::string(field) + " must be finite", field);
    if (i > 0 && !(grid[i] > grid[i - 1]))
      throw DomainError(std::string(field) + " must be strictly increasing", field);
  }
}

void check_common(const ModelParams& params, const PotentialSpec& spec, const GridSpec& grid,
                  std::span<const double> lambda_grid, std::size_t replicates) {
  params.validate();
  spec.validate(params.d);
  grid.validate();
  if (grid.d != params.d) throw ConfigError("grid.d must equal params.d", "grid.d");
  if (replicates < 2) throw ConfigError("replicates must be >= 2", "replicates");
  check_increasing(lambda_grid, "lambda_grid");
}

nlohmann::json base_meta(const char* estimator, const ModelParams& params,
                         const PotentialSpec& spec, const GridSpec& grid,
                         const IdsOptions& options, std::size_t replicates) {
  return {{"estimator", estimator},
          {"params", to_json(params)},
          {"spec", to_json(spec)},
          {"grid", to_json(grid)},
          {"truncation", to_json(options.truncation)},
          {"replicates", replicates},
          {"box_r", grid.box_r},
          {"dx", grid.dx()}};
}

void summarize(IdsCurve& curve) {
  const std::size_t k = curve.lambda_grid.size();
  curve.n_hat.assign(k, 0.0);
  curve.std_err.assign(k, 0.0);
  std::vector<double> column(curve.per_replicate.size());
  for (std::size_t j = 0; j < k; ++j) {
    for (std::size_t r = 0; r < column.size(); ++r) column[r] = curve.per_replicate[r][j];
    const MeanStderr ms = mean_stderr(column);
    curve.n_hat[j] = ms.mean;
    curve.std_err[j] = ms.stderr_of_mean;
  }
}

IdsCurve quantum_ids(const char* estimator, int sign, const ModelParams& params,
                     const PotentialSpec& spec, const GridSpec& grid,
                     std::span<const double> lambda_grid, std::size_t replicates,
                     const IdsOptions& options) {
  IdsCurve curve;
  curve.lambda_grid.assign(lambda_grid.begin(), lambda_grid.end());
  curve.replicates = replicates;
  curve.box_r = grid.box_r;
  curve.dx = grid.dx();
  const double volume = std::pow(grid.box_r, params.d);
  curve.states_per_volume = static_cast<double>(grid.total_points()) / volume;
  curve.per_replicate.assign(replicates, std::vector<double>(lambda_grid.size(), 0.0));
  std::vector<double> lambda1(replicates, 0.0);
  std::vector<double> tails(replicates, 0.0);
  std::vector<int> margins(replicates, 0);

  parallel_for(replicates, params.workers, [&](std::size_t r) {
    const Configuration config =
        sample_configuration(params, spec, grid.box_r, r, options.truncation);
    const DiscreteOperator op = assemble(grid, config, spec, sign, params.h);
    const SpectralSummary s = counting_curve(op, curve.lambda_grid);
    for (std::size_t j = 0; j < s.counts.size(); ++j)
      curve.per_replicate[r][j] = static_cast<double>(s.counts[j]) / volume;
    lambda1[r] = s.lambda1;
    tails[r] = config.tail_bound();
    margins[r] = config.margin();
  });
  summarize(curve);

  curve.meta = base_meta(estimator, params, spec, grid, options, replicates);
  curve.meta["margin"] = margins.front();
  curve.meta["tail_bound"] = tails.front();
  curve.meta["lambda1_min"] = *std::min_element(lambda1.begin(), lambda1.end());
  curve.meta["lambda1_mean"] = mean_stderr(lambda1).mean;
  curve.meta["continuum_error_estimate"] = continuum_error_estimate(grid, spec, params.h);
  return curve;
}

}  // namespace

const char* to_string(LaplaceKind kind) noexcept {
  switch (kind) {
    case LaplaceKind::n1_quadrature: return "N1_quadrature";
    case LaplaceKind::n1_mc: return "N1_mc";
    case LaplaceKind::from_ids: return "from_ids";
    case LaplaceKind::negative: return "negative";
  }
  return "from_ids";
}

LaplaceKind laplace_kind_from_string(const std::string& s) {
  for (LaplaceKind k : {LaplaceKind::n1_quadrature, LaplaceKind::n1_mc, LaplaceKind::from_ids,
                        LaplaceKind::negative})
    if (s == to_string(k)) return k;
  throw ConfigError("unknown Laplace curve kind \"" + s + "\"", "kind");
}

IdsCurve empirical_ids(const ModelParams& params, const PotentialSpec& spec, const GridSpec& grid,
                       std::span<const double> lambda_grid, std::size_t replicates,
                       const IdsOptions& options) {
  check_common(params, spec, grid, lambda_grid, replicates);
  if (spec.sign != 1) throw ConfigError("empirical_ids requires spec.sign = +1", "spec.sign");
  if (grid.bc != Boundary::dirichlet)
    throw ConfigError("empirical_ids uses Dirichlet boundary conditions", "grid.bc");
  return quantum_ids("empirical_ids", +1, params, spec, grid, lambda_grid, replicates, options);
}

IdsCurve negative_ids(const ModelParams& params, const PotentialSpec& spec, const GridSpec& grid,
                      std::span<const double> lambda_grid, std::size_t replicates,
                      const IdsOptions& options) {
  check_common(params, spec, grid, lambda_grid, replicates);
  if (spec.sign != -1) throw ConfigError("negative_ids requires spec.sign = -1", "spec.sign");
  if (spec.obstacle_rho != 0.0)
    throw ConfigError("negative_ids requires obstacle_rho = 0", "spec.obstacle_rho");
  return quantum_ids("negative_ids", -1, params, spec, grid, lambda_grid, replicates, options);
}

IdsCurve classical_ids(const ModelParams& params, const PotentialSpec& spec, const GridSpec& grid,
                       std::span<const double> lambda_grid, std::size_t replicates,
                       const IdsOptions& options) {
  check_common(params, spec, grid, lambda_grid, replicates);
  if (spec.sign != 1) throw ConfigError("classical_ids requires spec.sign = +1", "spec.sign");
  const int d = params.d;
  const int n = grid.n_per_side;
  const double cell = grid.box_r / n;
  const double volume = std::pow(grid.box_r, d);
  const double prefactor = ball_volume(d) * std::pow(2.0 * std::numbers::pi * std::sqrt(params.h), -d) *
                           std::pow(cell, d) / volume;
  const std::size_t total = grid.total_points();

  IdsCurve curve;
  curve.lambda_grid.assign(lambda_grid.begin(), lambda_grid.end());
  curve.replicates = replicates;
  curve.box_r = grid.box_r;
  curve.dx = cell;
  curve.per_replicate.assign(replicates, std::vector<double>(lambda_grid.size(), 0.0));
  // phase-space volume is unbounded in lambda; no finite state count to report
  curve.states_per_volume = 0.0;

  parallel_for(replicates, params.workers, [&](std::size_t r) {
    const Configuration config =
        sample_configuration(params, spec, grid.box_r, r, options.truncation);
    std::vector<double> v;
    v.reserve(total);
    for (std::size_t idx = 0; idx < total; ++idx) {
      Point x{0.0, 0.0, 0.0};
      std::size_t rest = idx;
      for (int a = d - 1; a >= 0; --a) {
        x[a] = -grid.box_r / 2.0 + (static_cast<double>(rest % n) + 0.5) * cell;
        rest /= n;
      }
      if (spec.obstacle_rho > 0.0 &&
          nearest_site_distance(config, x, config.margin()) <= spec.obstacle_rho)
        continue;
      v.push_back(field_v_unchecked(config, spec, x));
    }
    for (std::size_t j = 0; j < lambda_grid.size(); ++j) {
      CompensatedSum s;
      for (double vi : v) {
        const double gap = lambda_grid[j] - vi;
        if (gap > 0.0) s.add(d == 2 ? gap : std::pow(gap, 0.5 * d));
      }
      curve.per_replicate[r][j] = prefactor * s.value();
    }
  });
  summarize(curve);
  curve.meta = base_meta("classical_ids", params, spec, grid, options, replicates);
  curve.meta["dx"] = cell;
  curve.meta["quadrature"] = "midpoint rule on cell centres";
  return curve;
}

std::vector<double> isotonic_nondecreasing(std::span<const double> y) {
  struct Block {
    double sum;
    std::size_t count;
    double mean() const { return sum / static_cast<double>(count); }
  };
  std::vector<Block> blocks;
  blocks.reserve(y.size());
  for (double v : y) {
    blocks.push_back({v, 1});
    while (blocks.size() > 1 && blocks[blocks.size() - 2].mean() > blocks.back().mean()) {
      const Block last = blocks.back();
      blocks.pop_back();
      blocks.back().sum += last.sum;
      blocks.back().count += last.count;
    }
  }
  std::vector<double> out;
  out.reserve(y.size());
  for (const Block& b : blocks) out.insert(out.end(), b.count, b.mean());
  return out;
}

LaplaceCurve laplace_from_ids(const IdsCurve& curve, std::span<const double> t_grid) {
  check_increasing(t_grid, "t_grid");
  for (double t : t_grid)
    if (!(t > 0.0)) throw DomainError("laplace_from_ids requires t > 0", "t_grid");
  const std::size_t k = curve.lambda_grid.size();
  if (k == 0 || curve.n_hat.size() != k)
    throw ConfigError("IDS curve is empty or malformed", "curve");

  const std::vector<double> n = isotonic_nondecreasing(curve.n_hat);
  const auto& lam = curve.lambda_grid;
  const bool have_replicates =
      curve.per_replicate.size() >= 2 &&
      std::all_of(curve.per_replicate.begin(), curve.per_replicate.end(),
                  [&](const auto& row) { return row.size() == k; });

  LaplaceCurve out;
  out.kind = LaplaceKind::from_ids;
  out.t_grid.assign(t_grid.begin(), t_grid.end());
  const double lambda_max = lam.back();

  // All sums are taken relative to the largest weight e^{-t lambda_0} to avoid overflow.
  for (double t : t_grid) {
    auto weight = [&](std::size_t j) { return std::exp(-t * (lam[j] - lam[0])); };
    CompensatedSum right, left;
    double prev = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      const double mass = n[j] - prev;
      prev = n[j];
      right.add(mass * weight(j));
      left.add(mass * weight(j == 0 ? 0 : j - 1));
    }
    const double remainder_rel = weight(k - 1) * curve.states_per_volume;
    const double excess = std::max(0.0, curve.states_per_volume - n[k - 1]) * weight(k - 1);
    left.add(excess);
    const double shift = -t * lam[0];

    double se_rel;
    if (have_replicates) {
      std::vector<double> per(curve.per_replicate.size());
      for (std::size_t r = 0; r < per.size(); ++r) {
        CompensatedSum s;
        double p = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
          s.add((curve.per_replicate[r][j] - p) * weight(j));
          p = curve.per_replicate[r][j];
        }
        per[r] = s.value();
      }
      se_rel = mean_stderr(per).stderr_of_mean;
    } else {
      // summation by parts: every N_j enters with a nonnegative coefficient
      CompensatedSum s;
      for (std::size_t j = 0; j < k; ++j) {
        const double next = j + 1 < k ? weight(j + 1) : 0.0;
        s.add((curve.std_err.size() == k ? curve.std_err[j] : 0.0) * (weight(j) - next));
      }
      se_rel = s.value();
    }

    const double value = right.value();
    out.log_values.push_back(value > 0.0 ? shift + std::log(value)
                                         : -std::numeric_limits<double>::infinity());
    out.std_err.push_back(value > 0.0 ? se_rel / value : std::numeric_limits<double>::infinity());
    out.log_upper.push_back(left.value() > 0.0 ? shift + std::log(left.value())
                                               : -std::numeric_limits<double>::infinity());
    out.remainder.push_back(std::exp(shift + std::log(remainder_rel)));
    out.flagged.push_back(false);
    out.ess.push_back(static_cast<double>(curve.replicates));
  }
  out.meta = {{"estimator", "laplace_from_ids"},
              {"lambda_max", lambda_max},
              {"box_r", curve.box_r},
              {"dx", curve.dx},
              {"replicates", curve.replicates},
              {"stderr_method", have_replicates ? "per-replicate transforms"
                                                : "linear bound assuming full correlation"},
              {"lumping", "right endpoint"}};
  if (!curve.meta.is_null()) out.meta["ids"] = curve.meta;
  return out;
}

void write_csv(const IdsCurve& curve, std::ostream& os) {
  os << "lambda,n_hat,stderr\n";
  for (std::size_t i = 0; i < curve.lambda_grid.size(); ++i)
    os << format_double(curve.lambda_grid[i]) << ',' << format_double(curve.n_hat[i]) << ','
       << format_double(curve.std_err[i]) << '\n';
}

void write_csv(const LaplaceCurve& curve, std::ostream& os) {
  os << "t,log_value,kind\n";
  for (std::size_t i = 0; i < curve.t_grid.size(); ++i)
    os << format_double(curve.t_grid[i]) << ',' << format_double(curve.log_values[i]) << ','
       << to_string(curve.kind) << '\n';
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    cells.push_back(cell);
  }
  return cells;
}

double parse_double(const std::string& s, std::size_t line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("CSV line " + std::to_string(line) + ": cannot parse \"" + s + "\"", "csv");
  }
}

}  // namespace

IdsCurve read_ids_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || split_csv_line(line) != std::vector<std::string>{"lambda", "n_hat", "stderr"})
    throw ConfigError("IDS CSV must start with the header lambda,n_hat,stderr", "csv");
  IdsCurve curve;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != 3)
      throw ConfigError("CSV line " + std::to_string(lineno) + ": expected 3 columns", "csv");
    curve.lambda_grid.push_back(parse_double(cells[0], lineno));
    curve.n_hat.push_back(parse_double(cells[1], lineno));
    curve.std_err.push_back(parse_double(cells[2], lineno));
  }
  return curve;
}

LaplaceCurve read_laplace_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || split_csv_line(line) != std::vector<std::string>{"t", "log_value", "kind"})
    throw ConfigError("Laplace CSV must start with the header t,log_value,kind", "csv");
  LaplaceCurve curve;
  std::size_t lineno = 1;
  bool first = true;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != 3)
      throw ConfigError("CSV line " + std::to_string(lineno) + ": expected 3 columns", "csv");
    curve.t_grid.push_back(parse_double(cells[0], lineno));
    curve.log_values.push_back(parse_double(cells[1], lineno));
    const LaplaceKind kind = laplace_kind_from_string(cells[2]);
    if (!first && kind != curve.kind)
      throw ConfigError("CSV line " + std::to_string(lineno) + ": mixed curve kinds", "csv");
    curve.kind = kind;
    first = false;
  }
  curve.std_err.assign(curve.t_grid.size(), 0.0);
  curve.flagged.assign(curve.t_grid.size(), false);
  return curve;
}

}  // namespace rdl

#include "rdl/fk.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <random>
#include <unordered_map>

#include "rdl/error.hpp"
#include "rdl/io.hpp"
#include "rdl/math.hpp"
#include "rdl/parallel.hpp"
#include "rdl/rng.hpp"

namespace rdl {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Displaced obstacle centres bucketed by unit cell.
class ObstacleIndex {
 public:
  ObstacleIndex() = default;
  ObstacleIndex(const Configuration& config, double rho) : d_(config.d()), rho_(rho) {
    reach_ = static_cast<int>(std::ceil(rho));
    for (std::size_t i = 0; i < config.site_count(); ++i) {
      const Point p = config.position(i);
      cells_[key(cell_of(p))].push_back(p);
    }
  }

  bool hit(const Point& x) const {
    if (rho_ <= 0.0) return false;
    const Site c = cell_of(x);
    Site q{0, 0, 0};
    const int r1 = d_ > 1 ? reach_ : 0, r2 = d_ > 2 ? reach_ : 0;
    for (int a = -reach_; a <= reach_; ++a)
      for (int b = -r1; b <= r1; ++b)
        for (int e = -r2; e <= r2; ++e) {
          q = {c[0] + a, c[1] + b, c[2] + e};
          const auto it = cells_.find(key(q));
          if (it == cells_.end()) continue;
          for (const Point& p : it->second) {
            double r2sum = 0.0;
            for (int i = 0; i < d_; ++i) r2sum += (x[i] - p[i]) * (x[i] - p[i]);
            if (r2sum <= rho_ * rho_) return true;
          }
        }
    return false;
  }

 private:
  Site cell_of(const Point& p) const {
    Site s{0, 0, 0};
    for (int i = 0; i < d_; ++i) s[i] = static_cast<int>(std::floor(p[i]));
    return s;
  }
  static std::uint64_t key(const Site& s) {
    return hash_key({coord_word(s[0]), coord_word(s[1]), coord_word(s[2])});
  }

  int d_ = 1;
  double rho_ = 0.0;
  int reach_ = 0;
  std::unordered_map<std::uint64_t, std::vector<Point>> cells_;
};

void check_time_grid(std::span<const double> t_grid) {
  if (t_grid.empty()) throw ConfigError("t_grid must not be empty", "t_grid");
  for (std::size_t i = 0; i < t_grid.size(); ++i) {
    if (!std::isfinite(t_grid[i]) || t_grid[i] < 0.0)
      throw DomainError("t_grid values must be finite and >= 0", "t_grid");
    if (i > 0 && !(t_grid[i] > t_grid[i - 1]))
      throw DomainError("t_grid must be strictly increasing", "t_grid");
  }
}

PathEstimate run_paths(const char* estimator, const ModelParams& params, const PotentialSpec& spec,
                       const Point& x, std::span<const double> t_grid, std::size_t n_paths,
                       std::size_t n_configs, double dt, const FkOptions& options) {
  params.validate();
  spec.validate(params.d);
  check_time_grid(t_grid);
  if (n_paths < 1) throw ConfigError("n_paths must be >= 1", "n_paths");
  if (n_configs < 2) throw ConfigError("n_configs must be >= 2", "n_configs");
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("dt must be finite and > 0", "dt");
  const double rho = options.constant_potential ? 0.0 : spec.obstacle_rho;
  if (rho > 0.0 && dt > rho * rho / params.h)
    throw ConfigError("dt exceeds rho^2 / h; paths could tunnel through obstacles", "dt");
  if (options.constant_potential && !std::isfinite(*options.constant_potential))
    throw ConfigError("constant_potential must be finite", "constant_potential");

  const int d = params.d;
  const double sign = spec.sign;
  double reach = 0.0;
  for (int i = 0; i < d; ++i) reach = std::max(reach, std::abs(x[i]));
  const double spread = 10.0 * std::sqrt(2.0 * params.h * t_grid.back()) + 1.0;
  const double box_r = 2.0 * std::ceil(reach + spread + rho) + 2.0;
  const std::size_t nt = t_grid.size();

  // per configuration: log-sum-exp of path weights and of squared weights, per t
  std::vector<std::vector<double>> lse1(n_configs), lse2(n_configs);
  std::vector<int> margins(n_configs, 0);
  parallel_for(n_configs, params.workers, [&](std::size_t c) {
    Configuration config;
    ObstacleIndex obstacles;
    if (!options.constant_potential) {
      config = sample_configuration(params, spec, box_r, c, options.truncation);
      obstacles = ObstacleIndex(config, rho);
      margins[c] = config.margin();
    }
    auto field = [&](const Point& p) {
      if (options.constant_potential) return *options.constant_potential;
      for (int i = 0; i < d; ++i)
        if (std::abs(p[i]) > 0.5 * box_r)
          throw NumericalError("a path left the sampled window; reduce t or enlarge the box");
      return field_v_unchecked(config, spec, p);
    };
    std::vector<std::vector<double>> logw(nt, std::vector<double>(n_paths, kNegInf));
    for (std::size_t p = 0; p < n_paths; ++p) {
      CounterRng rng(StreamTag::path, {params.seed, c, p});
      std::normal_distribution<double> normal;
      Point b = x;
      bool alive = !obstacles.hit(b);
      double v0 = alive ? field(b) : 0.0;
      double integral = 0.0;
      double s = 0.0;
      for (std::size_t k = 0; k < nt && alive; ++k) {
        while (alive && s < t_grid[k]) {
          const double step = std::min(dt, t_grid[k] - s);
          const double scale = std::sqrt(2.0 * params.h * step);
          for (int i = 0; i < d; ++i) b[i] += scale * normal(rng);
          s = step == dt ? s + dt : t_grid[k];
          if (obstacles.hit(b)) {
            alive = false;
            break;
          }
          const double v1 = field(b);
          integral += 0.5 * (v0 + v1) * step;
          v0 = v1;
        }
        if (alive) logw[k][p] = -sign * integral;
      }
    }
    lse1[c].resize(nt);
    lse2[c].resize(nt);
    std::vector<double> twice(n_paths);
    for (std::size_t k = 0; k < nt; ++k) {
      lse1[c][k] = log_sum_exp(logw[k]);
      for (std::size_t p = 0; p < n_paths; ++p) twice[p] = 2.0 * logw[k][p];
      lse2[c][k] = log_sum_exp(twice);
    }
  });

  PathEstimate est;
  est.t_grid.assign(t_grid.begin(), t_grid.end());
  est.x = x;
  est.n_paths = n_paths;
  est.n_configs = n_configs;
  est.dt = dt;
  est.sign = spec.sign;
  const double log_paths = std::log(static_cast<double>(n_paths));
  std::vector<double> per_config(n_configs), a(n_configs), b(n_configs);
  for (std::size_t k = 0; k < nt; ++k) {
    for (std::size_t c = 0; c < n_configs; ++c) {
      per_config[c] = lse1[c][k] - log_paths;
      a[c] = lse1[c][k];
      b[c] = lse2[c][k];
    }
    const MeanStderr m = log_mean_exp(per_config);
    est.log_s.push_back(m.mean);
    est.std_err.push_back(m.stderr_of_mean);
    const double s1 = log_sum_exp(a), s2 = log_sum_exp(b);
    const double ess = std::isfinite(s1) ? std::exp(2.0 * s1 - s2) : 0.0;
    est.ess.push_back(ess);
    est.flagged.push_back(ess < 10.0);
  }
  est.meta = {{"estimator", estimator},
              {"params", to_json(params)},
              {"spec", to_json(spec)},
              {"truncation", to_json(options.truncation)},
              {"box_r", box_r},
              {"margin", margins.front()},
              {"increments", "Gaussian, variance 2 h dt per axis"},
              {"potential_integral", "trapezoid rule"},
              {"killing", "bucketed nearest-obstacle check after every step, no bridge correction"}};
  if (options.constant_potential) est.meta["constant_potential"] = *options.constant_potential;
  return est;
}

}  // namespace

PathEstimate survival(const ModelParams& params, const PotentialSpec& spec, const Point& x,
                      std::span<const double> t_grid, std::size_t n_paths, std::size_t n_configs,
                      double dt, const FkOptions& options) {
  if (spec.sign != 1) throw ConfigError("survival requires spec.sign = +1", "spec.sign");
  return run_paths("survival", params, spec, x, t_grid, n_paths, n_configs, dt, options);
}

PathEstimate growth(const ModelParams& params, const PotentialSpec& spec, const Point& x,
                    std::span<const double> t_grid, std::size_t n_paths, std::size_t n_configs,
                    double dt, const FkOptions& options) {
  if (spec.sign != -1) throw ConfigError("growth requires spec.sign = -1", "spec.sign");
  if (spec.obstacle_rho != 0.0)
    throw ConfigError("growth requires obstacle_rho = 0", "spec.obstacle_rho");
  if (!std::isfinite(spec.u_cap)) throw ConfigError("growth requires a finite u_cap", "spec.u_cap");
  return run_paths("growth", params, spec, x, t_grid, n_paths, n_configs, dt, options);
}

const char* to_string(Verdict v) noexcept {
  switch (v) {
    case Verdict::pass: return "PASS";
    case Verdict::fail: return "FAIL";
    case Verdict::inconclusive: break;
  }
  return "INCONCLUSIVE";
}

Lemma61Report lemma61_check(const PathEstimate& path, const LaplaceCurve& laplace, double eps,
                            int d, double h) {
  if (laplace.kind != LaplaceKind::from_ids)
    throw DomainError("lemma61_check needs a Laplace curve of kind from_ids", "laplace.kind");
  if (!(eps >= 0.0) || !std::isfinite(eps)) throw DomainError("eps must be finite and >= 0", "eps");
  if (path.sign != 1) throw DomainError("lemma61_check compares survival estimates", "path.sign");
  Lemma61Report report;
  report.eps = eps;
  bool any_pass = false, any_fail = false;
  for (std::size_t k = 0; k < path.t_grid.size(); ++k) {
    const double s = path.t_grid[k] - eps;
    if (!(s > 0.0)) continue;
    std::size_t j = 0;
    while (j < laplace.t_grid.size() &&
           std::abs(laplace.t_grid[j] - s) > 1e-9 * std::max(1.0, s))
      ++j;
    if (j == laplace.t_grid.size())
      throw DomainError("Laplace grid has no point at t - eps = " + format_double(s), "laplace.t_grid");
    Lemma61Row row;
    row.t = path.t_grid[k];
    row.log_s = path.log_s[k];
    row.log_bound = laplace.log_values[j] + 0.5 * d * std::log(4.0 * std::numbers::pi * h * s);
    const double sl = j < laplace.std_err.size() ? laplace.std_err[j] : 0.0;
    row.sigma = std::hypot(path.std_err[k], sl);
    const bool finite = std::isfinite(row.log_s) && std::isfinite(row.log_bound) &&
                        std::isfinite(row.sigma) && !path.flagged[k];
    const double signal = std::max(std::abs(row.log_s), std::abs(row.log_bound));
    row.resolved = finite && (row.sigma == 0.0 || row.sigma < signal);
    row.holds = row.log_s <= row.log_bound + 2.0 * row.sigma + 1e-12 * std::max(1.0, signal);
    if (row.resolved) (row.holds ? any_pass : any_fail) = true;
    report.rows.push_back(row);
  }
  report.verdict = any_fail ? Verdict::fail : any_pass ? Verdict::pass : Verdict::inconclusive;
  return report;
}

nlohmann::json to_json(const Lemma61Report& report) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : report.rows)
    rows.push_back({{"t", r.t},
                    {"log_s", r.log_s},
                    {"log_bound", r.log_bound},
                    {"sigma", r.sigma},
                    {"resolved", r.resolved},
                    {"holds", r.holds}});
  return {{"verdict", to_string(report.verdict)}, {"eps", report.eps}, {"rows", rows}};
}

void write_csv(const PathEstimate& est, std::ostream& os) {
  os << "t,log_s,stderr\n";
  for (std::size_t k = 0; k < est.t_grid.size(); ++k)
    os << format_double(est.t_grid[k]) << ',' << format_double(est.log_s[k]) << ','
       << format_double(est.std_err[k]) << '\n';
}

nlohmann::json sidecar_json(const PathEstimate& est) {
  nlohmann::json flagged = nlohmann::json::array();
  for (std::size_t k = 0; k < est.t_grid.size(); ++k)
    if (est.flagged[k]) flagged.push_back(est.t_grid[k]);
  return {{"dt", est.dt},
          {"n_paths", est.n_paths},
          {"n_configs", est.n_configs},
          {"x", std::vector<double>(est.x.begin(), est.x.end())},
          {"ess", est.ess},
          {"flagged_t", flagged},
          {"meta", est.meta}};
}

}  // namespace rdl

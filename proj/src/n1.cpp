#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "rdl/error.hpp"
#include "rdl/ids.hpp"
#include "rdl/io.hpp"
#include "rdl/math.hpp"
#include "rdl/parallel.hpp"

namespace rdl {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Radius beyond which the displacement law carries mass below e^{-log_mass}.
double displacement_reach(int d, double theta, double log_mass) {
  const double a = d / theta;
  double s;
  if (log_mass < 700.0)
    s = boost::math::gamma_q_inv(a, std::exp(-log_mass));
  else  // asymptotic inverse of the upper incomplete gamma function
    s = log_mass + std::max(0.0, a - 1.0) * std::log(log_mass + 1.0) + 5.0;
  return std::pow(s, 1.0 / theta);
}

double norm(const Point& x, int d) {
  double r2 = 0.0;
  for (int i = 0; i < d; ++i) r2 += x[i] * x[i];
  return std::sqrt(r2);
}

void check_n1_inputs(const ModelParams& params, const PotentialSpec& spec) {
  params.validate();
  spec.validate(params.d);
}

// Integer sites with |q|_inf <= radius, in row-major order.
std::vector<Site> sites_within(int d, int radius) {
  std::vector<Site> out;
  const int side = 2 * radius + 1;
  std::size_t total = 1;
  for (int i = 0; i < d; ++i) total *= static_cast<std::size_t>(side);
  out.reserve(total);
  for (std::size_t idx = 0; idx < total; ++idx) {
    Site q{0, 0, 0};
    std::size_t rest = idx;
    for (int a = d - 1; a >= 0; --a) {
      q[a] = static_cast<int>(rest % side) - radius;
      rest /= side;
    }
    out.push_back(q);
  }
  return out;
}

// Coefficients of the far-site cumulant approximation
// s E[u] + s^2 Var[u] / 2 ~ a r^-alpha + b r^-(alpha+2) + c r^-(2 alpha+2), s = -sign t.
struct FarCoefficients {
  double a = 0.0, b = 0.0, c = 0.0;
  double p_a = 0.0, p_b = 0.0, p_c = 0.0;

  double value(double r) const { return a * std::pow(r, -p_a) + b * std::pow(r, -p_b) + c * std::pow(r, -p_c); }
  // tail integral of r^{k} f(r) over [r0, inf) for k = d - 1
  double radial_tail(double r0, int k) const {
    auto piece = [&](double coef, double p) {
      return coef * std::pow(r0, k + 1 - p) / (p - k - 1);
    };
    return piece(a, p_a) + piece(b, p_b) + piece(c, p_c);
  }
  double derivative(double r, int order) const {
    auto piece = [&](double coef, double p) {
      double f = coef;
      for (int i = 0; i < order; ++i) f *= -(p + i);
      return f * std::pow(r, -p - order);
    };
    return piece(a, p_a) + piece(b, p_b) + piece(c, p_c);
  }
};

FarCoefficients far_coefficients(const ModelParams& params, const PotentialSpec& spec, double t) {
  const int d = params.d;
  const double alpha = spec.alpha;
  const double m2 = displacement_moment(d, params.theta, 2.0);
  const double s = -spec.sign * t;
  FarCoefficients f;
  f.a = s * spec.c0;
  f.p_a = alpha;
  f.b = s * spec.c0 * alpha * (alpha + 2.0 - d) * m2 / (2.0 * d);
  f.p_b = alpha + 2.0;
  f.c = 0.5 * s * s * (m2 / d) * alpha * alpha * spec.c0 * spec.c0;
  f.p_c = 2.0 * alpha + 2.0;
  return f;
}

// Sum_{n >= n0} f(n + shift) by explicit terms then Euler-Maclaurin.
double far_side_sum(const FarCoefficients& f, int n0, double shift) {
  constexpr int explicit_terms = 64;
  CompensatedSum s;
  for (int n = n0; n < n0 + explicit_terms; ++n) s.add(f.value(n + shift));
  const double r = n0 + explicit_terms + shift;
  s.add(f.radial_tail(r, 0));
  s.add(0.5 * f.value(r));
  s.add(-f.derivative(r, 1) / 12.0);
  s.add(f.derivative(r, 3) / 720.0);
  return s.value();
}

}  // namespace

int n1_exact_radius(const ModelParams& params, const PotentialSpec& spec, double t) {
  const int d = params.d;
  const double gain = spec.sign < 0 ? t * spec.sup() : 0.0;
  const double reach = displacement_reach(d, params.theta, 30.0 + gain);
  double q;
  if (spec.is_compact() || spec.u_cap == 0.0) {
    const double support = spec.is_compact() ? *spec.compact_r * std::sqrt(double(d)) : 0.0;
    q = support + reach;
  } else {
    const double tc = t * spec.c0;
    q = std::max({16.0, 4.0 * std::pow(tc * spec.alpha, 1.0 / (spec.alpha + 1.0)),
                  std::pow(2.0 * tc, 1.0 / spec.alpha),
                  reach + std::min(spec.core_radius(), reach)});
  }
  if (spec.obstacle_rho > 0.0) q = std::max(q, spec.obstacle_rho + reach);
  return static_cast<int>(std::ceil(q));
}

double n1_far_tail(const ModelParams& params, const PotentialSpec& spec, double t,
                   const Point& x, int exact_radius) {
  if (spec.is_compact() || spec.u_cap == 0.0 || t == 0.0) return 0.0;
  const int d = params.d;
  const FarCoefficients f = far_coefficients(params, spec, t);
  if (d == 1) {
    // sites q = n > Q sit at distance n - x; sites q = -n at distance n + x
    return far_side_sum(f, exact_radius + 1, -x[0]) + far_side_sum(f, exact_radius + 1, x[0]);
  }
  const int outer = 2 * exact_radius + 8;
  CompensatedSum s;
  const int side = 2 * outer + 1;
  std::size_t total = 1;
  for (int i = 0; i < d; ++i) total *= static_cast<std::size_t>(side);
  for (std::size_t idx = 0; idx < total; ++idx) {
    Site q{0, 0, 0};
    std::size_t rest = idx;
    int linf = 0;
    for (int a = d - 1; a >= 0; --a) {
      q[a] = static_cast<int>(rest % side) - outer;
      rest /= side;
      linf = std::max(linf, std::abs(q[a]));
    }
    if (linf <= exact_radius) continue;
    Point z{0.0, 0.0, 0.0};
    for (int a = 0; a < d; ++a) z[a] = x[a] - q[a];
    s.add(f.value(norm(z, d)));
  }
  // remaining sites: continuum integral outside the ball of equal volume
  const double r_eq = std::pow(std::pow(2.0 * outer + 1.0, d) / ball_volume(d), 1.0 / d);
  s.add(sphere_area(d) * f.radial_tail(r_eq, d - 1));
  return s.value();
}

namespace {

// log E[exp(-t u(z - xi))] for one site (d = 1), by piecewise Gauss-Kronrod.
class SiteFactor {
 public:
  SiteFactor(const ModelParams& params, const PotentialSpec& spec, double t, const N1Options& opt)
      : spec_(spec), t_(t), theta_(params.theta), opt_(opt),
        log_z_(std::log(normalizer(1, params.theta))),
        core_(spec.is_compact() ? *spec.compact_r : std::min(spec.core_radius(), 1e6)) {}

  double operator()(double z) const {
    auto ell = [&](double xi) {
      const double y = z - xi;
      if (spec_.obstacle_rho > 0.0 && std::abs(y) <= spec_.obstacle_rho) return kNegInf;
      return -t_ * potential_u(spec_, {y, 0.0, 0.0}, 1) - std::pow(std::abs(xi), theta_);
    };

    // locate the dominant region
    std::vector<double> candidates{0.0, z};
    const double span = std::abs(z) + core_ + 4.0;
    constexpr int linear = 201;
    for (int i = 0; i < linear; ++i) candidates.push_back(-span + 2.0 * span * i / (linear - 1));
    constexpr int logs = 96;
    for (int i = 0; i < logs; ++i) {
      const double r = std::pow(10.0, -3.0 + 7.0 * i / (logs - 1));
      candidates.push_back(z + r);
      candidates.push_back(z - r);
    }
    std::sort(candidates.begin(), candidates.end());
    std::size_t best = 0;
    double best_val = kNegInf;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      const double v = ell(candidates[i]);
      if (v > best_val) {
        best_val = v;
        best = i;
      }
    }
    if (!std::isfinite(best_val)) return kNegInf;
    const double peak = candidates[best];

    const double cut = std::max(std::abs(z) + core_ + 1.0,
                                std::pow(std::max(0.0, -best_val) + 60.0, 1.0 / theta_));
    std::vector<double> pts{-cut, cut, 0.0, z, z - core_, z + core_, peak};
    if (best > 0) pts.push_back(candidates[best - 1]);
    if (best + 1 < candidates.size()) pts.push_back(candidates[best + 1]);
    if (spec_.obstacle_rho > 0.0) {
      pts.push_back(z - spec_.obstacle_rho);
      pts.push_back(z + spec_.obstacle_rho);
    }
    for (double& p : pts) p = std::clamp(p, -cut, cut);
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());

    auto integrate = [&](auto&& f, const char* what) {
      using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
      // one fixed-order pass, then refine only pieces that matter for the total
      std::vector<double> coarse(pts.size() - 1), coarse_err(pts.size() - 1);
      double scale = 0.0;
      for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        coarse[i] = GK::integrate(f, pts[i], pts[i + 1], 0, 0.0, &coarse_err[i]);
        scale += std::abs(coarse[i]);
      }
      CompensatedSum total;
      double err_total = 0.0;
      for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        double v = coarse[i], err = coarse_err[i];
        if (err > 1e-15 * scale)
          v = GK::integrate(f, pts[i], pts[i + 1], opt_.max_depth, opt_.rel_tol, &err);
        total.add(v);
        err_total += err;
      }
      const double value = total.value();
      if (!(err_total <= 1e-6 * std::abs(value) + 1e-300) || !std::isfinite(value)) {
        std::ostringstream os;
        os << "n1_quadrature: " << what << " integral did not converge (z=" << z << ", t=" << t_
           << ", value=" << value << ", error estimate=" << err_total << ", pieces=" << pts.size() - 1
           << ", max_depth=" << opt_.max_depth << ")";
        throw NumericalError(os.str());
      }
      return value;
    };

    const double mass = integrate([&](double xi) { return std::exp(ell(xi) - best_val); }, "mass");
    const double log_a = best_val + std::log(mass) - log_z_;
    if (log_a < std::log(0.5)) return log_a;
    // 1 - E[exp(-t u)] directly keeps precision when the factor is close to 1
    const double b = integrate(
        [&](double xi) {
          const double y = z - xi;
          const double w = std::exp(-std::pow(std::abs(xi), theta_));
          if (spec_.obstacle_rho > 0.0 && std::abs(y) <= spec_.obstacle_rho) return w;
          return -std::expm1(-t_ * potential_u(spec_, {y, 0.0, 0.0}, 1)) * w;
        },
        "complement");
    return std::log1p(-b / std::exp(log_z_));
  }

 private:
  const PotentialSpec& spec_;
  double t_;
  double theta_;
  N1Options opt_;
  double log_z_;
  double core_;
};

template <int N>
void gauss_nodes(std::vector<double>& x, std::vector<double>& w) {
  using G = boost::math::quadrature::gauss<double, N>;
  const auto& a = G::abscissa();
  const auto& wt = G::weights();
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] == 0.0) {
      x.push_back(0.0);
      w.push_back(wt[i]);
      continue;
    }
    x.push_back(a[i]);
    w.push_back(wt[i]);
    x.push_back(-a[i]);
    w.push_back(wt[i]);
  }
}

void legendre_rule(int n, std::vector<double>& x, std::vector<double>& w) {
  switch (n) {
    case 20: gauss_nodes<20>(x, w); break;
    case 30: gauss_nodes<30>(x, w); break;
    case 40: gauss_nodes<40>(x, w); break;
    case 50: gauss_nodes<50>(x, w); break;
    case 60: gauss_nodes<60>(x, w); break;
    default: throw ConfigError("x_nodes must be one of 20, 30, 40, 50, 60", "n1.x_nodes");
  }
}

}  // namespace

double n1_quadrature(const ModelParams& params, const PotentialSpec& spec, double t,
                     const N1Options& options) {
  check_n1_inputs(params, spec);
  if (params.d != 1)
    throw ConfigError("n1_quadrature supports d = 1; use n1_mc for d >= 2", "params.d");
  if (spec.sign != 1) throw ConfigError("n1_quadrature requires spec.sign = +1", "spec.sign");
  if (!(t >= 0.0) || !std::isfinite(t)) throw DomainError("t must be finite and >= 0", "t");
  if (t == 0.0 || (spec.u_cap == 0.0 && spec.obstacle_rho == 0.0)) return 0.0;

  std::vector<double> nodes, weights;
  legendre_rule(options.x_nodes, nodes, weights);
  const int q_max = n1_exact_radius(params, spec, t);
  const SiteFactor factor(params, spec, t, options);

  // the integrand is even in x, so integrate over [0, 1/2] and double
  std::vector<double> terms(nodes.size());
  parallel_for(nodes.size(), params.workers, [&](std::size_t i) {
    const double x = 0.25 * (1.0 + nodes[i]);
    CompensatedSum s;
    for (int q = -q_max; q <= q_max; ++q) s.add(factor(x - q));
    s.add(n1_far_tail(params, spec, t, {x, 0.0, 0.0}, q_max));
    terms[i] = std::log(0.25 * weights[i]) + s.value();
  });
  return std::log(2.0) + log_sum_exp(terms);
}

LaplaceCurve n1_quadrature_curve(const ModelParams& params, const PotentialSpec& spec,
                                 std::span<const double> t_grid, const N1Options& options) {
  LaplaceCurve out;
  out.kind = LaplaceKind::n1_quadrature;
  for (std::size_t i = 0; i < t_grid.size(); ++i) {
    if (i > 0 && !(t_grid[i] > t_grid[i - 1]))
      throw DomainError("t_grid must be strictly increasing", "t_grid");
    out.t_grid.push_back(t_grid[i]);
    out.log_values.push_back(n1_quadrature(params, spec, t_grid[i], options));
    out.std_err.push_back(0.0);
    out.flagged.push_back(false);
  }
  out.meta = {{"estimator", "n1_quadrature"},
              {"params", to_json(params)},
              {"spec", to_json(spec)},
              {"x_nodes", options.x_nodes},
              {"rel_tol", options.rel_tol},
              {"max_depth", options.max_depth}};
  return out;
}

LaplaceCurve n1_mc(const ModelParams& params, const PotentialSpec& spec,
                   std::span<const double> t_grid, std::size_t replicates,
                   const N1McOptions& options) {
  check_n1_inputs(params, spec);
  if (t_grid.empty()) throw ConfigError("t_grid must not be empty", "t_grid");
  for (std::size_t i = 0; i < t_grid.size(); ++i) {
    if (!(t_grid[i] >= 0.0) || !std::isfinite(t_grid[i]))
      throw DomainError("t must be finite and >= 0", "t_grid");
    if (i > 0 && !(t_grid[i] > t_grid[i - 1]))
      throw DomainError("t_grid must be strictly increasing", "t_grid");
  }
  if (replicates < 2) throw ConfigError("replicates must be >= 2", "replicates");
  if (options.xi_samples < 2 || options.xi_samples % 2)
    throw ConfigError("xi_samples must be even and >= 2", "n1.xi_samples");

  const int d = params.d;
  const int sign = spec.sign;
  const double t_max = t_grid.back();
  const int q_max = n1_exact_radius(params, spec, t_max);
  const std::vector<Site> sites = sites_within(d, q_max);
  const double log_z = std::log(normalizer(d, params.theta));
  const std::size_t nt = t_grid.size();
  const int m = options.xi_samples;
  const int half = m / 2;

  // Proposal: half the samples from the displacement law, half uniform on a
  // region where the integrand can be large; weights use the balanced mixture.
  const double spread = std::pow(std::max(t_max * spec.c0, 1.0), 1.0 / (spec.alpha + params.theta));
  const double plus_radius = std::max(4.0, 3.0 * spread);
  const double near_radius =
      spec.is_compact() ? 0.0 : 2.0 * spread + std::min(spec.core_radius(), 1e3) + 1.0;

  std::vector<std::vector<double>> log_est(nt, std::vector<double>(replicates, 0.0));

  parallel_for(replicates, params.workers, [&](std::size_t r) {
    CounterRng xrng(StreamTag::x_sample, {params.seed, r});
    Point x{0.0, 0.0, 0.0};
    for (int a = 0; a < d; ++a) x[a] = xrng.uniform() - 0.5;

    std::vector<CompensatedSum> acc(nt);
    std::vector<double> log_w(m), u(m);
    std::vector<char> killed(m);
    std::vector<double> scratch(m);

    for (const Site& q : sites) {
      Point z{0.0, 0.0, 0.0};
      for (int a = 0; a < d; ++a) z[a] = x[a] - q[a];
      CounterRng rng(StreamTag::xi_sample,
                     {params.seed, r, coord_word(q[0]), coord_word(q[1]), coord_word(q[2])});

      // proposal region: cube around z (compact, sign -1), ball around z
      // (decay, sign -1), ball around 0 (sign +1), or none (far sites, sign +1)
      bool mixture = true;
      bool cube = false;
      Point centre{0.0, 0.0, 0.0};
      double radius = plus_radius;
      if (sign < 0) {
        centre = z;
        if (spec.is_compact()) {
          cube = true;
          radius = *spec.compact_r;
        } else {
          radius = std::max(1.0, std::min(spec.core_radius(), 1e3));
        }
      } else if (norm(z, d) > near_radius) {
        mixture = false;
      }
      const double g_density =
          cube ? std::pow(2.0 * radius, -d) : 1.0 / (ball_volume(d) * std::pow(radius, d));

      for (int k = 0; k < m; ++k) {
        Point xi{0.0, 0.0, 0.0};
        if (!mixture || k < half) {
          xi = sample_displacement(params, rng);
        } else if (cube) {
          for (int a = 0; a < d; ++a) xi[a] = centre[a] + radius * (2.0 * rng.uniform() - 1.0);
        } else {
          // uniform in the ball by rejection from the cube
          for (;;) {
            double r2 = 0.0;
            for (int a = 0; a < d; ++a) {
              xi[a] = 2.0 * rng.uniform() - 1.0;
              r2 += xi[a] * xi[a];
            }
            if (r2 <= 1.0) break;
          }
          for (int a = 0; a < d; ++a) xi[a] = centre[a] + radius * xi[a];
        }
        const double log_p = -std::pow(norm(xi, d), params.theta) - log_z;
        if (mixture) {
          bool inside = true;
          double r2 = 0.0;
          for (int a = 0; a < d; ++a) {
            const double c = xi[a] - centre[a];
            r2 += c * c;
            if (cube && std::abs(c) > radius) inside = false;
          }
          if (!cube && r2 > radius * radius) inside = false;
          const double p = std::exp(log_p);
          const double g = inside ? g_density : 0.0;
          log_w[k] = log_p - std::log(0.5 * p + 0.5 * g);
        } else {
          log_w[k] = 0.0;
        }
        Point y{0.0, 0.0, 0.0};
        for (int a = 0; a < d; ++a) y[a] = z[a] - xi[a];
        killed[k] = spec.obstacle_rho > 0.0 && norm(y, d) <= spec.obstacle_rho;
        u[k] = potential_u(spec, y, d);
      }

      for (std::size_t j = 0; j < nt; ++j) {
        const double t = t_grid[j];
        if (t == 0.0) continue;
        double log_factor;
        if (sign < 0) {
          // 1 + mean(w (e^{t u} - 1)) >= 1
          for (int k = 0; k < m; ++k)
            scratch[k] = u[k] > 0.0 ? log_w[k] + t * u[k] + std::log(-std::expm1(-t * u[k]))
                                    : kNegInf;
          const double log_s = log_sum_exp(scratch) - std::log(double(m));
          log_factor = log_s < 0.0 ? std::log1p(std::exp(log_s))
                                   : log_s + std::log1p(std::exp(-log_s));
        } else {
          for (int k = 0; k < m; ++k) scratch[k] = killed[k] ? kNegInf : log_w[k] - t * u[k];
          log_factor = log_sum_exp(scratch) - std::log(double(m));
        }
        acc[j].add(log_factor);
      }
    }
    for (std::size_t j = 0; j < nt; ++j) {
      const double t = t_grid[j];
      log_est[j][r] = t == 0.0 ? 0.0 : acc[j].value() + n1_far_tail(params, spec, t, x, q_max);
    }
  });

  LaplaceCurve out;
  out.kind = sign > 0 ? LaplaceKind::n1_mc : LaplaceKind::negative;
  out.t_grid.assign(t_grid.begin(), t_grid.end());
  for (std::size_t j = 0; j < nt; ++j) {
    const MeanStderr ms = log_mean_exp(log_est[j]);
    const double mx = *std::max_element(log_est[j].begin(), log_est[j].end());
    double s1 = 0.0, s2 = 0.0;
    for (double v : log_est[j]) {
      const double w = std::exp(v - mx);
      s1 += w;
      s2 += w * w;
    }
    const double ess = s1 * s1 / s2;
    out.log_values.push_back(ms.mean);
    out.std_err.push_back(ms.stderr_of_mean);
    out.ess.push_back(ess);
    out.flagged.push_back(ess < 10.0);
  }
  out.meta = {{"estimator", "n1_mc"},
              {"params", to_json(params)},
              {"spec", to_json(spec)},
              {"replicates", replicates},
              {"xi_samples", m},
              {"exact_radius", q_max},
              {"far_sites", spec.is_compact() ? "neglected (compact support)"
                                              : "second-order cumulant approximation"}};
  return out;
}

}  // namespace rdl

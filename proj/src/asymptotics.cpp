#include "rdl/asymptotics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/minima.hpp>

#include "rdl/error.hpp"
#include "rdl/math.hpp"

namespace rdl {

namespace {

using GK = boost::math::quadrature::gauss_kronrod<double, 31>;

void check_dimension(int d) {
  if (d < 1 || d > 3) throw DomainError("d must be 1, 2 or 3", "d");
}

void check_positive(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v))
    throw DomainError(std::string(name) + " must be finite and > 0", name);
}

// Brent refinement of f on [a, b], split at an interior kink when given.
template <typename F>
std::pair<double, double> refine_min(F&& f, double a, double b, double kink) {
  auto run = [&](double lo, double hi) {
    boost::uintmax_t iters = 200;
    return boost::math::tools::brent_find_minima(f, lo, hi, 40, iters);
  };
  std::pair<double, double> best{a, f(a)};
  auto consider = [&](std::pair<double, double> c) {
    if (c.second < best.second) best = c;
  };
  // minimizers close to the kink are resolved in log distance from it
  auto run_near = [&](double width, double dir) {
    auto g = [&](double u) { return f(kink + dir * std::exp(u)); };
    const double lo = std::log(width) - 40.0;
    boost::uintmax_t iters = 200;
    const auto [u, v] = boost::math::tools::brent_find_minima(g, lo, std::log(width), 40, iters);
    return std::pair<double, double>{kink + dir * std::exp(u), v};
  };
  consider({b, f(b)});
  if (kink > a && kink < b) {
    consider({kink, f(kink)});
    consider(run(a, kink));
    consider(run(kink, b));
    consider(run_near(kink - a, -1.0));
    consider(run_near(b - kink, 1.0));
  } else {
    consider(run(a, b));
  }
  return best;
}

// Integral of f over [0, inf) as [0, 1] + doubling panels, stopping when the
// analytic tail bound tail(S) is below rel * accumulated.
template <typename F, typename T>
double half_line_integral(F&& f, T&& tail, double rel, double first = 1.0) {
  CompensatedSum acc;
  double a = 0.0, b = first;
  for (int panel = 0; panel < 200; ++panel) {
    double err = 0.0;
    acc.add(GK::integrate(f, a, b, 12, 1e-11, &err));
    const double tl = tail(b);
    if (std::abs(tl) <= rel * std::abs(acc.value()) && panel >= 4) {
      acc.add(tl);
      return acc.value();
    }
    a = b;
    b *= 2.0;
  }
  throw NumericalError("half-line integral: tail did not fall below the requested fraction");
}

}  // namespace

double kappa_exponent(int d, double theta, double alpha) {
  check_dimension(d);
  check_positive(theta, "theta");
  if (!(alpha > d)) throw DomainError("alpha must exceed d", "alpha");
  return (d + theta) / (alpha - d);
}

double gamma_exponent(int d, double theta, double alpha) {
  check_dimension(d);
  check_positive(theta, "theta");
  if (!(alpha > d)) throw DomainError("alpha must exceed d", "alpha");
  return (d + theta) / (alpha + theta);
}

double mu_exponent(int d, double alpha) {
  check_dimension(d);
  if (!(alpha > d)) throw DomainError("alpha must exceed d", "alpha");
  return 2.0 * (alpha - 2.0) / (d * (alpha - d));
}

InnerMinimum pastur_inner_min(double s, double theta, double alpha, double c0,
                              const PasturOptions& options) {
  auto f = [&](double r) { return c0 * std::pow(r, -alpha) + std::pow(std::abs(r - s), theta); };
  const double hi = std::max(options.r_max, 4.0 * s);
  std::vector<double> r;
  r.reserve(options.scan_points + 1);
  const double step = std::log(hi / options.r_min) / (options.scan_points - 1);
  for (int i = 0; i < options.scan_points; ++i) r.push_back(options.r_min * std::exp(step * i));
  if (s > 0.0) r.push_back(s);
  std::sort(r.begin(), r.end());
  std::size_t best = 0;
  for (std::size_t i = 1; i < r.size(); ++i)
    if (f(r[i]) < f(r[best])) best = i;
  const double a = best > 0 ? r[best - 1] : r[0] * 0.1;
  const double b = best + 1 < r.size() ? r[best + 1] : r.back() * 10.0;
  const auto [rmin, vmin] = refine_min(f, a, b, s);
  return {vmin, rmin};
}

double pastur_constant(int d, double theta, double alpha, double c0, const PasturOptions& options) {
  check_dimension(d);
  check_positive(theta, "theta");
  check_positive(c0, "c0");
  if (!(alpha > d))
    throw DomainError("the Pastur integral diverges unless alpha > d", "alpha");
  auto integrand = [&](double s) {
    const double inner = pastur_inner_min(s, theta, alpha, c0, options).value;
    return d == 1 ? inner : std::pow(s, d - 1) * inner;
  };
  // beyond S the minimizer stays put: I(s) <= c0 s^-alpha
  auto tail = [&](double s) { return c0 * std::pow(s, d - alpha) / (alpha - d); };
  return sphere_area(d) * half_line_integral(integrand, tail, options.tail_rel);
}

KasaharaResult kasahara_map(double kappa, double c) {
  check_positive(kappa, "kappa");
  check_positive(c, "C");
  const double g = kappa / (kappa + 1.0);
  const double coef = std::exp(kappa * std::log(kappa) - (kappa + 1.0) * std::log(kappa + 1.0) +
                               (kappa + 1.0) * std::log(c));
  return {g, coef};
}

double lifshitz_1d_constant(double theta, double h) {
  check_positive(theta, "theta");
  check_positive(h, "h");
  return std::pow(std::numbers::pi, 1.0 + theta) * std::pow(h, 0.5 * (1.0 + theta)) /
         ((1.0 + theta) * std::pow(2.0, theta));
}

double negative_constant(int d, double theta) {
  check_dimension(d);
  check_positive(theta, "theta");
  return std::pow(double(d), 1.0 + theta / d) /
         ((d + theta) * std::pow(sphere_area(d), theta / d));
}

double neg_laplace_coefficient(int d, double theta, double u0) {
  check_dimension(d);
  check_positive(theta, "theta");
  check_positive(u0, "u0");
  return std::pow(u0, 1.0 + d / theta) * sphere_area(d) * theta / (d * (d + theta));
}

double lambda1_hard_1d(double max_gap, double h, double c6) {
  check_positive(max_gap, "max_gap");
  check_positive(h, "h");
  if (!(c6 >= 0.0)) throw DomainError("c6 must be >= 0", "c6");
  const double g = max_gap + c6;
  return h * std::numbers::pi * std::numbers::pi / (g * g);
}

AsymptoticConstants asymptotic_constants(int d, double theta, double alpha, double c0, double h,
                                         double u0, const PasturOptions& options) {
  AsymptoticConstants c;
  c.kappa = kappa_exponent(d, theta, alpha);
  c.mu = mu_exponent(d, alpha);
  c.gamma = gamma_exponent(d, theta, alpha);
  c.pastur_k = pastur_constant(d, theta, alpha, c0, options);
  c.lifshitz_1d = lifshitz_1d_constant(theta, h);
  c.c1 = negative_constant(d, theta);
  c.neg_coeff = neg_laplace_coefficient(d, theta, u0);
  return c;
}

nlohmann::json to_json(const AsymptoticConstants& c, const PasturOptions& options) {
  return {{"kappa", c.kappa},
          {"mu", c.mu},
          {"gamma", c.gamma},
          {"pastur_k", c.pastur_k},
          {"lifshitz_1d", c.lifshitz_1d},
          {"c1", c.c1},
          {"neg_coeff", c.neg_coeff},
          {"provenance",
           {{"inner_scan_points", options.scan_points},
            {"inner_scan_range", {options.r_min, options.r_max}},
            {"inner_refinement", "Brent minimization on the bracketing scan interval"},
            {"outer_quadrature", "adaptive Gauss-Kronrod (15/31) on doubling panels"},
            {"outer_quadrature_tol", 1e-11},
            {"tail_rel", options.tail_rel}}}};
}

TestFunctionProfile ground_state_profile(double sigma, int n_points) {
  check_positive(sigma, "sigma");
  if (n_points < 5) throw DomainError("profile needs at least 5 points", "n_points");
  TestFunctionProfile p;
  p.support_radius = sigma;
  p.dx = 2.0 * sigma / (n_points - 1);
  const double amp = 1.0 / std::sqrt(sigma);
  for (int i = 0; i < n_points; ++i) {
    const double x = -sigma + i * p.dx;
    p.x.push_back(x);
    p.psi.push_back(i == 0 || i == n_points - 1 ? 0.0
                                                : amp * std::cos(std::numbers::pi * x / (2.0 * sigma)));
  }
  CompensatedSum s;
  for (std::size_t i = 0; i < p.psi.size(); ++i)
    s.add((i == 0 || i + 1 == p.psi.size() ? 0.5 : 1.0) * p.psi[i] * p.psi[i] * p.dx);
  p.norm2 = s.value();
  return p;
}

K0Value k0_objective(const ModelParams& params, double c0, const TestFunctionProfile& psi,
                     const K0Options& options) {
  params.validate();
  check_positive(c0, "c0");
  if (params.d != 1)
    throw ConfigError("k0_objective evaluates one-dimensional profiles only", "params.d");
  if (psi.psi.size() < 5 || psi.psi.size() != psi.x.size())
    throw DomainError("test function profile is malformed", "psi");
  CompensatedSum norm;
  for (std::size_t i = 0; i < psi.psi.size(); ++i)
    norm.add((i == 0 || i + 1 == psi.psi.size() ? 0.5 : 1.0) * psi.psi[i] * psi.psi[i] * psi.dx);
  if (std::abs(norm.value() - 1.0) > 1e-6)
    throw DomainError("test function must be L2-normalized (norm2 = " + std::to_string(norm.value()) + ")",
                      "psi");
  const double p = options.kernel_exponent > 0.0 ? options.kernel_exponent : params.d + 2.0;
  if (!(p > 1.0)) throw DomainError("kernel exponent must exceed 1", "kernel_exponent");
  const double theta = params.theta;
  const std::size_t n = psi.psi.size();
  const double sigma = psi.support_radius;

  CompensatedSum grad;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double g = (psi.psi[i + 1] - psi.psi[i]) / psi.dx;
    grad.add(g * g * psi.dx);
  }
  const double kinetic = params.h * grad.value();

  std::vector<double> mass(n);
  for (std::size_t i = 0; i < n; ++i)
    mass[i] = c0 * psi.psi[i] * psi.psi[i] * psi.dx * (i == 0 || i + 1 == n ? 0.5 : 1.0);
  // A(z) for z > sigma; by symmetry the negative side mirrors it
  auto field = [&](double z) {
    CompensatedSum s;
    for (std::size_t i = 0; i < n; ++i)
      if (mass[i] != 0.0) s.add(mass[i] * std::pow(z - psi.x[i], -p));
    return s.value();
  };

  const double delta_min = 2.0 * psi.dx;
  const double delta_max = 1e4 * std::max(1.0, sigma);
  std::vector<double> z(options.z_points), a(options.z_points);
  const double step = std::log(delta_max / delta_min) / (options.z_points - 1);
  for (int j = 0; j < options.z_points; ++j) {
    z[j] = sigma + delta_min * std::exp(step * j);
    a[j] = field(z[j]);
  }

  auto inner = [&](double q) {
    q = std::abs(q);
    auto cost = [&](double zz) { return field(zz) + std::pow(std::abs(zz - q), theta); };
    std::size_t best = 0;
    double best_val = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < z.size(); ++j) {
      const double v = a[j] + std::pow(std::abs(z[j] - q), theta);
      if (v < best_val) {
        best_val = v;
        best = j;
      }
    }
    const double lo = best > 0 ? z[best - 1] : z[0];
    const double hi = best + 1 < z.size() ? z[best + 1] : z.back();
    return std::min(best_val, refine_min(cost, lo, hi, q).second);
  };

  // beyond Q the site stays put: inf <= A(q) ~ c0 q^-p
  auto tail = [&](double q) { return c0 * std::pow(q, 1.0 - p) / (p - 1.0); };
  const double potential =
      2.0 * half_line_integral(inner, tail, options.q_tail_rel, std::max(sigma, 0.25));
  return {kinetic + potential, kinetic, potential};
}

K0WidthScan optimize_k0_width(const ModelParams& params, double c0,
                              const std::vector<double>& sigma_grid, const K0Options& options,
                              int n_points) {
  if (sigma_grid.size() < 3) throw DomainError("sigma grid needs at least 3 points", "sigma_grid");
  K0WidthScan scan;
  auto objective = [&](double sigma) {
    return k0_objective(params, c0, ground_state_profile(sigma, n_points), options).total;
  };
  for (double s : sigma_grid) {
    scan.sigma.push_back(s);
    scan.objective.push_back(objective(s));
  }
  const auto it = std::min_element(scan.objective.begin(), scan.objective.end());
  const std::size_t i = static_cast<std::size_t>(it - scan.objective.begin());
  scan.best_sigma = scan.sigma[i];
  scan.best_objective = *it;
  if (i > 0 && i + 1 < scan.sigma.size()) {
    boost::uintmax_t iters = 30;
    const auto [ls, v] = boost::math::tools::brent_find_minima(
        [&](double log_sigma) { return objective(std::exp(log_sigma)); },
        std::log(scan.sigma[i - 1]), std::log(scan.sigma[i + 1]), 20, iters);
    if (v < scan.best_objective) {
      scan.best_sigma = std::exp(ls);
      scan.best_objective = v;
    }
  }
  return scan;
}

}  // namespace rdl

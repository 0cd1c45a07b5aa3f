#pragma once

#include <vector>

#include "json.hpp"

#include "rdl/randfield.hpp"

namespace rdl {

/// (d + theta) / (alpha - d): exponent of the classical Lifshitz tail in lambda.
double kappa_exponent(int d, double theta, double alpha);
/// (d + theta) / (alpha + theta): exponent of the Laplace transform in t.
double gamma_exponent(int d, double theta, double alpha);
/// 2 (alpha - 2) / (d (alpha - d)).
double mu_exponent(int d, double alpha);

struct PasturOptions {
  int scan_points = 128;
  double r_min = 1e-3;
  double r_max = 1e3;
  double tail_rel = 1e-6;  ///< analytic tail below this fraction of the integral
};

/// min over r >= 0 of c0 r^-alpha + |r - s|^theta, with the minimizer.
struct InnerMinimum {
  double value;
  double r;
};
InnerMinimum pastur_inner_min(double s, double theta, double alpha, double c0,
                              const PasturOptions& options = {});

/// |S^{d-1}| * integral_0^inf s^{d-1} I(s) ds with I the inner minimum above.
double pastur_constant(int d, double theta, double alpha, double c0,
                       const PasturOptions& options = {});

struct KasaharaResult {
  double gamma;
  double limit_coefficient;
};
/// log L(t) ~ -C t^(kappa/(kappa+1)) for the Laplace transform L of N is
/// equivalent to lambda^kappa log N(lambda) -> -kappa^kappa / (kappa+1)^(kappa+1) * C^(kappa+1)
/// as lambda -> 0+. Returns the Laplace exponent and that limit coefficient.
KasaharaResult kasahara_map(double kappa, double c);

/// pi^(1+theta) h^((1+theta)/2) / ((1+theta) 2^theta).
double lifshitz_1d_constant(double theta, double h);

/// d^(1+theta/d) / ((d+theta) |S^{d-1}|^(theta/d)).
double negative_constant(int d, double theta);

/// u0^(1+d/theta) |S^{d-1}| theta / (d (d+theta)) = u0^(1+d/theta) * integral_{|q|<=1} (1-|q|^theta) dq.
double neg_laplace_coefficient(int d, double theta, double u0);

/// Exact ground energy h pi^2 / (gap + c6)^2 of the largest free interval.
double lambda1_hard_1d(double max_gap, double h, double c6 = 0.0);

struct AsymptoticConstants {
  double kappa = 0.0;
  double mu = 0.0;
  double gamma = 0.0;
  double pastur_k = 0.0;
  double lifshitz_1d = 0.0;
  double c1 = 0.0;
  double neg_coeff = 0.0;
};

AsymptoticConstants asymptotic_constants(int d, double theta, double alpha, double c0, double h,
                                         double u0, const PasturOptions& options = {});
nlohmann::json to_json(const AsymptoticConstants& c, const PasturOptions& options);

/// Sampled test function on [-support_radius, support_radius] (d = 1), zero at both ends.
struct TestFunctionProfile {
  std::vector<double> x;
  std::vector<double> psi;
  double dx = 0.0;
  double norm2 = 0.0;  ///< trapezoid integral of psi^2
  double support_radius = 0.0;
};

/// cos(pi x / (2 sigma)) / sqrt(sigma): the Dirichlet ground state of [-sigma, sigma].
TestFunctionProfile ground_state_profile(double sigma, int n_points = 2001);

struct K0Options {
  double kernel_exponent = 0.0;  ///< 0 selects d + 2
  int z_points = 1500;           ///< geometric table of distances outside the support
  double q_tail_rel = 1e-6;
};

struct K0Value {
  double total;
  double kinetic;    ///< h ||psi'||^2
  double potential;  ///< integral over q of the constrained infimum
};

/// h ||psi'||^2 + integral dq inf_{z outside supp psi} (A(z) + |z - q|^theta),
/// A(z) = integral c0 psi(x)^2 |x - z|^-p dx. An upper bound on K0(h, c0) for p = d + 2.
K0Value k0_objective(const ModelParams& params, double c0, const TestFunctionProfile& psi,
                     const K0Options& options = {});

struct K0WidthScan {
  std::vector<double> sigma;
  std::vector<double> objective;
  double best_sigma = 0.0;
  double best_objective = 0.0;
};

/// Scans ground_state_profile widths on sigma_grid, then refines by Brent minimization
/// around the best grid point.
K0WidthScan optimize_k0_width(const ModelParams& params, double c0,
                              const std::vector<double>& sigma_grid, const K0Options& options = {},
                              int n_points = 2001);

}  // namespace rdl

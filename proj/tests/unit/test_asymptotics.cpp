#include "doctest.h"

#include <cmath>
#include <numbers>
#include <vector>

#include "../support/pastur_oracle.hpp"
#include "rdl/asymptotics.hpp"
#include "rdl/error.hpp"

using namespace rdl;

TEST_CASE("tail exponents") {
  CHECK(kappa_exponent(1, 1.0, 2.0) == doctest::Approx(2.0));
  CHECK(gamma_exponent(1, 1.0, 2.0) == doctest::Approx(2.0 / 3.0));
  CHECK(mu_exponent(1, 4.0) == doctest::Approx(4.0 / 3.0));
  CHECK(kappa_exponent(3, 2.0, 5.0) == doctest::Approx(2.5));
  CHECK_THROWS_AS(kappa_exponent(2, 1.0, 2.0), DomainError);
  CHECK_THROWS_AS(mu_exponent(4, 6.0), DomainError);
}

TEST_CASE("Pastur inner minimum for theta = 1 has the closed form max(s, (alpha c0)^(1/(alpha+1)))") {
  const double r_star = std::cbrt(2.0);
  for (double s : {0.0, 0.3, 1.0, 2.0, 7.5}) {
    const InnerMinimum m = pastur_inner_min(s, 1.0, 2.0, 1.0);
    const double r = std::max(s, r_star);
    CHECK(m.r == doctest::Approx(r).epsilon(1e-6));
    CHECK(m.value == doctest::Approx(1.0 / (r * r) + r - s).epsilon(1e-12));
  }
}

TEST_CASE("Pastur constant against the closed form and the brute-force oracle") {
  // d = 1, theta = 1, alpha = 2, c0 = 1: 2 (2 / r* + r*^2 / 2) with r* = 2^(1/3)
  const double r_star = std::cbrt(2.0);
  CHECK(pastur_constant(1, 1.0, 2.0, 1.0) ==
        doctest::Approx(2.0 * (2.0 / r_star + r_star * r_star / 2.0)).epsilon(1e-9));
  CHECK(testing::pastur_brute_force(1, 1.0, 2.0, 1.0, 100.0, 1000) ==
        doctest::Approx(pastur_constant(1, 1.0, 2.0, 1.0)).epsilon(1e-4));
  // frozen brute-force oracle values (s_max 200, 4000 Simpson intervals)
  CHECK(pastur_constant(2, 1.0, 4.0, 1.0) == doctest::Approx(6.014511388).epsilon(1e-4));
  CHECK(pastur_constant(3, 2.0, 5.0, 1.0) == doctest::Approx(7.011564286).epsilon(1e-4));
  CHECK(pastur_constant(1, 1.0, 4.0, 0.5) == doctest::Approx(2.19917306).epsilon(1e-4));
  CHECK_THROWS_AS(pastur_constant(1, 1.0, 1.0, 1.0), DomainError);
}

TEST_CASE("Pastur constant scaling in c0") {
  // substituting r = c0^(1/(alpha+theta)) r', s = c0^(1/(alpha+theta)) s' gives
  // K(c0) = c0^((d+theta)/(alpha+theta)) K(1)
  const double k1 = pastur_constant(2, 1.5, 4.0, 1.0);
  const double k3 = pastur_constant(2, 1.5, 4.0, 3.0);
  CHECK(k3 == doctest::Approx(std::pow(3.0, 3.5 / 5.5) * k1).epsilon(1e-7));
}

TEST_CASE("Kasahara map examples") {
  CHECK(kasahara_map(1.0, 1.0).gamma == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(kasahara_map(1.0, 1.0).limit_coefficient == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(kasahara_map(2.0, 1.0).limit_coefficient == doctest::Approx(4.0 / 27.0).epsilon(1e-12));
  CHECK(kasahara_map(1.0, 2.0).limit_coefficient == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_THROWS_AS(kasahara_map(0.0, 1.0), DomainError);
}

TEST_CASE("Kasahara map agrees with a direct Legendre transform") {
  // log N = -B lambda^-kappa gives log L(t) ~ -inf_lambda (t lambda + B lambda^-kappa) = -C t^gamma
  const double kappa = 1.5, c = 1.7, t = 40.0;
  const KasaharaResult k = kasahara_map(kappa, c);
  double brute = 1e300;
  for (int i = 1; i < 400000; ++i) {
    const double lambda = 1e-5 * i;
    brute = std::min(brute, t * lambda + k.limit_coefficient * std::pow(lambda, -kappa));
  }
  CHECK(brute == doctest::Approx(c * std::pow(t, k.gamma)).epsilon(1e-6));
}

TEST_CASE("gamma equals kappa / (kappa + 1) on sampled parameters") {
  for (int d = 1; d <= 3; ++d)
    for (double theta : {0.5, 1.0, 2.0, 4.0})
      for (double alpha : {d + 0.5, d + 1.0, d + 3.0}) {
        const double kappa = kappa_exponent(d, theta, alpha);
        CHECK(gamma_exponent(d, theta, alpha) == doctest::Approx(kappa / (kappa + 1.0)));
        CHECK(kasahara_map(kappa, 1.0).gamma == doctest::Approx(gamma_exponent(d, theta, alpha)));
      }
}

TEST_CASE("Pastur constant is increasing in c0 and decreasing in alpha") {
  const double k_half = pastur_constant(1, 1.0, 2.0, 0.5);
  const double k_one = pastur_constant(1, 1.0, 2.0, 1.0);
  const double k_two = pastur_constant(1, 1.0, 2.0, 2.0);
  CHECK(k_half < k_one);
  CHECK(k_one < k_two);
  CHECK(pastur_constant(1, 1.0, 2.5, 1.0) < k_one);
  CHECK(pastur_constant(1, 1.0, 3.0, 1.0) < pastur_constant(1, 1.0, 2.5, 1.0));
}

TEST_CASE("closed-form constants") {
  CHECK(lifshitz_1d_constant(1.0, 1.0) == doctest::Approx(std::numbers::pi * std::numbers::pi / 4.0).epsilon(1e-12));
  CHECK(lifshitz_1d_constant(2.0, 4.0) ==
        doctest::Approx(std::pow(std::numbers::pi, 3.0) * 8.0 / 12.0).epsilon(1e-12));
  CHECK(negative_constant(1, 1.0) == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(negative_constant(3, 3.0) == doctest::Approx(9.0 / (6.0 * 4.0 * std::numbers::pi)).epsilon(1e-12));
  // u0^(1+d/theta) times the integral of 1 - |q|^theta over the unit ball
  CHECK(neg_laplace_coefficient(1, 1.0, 1.0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(neg_laplace_coefficient(2, 2.0, 2.0) == doctest::Approx(4.0 * std::numbers::pi / 2.0).epsilon(1e-12));
  CHECK(lambda1_hard_1d(2.0, 1.0) == doctest::Approx(std::numbers::pi * std::numbers::pi / 4.0).epsilon(1e-12));
  CHECK(lambda1_hard_1d(2.0, 1.0, 1.0) == doctest::Approx(std::numbers::pi * std::numbers::pi / 9.0).epsilon(1e-12));
  CHECK_THROWS_AS(lambda1_hard_1d(0.0, 1.0), DomainError);

  const AsymptoticConstants c = asymptotic_constants(1, 1.0, 2.0, 1.0, 1.0, 1.0);
  const nlohmann::json j = to_json(c, PasturOptions{});
  CHECK(j.at("kappa").get<double>() == doctest::Approx(2.0));
  CHECK(j.at("c1").get<double>() == doctest::Approx(0.25));
  CHECK(j.at("provenance").contains("tail_rel"));
}

TEST_CASE("ground-state profile is normalized with the Dirichlet kinetic energy") {
  const TestFunctionProfile p = ground_state_profile(1.5, 3001);
  CHECK(p.norm2 == doctest::Approx(1.0).epsilon(1e-7));
  ModelParams params;
  params.h = 0.5;
  const K0Value v = k0_objective(params, 1.0, p);
  const double sigma = 1.5;
  CHECK(v.kinetic ==
        doctest::Approx(params.h * std::numbers::pi * std::numbers::pi / (4.0 * sigma * sigma)).epsilon(1e-5));
  CHECK(v.potential > 0.0);
  CHECK(v.total == doctest::Approx(v.kinetic + v.potential));
}

TEST_CASE("K0 objective tends to the Pastur constant as the profile shrinks") {
  ModelParams params;
  K0Options o;
  o.kernel_exponent = 2.5;
  const double pastur = pastur_constant(1, 1.0, 2.5, 1.0);
  const double wide = k0_objective(params, 1.0, ground_state_profile(0.1), o).potential;
  const double narrow = k0_objective(params, 1.0, ground_state_profile(0.01), o).potential;
  CHECK(std::abs(narrow - pastur) < std::abs(wide - pastur));
  CHECK(narrow == doctest::Approx(pastur).epsilon(1e-4));
}

TEST_CASE("K0 objective validates its inputs") {
  ModelParams params;
  TestFunctionProfile p = ground_state_profile(1.0, 201);
  p.psi[100] *= 1.5;
  CHECK_THROWS_AS(k0_objective(params, 1.0, p), DomainError);
  params.d = 2;
  CHECK_THROWS_AS(k0_objective(params, 1.0, ground_state_profile(1.0, 201)), ConfigError);
}

TEST_CASE("K0 width scan finds an interior minimum") {
  ModelParams params;
  K0Options o;
  o.z_points = 300;
  const K0WidthScan scan = optimize_k0_width(params, 1.0, {0.25, 0.5, 1.0, 2.0, 4.0}, o, 401);
  CHECK(scan.best_sigma > 0.25);
  CHECK(scan.best_sigma < 4.0);
  for (double v : scan.objective) CHECK(scan.best_objective <= v);
}

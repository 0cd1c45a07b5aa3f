#include "doctest.h"

#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

#include "rdl/error.hpp"
#include "rdl/ids.hpp"

using namespace rdl;

namespace {

PotentialSpec free_spec() {
  PotentialSpec s;
  s.u_cap = 0.0;
  return s;
}

GridSpec dirichlet_grid(double r, int n) {
  GridSpec g;
  g.box_r = r;
  g.n_per_side = n;
  return g;
}

// Count of discrete Dirichlet eigenvalues (2h/dx^2)(1 - cos(k pi/(n+1))) at or below lambda.
double free_count(int n, double dx, double h, double lambda) {
  int count = 0;
  for (int k = 1; k <= n; ++k)
    if (2.0 * h / (dx * dx) * (1.0 - std::cos(k * std::numbers::pi / (n + 1))) <= lambda) ++count;
  return count;
}

}  // namespace

TEST_CASE("free empirical IDS equals the exact discrete eigenvalue count") {
  ModelParams p;
  p.h = 0.7;
  const GridSpec g = dirichlet_grid(40.0, 399);
  const std::vector<double> lambdas{0.01, 0.1, 0.5, 1.0, 3.0};
  const IdsCurve c = empirical_ids(p, free_spec(), g, lambdas, 3);
  REQUIRE(c.n_hat.size() == lambdas.size());
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    CHECK(c.n_hat[i] == doctest::Approx(free_count(399, g.dx(), p.h, lambdas[i]) / 40.0));
    CHECK(c.std_err[i] < 1e-15);
  }
  CHECK(c.states_per_volume == doctest::Approx(399.0 / 40.0));
  // Weyl law sqrt(lambda / h) / pi within one state per box
  CHECK(std::abs(c.n_hat[2] - std::sqrt(0.5 / p.h) / std::numbers::pi) <= 1.0 / 40.0);
}

TEST_CASE("classical IDS of the free field is the Weyl law") {
  ModelParams p;
  p.h = 2.0;
  const std::vector<double> lambdas{0.5, 2.0, 8.0};
  const IdsCurve c = classical_ids(p, free_spec(), dirichlet_grid(10.0, 50), lambdas, 2);
  for (std::size_t i = 0; i < lambdas.size(); ++i)
    CHECK(c.n_hat[i] == doctest::Approx(std::sqrt(lambdas[i] / p.h) / std::numbers::pi).epsilon(1e-12));
}

TEST_CASE("empirical IDS is nondecreasing, deterministic and below the state density") {
  ModelParams p;
  p.seed = 11;
  PotentialSpec s;
  s.alpha = 4.0;
  s.r0 = 0.2;
  const GridSpec g = dirichlet_grid(30.0, 299);
  std::vector<double> lambdas;
  for (int i = 1; i <= 20; ++i) lambdas.push_back(0.25 * i);
  const IdsCurve a = empirical_ids(p, s, g, lambdas, 4);
  for (std::size_t i = 1; i < lambdas.size(); ++i) CHECK(a.n_hat[i] >= a.n_hat[i - 1]);
  CHECK(a.n_hat.back() <= a.states_per_volume);
  p.workers = 3;
  const IdsCurve b = empirical_ids(p, s, g, lambdas, 4);
  CHECK(a.n_hat == b.n_hat);
  CHECK(a.meta.contains("continuum_error_estimate"));
}

TEST_CASE("IDS estimators reject the wrong sign or boundary") {
  ModelParams p;
  PotentialSpec s;
  const std::vector<double> lambdas{1.0};
  const GridSpec g = dirichlet_grid(10.0, 50);
  CHECK_THROWS_AS(negative_ids(p, s, g, lambdas, 2), ConfigError);
  s.sign = -1;
  CHECK_THROWS_AS(empirical_ids(p, s, g, lambdas, 2), ConfigError);
  s.sign = 1;
  GridSpec neumann = g;
  neumann.bc = Boundary::neumann;
  CHECK_THROWS_AS(empirical_ids(p, s, neumann, lambdas, 2), ConfigError);
  CHECK_THROWS_AS(empirical_ids(p, s, g, std::vector<double>{2.0, 1.0}, 2), DomainError);
  CHECK_THROWS_AS(empirical_ids(p, s, g, lambdas, 1), ConfigError);
}

TEST_CASE("pool-adjacent-violators fit") {
  CHECK(isotonic_nondecreasing(std::vector<double>{1, 3, 2, 4}) == std::vector<double>{1, 2.5, 2.5, 4});
  CHECK(isotonic_nondecreasing(std::vector<double>{3, 2, 1}) == std::vector<double>{2, 2, 2});
  CHECK(isotonic_nondecreasing(std::vector<double>{0, 1, 1, 2}) == std::vector<double>{0, 1, 1, 2});
}

TEST_CASE("Laplace transform of a point mass") {
  IdsCurve c;
  c.lambda_grid = {0.5, 1.0, 1.5, 2.0};
  c.n_hat = {0.0, 0.0, 3.0, 3.0};
  c.std_err = {0.0, 0.0, 0.0, 0.0};
  c.states_per_volume = 3.0;
  c.replicates = 2;
  const std::vector<double> ts{0.5, 2.0, 10.0};
  const LaplaceCurve l = laplace_from_ids(c, ts);
  for (std::size_t i = 0; i < ts.size(); ++i) {
    CHECK(l.log_values[i] == doctest::Approx(std::log(3.0) - 1.5 * ts[i]));
    CHECK(l.log_upper[i] >= l.log_values[i]);
    CHECK(l.remainder[i] == doctest::Approx(3.0 * std::exp(-2.0 * ts[i])));
  }
  CHECK_THROWS_AS(laplace_from_ids(c, std::vector<double>{0.0}), DomainError);
}

TEST_CASE("IDS and Laplace CSV round trip") {
  IdsCurve c;
  c.lambda_grid = {0.1, 0.2};
  c.n_hat = {0.125, 1.0 / 3.0};
  c.std_err = {0.0, 1e-17};
  std::stringstream ss;
  write_csv(c, ss);
  const IdsCurve back = read_ids_csv(ss);
  CHECK(back.lambda_grid == c.lambda_grid);
  CHECK(back.n_hat == c.n_hat);
  CHECK(back.std_err == c.std_err);

  LaplaceCurve l;
  l.kind = LaplaceKind::n1_mc;
  l.t_grid = {1.0, 10.0};
  l.log_values = {-4.5, -20.25};
  std::stringstream ls;
  write_csv(l, ls);
  CHECK(ls.str().rfind("t,log_value,kind\n", 0) == 0);
  const LaplaceCurve lb = read_laplace_csv(ls);
  CHECK(lb.kind == LaplaceKind::n1_mc);
  CHECK(lb.log_values == l.log_values);

  std::stringstream bad("lambda,n_hat,stderr\n0.1,x,0\n");
  CHECK_THROWS_AS(read_ids_csv(bad), ConfigError);
  CHECK(laplace_kind_from_string("N1_quadrature") == LaplaceKind::n1_quadrature);
  CHECK_THROWS_AS(laplace_kind_from_string("n1"), ConfigError);
}

TEST_CASE("single-cell functional: quadrature and Monte Carlo agree") {
  ModelParams p;
  p.seed = 5;
  PotentialSpec s;  // c0 = 1, alpha = 2, u_cap = 1e6
  const double q1 = n1_quadrature(p, s, 1.0);
  const double q10 = n1_quadrature(p, s, 10.0);
  CHECK(q1 < 0.0);
  CHECK(q10 < q1);
  // independent nested adaptive quadrature (scipy) gives -4.784949
  CHECK(q1 == doctest::Approx(-4.784949).epsilon(1e-5));
  const std::vector<double> ts{1.0, 10.0};
  const LaplaceCurve mc = n1_mc(p, s, ts, 64);
  CHECK(std::abs(mc.log_values[0] - q1) < 4.0 * mc.std_err[0] + 1e-3);
  CHECK(std::abs(mc.log_values[1] - q10) < 4.0 * mc.std_err[1] + 1e-3);
}

TEST_CASE("single-cell functional at t = 0 is exactly zero") {
  ModelParams p;
  PotentialSpec s;
  s.sign = -1;
  s.compact_r = 0.5;
  s.u_cap = 1.0;
  const LaplaceCurve mc = n1_mc(p, s, std::vector<double>{0.0, 1.0}, 8);
  CHECK(mc.log_values[0] == 0.0);
  CHECK(mc.log_values[1] > 0.0);
}

#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>
#include <vector>

#include "../support/jacobi.hpp"
#include "rdl/error.hpp"
#include "rdl/operator.hpp"
#include "rdl/spectra.hpp"

using namespace rdl;

namespace {

PotentialSpec zero_potential() {
  PotentialSpec s;
  s.u_cap = 0.0;
  return s;
}

DiscreteOperator free_operator(int d, int n, double dx, Boundary bc, double h = 1.0) {
  GridSpec g;
  g.d = d;
  g.n_per_side = n;
  g.bc = bc;
  g.box_r = bc == Boundary::dirichlet ? dx * (n + 1) : dx * n;
  const Configuration c = frozen_configuration(d, g.box_r, 1);
  return assemble(g, c, zero_potential(), +1, h);
}

std::vector<double> dense_eigs(const DiscreteOperator& op) {
  const SymmetricMatrix a = to_dense(op);
  std::vector<double> flat(op.dim() * op.dim());
  for (std::size_t i = 0; i < op.dim(); ++i)
    for (std::size_t j = 0; j < op.dim(); ++j) flat[i * op.dim() + j] = a(i, j);
  return testing::jacobi_eigenvalues(flat, op.dim());
}

}  // namespace

TEST_CASE("jacobi oracle reproduces the 1-D Dirichlet spectrum") {
  const DiscreteOperator op = free_operator(1, 10, 1.0, Boundary::dirichlet);
  const auto ev = dense_eigs(op);
  for (int k = 1; k <= 10; ++k)
    CHECK(ev[k - 1] == doctest::Approx(2.0 - 2.0 * std::cos(k * std::numbers::pi / 11)).epsilon(1e-12));
}

TEST_CASE("free 1-D Dirichlet operator n=3") {
  const DiscreteOperator op = free_operator(1, 3, 1.0, Boundary::dirichlet);
  CHECK(op.dim() == 3);
  CHECK(op.is_tridiagonal());
  const auto ev = lowest_eigenvalues(op, 3);
  CHECK(ev[0] == doctest::Approx(2.0 - std::sqrt(2.0)).epsilon(1e-12));
  CHECK(ev[1] == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(ev[2] == doctest::Approx(2.0 + std::sqrt(2.0)).epsilon(1e-12));
  CHECK(count_leq(op, 2.5) == 2);
  CHECK(count_leq(op, op.gershgorin().first - 1e-9) == 0);
  // ties count as <=
  const Tridiagonal t = tridiagonal_form(op);
  CHECK(count_leq(t, 2.0) == 2);
}

TEST_CASE("free 1-D Neumann operator has a zero mode") {
  const DiscreteOperator op = free_operator(1, 3, 1.0, Boundary::neumann);
  const auto ev = lowest_eigenvalues(op, 3);
  CHECK(std::abs(ev[0]) < 1e-12);
  CHECK(ev[1] == doctest::Approx(1.0));
  CHECK(ev[2] == doctest::Approx(3.0));
}

TEST_CASE("2-D tensor structure") {
  const DiscreteOperator op = free_operator(2, 3, 1.0, Boundary::dirichlet);
  CHECK(op.dim() == 9);
  const double l[3] = {2.0 - std::sqrt(2.0), 2.0, 2.0 + std::sqrt(2.0)};
  std::vector<double> expect;
  for (double a : l)
    for (double b : l) expect.push_back(a + b);
  std::sort(expect.begin(), expect.end());
  const auto ev = lowest_eigenvalues(op, 9);
  for (std::size_t i = 0; i < 9; ++i) CHECK(ev[i] == doctest::Approx(expect[i]).epsilon(1e-12));
  CHECK(ev[0] == doctest::Approx(2.0 * (2.0 - std::sqrt(2.0))).epsilon(1e-12));
}

TEST_CASE("3-D operator agrees with dense oracle") {
  const DiscreteOperator op = free_operator(3, 4, 0.5, Boundary::neumann, 0.7);
  const auto oracle = dense_eigs(op);
  const auto ev = lowest_eigenvalues(op, op.dim());
  for (std::size_t i = 0; i < ev.size(); ++i)
    CHECK(ev[i] == doctest::Approx(oracle[i]).epsilon(1e-9).scale(1.0));
}

TEST_CASE("assembled matrix is symmetric with stencil Gershgorin bounds") {
  ModelParams p;
  p.d = 2;
  p.seed = 3;
  PotentialSpec s;
  s.alpha = 5.0;
  s.r0 = 0.2;
  GridSpec g;
  g.d = 2;
  g.box_r = 6.0;
  g.n_per_side = 12;
  const Configuration c = sample_configuration(p, s, 6.0, 0);
  const DiscreteOperator op = assemble(g, c, s, +1, 1.0);
  const SymmetricMatrix a = to_dense(op);
  for (std::size_t i = 0; i < op.dim(); ++i)
    for (std::size_t j = 0; j < op.dim(); ++j) CHECK(a(i, j) == a(j, i));
  const auto [lo, hi] = op.gershgorin();
  const auto ev = dense_eigs(op);
  CHECK(ev.front() >= lo - 1e-9);
  CHECK(ev.back() <= hi + 1e-9);
  CHECK(ev.front() >= 0.0);
}

TEST_CASE("obstacles and potential are monotone") {
  ModelParams p;
  p.d = 1;
  p.seed = 11;
  GridSpec g;
  g.d = 1;
  g.box_r = 20.0;
  g.n_per_side = 399;
  PotentialSpec s;
  s.alpha = 4.0;
  s.r0 = 0.1;
  double prev = 0.0;
  for (double rho : {0.0, 0.1, 0.2, 0.3}) {
    PotentialSpec o = s;
    o.obstacle_rho = rho;
    const Configuration c = sample_configuration(p, o, 20.0, 0);
    const double l1 = lowest_eigenvalues(assemble(g, c, o, +1, 1.0), 1)[0];
    CHECK(l1 >= prev - 1e-12);
    prev = l1;
  }
  const Configuration c = sample_configuration(p, s, 20.0, 0);
  PotentialSpec bigger = s;
  bigger.c0 = 3.0;
  CHECK(lowest_eigenvalues(assemble(g, c, bigger, +1, 1.0), 1)[0] >=
        lowest_eigenvalues(assemble(g, c, s, +1, 1.0), 1)[0]);

  PotentialSpec huge = s;
  huge.obstacle_rho = 50.0;
  CHECK_THROWS_AS(assemble(g, frozen_configuration(1, 20.0, 60), huge, +1, 1.0), ConfigError);
}

TEST_CASE("hard obstacle sub-interval ground state") {
  // obstacles at the frozen lattice sites cut [-R/2, R/2] into unit cells
  GridSpec g;
  g.d = 1;
  g.box_r = 4.0;
  g.n_per_side = 399;  // dx = 0.01
  PotentialSpec s;
  s.u_cap = 0.0;
  s.obstacle_rho = 0.2;
  const Configuration c = frozen_configuration(1, 4.0, 2);
  const DiscreteOperator op = assemble(g, c, s, +1, 1.0);
  // longest run of consecutive kept grid points
  int m = 0, run = 0;
  for (std::size_t i = 0; i < op.dim(); ++i) {
    run = (i > 0 && op.grid_index[i] == op.grid_index[i - 1] + 1) ? run + 1 : 1;
    m = std::max(m, run);
  }
  CHECK(m >= 59);
  const double dx = g.dx();
  const double closed = 2.0 / (dx * dx) * (1.0 - std::cos(std::numbers::pi / (m + 1)));
  CHECK(lowest_eigenvalues(op, 1)[0] == doctest::Approx(closed).epsilon(1e-10));
  CHECK(dense_eigs(op).front() == doctest::Approx(closed).epsilon(1e-9));
}

TEST_CASE("continuum error estimate") {
  GridSpec g;
  g.d = 1;
  g.box_r = 10.0;
  g.n_per_side = 127;
  PotentialSpec s;
  s.u_cap = 0.0;
  const double e1 = continuum_error_estimate(g, s, 1.0);
  GridSpec g2 = g;
  g2.n_per_side = 255;
  CHECK(continuum_error_estimate(g2, s, 1.0) == doctest::Approx(e1 / 4.0));
  for (int n : {64, 128, 256}) {
    GridSpec gn = g;
    gn.n_per_side = n;
    const DiscreteOperator op = free_operator(1, n, gn.dx(), Boundary::dirichlet);
    const double cont = std::numbers::pi * std::numbers::pi / 100.0;
    CHECK(std::abs(lowest_eigenvalues(op, 1)[0] - cont) <= continuum_error_estimate(gn, s, 1.0));
  }
}

TEST_CASE("random symmetric matrices against the Jacobi oracle") {
  std::mt19937_64 gen(2024);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 5 + static_cast<std::size_t>(gen() % 46);
    SymmetricMatrix a(n);
    std::vector<double> flat(n * n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j <= i; ++j) {
        const double v = u(gen);
        a.set(i, j, v);
        flat[i * n + j] = flat[j * n + i] = v;
      }
    const auto oracle = testing::jacobi_eigenvalues(flat, n);
    const Tridiagonal t = householder_tridiagonalize(a);
    for (int k = 0; k < 20; ++k) {
      const double lam = 3.0 * u(gen);
      const auto expect = static_cast<std::size_t>(
          std::upper_bound(oracle.begin(), oracle.end(), lam) - oracle.begin());
      CHECK(count_leq(t, lam) == expect);
    }
    const auto ev = lowest_eigenvalues(t, n);
    for (std::size_t i = 0; i < n; ++i)
      CHECK(std::abs(ev[i] - oracle[i]) <= 1e-8 * std::max(1.0, std::abs(oracle[i])));
  }
}

TEST_CASE("counting curve contract") {
  const DiscreteOperator op = free_operator(1, 50, 0.1, Boundary::dirichlet);
  std::vector<double> grid;
  for (int i = 0; i < 40; ++i) grid.push_back(-1.0 + 12.0 * i);
  const SpectralSummary s = counting_curve(op, grid);
  CHECK(s.dim == 50);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    CHECK(s.counts[i] == count_leq(op, grid[i]));
    if (i > 0) CHECK(s.counts[i] >= s.counts[i - 1]);
    if (grid[i] < s.lambda1) CHECK(s.counts[i] == 0);
  }
  const double top = op.gershgorin().second + 1.0;
  const std::vector<double> single{top};
  CHECK(counting_curve(op, single).counts[0] == 50);
  const std::vector<double> bad{1.0, 0.5};
  CHECK_THROWS_AS(counting_curve(op, bad), DomainError);
  CHECK_THROWS_AS(lowest_eigenvalues(op, 51), DomainError);
  CHECK_THROWS_AS(lowest_eigenvalues(op, 0), DomainError);
}

TEST_CASE("dense path refuses oversized problems") {
  GridSpec g;
  g.d = 2;
  g.box_r = 10.0;
  g.n_per_side = 70;
  const DiscreteOperator op = assemble(g, frozen_configuration(2, 10.0, 1), zero_potential(), +1, 1.0);
  CHECK_THROWS_AS(tridiagonal_form(op), ResourceError);
}

TEST_CASE("coordinate export") {
  const DiscreteOperator op = free_operator(1, 3, 1.0, Boundary::dirichlet);
  std::ostringstream os;
  op.write_coo(os);
  const std::string s = os.str();
  CHECK(std::count(s.begin(), s.end(), '\n') == 3 + 4);
}

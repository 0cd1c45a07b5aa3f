#include "doctest.h"

#include <cmath>
#include <numbers>
#include <vector>

#include "rdl/error.hpp"
#include "rdl/randfield.hpp"

using namespace rdl;

TEST_CASE("normalizer closed forms") {
  CHECK(normalizer(1, 2.0) == doctest::Approx(std::sqrt(std::numbers::pi)).epsilon(1e-14));
  CHECK(normalizer(1, 1.0) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(normalizer(3, 1.0) == doctest::Approx(8.0 * std::numbers::pi).epsilon(1e-14));
  CHECK_THROWS_AS(normalizer(1, 0.0), DomainError);
  CHECK_THROWS_AS(normalizer(1, -1.0), DomainError);
}

TEST_CASE("normalizer matches radial quadrature") {
  for (int d = 1; d <= 3; ++d)
    for (double theta : {0.5, 1.0, 2.0, 3.0}) {
      // composite Simpson on r in [0, 60] after substituting r = s^2 to tame r^(d-1)
      const int n = 200000;
      const double smax = std::sqrt(std::pow(50.0, 1.0 / theta) + 10.0);
      const double hs = smax / n;
      double acc = 0.0;
      for (int i = 0; i <= n; ++i) {
        const double s = i * hs;
        const double r = s * s;
        const double f = 2.0 * s * std::pow(r, d - 1) * std::exp(-std::pow(r, theta));
        acc += f * (i == 0 || i == n ? 1.0 : (i % 2 ? 4.0 : 2.0));
      }
      const double area = d == 1 ? 2.0 : d == 2 ? 2.0 * std::numbers::pi : 4.0 * std::numbers::pi;
      const double quad = area * acc * hs / 3.0;
      CHECK(normalizer(d, theta) == doctest::Approx(quad).epsilon(1e-8));
    }
}

TEST_CASE("displacement moments") {
  CHECK(displacement_moment(1, 1.0, 1.0) == doctest::Approx(1.0));
  CHECK(displacement_moment(2, 2.0, 2.0) == doctest::Approx(1.0));

  ModelParams p;
  p.d = 1;
  p.theta = 1.0;
  const int n = 100000;
  std::vector<double> r(n);
  for (int i = 0; i < n; ++i) {
    CounterRng rng(StreamTag::synthetic, {7, static_cast<std::uint64_t>(i)});
    r[i] = std::abs(sample_displacement(p, rng)[0]);
  }
  double m = 0, v = 0;
  for (double x : r) m += x;
  m /= n;
  for (double x : r) v += (x - m) * (x - m);
  const double se = std::sqrt(v / (n - 1) / n);
  CHECK(std::abs(m - 1.0) < 3.0 * se);

  p.d = 2;
  p.theta = 2.0;
  double m2 = 0;
  for (int i = 0; i < n; ++i) {
    CounterRng rng(StreamTag::synthetic, {8, static_cast<std::uint64_t>(i)});
    const Point x = sample_displacement(p, rng);
    m2 += x[0] * x[0] + x[1] * x[1];
  }
  CHECK(m2 / n == doctest::Approx(1.0).epsilon(0.02));

  p.d = 1;
  p.theta = 64.0;
  int beyond = 0;
  for (int i = 0; i < n; ++i) {
    CounterRng rng(StreamTag::synthetic, {9, static_cast<std::uint64_t>(i)});
    if (std::abs(sample_displacement(p, rng)[0]) > 1.5) ++beyond;
  }
  CHECK(beyond <= n / 1000);
}

TEST_CASE("potential_u variants") {
  PotentialSpec s;
  s.c0 = 1.0;
  s.alpha = 2.0;
  s.r0 = 0.1;
  s.u_cap = 1e6;
  CHECK(potential_u(s, {2.0, 0.0, 0.0}, 2) == doctest::Approx(0.25));
  CHECK(potential_u(s, {0.0, 0.0, 0.0}, 2) == doctest::Approx(100.0));

  PotentialSpec c;
  c.compact_r = 1.0;
  c.u_cap = 5.0;
  CHECK(potential_u(c, {0.9, 0.0, 0.0}, 2) == 5.0);
  CHECK(potential_u(c, {1.1, 0.0, 0.0}, 2) == 0.0);
}

TEST_CASE("field_v examples") {
  PotentialSpec zero;
  zero.u_cap = 0.0;
  Configuration frozen = frozen_configuration(2, 4.0, 3);
  CHECK(field_v(frozen, zero, {0.3, -1.2, 0.0}) == 0.0);

  PotentialSpec c;
  c.compact_r = 0.25;
  c.u_cap = 1.0;
  CHECK(field_v(frozen, c, {0.0, 0.0, 0.0}) == 1.0);

  PotentialSpec s;
  s.c0 = 1.0;
  s.alpha = 2.0;
  s.r0 = 0.1;
  ModelParams p;
  p.d = 1;
  for (int margin : {100, 1000, 10000}) {
    Configuration line = frozen_configuration(1, 1.0, margin);
    const double tail = tail_bound(p, s, margin);
    const double v = field_v(line, s, {0.5, 0.0, 0.0});
    CHECK(v <= std::numbers::pi * std::numbers::pi);
    CHECK(std::numbers::pi * std::numbers::pi - v <= tail);
  }
  CHECK_THROWS_AS(field_v(frozen, s, {2.5, 0.0, 0.0}), DomainError);
}

TEST_CASE("tail bound decays as margin^(d - alpha)") {
  ModelParams p;
  p.d = 2;
  PotentialSpec s;
  s.alpha = 5.0;
  const double t1 = tail_bound(p, s, 10), t2 = tail_bound(p, s, 20);
  CHECK(t1 / t2 == doctest::Approx(8.0));
}

TEST_CASE("configuration determinism and layout") {
  ModelParams p;
  p.d = 1;
  p.seed = 42;
  PotentialSpec s;
  s.alpha = 4.0;
  const Configuration a = sample_configuration(p, s, 8.0, 0);
  const Configuration b = sample_configuration(p, s, 8.0, 0);
  const Configuration c = sample_configuration(p, s, 8.0, 1);
  CHECK(a == b);
  CHECK_FALSE(a == c);

  Configuration sq = frozen_configuration(2, 10.0, 5);
  CHECK(sq.site_count() == 441);

  const Configuration round = configuration_from_json(to_json(a));
  CHECK(round == a);
}

TEST_CASE("truncation margin meets the tolerance") {
  ModelParams p;
  p.d = 1;
  PotentialSpec s;
  s.alpha = 4.0;
  const int m = truncation_margin(p, s);
  CHECK(tail_bound(p, s, m) <= 1e-6 * s.c0);
  CHECK(tail_bound(p, s, m - 1) > 1e-6 * s.c0);
  TruncationPolicy tight;
  tight.max_margin = 10;
  CHECK_THROWS_AS(truncation_margin(p, s, tight), ResourceError);
}

TEST_CASE("max_gap") {
  Configuration lattice = frozen_configuration(1, 10.0, 2);
  CHECK(max_gap(lattice) == doctest::Approx(1.0));
  const std::vector<double> pts{-1.0, 0.0, 3.0};
  CHECK(max_gap(pts, 8.0) == doctest::Approx(3.0));
  const std::vector<double> one{0.0};
  CHECK(max_gap(one, 10.0) == doctest::Approx(5.0));
  CHECK_THROWS_AS(max_gap(frozen_configuration(2, 4.0, 1)), ConfigError);
}

TEST_CASE("spec validation") {
  PotentialSpec s;
  s.alpha = 1.0;
  CHECK_THROWS_AS(s.validate(1), ConfigError);
  PotentialSpec neg;
  neg.sign = -1;
  neg.alpha = 3.0;
  neg.obstacle_rho = 0.1;
  CHECK_THROWS_AS(neg.validate(1), ConfigError);
  ModelParams p;
  p.theta = 0.0;
  CHECK_THROWS_AS(p.validate(), ConfigError);
}

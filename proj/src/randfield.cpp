#include "rdl/randfield.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <string>

#include <boost/math/special_functions/gamma.hpp>

#include "rdl/error.hpp"
#include "rdl/math.hpp"

namespace rdl {

void ModelParams::validate() const {
  if (d < 1 || d > 3) throw ConfigError("d must be 1, 2 or 3", "params.d");
  if (!(theta > 0.0) || !std::isfinite(theta)) throw ConfigError("theta must be > 0", "params.theta");
  if (!(h > 0.0) || !std::isfinite(h)) throw ConfigError("h must be > 0", "params.h");
  if (workers < 1) throw ConfigError("workers must be >= 1", "params.workers");
}

double PotentialSpec::sup() const noexcept {
  if (is_compact()) return u_cap;
  if (r0 > 0.0) return std::min(u_cap, c0 / std::pow(r0, alpha));
  return u_cap;
}

double PotentialSpec::core_radius() const noexcept {
  if (is_compact()) return *compact_r;
  double r_cap = u_cap > 0.0 ? std::pow(c0 / u_cap, 1.0 / alpha) : std::numeric_limits<double>::infinity();
  return std::max(r0, r_cap);
}

void PotentialSpec::validate(int d) const {
  if (sign != 1 && sign != -1) throw ConfigError("sign must be +1 or -1", "spec.sign");
  if (!(u_cap >= 0.0) || !std::isfinite(u_cap))
    throw ConfigError("u_cap must be finite and >= 0", "spec.u_cap");
  if (!(obstacle_rho >= 0.0)) throw ConfigError("obstacle_rho must be >= 0", "spec.obstacle_rho");
  if (is_compact()) {
    if (!(*compact_r > 0.0)) throw ConfigError("compact_r must be > 0", "spec.compact_r");
  } else {
    if (!(c0 > 0.0)) throw ConfigError("c0 must be > 0", "spec.c0");
    if (!(alpha > d)) throw ConfigError("alpha must exceed d", "spec.alpha");
    if (!(r0 >= 0.0)) throw ConfigError("r0 must be >= 0", "spec.r0");
  }
  if (sign == -1 && obstacle_rho != 0.0)
    throw ConfigError("attractive potential requires obstacle_rho = 0", "spec.obstacle_rho");
}

double normalizer(int d, double theta) {
  if (!(theta > 0.0)) throw DomainError("theta must be > 0", "theta");
  return sphere_area(d) * std::tgamma(d / theta) / theta;
}

double displacement_moment(int d, double theta, double k) {
  if (!(theta > 0.0)) throw DomainError("theta must be > 0", "theta");
  return std::exp(std::lgamma((d + k) / theta) - std::lgamma(d / theta));
}

Point sample_displacement(const ModelParams& params, CounterRng& rng) {
  const int d = params.d;
  std::gamma_distribution<double> gamma(d / params.theta, 1.0);
  const double s = gamma(rng);
  const double r = std::pow(s, 1.0 / params.theta);
  Point out{0.0, 0.0, 0.0};
  switch (d) {
    case 1:
      out[0] = (rng() >> 63) ? r : -r;
      break;
    case 2: {
      const double phi = 2.0 * std::numbers::pi * rng.uniform();
      out[0] = r * std::cos(phi);
      out[1] = r * std::sin(phi);
      break;
    }
    default: {
      const double z = 2.0 * rng.uniform() - 1.0;
      const double phi = 2.0 * std::numbers::pi * rng.uniform();
      const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
      out[0] = r * rho * std::cos(phi);
      out[1] = r * rho * std::sin(phi);
      out[2] = r * z;
      break;
    }
  }
  return out;
}

namespace {

// Number of sites of Z^d with |q|_inf == k.
double shell_count(int d, int k) {
  if (k == 0) return 1.0;
  return std::pow(2.0 * k + 1.0, d) - std::pow(2.0 * k - 1.0, d);
}

// P(|xi| >= s).
double displacement_tail(int d, double theta, double s) {
  if (s <= 0.0) return 1.0;
  return boost::math::gamma_q(d / theta, std::pow(s, theta));
}

double compact_tail(const ModelParams& p, const PotentialSpec& spec, int margin) {
  const double reach = *spec.compact_r * std::sqrt(static_cast<double>(p.d));
  double total = 0.0;
  for (int k = margin + 1;; ++k) {
    const double term = shell_count(p.d, k) * displacement_tail(p.d, p.theta, k - reach);
    total += term;
    if (term < 1e-18 * std::max(total, 1e-300) || k > margin + 100000) break;
  }
  return spec.u_cap * total;
}

// Window needed so that an obstacle centre outside it lies within rho of x
// with probability below 1e-12 per site.
int obstacle_margin(const ModelParams& p, const PotentialSpec& spec) {
  if (spec.obstacle_rho <= 0.0) return 0;
  const double reach = std::pow(boost::math::gamma_q_inv(p.d / p.theta, 1e-12), 1.0 / p.theta);
  return static_cast<int>(std::ceil(spec.obstacle_rho + reach));
}

}  // namespace

double tail_bound(const ModelParams& params, const PotentialSpec& spec, int margin) {
  if (spec.u_cap == 0.0) return 0.0;
  if (spec.is_compact()) return compact_tail(params, spec, margin);
  const double m = std::max(margin, 1);
  return spec.c0 * sphere_area(params.d) * std::pow(m, params.d - spec.alpha) /
         (spec.alpha - params.d);
}

int truncation_margin(const ModelParams& params, const PotentialSpec& spec,
                      const TruncationPolicy& policy) {
  params.validate();
  spec.validate(params.d);
  if (!(policy.tail_tol > 0.0)) throw ConfigError("tail_tol must be > 0", "truncation.tail_tol");
  long long m = 1;
  if (spec.u_cap > 0.0) {
    if (spec.is_compact()) {
      const double target = policy.tail_tol * spec.u_cap;
      m = static_cast<long long>(std::ceil(*spec.compact_r * std::sqrt(double(params.d))));
      m = std::max(m, 1LL);
      while (compact_tail(params, spec, static_cast<int>(m)) > target) {
        ++m;
        if (m > policy.max_margin) break;
      }
    } else {
      const double k = spec.alpha - params.d;
      const double mm =
          std::pow(sphere_area(params.d) / (k * policy.tail_tol), 1.0 / k);
      if (!(mm < static_cast<double>(policy.max_margin) + 1.0))
        m = static_cast<long long>(policy.max_margin) + 1;
      else
        m = std::max(1LL, static_cast<long long>(std::ceil(mm - 1e-9)));
    }
  }
  m = std::max<long long>(m, obstacle_margin(params, spec));
  if (m > policy.max_margin)
    throw ResourceError("truncation margin " + std::to_string(m) + " exceeds max_margin " +
                        std::to_string(policy.max_margin) +
                        "; raise truncation.tail_tol or use a faster-decaying potential");
  return static_cast<int>(m);
}

Configuration::Configuration(int d, double theta, double box_r, int margin,
                             std::uint64_t seed, std::uint64_t replicate)
    : d_(d), theta_(theta), box_r_(box_r), margin_(margin), seed_(seed), replicate_(replicate) {
  half_extent_ = static_cast<int>(std::floor(box_r / 2.0 + margin + 1e-12));
  side_ = static_cast<std::size_t>(2 * half_extent_ + 1);
  site_count_ = 1;
  for (int i = 0; i < d; ++i) site_count_ *= side_;
  xi_.assign(site_count_, Point{0.0, 0.0, 0.0});
}

std::size_t Configuration::site_index(const Site& q) const noexcept {
  std::size_t idx = 0;
  for (int i = 0; i < d_; ++i) idx = idx * side_ + static_cast<std::size_t>(q[i] + half_extent_);
  return idx;
}

Site Configuration::site(std::size_t index) const noexcept {
  Site q{0, 0, 0};
  for (int i = d_ - 1; i >= 0; --i) {
    q[i] = static_cast<int>(index % side_) - half_extent_;
    index /= side_;
  }
  return q;
}

bool Configuration::contains(const Site& q) const noexcept {
  for (int i = 0; i < d_; ++i)
    if (q[i] < -half_extent_ || q[i] > half_extent_) return false;
  return true;
}

Point Configuration::position(std::size_t index) const noexcept {
  const Site q = site(index);
  const Point& x = xi_[index];
  Point p{0.0, 0.0, 0.0};
  for (int i = 0; i < d_; ++i) p[i] = q[i] + x[i];
  return p;
}

Configuration sample_configuration(const ModelParams& params, const PotentialSpec& spec,
                                   double box_r, std::uint64_t replicate,
                                   const TruncationPolicy& policy) {
  params.validate();
  if (!(box_r >= 1.0)) throw ConfigError("box_r must be >= 1", "grid.box_r");
  const int margin = truncation_margin(params, spec, policy);
  const double side = 2.0 * std::floor(box_r / 2.0 + margin) + 1.0;
  const double bytes = std::pow(side, params.d) * sizeof(Point);
  if (bytes > static_cast<double>(policy.memory_budget_bytes))
    throw ResourceError("configuration needs " + std::to_string(bytes / 1048576.0) +
                        " MiB, budget is " +
                        std::to_string(policy.memory_budget_bytes / 1048576.0) +
                        " MiB; reduce box_r or raise truncation.tail_tol");
  Configuration config(params.d, params.theta, box_r, margin, params.seed, replicate);
  for (std::size_t i = 0; i < config.site_count(); ++i) {
    const Site q = config.site(i);
    CounterRng rng(StreamTag::site, {params.seed, replicate, coord_word(q[0]),
                                     coord_word(q[1]), coord_word(q[2])});
    config.set_xi(i, sample_displacement(params, rng));
  }
  config.set_tail_bound(tail_bound(params, spec, margin));
  return config;
}

Configuration frozen_configuration(int d, double box_r, int margin) {
  if (d < 1 || d > 3) throw ConfigError("d must be 1, 2 or 3", "params.d");
  return Configuration(d, 1.0, box_r, margin, 0, 0);
}

double potential_u(const PotentialSpec& spec, const Point& x, int d) noexcept {
  if (spec.is_compact()) {
    for (int i = 0; i < d; ++i)
      if (std::abs(x[i]) > *spec.compact_r) return 0.0;
    return spec.u_cap;
  }
  double r2 = 0.0;
  for (int i = 0; i < d; ++i) r2 += x[i] * x[i];
  const double r = std::max(std::sqrt(r2), spec.r0);
  if (r == 0.0) return spec.u_cap;
  const double a = spec.alpha;
  if (a == std::floor(a) && a <= 8.0) {
    double rp = r;
    for (int k = 1; k < static_cast<int>(a); ++k) rp *= r;
    return std::min(spec.u_cap, spec.c0 / rp);
  }
  return std::min(spec.u_cap, spec.c0 * std::pow(r, -a));
}

double field_v_unchecked(const Configuration& config, const PotentialSpec& spec,
                         const Point& x) noexcept {
  if (spec.u_cap == 0.0) return 0.0;
  const int d = config.d();
  const int m = config.margin();
  const int ext = config.half_extent();
  std::array<int, 3> lo{0, 0, 0}, hi{0, 0, 0};
  for (int i = 0; i < d; ++i) {
    lo[i] = std::max(-ext, static_cast<int>(std::ceil(x[i] - m)));
    hi[i] = std::min(ext, static_cast<int>(std::floor(x[i] + m)));
    if (lo[i] > hi[i]) return 0.0;
  }
  CompensatedSum sum;
  Site q{0, 0, 0};
  Point y{0.0, 0.0, 0.0};
  auto visit = [&] {
    const Point& xi = config.xi(q);
    for (int i = 0; i < d; ++i) y[i] = x[i] - q[i] - xi[i];
    sum.add(potential_u(spec, y, d));
  };
  if (d == 1) {
    for (q[0] = lo[0]; q[0] <= hi[0]; ++q[0]) visit();
  } else if (d == 2) {
    for (q[0] = lo[0]; q[0] <= hi[0]; ++q[0])
      for (q[1] = lo[1]; q[1] <= hi[1]; ++q[1]) visit();
  } else {
    for (q[0] = lo[0]; q[0] <= hi[0]; ++q[0])
      for (q[1] = lo[1]; q[1] <= hi[1]; ++q[1])
        for (q[2] = lo[2]; q[2] <= hi[2]; ++q[2]) visit();
  }
  return sum.value();
}

double field_v(const Configuration& config, const PotentialSpec& spec, const Point& x) {
  const double half = config.box_r() / 2.0;
  for (int i = 0; i < config.d(); ++i)
    if (!(std::abs(x[i]) <= half * (1.0 + 1e-12)))
      throw DomainError("field_v: point outside the box", "x");
  return field_v_unchecked(config, spec, x);
}

double nearest_site_distance(const Configuration& config, const Point& x, int window) noexcept {
  const int d = config.d();
  const int ext = config.half_extent();
  std::array<int, 3> lo{0, 0, 0}, hi{0, 0, 0};
  for (int i = 0; i < d; ++i) {
    lo[i] = std::max(-ext, static_cast<int>(std::floor(x[i])) - window);
    hi[i] = std::min(ext, static_cast<int>(std::ceil(x[i])) + window);
  }
  double best = std::numeric_limits<double>::infinity();
  Site q{0, 0, 0};
  auto visit = [&] {
    const Point& xi = config.xi(q);
    double r2 = 0.0;
    for (int i = 0; i < d; ++i) {
      const double c = x[i] - q[i] - xi[i];
      r2 += c * c;
    }
    best = std::min(best, r2);
  };
  if (d == 1) {
    for (q[0] = lo[0]; q[0] <= hi[0]; ++q[0]) visit();
  } else if (d == 2) {
    for (q[0] = lo[0]; q[0] <= hi[0]; ++q[0])
      for (q[1] = lo[1]; q[1] <= hi[1]; ++q[1]) visit();
  } else {
    for (q[0] = lo[0]; q[0] <= hi[0]; ++q[0])
      for (q[1] = lo[1]; q[1] <= hi[1]; ++q[1])
        for (q[2] = lo[2]; q[2] <= hi[2]; ++q[2]) visit();
  }
  return std::sqrt(best);
}

double max_gap(std::span<const double> points, double box_r) {
  const double half = box_r / 2.0;
  std::vector<double> inside;
  inside.reserve(points.size() + 2);
  inside.push_back(-half);
  for (double p : points)
    if (p > -half && p < half) inside.push_back(p);
  inside.push_back(half);
  std::sort(inside.begin(), inside.end());
  double gap = 0.0;
  for (std::size_t i = 1; i < inside.size(); ++i) gap = std::max(gap, inside[i] - inside[i - 1]);
  return gap;
}

double max_gap(const Configuration& config) {
  if (config.d() != 1) throw ConfigError("max_gap is defined for d = 1 only", "params.d");
  std::vector<double> pts(config.site_count());
  for (std::size_t i = 0; i < pts.size(); ++i) pts[i] = config.position(i)[0];
  return max_gap(pts, config.box_r());
}

nlohmann::json to_json(const Configuration& config) {
  nlohmann::json disp = nlohmann::json::array();
  for (std::size_t i = 0; i < config.site_count(); ++i) {
    const Site q = config.site(i);
    const Point& xi = config.xi_at(i);
    nlohmann::json qs = nlohmann::json::array(), xs = nlohmann::json::array();
    for (int k = 0; k < config.d(); ++k) {
      qs.push_back(q[k]);
      xs.push_back(xi[k]);
    }
    disp.push_back(nlohmann::json::array({qs, xs}));
  }
  return {{"d", config.d()},           {"theta", config.theta()},
          {"box_r", config.box_r()},   {"margin", config.margin()},
          {"seed", config.seed()},     {"replicate", config.replicate()},
          {"tail_bound", config.tail_bound()}, {"displacements", disp}};
}

Configuration configuration_from_json(const nlohmann::json& j) {
  Configuration config(j.at("d").get<int>(), j.at("theta").get<double>(),
                       j.at("box_r").get<double>(), j.at("margin").get<int>(),
                       j.at("seed").get<std::uint64_t>(), j.at("replicate").get<std::uint64_t>());
  if (j.contains("tail_bound")) config.set_tail_bound(j.at("tail_bound").get<double>());
  const auto& disp = j.at("displacements");
  if (disp.size() != config.site_count())
    throw ConfigError("displacement table does not cover the enlarged box", "displacements");
  std::vector<bool> seen(config.site_count(), false);
  for (const auto& entry : disp) {
    Site q{0, 0, 0};
    Point xi{0.0, 0.0, 0.0};
    for (int k = 0; k < config.d(); ++k) {
      q[k] = entry.at(0).at(k).get<int>();
      xi[k] = entry.at(1).at(k).get<double>();
    }
    if (!config.contains(q)) throw ConfigError("site outside the enlarged box", "displacements");
    const std::size_t idx = config.site_index(q);
    if (seen[idx]) throw ConfigError("duplicate site in displacement table", "displacements");
    seen[idx] = true;
    config.set_xi(idx, xi);
  }
  return config;
}

}  // namespace rdl

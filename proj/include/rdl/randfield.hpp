#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "json.hpp"

#include "rdl/rng.hpp"

namespace rdl {

/// Point of R^d; components past d are ignored and kept at zero.
using Point = std::array<double, 3>;
/// Lattice site of Z^d; components past d are zero.
using Site = std::array<int, 3>;

struct ModelParams {
  int d = 1;
  double theta = 1.0;  ///< tail exponent of the displacement law
  double h = 1.0;      ///< diffusion coefficient in -h Laplacian
  std::uint64_t seed = 0;
  int workers = 1;

  void validate() const;
};

/// Single-site potential. Decay variant: u(x) = min(u_cap, c0 / max(|x|, r0)^alpha).
/// Compact variant (compact_r set): u(x) = u_cap * 1{|x|_inf <= compact_r}.
struct PotentialSpec {
  double c0 = 1.0;
  double alpha = 2.0;
  double r0 = 0.0;
  int sign = +1;  ///< +1 repulsive, -1 attractive
  std::optional<double> compact_r;
  double u_cap = 1e6;
  double obstacle_rho = 0.0;  ///< hard-obstacle radius; 0 means no obstacle

  bool is_compact() const noexcept { return compact_r.has_value(); }
  /// sup u = u(0).
  double sup() const noexcept;
  /// Radius below which the decay variant is flat (equal to u(0)).
  double core_radius() const noexcept;
  void validate(int d) const;
};

/// Controls the finite window of sites summed in V and the memory guard.
struct TruncationPolicy {
  double tail_tol = 1e-6;  ///< tail bound relative to c0 (or u_cap when compact)
  int max_margin = 1 << 20;
  std::size_t memory_budget_bytes = std::size_t{1} << 30;
};

/// Z(d, theta) = |S^{d-1}| Gamma(d/theta) / theta.
double normalizer(int d, double theta);

/// E|xi|^k = Gamma((d+k)/theta) / Gamma(d/theta).
double displacement_moment(int d, double theta, double k);

/// Draws xi with density exp(-|x|^theta) / Z(d, theta).
Point sample_displacement(const ModelParams& params, CounterRng& rng);

/// Smallest margin whose tail bound meets policy.tail_tol; also wide enough
/// that hard obstacles outside the window are negligible.
int truncation_margin(const ModelParams& params, const PotentialSpec& spec,
                      const TruncationPolicy& policy = {});

/// Bound on the part of V excluded by summing only |q - x|_inf <= margin.
double tail_bound(const ModelParams& params, const PotentialSpec& spec, int margin);

/// One sampled displacement field on the closed box [-R/2 - margin, R/2 + margin]^d.
class Configuration {
 public:
  Configuration() = default;
  Configuration(int d, double theta, double box_r, int margin, std::uint64_t seed,
                std::uint64_t replicate);

  int d() const noexcept { return d_; }
  double theta() const noexcept { return theta_; }
  double box_r() const noexcept { return box_r_; }
  int margin() const noexcept { return margin_; }
  /// Sites satisfy |q_i| <= half_extent().
  int half_extent() const noexcept { return half_extent_; }
  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t replicate() const noexcept { return replicate_; }
  double tail_bound() const noexcept { return tail_bound_; }
  void set_tail_bound(double t) noexcept { tail_bound_ = t; }

  std::size_t site_count() const noexcept { return site_count_; }
  std::size_t site_index(const Site& q) const noexcept;
  Site site(std::size_t index) const noexcept;
  bool contains(const Site& q) const noexcept;

  const Point& xi(const Site& q) const noexcept { return xi_[site_index(q)]; }
  const Point& xi_at(std::size_t index) const noexcept { return xi_[index]; }
  void set_xi(std::size_t index, const Point& value) noexcept { xi_[index] = value; }
  /// Displaced position q + xi_q.
  Point position(std::size_t index) const noexcept;

  bool operator==(const Configuration&) const = default;

 private:
  int d_ = 1;
  double theta_ = 1.0;
  double box_r_ = 0.0;
  int margin_ = 0;
  int half_extent_ = 0;
  std::uint64_t seed_ = 0;
  std::uint64_t replicate_ = 0;
  double tail_bound_ = 0.0;
  std::size_t side_ = 1;
  std::size_t site_count_ = 0;
  std::vector<Point> xi_;
};

/// Independent per-site draws; site q uses the stream keyed by (seed, replicate, q).
Configuration sample_configuration(const ModelParams& params, const PotentialSpec& spec,
                                   double box_r, std::uint64_t replicate,
                                   const TruncationPolicy& policy = {});

/// Same layout with every displacement set to zero (the unperturbed lattice).
Configuration frozen_configuration(int d, double box_r, int margin);

double potential_u(const PotentialSpec& spec, const Point& x, int d) noexcept;

/// V(x) = sum over |q - x|_inf <= margin of u(x - q - xi_q); the tail beyond
/// the window is not included (see Configuration::tail_bound).
double field_v(const Configuration& config, const PotentialSpec& spec, const Point& x);

/// field_v without the box check; callers guarantee x stays where the window is populated.
double field_v_unchecked(const Configuration& config, const PotentialSpec& spec,
                         const Point& x) noexcept;

/// Distance from x to the nearest displaced site among the window around x.
double nearest_site_distance(const Configuration& config, const Point& x, int window) noexcept;

/// Largest spacing between consecutive points of {q + xi_q} inside (-R/2, R/2),
/// counting the two boundary gaps. d = 1 only.
double max_gap(const Configuration& config);
double max_gap(std::span<const double> points, double box_r);

nlohmann::json to_json(const Configuration& config);
Configuration configuration_from_json(const nlohmann::json& j);

}  // namespace rdl

#include "rdl/operator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <ostream>
#include <string>

#include "rdl/error.hpp"

namespace rdl {

double GridSpec::dx() const noexcept {
  return bc == Boundary::dirichlet ? box_r / (n_per_side + 1) : box_r / n_per_side;
}

double GridSpec::coord(int i) const noexcept {
  const double step = dx();
  return bc == Boundary::dirichlet ? -box_r / 2.0 + (i + 1) * step
                                   : -box_r / 2.0 + (i + 0.5) * step;
}

std::size_t GridSpec::total_points() const noexcept {
  std::size_t n = 1;
  for (int i = 0; i < d; ++i) n *= static_cast<std::size_t>(n_per_side);
  return n;
}

void GridSpec::validate() const {
  if (d < 1 || d > 3) throw ConfigError("grid dimension must be 1, 2 or 3", "grid.d");
  if (!(box_r > 0.0)) throw ConfigError("box_r must be > 0", "grid.box_r");
  if (n_per_side < 2) throw ConfigError("n_per_side must be >= 2", "grid.n_per_side");
  if (std::pow(static_cast<double>(n_per_side), d) > static_cast<double>(max_points))
    throw ResourceError("grid has " + std::to_string(std::pow(double(n_per_side), d)) +
                        " points, above the budget of " + std::to_string(max_points));
}

std::pair<double, double> DiscreteOperator::gershgorin() const noexcept {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  const double off = std::abs(coupling);
  for (std::size_t i = 0; i < diagonal.size(); ++i) {
    const double r = neighbour_count[i] * off;
    lo = std::min(lo, diagonal[i] - r);
    hi = std::max(hi, diagonal[i] + r);
  }
  return {lo, hi};
}

void DiscreteOperator::write_coo(std::ostream& os) const {
  char buf[96];
  for (std::size_t i = 0; i < diagonal.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%zu %zu %.17g\n", i, i, diagonal[i]);
    os << buf;
  }
  for (const auto& [i, j] : edges) {
    std::snprintf(buf, sizeof buf, "%u %u %.17g\n%u %u %.17g\n", i, j, coupling, j, i, coupling);
    os << buf;
  }
}

DiscreteOperator assemble(const GridSpec& grid, const Configuration& config,
                          const PotentialSpec& spec, int sign, double h) {
  grid.validate();
  if (config.d() != grid.d) throw ConfigError("configuration and grid dimensions differ", "grid.d");
  if (config.box_r() + 1e-9 < grid.box_r)
    throw ConfigError("configuration box does not cover the grid box", "grid.box_r");
  if (sign != 1 && sign != -1) throw ConfigError("sign must be +1 or -1", "spec.sign");
  if (!(h > 0.0)) throw ConfigError("h must be > 0", "params.h");

  const int d = grid.d;
  const int n = grid.n_per_side;
  const double dx = grid.dx();
  const double k = h / (dx * dx);
  const std::size_t total = grid.total_points();

  std::vector<double> coords(n);
  for (int i = 0; i < n; ++i) coords[i] = grid.coord(i);

  auto point_of = [&](std::size_t idx) {
    Point x{0.0, 0.0, 0.0};
    for (int a = d - 1; a >= 0; --a) {
      x[a] = coords[idx % n];
      idx /= n;
    }
    return x;
  };

  DiscreteOperator op;
  op.d = d;
  op.n_per_side = n;
  op.dx = dx;
  op.h = h;
  op.coupling = -k;

  constexpr std::int64_t removed = -1;
  std::vector<std::int64_t> kept(total, removed);
  const double rho = spec.obstacle_rho;
  for (std::size_t idx = 0; idx < total; ++idx) {
    const Point x = point_of(idx);
    if (rho > 0.0 && nearest_site_distance(config, x, config.margin()) <= rho) continue;
    kept[idx] = static_cast<std::int64_t>(op.grid_index.size());
    op.grid_index.push_back(idx);
    const double v = field_v_unchecked(config, spec, x);
    double lap = 2.0 * d * k;
    if (grid.bc == Boundary::neumann) {
      lap = 0.0;
      std::size_t rest = idx;
      for (int a = d - 1; a >= 0; --a) {
        const int c = static_cast<int>(rest % n);
        rest /= n;
        lap += k * ((c > 0) + (c < n - 1));
      }
    }
    op.diagonal.push_back(lap + sign * v);
  }
  if (op.diagonal.empty())
    throw ConfigError("every grid point lies inside an obstacle (degenerate domain)",
                      "spec.obstacle_rho");

  op.neighbour_count.assign(op.dim(), 0);
  std::vector<std::size_t> stride(d);
  stride[d - 1] = 1;
  for (int a = d - 2; a >= 0; --a) stride[a] = stride[a + 1] * n;
  for (std::size_t i = 0; i < op.dim(); ++i) {
    const std::size_t idx = op.grid_index[i];
    for (int a = 0; a < d; ++a) {
      const int c = static_cast<int>((idx / stride[a]) % n);
      if (c + 1 >= n) continue;
      const std::int64_t j = kept[idx + stride[a]];
      if (j == removed) continue;
      op.edges.emplace_back(static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j));
      ++op.neighbour_count[i];
      ++op.neighbour_count[j];
    }
  }
  return op;
}

double continuum_error_estimate(const GridSpec& grid, const PotentialSpec& spec, double h) {
  const double dx = grid.dx();
  const double box_term = 1.0 + std::pow(std::numbers::pi / grid.box_r, 4);
  double curvature = 0.0;
  if (spec.u_cap > 0.0) {
    const double ell = std::max(spec.core_radius(), 1e-3 * grid.box_r);
    curvature = spec.sup() / (ell * ell);
  }
  return dx * dx / 12.0 * (h * box_term + curvature);
}

}  // namespace rdl

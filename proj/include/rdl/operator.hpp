#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <utility>
#include <vector>

#include "rdl/randfield.hpp"

namespace rdl {

enum class Boundary { dirichlet, neumann };

/// Uniform grid on the cube (-R/2, R/2)^d. Dirichlet points sit at
/// -R/2 + (i+1) dx with dx = R/(n+1); Neumann points at cell centres
/// -R/2 + (i+1/2) dx with dx = R/n.
struct GridSpec {
  int d = 1;
  double box_r = 10.0;
  int n_per_side = 100;
  Boundary bc = Boundary::dirichlet;
  std::size_t max_points = std::size_t{1} << 24;

  double dx() const noexcept;
  double coord(int i) const noexcept;
  std::size_t total_points() const noexcept;
  void validate() const;
};

/// -h Laplacian + sign * V on the grid points that survive obstacle removal.
/// Symmetric (2d+1)-point stencil; every off-diagonal entry equals `coupling`.
struct DiscreteOperator {
  int d = 1;
  int n_per_side = 0;
  double dx = 0.0;
  double h = 1.0;
  double coupling = 0.0;                 ///< -h / dx^2
  std::vector<std::size_t> grid_index;   ///< kept point -> full-grid index
  std::vector<double> diagonal;          ///< per kept point
  std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;  ///< i < j, neighbouring kept points
  std::vector<std::uint8_t> neighbour_count;  ///< kept neighbours per point

  std::size_t dim() const noexcept { return diagonal.size(); }
  /// d = 1 operators are stored in native tridiagonal order.
  bool is_tridiagonal() const noexcept { return d == 1; }

  /// Union of Gershgorin discs.
  std::pair<double, double> gershgorin() const noexcept;

  /// Writes "row col value" lines (0-based, both triangles).
  void write_coo(std::ostream& os) const;
};

/// Assembles the operator. sign is +1 (H) or -1 (H^-); obstacles of radius
/// spec.obstacle_rho remove every grid point within that distance of a site.
DiscreteOperator assemble(const GridSpec& grid, const Configuration& config,
                          const PotentialSpec& spec, int sign, double h);

/// Heuristic O(dx^2) budget for the gap between grid and continuum eigenvalues.
double continuum_error_estimate(const GridSpec& grid, const PotentialSpec& spec, double h);

}  // namespace rdl

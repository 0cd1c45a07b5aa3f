#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "rdl/operator.hpp"

namespace rdl {

/// Dense symmetric matrix, row-major.
class SymmetricMatrix {
 public:
  explicit SymmetricMatrix(std::size_t n) : n_(n), a_(n * n, 0.0) {}

  std::size_t size() const noexcept { return n_; }
  double operator()(std::size_t i, std::size_t j) const noexcept { return a_[i * n_ + j]; }
  double& operator()(std::size_t i, std::size_t j) noexcept { return a_[i * n_ + j]; }
  /// Sets both (i, j) and (j, i).
  void set(std::size_t i, std::size_t j, double v) noexcept {
    a_[i * n_ + j] = v;
    a_[j * n_ + i] = v;
  }

 private:
  std::size_t n_;
  std::vector<double> a_;
};

/// Symmetric tridiagonal matrix: diag[0..n), off[i] couples i and i+1.
struct Tridiagonal {
  std::vector<double> diag;
  std::vector<double> off;

  std::size_t size() const noexcept { return diag.size(); }
  std::pair<double, double> gershgorin() const noexcept;
};

/// Caps the order of dense problems (d >= 2 goes through a full tridiagonalization).
inline constexpr std::size_t kMaxDenseDim = 4096;

SymmetricMatrix to_dense(const DiscreteOperator& op);

/// Householder reduction to tridiagonal form; consumes its argument.
Tridiagonal householder_tridiagonalize(SymmetricMatrix a);

/// Native tridiagonal form for d = 1, Householder reduction otherwise.
Tridiagonal tridiagonal_form(const DiscreteOperator& op, std::size_t max_dense_dim = kMaxDenseDim);

/// Number of eigenvalues <= lambda (Sturm sequence / Sylvester inertia).
std::size_t count_leq(const Tridiagonal& t, double lambda) noexcept;
std::size_t count_leq(const DiscreteOperator& op, double lambda);
std::size_t count_leq(const SymmetricMatrix& a, double lambda);

/// k smallest eigenvalues by bisection on the Sturm count, ascending.
std::vector<double> lowest_eigenvalues(const Tridiagonal& t, std::size_t k);
std::vector<double> lowest_eigenvalues(const DiscreteOperator& op, std::size_t k);
std::vector<double> lowest_eigenvalues(const SymmetricMatrix& a, std::size_t k);

struct SpectralSummary {
  std::vector<double> lambda_grid;
  std::vector<std::size_t> counts;
  double lambda1 = 0.0;
  std::size_t dim = 0;
};

/// One reduction, many Sturm counts.
SpectralSummary counting_curve(const DiscreteOperator& op, std::span<const double> lambda_grid);
SpectralSummary counting_curve(const Tridiagonal& t, std::span<const double> lambda_grid);

}  // namespace rdl

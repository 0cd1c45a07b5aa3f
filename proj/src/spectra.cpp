#include "rdl/spectra.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "rdl/error.hpp"

namespace rdl {

namespace {

// Pivots smaller than this in magnitude are replaced by -pivmin.
double pivot_floor(const Tridiagonal& t) noexcept {
  auto [lo, hi] = t.gershgorin();
  const double scale = std::max({1.0, std::abs(lo), std::abs(hi)});
  return 1e-30 * scale;
}

std::size_t sturm_count(const Tridiagonal& t, double lambda, double pivmin) noexcept {
  const std::size_t n = t.diag.size();
  if (n == 0) return 0;
  std::size_t count = 0;
  double p = t.diag[0] - lambda;
  if (std::abs(p) < pivmin) p = -pivmin;
  if (p < 0.0) ++count;
  for (std::size_t i = 1; i < n; ++i) {
    const double b = t.off[i - 1];
    p = (t.diag[i] - lambda) - (b * b) / p;
    if (std::abs(p) < pivmin) p = -pivmin;
    if (p < 0.0) ++count;
  }
  return count;
}

// Bisection for the (index+1)-th smallest eigenvalue, to full working precision.
double bisect_eigenvalue(const Tridiagonal& t, std::size_t index, double lo, double hi,
                         double pivmin) noexcept {
  constexpr double eps = std::numeric_limits<double>::epsilon();
  for (int iter = 0; iter < 400; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (hi - lo <= std::max(4.0 * pivmin, 2.0 * eps * std::max(std::abs(lo), std::abs(hi))))
      break;
    if (sturm_count(t, mid, pivmin) > index)
      hi = mid;
    else
      lo = mid;
  }
  return 0.5 * (lo + hi);
}

void check_finite(const SymmetricMatrix& a, std::size_t step) {
  double frob = 0.0;
  bool finite = true;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a.size(); ++j) {
      const double v = a(i, j);
      if (!std::isfinite(v)) finite = false;
      else frob += v * v;
    }
  if (!finite)
    throw NumericalError("Householder tridiagonalization broke down at step " +
                         std::to_string(step) + " (non-finite entries; finite-part Frobenius norm " +
                         std::to_string(std::sqrt(frob)) + ")");
}

}  // namespace

std::pair<double, double> Tridiagonal::gershgorin() const noexcept {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  const std::size_t n = diag.size();
  for (std::size_t i = 0; i < n; ++i) {
    double r = 0.0;
    if (i > 0) r += std::abs(off[i - 1]);
    if (i + 1 < n) r += std::abs(off[i]);
    lo = std::min(lo, diag[i] - r);
    hi = std::max(hi, diag[i] + r);
  }
  return {lo, hi};
}

SymmetricMatrix to_dense(const DiscreteOperator& op) {
  SymmetricMatrix a(op.dim());
  for (std::size_t i = 0; i < op.dim(); ++i) a(i, i) = op.diagonal[i];
  for (const auto& [i, j] : op.edges) a.set(i, j, op.coupling);
  return a;
}

Tridiagonal householder_tridiagonalize(SymmetricMatrix a) {
  const std::size_t n = a.size();
  Tridiagonal t;
  t.diag.assign(n, 0.0);
  t.off.assign(n > 0 ? n - 1 : 0, 0.0);
  if (n == 0) return t;
  check_finite(a, 0);

  std::vector<double> v(n), p(n);
  for (std::size_t k = 0; k + 2 < n; ++k) {
    const std::size_t m = n - k - 1;  // length of the column below the diagonal
    double norm2 = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      v[i] = a(k + 1 + i, k);
      norm2 += v[i] * v[i];
    }
    t.diag[k] = a(k, k);
    if (norm2 == 0.0) {
      t.off[k] = 0.0;
      continue;
    }
    double alpha = std::sqrt(norm2);
    if (v[0] > 0.0) alpha = -alpha;
    v[0] -= alpha;
    const double vnorm2 = norm2 - 2.0 * alpha * (v[0] + alpha) + alpha * alpha;
    t.off[k] = alpha;
    if (vnorm2 == 0.0) continue;
    const double tau = 2.0 / vnorm2;

    // p = tau * A_sub v
    double vp = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      const std::size_t row = k + 1 + i;
      double s = 0.0;
      for (std::size_t j = 0; j < m; ++j) s += a(row, k + 1 + j) * v[j];
      p[i] = tau * s;
      vp += v[i] * p[i];
    }
    const double kfac = 0.5 * tau * vp;
    for (std::size_t i = 0; i < m; ++i) p[i] -= kfac * v[i];  // p becomes w
    for (std::size_t i = 0; i < m; ++i) {
      const std::size_t row = k + 1 + i;
      for (std::size_t j = 0; j < m; ++j) a(row, k + 1 + j) -= v[i] * p[j] + p[i] * v[j];
    }
    if (!std::isfinite(alpha) || !std::isfinite(vp)) check_finite(a, k);
  }
  if (n >= 2) {
    t.diag[n - 2] = a(n - 2, n - 2);
    t.off[n - 2] = a(n - 1, n - 2);
  }
  t.diag[n - 1] = a(n - 1, n - 1);
  for (std::size_t i = 0; i < n; ++i)
    if (!std::isfinite(t.diag[i]) || (i + 1 < n && !std::isfinite(t.off[i])))
      check_finite(a, n);
  return t;
}

Tridiagonal tridiagonal_form(const DiscreteOperator& op, std::size_t max_dense_dim) {
  if (op.is_tridiagonal()) {
    Tridiagonal t;
    t.diag = op.diagonal;
    t.off.assign(op.dim() > 0 ? op.dim() - 1 : 0, 0.0);
    for (const auto& [i, j] : op.edges) t.off[i] = op.coupling;  // j == i + 1 in d = 1
    return t;
  }
  if (op.dim() > max_dense_dim)
    throw ResourceError("dense reduction of order " + std::to_string(op.dim()) +
                        " exceeds the limit " + std::to_string(max_dense_dim) +
                        "; reduce n_per_side");
  return householder_tridiagonalize(to_dense(op));
}

std::size_t count_leq(const Tridiagonal& t, double lambda) noexcept {
  return sturm_count(t, lambda, pivot_floor(t));
}

std::size_t count_leq(const DiscreteOperator& op, double lambda) {
  return count_leq(tridiagonal_form(op), lambda);
}

std::size_t count_leq(const SymmetricMatrix& a, double lambda) {
  return count_leq(householder_tridiagonalize(a), lambda);
}

std::vector<double> lowest_eigenvalues(const Tridiagonal& t, std::size_t k) {
  const std::size_t n = t.size();
  if (k < 1 || k > n)
    throw DomainError("lowest_eigenvalues: k must lie in [1, dim], got " + std::to_string(k), "k");
  const double pivmin = pivot_floor(t);
  auto [lo, hi] = t.gershgorin();
  const double pad = 2.0 * std::numeric_limits<double>::epsilon() *
                         std::max(std::abs(lo), std::abs(hi)) + pivmin;
  lo -= pad;
  hi += pad;
  std::vector<double> out(k);
  double floor = lo;
  for (std::size_t j = 0; j < k; ++j) {
    out[j] = bisect_eigenvalue(t, j, floor, hi, pivmin);
    // eigenvalue j+1 is >= eigenvalue j; restart just below it
    floor = std::min(floor, out[j]);
    floor = std::max(floor, out[j] - pad - 4.0 * std::numeric_limits<double>::epsilon() *
                                          std::abs(out[j]));
    if (sturm_count(t, floor, pivmin) > j + 1) floor = lo;
  }
  return out;
}

std::vector<double> lowest_eigenvalues(const DiscreteOperator& op, std::size_t k) {
  return lowest_eigenvalues(tridiagonal_form(op), k);
}

std::vector<double> lowest_eigenvalues(const SymmetricMatrix& a, std::size_t k) {
  return lowest_eigenvalues(householder_tridiagonalize(a), k);
}

SpectralSummary counting_curve(const Tridiagonal& t, std::span<const double> lambda_grid) {
  for (std::size_t i = 1; i < lambda_grid.size(); ++i)
    if (!(lambda_grid[i] > lambda_grid[i - 1]))
      throw DomainError("lambda grid must be strictly increasing", "lambda_grid");
  SpectralSummary s;
  s.dim = t.size();
  s.lambda_grid.assign(lambda_grid.begin(), lambda_grid.end());
  const double pivmin = pivot_floor(t);
  s.counts.reserve(lambda_grid.size());
  for (double lam : lambda_grid) s.counts.push_back(sturm_count(t, lam, pivmin));
  s.lambda1 = t.size() > 0 ? lowest_eigenvalues(t, 1)[0] : 0.0;
  return s;
}

SpectralSummary counting_curve(const DiscreteOperator& op, std::span<const double> lambda_grid) {
  return counting_curve(tridiagonal_form(op), lambda_grid);
}

}  // namespace rdl

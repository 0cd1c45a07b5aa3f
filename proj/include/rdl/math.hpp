#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <span>
#include <vector>

#include "rdl/error.hpp"

namespace rdl {

/// |S^{d-1}|, the surface measure of the unit sphere in R^d (d <= 3).
inline double sphere_area(int d) {
  switch (d) {
    case 1: return 2.0;
    case 2: return 2.0 * std::numbers::pi;
    case 3: return 4.0 * std::numbers::pi;
    default: throw DomainError("dimension must be 1, 2 or 3", "params.d");
  }
}

/// Volume of the unit ball in R^d.
inline double ball_volume(int d) { return sphere_area(d) / d; }

/// Neumaier compensated summation.
class CompensatedSum {
 public:
  void add(double x) noexcept {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
      comp_ += (sum_ - t) + x;
    else
      comp_ += (x - t) + sum_;
    sum_ = t;
  }
  double value() const noexcept { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

inline double log_sum_exp(std::span<const double> v) {
  double m = -std::numeric_limits<double>::infinity();
  for (double x : v) m = std::max(m, x);
  if (!std::isfinite(m)) return m;
  CompensatedSum s;
  for (double x : v) s.add(std::exp(x - m));
  return m + std::log(s.value());
}

struct MeanStderr {
  double mean = 0.0;
  double stderr_of_mean = 0.0;
};

/// Sample mean and standard error, accumulated in index order.
inline MeanStderr mean_stderr(std::span<const double> v) {
  MeanStderr out;
  const std::size_t n = v.size();
  if (n == 0) return out;
  CompensatedSum s;
  for (double x : v) s.add(x);
  out.mean = s.value() / static_cast<double>(n);
  if (n < 2) return out;
  CompensatedSum ss;
  for (double x : v) ss.add((x - out.mean) * (x - out.mean));
  out.stderr_of_mean = std::sqrt(ss.value() / static_cast<double>(n - 1) / static_cast<double>(n));
  return out;
}

/// Mean of exp(logs) and the standard error of its logarithm (delta method),
/// computed without leaving log space.
inline MeanStderr log_mean_exp(std::span<const double> logs) {
  MeanStderr out;
  double m = -std::numeric_limits<double>::infinity();
  for (double x : logs) m = std::max(m, x);
  if (!std::isfinite(m)) {
    out.mean = m;
    out.stderr_of_mean = std::numeric_limits<double>::infinity();
    return out;
  }
  std::vector<double> scaled(logs.size());
  for (std::size_t i = 0; i < logs.size(); ++i) scaled[i] = std::exp(logs[i] - m);
  const MeanStderr lin = mean_stderr(scaled);
  out.mean = m + std::log(lin.mean);
  out.stderr_of_mean = lin.stderr_of_mean / lin.mean;
  return out;
}

}  // namespace rdl

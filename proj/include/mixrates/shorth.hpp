#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

#include "mixrates/errors.hpp"

namespace mixrates {

/// Shortest closed interval [m - r, m + r] with endpoints at order statistics
/// x_(lo_index), x_(hi_index) (0-based) holding ceil(n/2) points.
struct ShorthFit {
  double m = 0.0;
  double r = 0.0;
  std::size_t lo_index = 0;
  std::size_t hi_index = 0;
};

/// O(n log n): sort, then scan all windows of k = ceil(n/2) consecutive order
/// statistics; the leftmost among equally short windows wins.
inline ShorthFit fit_shorth(std::span<const double> sample) {
  const std::size_t n = sample.size();
  detail::require(n >= 2, "fit_shorth: need at least 2 observations");
  std::vector<double> x(sample.begin(), sample.end());
  std::sort(x.begin(), x.end());
  const std::size_t k = (n + 1) / 2;
  std::size_t best = 0;
  double best_width = x[k - 1] - x[0];
  for (std::size_t i = 1; i + k <= n; ++i) {
    const double width = x[i + k - 1] - x[i];
    if (width < best_width) {
      best_width = width;
      best = i;
    }
  }
  const double lo = x[best];
  const double hi = x[best + k - 1];
  return {0.5 * (lo + hi), 0.5 * (hi - lo), best, best + k - 1};
}

/// Population shortest half [mu - rho, mu + rho] and the leading coefficients of
/// V(eps, delta) = P[mu+eps-(rho+delta), mu+eps+rho+delta] - 1/2 ~ c1*delta + c2*eps^2.
struct ShorthPopulation {
  double mu = 0.0;
  double rho = 0.0;
  double c1 = 0.0;
  double c2 = 0.0;
};

namespace detail {
inline double std_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }
inline double std_normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }
}  // namespace detail

enum class ShorthDensity { StandardNormal };

/// Standard normal population: mu = 0, rho solves Phi(rho) - Phi(-rho) = 1/2,
/// c1 = 2 phi(rho), c2 = phi'(rho) = -rho phi(rho).
inline ShorthPopulation shorth_population(ShorthDensity = ShorthDensity::StandardNormal) {
  double lo = 0.0, hi = 5.0;
  while (hi - lo > 1e-13) {
    const double mid = 0.5 * (lo + hi);
    const double mass = detail::std_normal_cdf(mid) - detail::std_normal_cdf(-mid);
    (mass < 0.5 ? lo : hi) = mid;
  }
  const double rho = 0.5 * (lo + hi);
  const double f = detail::std_normal_pdf(rho);
  return {0.0, rho, 2.0 * f, -rho * f};
}

}  // namespace mixrates

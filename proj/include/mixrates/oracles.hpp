#pragma once

// Test-support oracles. Each one recomputes a quantity by brute force or by a
// different numerical route than the library, and is used only by the unit
// tests and the acceptance suite.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace mixrates::oracle {

struct ShorthBrute {
  double width = std::numeric_limits<double>::infinity();
  std::size_t count = 0;
};

/// Enumerates every interval [a, b] with a, b data points and counts its points
/// directly; keeps the shortest one holding at least ceil(n/2).
inline ShorthBrute shorth_brute_force(std::span<const double> x) {
  const std::size_t n = x.size();
  const std::size_t k = (n + 1) / 2;
  ShorthBrute best;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (x[j] < x[i]) continue;
      const double w = x[j] - x[i];
      if (w > best.width) continue;
      std::size_t c = 0;
      for (double v : x) c += (v >= x[i] && v <= x[j]) ? 1 : 0;
      if (c >= k && (w < best.width || (w == best.width && c < best.count))) best = {w, c};
    }
  return best;
}

/// sum_i (y_i - x_i'a)^2 + lambda_n sum_j |a_j|^gamma evaluated from the raw data.
inline double bridge_criterion_direct(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& a,
                                      double lambda_n, double gamma) {
  double rss = 0.0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double r = y[i] - x.row(i).dot(a);
    rss += r * r;
  }
  double pen = 0.0;
  for (Eigen::Index j = 0; j < a.size(); ++j) pen += std::pow(std::abs(a[j]), gamma);
  return rss + lambda_n * pen;
}

/// Minimum of the bridge criterion over a points x points grid on center +/- half_width.
inline double bridge_brute_force(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double lambda_n, double gamma,
                                 const Eigen::Vector2d& center, double half_width, int points = 2001) {
  double best = std::numeric_limits<double>::infinity();
  Eigen::Vector2d a;
  for (int i = 0; i < points; ++i) {
    a[0] = center[0] - half_width + 2.0 * half_width * i / (points - 1);
    for (int j = 0; j < points; ++j) {
      a[1] = center[1] - half_width + 2.0 * half_width * j / (points - 1);
      best = std::min(best, bridge_criterion_direct(x, y, a, lambda_n, gamma));
    }
  }
  return best;
}

/// Minimizes the k-means second-stage objective
///   dd^2 + es^2 + z_dd dd + z_es es + ds^2 dd + 2 ds ed es - ed^2 dd
/// over t = (dd, es) by compass search from the origin followed by Newton polishing,
/// without using its closed-form minimizer.
inline std::array<double, 2> kmeans_t_numeric(double ds, double ed, double z_dd, double z_es) {
  auto f = [&](double dd, double es) {
    return dd * dd + es * es + z_dd * dd + z_es * es + ds * ds * dd + 2.0 * ds * ed * es - ed * ed * dd;
  };
  double x = 0.0, y = 0.0, v = f(x, y);
  double step = 1.0 + std::abs(z_dd) + std::abs(z_es) + ds * ds + ed * ed;
  while (step > 1e-14) {
    bool moved = false;
    for (auto [dx, dy] : {std::pair{1.0, 0.0}, {-1.0, 0.0}, {0.0, 1.0}, {0.0, -1.0}, {1.0, 1.0}, {-1.0, -1.0},
                          {1.0, -1.0}, {-1.0, 1.0}}) {
      const double nx = x + dx * step, ny = y + dy * step;
      if (const double nv = f(nx, ny); nv < v) {
        x = nx;
        y = ny;
        v = nv;
        moved = true;
      }
    }
    if (!moved) step *= 0.5;
  }
  // Comparisons alone stall near sqrt(machine epsilon) on a flat bottom; finish with
  // Newton steps on central-difference derivatives.
  const double h = 1e-3;
  for (int it = 0; it < 3; ++it) {
    const double gx = (f(x + h, y) - f(x - h, y)) / (2 * h), gy = (f(x, y + h) - f(x, y - h)) / (2 * h);
    const double hxx = (f(x + h, y) - 2 * f(x, y) + f(x - h, y)) / (h * h);
    const double hyy = (f(x, y + h) - 2 * f(x, y) + f(x, y - h)) / (h * h);
    const double hxy = (f(x + h, y + h) - f(x + h, y - h) - f(x - h, y + h) + f(x - h, y - h)) / (4 * h * h);
    const double det = hxx * hyy - hxy * hxy;
    if (!(det > 0)) break;
    x -= (hyy * gx - hxy * gy) / det;
    y -= (hxx * gy - hxy * gx) / det;
  }
  return {x, y};
}

/// Empirical CDFs compared at every pooled sample point, O((n+m)^2).
inline double ks_brute_force(std::span<const double> a, std::span<const double> b) {
  double d = 0.0;
  auto cdf = [](std::span<const double> s, double t) {
    std::size_t c = 0;
    for (double v : s) c += v <= t ? 1 : 0;
    return static_cast<double>(c) / static_cast<double>(s.size());
  };
  for (auto s : {a, b})
    for (double t : s) d = std::max(d, std::abs(cdf(a, t) - cdf(b, t)));
  return d;
}

}  // namespace mixrates::oracle

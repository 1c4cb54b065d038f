#pragma once

// Reference samplers for the limiting laws of the three estimators:
//   - shorth center:  argmax_t [c2 t^2 + sqrt(c1) B(t)] (two-sided Brownian motion B)
//   - shorth radius:  Z / c1, Z ~ N(0, var_z)
//   - bridge lasso first coefficient: N(-lambda0/(4 C11), sigma^2/C11)
//   - k-means around C^v: s* = argmin psi1(s) + s'Z1,
//                         t* = argmin psi2(t) + t'Z2 + phi1 + phi2 + phi3 at s = s*.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <sstream>
#include <vector>

#include <Eigen/Dense>

#include "mixrates/errors.hpp"
#include "mixrates/kmeans.hpp"
#include "mixrates/random.hpp"

namespace mixrates {

// ---------------------------------------------------------------------------
// Chernoff-type argmax

struct ChernoffConfig {
  double c1 = 1.0;
  double c2 = -1.0;
  double horizon = 4.0;
  double step = 1e-3;
  std::size_t paths = 1000;
};

/// Horizon 4 (sqrt(c1)/|c2|)^{2/3} (the natural scale of the argmax), 4000 steps per side.
inline ChernoffConfig default_chernoff_config(double c1, double c2, std::size_t paths) {
  detail::require(c1 > 0 && c2 < 0, "Chernoff config: need c1 > 0 and c2 < 0");
  const double t = 4.0 * std::pow(std::sqrt(c1) / std::abs(c2), 2.0 / 3.0);
  return {c1, c2, t, t / 4000.0, paths};
}

inline void validate(const ChernoffConfig& cfg) {
  detail::require(cfg.c1 > 0, "Chernoff config: c1 must be positive");
  detail::require(cfg.c2 < 0, "Chernoff config: c2 must be negative");
  detail::require(cfg.step > 0 && cfg.step <= cfg.horizon, "Chernoff config: need 0 < h <= T");
  detail::require(cfg.paths >= 1, "Chernoff config: need at least one path");
}

struct ChernoffDraws {
  std::vector<double> values;
  /// Fraction of paths whose argmax landed on t = -T or t = T.
  double boundary_fraction = 0.0;
};

/// Grid argmax of c2 t^2 + sqrt(c1) B(t). Ties go to the smaller |t|, then to negative t.
inline double chernoff_argmax(const BrownianPath& path, double c1, double c2) {
  const double a = std::sqrt(c1);
  const auto m = static_cast<std::ptrdiff_t>(path.half_size());
  const double h = path.step();
  auto value = [&](std::ptrdiff_t k) {
    const double t = static_cast<double>(k) * h;
    return c2 * t * t + a * path.at_step(k);
  };
  std::ptrdiff_t best = 0;
  double best_v = value(0);
  for (std::ptrdiff_t j = 1; j <= m; ++j)
    for (std::ptrdiff_t k : {-j, j})
      if (const double v = value(k); v > best_v) {
        best_v = v;
        best = k;
      }
  return static_cast<double>(best) * h;
}

/// One Brownian path per draw, path i on stream.child(i). Throws if more than 1%
/// of the argmaxes hit the horizon.
inline ChernoffDraws sample_chernoff_argmax(const ChernoffConfig& cfg, const SeedStream& stream) {
  validate(cfg);
  const std::size_t m = brownian_half_steps(cfg.horizon, cfg.step);
  ChernoffDraws out;
  out.values.reserve(cfg.paths);
  std::size_t boundary = 0;
  for (std::size_t i = 0; i < cfg.paths; ++i) {
    Rng rng(stream.child(i));
    const auto path = sample_brownian_path(cfg.horizon, cfg.step, rng);
    const double t = chernoff_argmax(path, cfg.c1, cfg.c2);
    if (std::abs(t) >= static_cast<double>(m) * cfg.step * (1.0 - 1e-12)) ++boundary;
    out.values.push_back(t);
  }
  out.boundary_fraction = static_cast<double>(boundary) / static_cast<double>(cfg.paths);
  if (out.boundary_fraction > 0.01) {
    std::ostringstream msg;
    msg << "Chernoff sampler: " << out.boundary_fraction * 100.0
        << "% of argmaxes hit the horizon T=" << cfg.horizon << "; enlarge T";
    throw SolverError(msg.str());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Gaussian limits

/// Limit of sqrt(n)(alpha1_hat - beta1) for the gamma = 1/2, lambda_n = lambda0 sqrt(n)
/// bridge estimator when the second coefficient collapses to zero: minimizing
/// C11 u^2 - 2 u Z + (lambda0/2) u with Z ~ N(0, sigma^2 C11) gives u = (Z - lambda0/4)/C11.
inline std::vector<double> sample_lasso_limits(double c11, double lambda0, double sigma, const SeedStream& stream,
                                               std::size_t draws) {
  detail::require(c11 > 0, "sample_lasso_limits: C11 must be positive");
  Rng rng(stream);
  const double mean = -lambda0 / (4.0 * c11);
  const double sd = sigma / std::sqrt(c11);
  std::vector<double> out(draws);
  for (auto& v : out) v = mean + sd * rng.normal();
  return out;
}

/// Z / c1 with Z ~ N(0, var_z).
inline std::vector<double> sample_shorth_radius_limit(double c1, double var_z, const SeedStream& stream,
                                                      std::size_t draws) {
  detail::require(c1 > 0 && var_z >= 0, "sample_shorth_radius_limit: need c1 > 0 and var_z >= 0");
  Rng rng(stream);
  const double sd = std::sqrt(var_z) / c1;
  std::vector<double> out(draws);
  for (auto& v : out) v = sd * rng.normal();
  return out;
}

// ---------------------------------------------------------------------------
// k-means around C^v

/// psi1(delta_s, eps_d) = (|ds| + |ed|)^3/6 + ||ds| - |ed||^3/6.
inline double kmeans_psi1(double delta_s, double eps_d) {
  const double u = std::abs(delta_s), v = std::abs(eps_d);
  const double p = u + v, q = std::abs(u - v);
  return (p * p * p + q * q * q) / 6.0;
}

/// psi2(t) + t'Z2 + phi1(s,t) + phi2(s,t) + phi3(s,t) with phi1 = ds^2 dd,
/// phi2 = 2 ds ed es, phi3 = -ed^2 dd.
inline double kmeans_t_objective(double delta_s, double eps_d, double delta_d, double eps_s, double z_dd,
                                 double z_es) {
  return delta_d * delta_d + eps_s * eps_s + z_dd * delta_d + z_es * eps_s + delta_s * delta_s * delta_d +
         2.0 * delta_s * eps_d * eps_s - eps_d * eps_d * delta_d;
}

/// Score functions (partial derivatives at C^v of the centered squared distance to the
/// nearest center), ordered (delta_s, eps_d, delta_d, eps_s). H- = {x <= 0}, H+ = {x > 0}.
inline Eigen::Vector4d kmeans_scores(const Point& z) {
  if (z.x <= 0.0) return {-2.0 * (z.x + 1.0), -2.0 * z.y, -2.0 * (z.x + 1.0), -2.0 * z.y};
  return {-2.0 * (z.x - 1.0), 2.0 * z.y, 2.0 * (z.x - 1.0), -2.0 * z.y};
}

/// g_{a,b}(z): squared distance to the nearest center of from_local(l), centered at C^v.
inline double kmeans_local_loss(const Point& z, const LocalCoords& l) {
  const CenterPair c = from_local(l);
  const double base = std::min(sq_dist(z, {-1.0, 0.0}), sq_dist(z, {1.0, 0.0}));
  return std::min(sq_dist(z, c.c1), sq_dist(z, c.c2)) - base;
}

struct FiniteDifferenceCheck {
  Eigen::Vector4d direction;
  double finite_difference = 0.0;
  double linearization = 0.0;
  double relative_error = 0.0;
};

struct KmeansLimitInputs {
  /// Covariance of (Z_ds, Z_ed, Z_dd, Z_es).
  CovMatrix sigma = CovMatrix::identity(4);
  /// Monte Carlo standard errors of the entries of sigma.
  Eigen::Matrix4d standard_error = Eigen::Matrix4d::Zero();
  /// Sample mean of the scores (zero in population).
  Eigen::Vector4d score_mean = Eigen::Vector4d::Zero();
  std::vector<FiniteDifferenceCheck> fd_checks;
  std::size_t samples = 0;
};

/// Central differences of G_n(a, b) = P_n g_{a,b} at the origin along each
/// direction, against P_n(direction' scores).
inline std::vector<FiniteDifferenceCheck> kmeans_linearization_checks(std::span<const Point> sample,
                                                                      std::span<const Eigen::Vector4d> directions,
                                                                      double h = 1e-6) {
  std::vector<FiniteDifferenceCheck> out;
  const auto n = static_cast<double>(sample.size());
  for (const auto& v : directions) {
    const LocalCoords plus{h * v[0], h * v[1], h * v[2], h * v[3]};
    const LocalCoords minus{-h * v[0], -h * v[1], -h * v[2], -h * v[3]};
    double diff = 0.0, lin = 0.0;
    for (const auto& z : sample) {
      diff += kmeans_local_loss(z, plus) - kmeans_local_loss(z, minus);
      lin += v.dot(kmeans_scores(z));
    }
    FiniteDifferenceCheck c;
    c.direction = v;
    c.finite_difference = diff / (2.0 * h * n);
    c.linearization = lin / n;
    c.relative_error = std::abs(c.finite_difference - c.linearization) / std::max(std::abs(c.linearization), 1e-12);
    out.push_back(c);
  }
  return out;
}

/// Monte Carlo estimate of Sigma = P[(D1, D2)(D1, D2)'] under the two-line law,
/// gated by a finite-difference check of the score linearization on a fixed
/// sample of 2*10^5 points (relative error <= 1e-2 in every direction).
inline KmeansLimitInputs estimate_kmeans_cov(std::size_t samples, const SeedStream& stream) {
  detail::require(samples >= 2, "estimate_kmeans_cov: need at least 2 samples");
  KmeansLimitInputs out;
  out.samples = samples;

  Rng rng(stream.child(0));
  Eigen::Matrix4d sum = Eigen::Matrix4d::Zero();
  Eigen::Matrix4d sum_sq = Eigen::Matrix4d::Zero();
  Eigen::Vector4d mean = Eigen::Vector4d::Zero();
  constexpr std::size_t chunk = 1 << 16;
  for (std::size_t done = 0; done < samples; done += chunk) {
    const auto pts = sample_two_line(std::min(chunk, samples - done), rng);
    for (const auto& z : pts) {
      const Eigen::Vector4d s = kmeans_scores(z);
      const Eigen::Matrix4d outer = s * s.transpose();
      sum += outer;
      sum_sq += outer.cwiseProduct(outer);
      mean += s;
    }
  }
  const auto n = static_cast<double>(samples);
  const Eigen::Matrix4d m = sum / n;
  const Eigen::Matrix4d var = (sum_sq / n - m.cwiseProduct(m)) * (n / (n - 1.0));
  out.standard_error = (var / n).cwiseMax(0.0).cwiseSqrt();
  out.score_mean = mean / n;
  out.sigma = CovMatrix(0.5 * (m + m.transpose()));

  const auto fd_sample = sample_two_line(200000, stream.child(1));
  Rng dir_rng(stream.child(2));
  std::vector<Eigen::Vector4d> dirs{Eigen::Vector4d::UnitX(), Eigen::Vector4d::UnitY(), Eigen::Vector4d::UnitZ(),
                                    Eigen::Vector4d::UnitW(), Eigen::Vector4d(0.5, 0.5, 0.5, 0.5)};
  Eigen::Vector4d r;
  for (int i = 0; i < 4; ++i) r[i] = dir_rng.normal();
  dirs.push_back(r.normalized());
  out.fd_checks = kmeans_linearization_checks(fd_sample, dirs);
  for (const auto& c : out.fd_checks)
    if (!(c.relative_error <= 1e-2)) {
      std::ostringstream msg;
      msg << "k-means score linearization failed finite-difference check: direction (" << c.direction.transpose()
          << "), finite difference " << c.finite_difference << ", linearization " << c.linearization
          << ", relative error " << c.relative_error;
      throw SolverError(msg.str());
    }
  return out;
}

struct KmeansLimitDraw {
  double delta_s = 0.0;
  double eps_d = 0.0;
  double delta_d = 0.0;
  double eps_s = 0.0;
};

namespace detail {

struct Incumbent {
  double x, y, v;
};

/// Minimizes f over the 201x201 grid {cx + r i/100} x {cy + r j/100}, i, j in [-100, 100].
/// Exact ties go toward the origin, then lexicographically.
template <class F>
Incumbent grid_min_201(F&& f, double cx, double cy, double r) {
  Incumbent best{cx, cy, std::numeric_limits<double>::infinity()};
  for (int i = -100; i <= 100; ++i) {
    const double x = cx + r * i / 100.0;
    for (int j = -100; j <= 100; ++j) {
      const double y = cy + r * j / 100.0;
      const double v = f(x, y);
      const bool better = v < best.v || (v == best.v && (x * x + y * y < best.x * best.x + best.y * best.y ||
                                                         (x * x + y * y == best.x * best.x + best.y * best.y &&
                                                          (x < best.x || (x == best.x && y < best.y)))));
      if (better) best = {x, y, v};
    }
  }
  return best;
}

}  // namespace detail

/// argmin_s psi1(s) + s'z for s = (delta_s, eps_d): grid on |s|_inf <= 4|z|^{1/2}
/// (doubled up to twice if the incumbent is within one cell of the edge), two
/// re-grids of the 5x5-cell neighbourhood, then a compass search down to 1e-13.
inline std::array<double, 2> kmeans_s_star(double z_ds, double z_ed) {
  if (z_ds == 0.0 && z_ed == 0.0) return {0.0, 0.0};
  auto f = [&](double a, double b) { return kmeans_psi1(a, b) + z_ds * a + z_ed * b; };
  double radius = 4.0 * std::sqrt(std::hypot(z_ds, z_ed));
  for (int doubling = 0;; ++doubling) {
    auto inc = detail::grid_min_201(f, 0.0, 0.0, radius);
    const double cell = radius / 100.0;
    if (radius - std::abs(inc.x) < cell || radius - std::abs(inc.y) < cell) {
      if (doubling == 2) throw SolverError("k-means limit: s* grid incumbent on the box boundary after 2 doublings");
      radius *= 2.0;
      continue;
    }
    double c = cell;
    for (int refine = 0; refine < 2; ++refine) {
      inc = detail::grid_min_201(f, inc.x, inc.y, 2.5 * c);
      c = 2.5 * c / 100.0;
    }
    double step = c;
    const double floor = 1e-13 * std::max(1.0, std::abs(inc.x) + std::abs(inc.y));
    while (step > floor) {
      detail::Incumbent best = inc;
      for (auto [dx, dy] : {std::pair{1.0, 0.0}, {-1.0, 0.0}, {0.0, 1.0}, {0.0, -1.0}}) {
        const double x = inc.x + dx * step, y = inc.y + dy * step;
        if (const double v = f(x, y); v < best.v) best = {x, y, v};
      }
      if (best.v < inc.v) inc = best; else step *= 0.5;
    }
    return {inc.x, inc.y};
  }
}

/// Completing the square in t = (delta_d, eps_s).
inline std::array<double, 2> kmeans_t_star(double delta_s, double eps_d, double z_dd, double z_es) {
  return {-(z_dd + delta_s * delta_s - eps_d * eps_d) / 2.0, -(z_es + 2.0 * delta_s * eps_d) / 2.0};
}

inline KmeansLimitDraw kmeans_limit_from_z(const Eigen::Vector4d& z) {
  const auto s = kmeans_s_star(z[0], z[1]);
  const auto t = kmeans_t_star(s[0], s[1], z[2], z[3]);
  return {s[0], s[1], t[0], t[1]};
}

inline std::vector<KmeansLimitDraw> sample_kmeans_limit(const KmeansLimitInputs& inputs, const SeedStream& stream,
                                                        std::size_t draws) {
  detail::require(inputs.sigma.dim() == 4, "sample_kmeans_limit: Sigma must be 4x4");
  const GaussianSampler gauss(inputs.sigma);
  Rng rng(stream);
  std::vector<KmeansLimitDraw> out;
  out.reserve(draws);
  for (std::size_t i = 0; i < draws; ++i) out.push_back(kmeans_limit_from_z(gauss(rng)));
  return out;
}

}  // namespace mixrates

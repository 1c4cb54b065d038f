#pragma once

// Reproducible, stream-splittable sampling for every source law and process
// used by the estimators and limit samplers.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "mixrates/errors.hpp"

namespace mixrates {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Folds a tuple of identifiers (experiment, n, replicate, ...) into one stream index.
inline constexpr std::uint64_t stream_index_of(std::initializer_list<std::uint64_t> keys) noexcept {
  std::uint64_t h = 0x6a09e667f3bcc909ULL;
  for (auto k : keys) h = splitmix64(h ^ splitmix64(k));
  return h;
}

struct SeedStream {
  std::uint64_t master_seed = 0;
  std::uint64_t stream_index = 0;

  [[nodiscard]] std::uint64_t engine_seed() const noexcept {
    return splitmix64(splitmix64(master_seed) ^ splitmix64(stream_index + 0x632be59bd9b4e019ULL));
  }
  [[nodiscard]] SeedStream child(std::uint64_t key) const noexcept {
    return {master_seed, stream_index_of({stream_index, key})};
  }
};

/// Generator owned by one worker. Two Rng built from the same SeedStream
/// produce bit-identical sequences.
class Rng {
 public:
  explicit Rng(const SeedStream& s) : engine_(s.engine_seed()) {}

  std::uint64_t bits() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double normal() { return normal_(engine_); }

  /// Standard double exponential, density exp(-|y|)/2, by sign times inverse-CDF exponential.
  double laplace() {
    const std::uint64_t w = engine_();
    const double u = static_cast<double>(w >> 11) * 0x1.0p-53;
    const double e = -std::log1p(-u);
    return (w & 1U) ? -e : e;
  }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

inline std::vector<double> sample_laplace(std::size_t n, Rng& rng) {
  detail::require(n >= 1, "sample_laplace: n must be >= 1");
  std::vector<double> out(n);
  for (auto& v : out) v = rng.laplace();
  return out;
}

inline std::vector<double> sample_laplace(std::size_t n, const SeedStream& stream) {
  Rng rng(stream);
  return sample_laplace(n, rng);
}

struct Point {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Point&, const Point&) = default;
};

/// Planar law with mass 1/2 on each of the lines {y = -1} and {y = +1}
/// and a standard double exponential abscissa along each line.
inline std::vector<Point> sample_two_line(std::size_t n, Rng& rng) {
  detail::require(n >= 1, "sample_two_line: n must be >= 1");
  std::vector<Point> out(n);
  for (auto& p : out) {
    p.x = rng.laplace();
    p.y = (rng.bits() >> 63) ? 1.0 : -1.0;
  }
  return out;
}

inline std::vector<Point> sample_two_line(std::size_t n, const SeedStream& stream) {
  Rng rng(stream);
  return sample_two_line(n, rng);
}

/// Symmetric positive semidefinite matrix.
class CovMatrix {
 public:
  explicit CovMatrix(Eigen::MatrixXd entries) : m_(std::move(entries)) {
    detail::require(m_.rows() == m_.cols() && m_.rows() > 0, "CovMatrix: must be square and nonempty");
    const double scale = std::max(1.0, m_.cwiseAbs().maxCoeff());
    detail::require(((m_ - m_.transpose()).cwiseAbs().maxCoeff()) <= 1e-12 * scale, "CovMatrix: not symmetric");
  }

  static CovMatrix identity(Eigen::Index d) { return CovMatrix(Eigen::MatrixXd::Identity(d, d)); }

  [[nodiscard]] Eigen::Index dim() const { return m_.rows(); }
  [[nodiscard]] const Eigen::MatrixXd& entries() const { return m_; }
  double operator()(Eigen::Index i, Eigen::Index j) const { return m_(i, j); }

 private:
  Eigen::MatrixXd m_;
};

/// Draws from N(0, cov) through the symmetric square root V diag(sqrt(l)) V'.
/// Factorizes once; throws SolverError if cov has a materially negative eigenvalue.
class GaussianSampler {
 public:
  explicit GaussianSampler(const CovMatrix& cov) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov.entries());
    if (eig.info() != Eigen::Success) throw SolverError("covariance factorization failed");
    const Eigen::VectorXd lambda = eig.eigenvalues();
    const double tol = 1e-10 * std::max(1.0, lambda.cwiseAbs().maxCoeff());
    if (lambda.minCoeff() < -tol) throw SolverError("covariance matrix is indefinite");
    const Eigen::VectorXd root = lambda.cwiseMax(0.0).cwiseSqrt();
    root_ = eig.eigenvectors() * root.asDiagonal() * eig.eigenvectors().transpose();
  }

  Eigen::VectorXd operator()(Rng& rng) const {
    Eigen::VectorXd z(root_.rows());
    for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = rng.normal();
    return root_ * z;
  }

  [[nodiscard]] const Eigen::MatrixXd& root() const { return root_; }

 private:
  Eigen::MatrixXd root_;
};

inline Eigen::VectorXd sample_gaussian_vector(const CovMatrix& cov, const SeedStream& stream) {
  Rng rng(stream);
  return GaussianSampler(cov)(rng);
}

/// Two-sided Brownian motion on the closed grid {-T, -T+h, ..., T}, B(0) = 0.
class BrownianPath {
 public:
  BrownianPath(double horizon, double step, std::vector<double> values)
      : horizon_(horizon), step_(step), values_(std::move(values)) {}

  [[nodiscard]] double horizon() const { return horizon_; }
  [[nodiscard]] double step() const { return step_; }
  /// Grid points on each side of the origin.
  [[nodiscard]] std::size_t half_size() const { return values_.size() / 2; }
  [[nodiscard]] std::size_t size() const { return values_.size(); }
  [[nodiscard]] double time(std::size_t i) const {
    return (static_cast<double>(i) - static_cast<double>(half_size())) * step_;
  }
  [[nodiscard]] std::size_t origin_index() const { return half_size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  /// Value at t = k*h, for integer k in [-half_size, half_size].
  [[nodiscard]] double at_step(std::ptrdiff_t k) const {
    return values_[static_cast<std::size_t>(static_cast<std::ptrdiff_t>(half_size()) + k)];
  }
  [[nodiscard]] const std::vector<double>& values() const { return values_; }

 private:
  double horizon_;
  double step_;
  std::vector<double> values_;
};

inline std::size_t brownian_half_steps(double horizon, double step) {
  detail::require(horizon > 0 && step > 0 && step <= horizon, "Brownian path: need T > 0 and 0 < h <= T");
  const double ratio = horizon / step;
  const double m = std::round(ratio);
  detail::require(std::abs(ratio - m) <= 1e-9 * std::max(1.0, m), "Brownian path: T/h must be an integer");
  return static_cast<std::size_t>(m);
}

/// Right half first (t = h, 2h, ...), then left half (t = -h, -2h, ...).
inline BrownianPath sample_brownian_path(double horizon, double step, Rng& rng) {
  const std::size_t m = brownian_half_steps(horizon, step);
  std::vector<double> v(2 * m + 1, 0.0);
  const double sd = std::sqrt(step);
  for (std::size_t k = 1; k <= m; ++k) v[m + k] = v[m + k - 1] + sd * rng.normal();
  for (std::size_t k = 1; k <= m; ++k) v[m - k] = v[m - k + 1] + sd * rng.normal();
  return BrownianPath(horizon, step, std::move(v));
}

/// Every `factor`-th grid point of `path`; the same Brownian motion on a grid of step factor*h.
inline BrownianPath coarsen(const BrownianPath& path, std::size_t factor) {
  detail::require(factor >= 1 && path.half_size() % factor == 0, "coarsen: factor must divide the half-grid size");
  const std::size_t m = path.half_size() / factor;
  std::vector<double> v(2 * m + 1);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = path[i * factor];
  return BrownianPath(path.horizon(), path.step() * static_cast<double>(factor), std::move(v));
}

inline BrownianPath sample_brownian_path(double horizon, double step, const SeedStream& stream) {
  Rng rng(stream);
  return sample_brownian_path(horizon, step, rng);
}

}  // namespace mixrates

#pragma once

// Bridge-penalized least squares
//
//   W_n(alpha) = sum_i (Y_i - x_i' alpha)^2 + lambda_n sum_j |alpha_j|^gamma,
//   lambda_n = lambda0 * sqrt(n),
//
// minimized globally over a box around the OLS estimate. For gamma < 1 the
// criterion is nonconvex with kinks on the coordinate axes, and the minimizer
// sits exactly on an axis with positive probability; the solver therefore
// treats {alpha_j = 0} as first-class candidates instead of relying on
// stationarity conditions.

#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "mixrates/errors.hpp"
#include "mixrates/random.hpp"

namespace mixrates {

struct LassoConfig {
  Eigen::VectorXd beta_true = Eigen::Vector2d(1.0, 0.0);
  double gamma = 0.5;
  double lambda0 = 2.0;
  double sigma = 1.0;
  /// n x d, centered columns.
  Eigen::MatrixXd design;
};

struct LassoFit {
  Eigen::VectorXd alpha_hat;
  std::vector<bool> zero_flags;
  double criterion_value = 0.0;
  /// Box actually searched: center (OLS) +/- half_width in every coordinate.
  Eigen::VectorXd box_center;
  double box_half_width = 0.0;
  int widenings = 0;
};

/// Uniform[-1, 1] entries, columns centered to mean zero. Retries on the next
/// stream index (at most three times) if C_n = X'X/n is numerically singular.
inline Eigen::MatrixXd generate_lasso_design(std::size_t n, std::size_t d, const SeedStream& stream) {
  detail::require(d >= 1 && n >= d + 1, "generate_lasso_design: need n >= d + 1");
  for (int attempt = 0; attempt <= 3; ++attempt) {
    Rng rng({stream.master_seed, stream.stream_index + static_cast<std::uint64_t>(attempt)});
    Eigen::MatrixXd x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
    for (Eigen::Index i = 0; i < x.rows(); ++i)
      for (Eigen::Index j = 0; j < x.cols(); ++j) x(i, j) = rng.uniform(-1.0, 1.0);
    x.rowwise() -= x.colwise().mean();
    const Eigen::MatrixXd c = x.transpose() * x / static_cast<double>(n);
    if (Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(c, Eigen::EigenvaluesOnly).eigenvalues().minCoeff() > 1e-6)
      return x;
  }
  throw SolverError("generate_lasso_design: C_n singular after 3 retries");
}

inline Eigen::VectorXd simulate_lasso_responses(const Eigen::MatrixXd& design, const Eigen::VectorXd& beta,
                                                double sigma, Rng& rng) {
  Eigen::VectorXd y = design * beta;
  for (Eigen::Index i = 0; i < y.size(); ++i) y[i] += sigma * rng.normal();
  return y;
}

inline void validate(const LassoConfig& cfg) {
  const auto n = cfg.design.rows();
  const auto d = cfg.design.cols();
  detail::require(n > d && d >= 1, "LassoConfig: design must have more rows than columns");
  detail::require(cfg.beta_true.size() == d, "LassoConfig: beta_true length must equal design columns");
  detail::require(cfg.gamma > 0 && cfg.gamma <= 1, "LassoConfig: gamma must lie in (0, 1]");
  detail::require(cfg.lambda0 >= 0, "LassoConfig: lambda0 must be nonnegative");
  detail::require(cfg.sigma >= 0, "LassoConfig: sigma must be nonnegative");
  const Eigen::RowVectorXd means = cfg.design.colwise().mean();
  detail::require(means.cwiseAbs().maxCoeff() <= 1e-10, "LassoConfig: design columns must be centered");
  const Eigen::MatrixXd c = cfg.design.transpose() * cfg.design / static_cast<double>(n);
  detail::require(
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(c, Eigen::EigenvaluesOnly).eigenvalues().minCoeff() > 1e-6,
      "LassoConfig: C_n is singular");
}

/// W_n through sufficient statistics: RSS(OLS) + (a - ols)' X'X (a - ols) + penalty.
class BridgeCriterion {
 public:
  BridgeCriterion(const Eigen::MatrixXd& design, const Eigen::VectorXd& y, double lambda_n, double gamma)
      : gram_(design.transpose() * design), lambda_n_(lambda_n), gamma_(gamma) {
    detail::require(y.size() == design.rows(), "responses length must match design rows");
    ols_ = gram_.ldlt().solve(design.transpose() * y);
    rss_ = (y - design * ols_).squaredNorm();
  }

  double operator()(const Eigen::VectorXd& a) const {
    const Eigen::VectorXd r = a - ols_;
    double pen = 0.0;
    for (Eigen::Index j = 0; j < a.size(); ++j) pen += std::pow(std::abs(a[j]), gamma_);
    return rss_ + r.dot(gram_ * r) + lambda_n_ * pen;
  }

  double operator()(double a0, double a1) const {
    const double r0 = a0 - ols_[0];
    const double r1 = a1 - ols_[1];
    const double quad = gram_(0, 0) * r0 * r0 + 2.0 * gram_(0, 1) * r0 * r1 + gram_(1, 1) * r1 * r1;
    return rss_ + quad + lambda_n_ * (std::pow(std::abs(a0), gamma_) + std::pow(std::abs(a1), gamma_));
  }

  [[nodiscard]] const Eigen::VectorXd& ols() const { return ols_; }
  [[nodiscard]] double rss() const { return rss_; }
  [[nodiscard]] double lambda_n() const { return lambda_n_; }

 private:
  Eigen::MatrixXd gram_;
  Eigen::VectorXd ols_;
  double rss_ = 0.0;
  double lambda_n_;
  double gamma_;
};

namespace detail {

/// `count` equispaced points on [lo, hi], with 0 inserted when it lies strictly inside.
inline std::vector<double> grid_axis(double lo, double hi, int count) {
  std::vector<double> g;
  g.reserve(static_cast<std::size_t>(count) + 1);
  const double step = (hi - lo) / (count - 1);
  bool zero_done = !(lo < 0.0 && hi > 0.0);
  for (int i = 0; i < count; ++i) {
    const double v = i == count - 1 ? hi : lo + step * i;
    if (!zero_done && v >= 0.0) {
      if (v != 0.0) g.push_back(0.0);
      zero_done = true;
    }
    g.push_back(v);
  }
  return g;
}

template <class F>
double golden_section(F&& f, double lo, double hi, double tol = 1e-13) {
  constexpr double inv_phi = 0.6180339887498949;
  double a = lo, b = hi;
  double c = b - inv_phi * (b - a), d = a + inv_phi * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > tol * std::max(1.0, std::abs(a) + std::abs(b))) {
    if (fc <= fd) {
      b = d; d = c; fd = fc;
      c = b - inv_phi * (b - a); fc = f(c);
    } else {
      a = c; c = d; fc = fd;
      d = a + inv_phi * (b - a); fd = f(d);
    }
  }
  return fc <= fd ? c : d;
}

struct GridHit {
  double a0, a1, value;
  std::size_t i0, i1;
};

template <class F>
GridHit best_on_grid(F&& f, const std::vector<double>& g0, const std::vector<double>& g1) {
  GridHit best{g0[0], g1[0], std::numeric_limits<double>::infinity(), 0, 0};
  for (std::size_t i = 0; i < g0.size(); ++i)
    for (std::size_t j = 0; j < g1.size(); ++j) {
      const double v = f(g0[i], g1[j]);
      if (v < best.value) best = {g0[i], g1[j], v, i, j};
    }
  return best;
}

}  // namespace detail

/// Global minimizer of W_n for d = 2: coarse 101x101 grid over OLS +/- 4*max(1, s)
/// with the axes inserted exactly, two 101x101 re-grids of the 5x5-cell neighbourhood
/// of the incumbent, then golden-section polish of the interior and of each
/// axis/origin restriction. Axis candidates replace the interior one only when
/// strictly better, so reported zeros are exact.
inline LassoFit fit_bridge_lasso(const Eigen::VectorXd& responses, const LassoConfig& cfg) {
  validate(cfg);
  detail::require(cfg.design.cols() == 2, "fit_bridge_lasso: only d = 2 is supported");
  detail::require(responses.size() == cfg.design.rows(), "fit_bridge_lasso: responses length must match design rows");

  const auto n = static_cast<double>(cfg.design.rows());
  const BridgeCriterion w(cfg.design, responses, cfg.lambda0 * std::sqrt(n), cfg.gamma);
  const Eigen::Vector2d ols = w.ols();

  LassoFit fit;
  fit.box_center = ols;
  auto finish = [&](Eigen::Vector2d a) {
    fit.alpha_hat = a;
    fit.zero_flags = {a[0] == 0.0, a[1] == 0.0};
    fit.criterion_value = w(a[0], a[1]);
    return fit;
  };

  if (cfg.lambda0 == 0.0) return finish(ols);

  const double resid_scale = std::sqrt(w.rss() / (n - 2.0));
  double half_width = 4.0 * std::max(1.0, resid_scale);

  for (int widen = 0;; ++widen) {
    const std::array<double, 2> lo{ols[0] - half_width, ols[1] - half_width};
    const std::array<double, 2> hi{ols[0] + half_width, ols[1] + half_width};
    const double coarse = 2.0 * half_width / 100.0;

    auto hit = detail::best_on_grid(w, detail::grid_axis(lo[0], hi[0], 101), detail::grid_axis(lo[1], hi[1], 101));
    const bool at_edge = hit.a0 - lo[0] < coarse || hi[0] - hit.a0 < coarse || hit.a1 - lo[1] < coarse ||
                         hi[1] - hit.a1 < coarse;
    if (at_edge) {
      if (widen == 2) throw SolverError("fit_bridge_lasso: incumbent on search-box boundary after 2 widenings");
      half_width *= 2.0;
      continue;
    }
    fit.box_half_width = half_width;
    fit.widenings = widen;

    double cell = coarse;
    for (int refine = 0; refine < 2; ++refine) {
      const double r = 2.5 * cell;
      hit = detail::best_on_grid(w, detail::grid_axis(hit.a0 - r, hit.a0 + r, 101),
                                 detail::grid_axis(hit.a1 - r, hit.a1 + r, 101));
      cell = 2.0 * r / 100.0;
    }

    Eigen::Vector2d best(hit.a0, hit.a1);
    double best_value = hit.value;

    // Interior polish inside the incumbent's orthant.
    if (best[0] != 0.0 && best[1] != 0.0) {
      Eigen::Vector2d a = best;
      const double reach = 2.0 * cell;
      for (int sweep = 0; sweep < 200; ++sweep) {
        double moved = 0.0;
        for (int j = 0; j < 2; ++j) {
          auto along = [&](double t) { return j == 0 ? w(t, a[1]) : w(a[0], t); };
          double l = a[j] - reach, h = a[j] + reach;
          if (a[j] > 0) l = std::max(l, 0.0); else h = std::min(h, 0.0);
          const double t = detail::golden_section(along, l, h);
          if (along(t) < along(a[j])) {
            moved = std::max(moved, std::abs(t - a[j]));
            a[j] = t;
          }
        }
        if (moved < 1e-14) break;
      }
      if (const double v = w(a[0], a[1]); v < best_value) {
        best = a;
        best_value = v;
      }
    }

    // Axis and origin restrictions.
    for (int zero = 0; zero < 2; ++zero) {
      const int free = 1 - zero;
      auto along = [&](double t) { return zero == 0 ? w(0.0, t) : w(t, 0.0); };
      const auto scan = detail::grid_axis(lo[free], hi[free], 4001);
      std::size_t k = 0;
      for (std::size_t i = 1; i < scan.size(); ++i)
        if (along(scan[i]) < along(scan[k])) k = i;
      double t = scan[k];
      if (t != 0.0) {
        double l = k > 0 ? scan[k - 1] : scan[k];
        double h = k + 1 < scan.size() ? scan[k + 1] : scan[k];
        if (t > 0) l = std::max(l, 0.0); else h = std::min(h, 0.0);
        const double g = detail::golden_section(along, l, h);
        if (along(g) < along(t)) t = g;
      }
      Eigen::Vector2d a = Eigen::Vector2d::Zero();
      a[free] = t;
      if (const double v = w(a[0], a[1]); v < best_value) {
        best = a;
        best_value = v;
      }
    }
    if (const double v = w(0.0, 0.0); v < best_value) best = Eigen::Vector2d::Zero();

    return finish(best);
  }
}

}  // namespace mixrates

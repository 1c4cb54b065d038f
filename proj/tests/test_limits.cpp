#include <algorithm>
#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "mixrates/harness.hpp"
#include "mixrates/limits.hpp"
#include "mixrates/oracles.hpp"

using namespace mixrates;

namespace {

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double variance(const std::vector<double>& v) {
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

}  // namespace

TEST(Chernoff, ConfigValidation) {
  EXPECT_THROW(default_chernoff_config(0.0, -1.0, 10), ValidationError);
  EXPECT_THROW(default_chernoff_config(1.0, 0.0, 10), ValidationError);
  ChernoffConfig bad{1.0, -1.0, 1.0, 2.0, 10};
  EXPECT_THROW(sample_chernoff_argmax(bad, {1, 1}), ValidationError);
  bad = {1.0, -1.0, 1.0, 0.3, 10};
  EXPECT_THROW(sample_chernoff_argmax(bad, {1, 1}), ValidationError);
}

TEST(Chernoff, StrongDriftPinsTheArgmaxAtZero) {
  ChernoffConfig cfg{1.0, -1e6, 0.1, 1e-4, 1000};
  const auto d = sample_chernoff_argmax(cfg, {2, 0});
  std::size_t near = 0;
  for (double v : d.values) near += std::abs(v) <= cfg.step + 1e-15 ? 1 : 0;
  EXPECT_GE(near, 990U);
}

TEST(Chernoff, SmallHorizonIsReportedAsBoundaryFailure) {
  ChernoffConfig cfg{1.0, -1.0, 0.05, 0.001, 200};
  EXPECT_THROW(sample_chernoff_argmax(cfg, {3, 0}), SolverError);
}

TEST(Chernoff, SymmetricLaw) {
  const auto d = sample_chernoff_argmax(default_chernoff_config(1.0, -1.0, 10000), {4, 0});
  std::vector<double> neg(d.values);
  for (auto& v : neg) v = -v;
  EXPECT_LE(ks_two_sample(d.values, neg), 0.03);
  EXPECT_NEAR(mean(d.values), 0.0, 5.0 * std::sqrt(variance(d.values) / 1e4));
  EXPECT_LE(d.boundary_fraction, 0.01);
}

TEST(Chernoff, ScalingLaw) {
  const auto base = sample_chernoff_argmax(default_chernoff_config(1.0, -1.0, 10000), {5, 0});
  for (auto [c1, c2] : {std::pair{4.0, -2.0}, {4.0, -1.0}, {1.0, -3.0}}) {
    const double scale = std::pow(std::sqrt(c1) / std::abs(c2), 2.0 / 3.0);
    std::vector<double> scaled(base.values);
    for (auto& v : scaled) v *= scale;
    const auto other = sample_chernoff_argmax(default_chernoff_config(c1, c2, 10000), {5, 1});
    EXPECT_LE(ks_two_sample(scaled, other.values), 0.03) << c1 << "," << c2;
  }
}

TEST(Chernoff, HalvingTheStepBarelyMovesTheLaw) {
  // Same Brownian paths evaluated on the fine grid and on every other point.
  const auto cfg = default_chernoff_config(1.0, -1.0, 1);
  std::vector<double> fine, coarse;
  for (std::uint64_t i = 0; i < 10000; ++i) {
    const auto path = sample_brownian_path(cfg.horizon, cfg.step / 2.0, SeedStream{6, i});
    fine.push_back(chernoff_argmax(path, 1.0, -1.0));
    coarse.push_back(chernoff_argmax(coarsen(path, 2), 1.0, -1.0));
  }
  EXPECT_LE(ks_two_sample(fine, coarse), 0.02);
}

TEST(Chernoff, ArgmaxTieBreaksTowardSmallerMagnitudeThenNegative) {
  // Flat path and zero drift make every point tie.
  const BrownianPath flat(1.0, 0.5, std::vector<double>(5, 0.0));
  EXPECT_EQ(chernoff_argmax(flat, 1.0, -1.0), 0.0);
  // Equal maxima at +-h: pick -h.
  const BrownianPath two(1.0, 0.5, {0.0, 5.0, 0.0, 5.0, 0.0});
  EXPECT_EQ(chernoff_argmax(two, 1.0, -1.0), -0.5);
}

TEST(LassoLimit, MomentsMatchTheClosedForm) {
  const auto d = sample_lasso_limits(1.0 / 3.0, 2.0, 1.0, {7, 0}, 100000);
  // N(-lambda0/(4 C11), sigma^2/C11) = N(-1.5, 3).
  EXPECT_NEAR(mean(d), -1.5, 5.0 * std::sqrt(3.0 / 1e5));
  EXPECT_NEAR(variance(d), 3.0, 5.0 * 3.0 * std::sqrt(2.0 / 1e5));
  const auto z = sample_lasso_limits(1.0 / 3.0, 0.0, 1.0, {7, 1}, 100000);
  EXPECT_NEAR(mean(z), 0.0, 5.0 * std::sqrt(3.0 / 1e5));
  EXPECT_THROW(sample_lasso_limits(0.0, 1.0, 1.0, {7, 2}, 10), ValidationError);
}

TEST(LassoLimit, AgreesWithTheLocalizedCriterionAtLargeN) {
  // Minimize C11 u^2 - 2 u Z + lambda0 sqrt(n)(|1 + u/sqrt(n)|^{1/2} - 1) over a grid at n = 10^6
  // for Z ~ N(0, C11). Each minimizer should sit next to (Z - lambda0/4)/C11 for the same Z.
  const double c11 = 1.0 / 3.0, lambda0 = 2.0, rn = 1000.0;
  Rng rng({8, 0});
  std::vector<double> u_star;
  double worst = 0.0;
  for (int i = 0; i < 4000; ++i) {
    const double z = std::sqrt(c11) * rng.normal();
    double best_u = 0.0, best = INFINITY;
    for (int k = -20000; k <= 20000; ++k) {
      const double u = k * 1e-3;
      const double v = c11 * u * u - 2.0 * u * z + lambda0 * rn * (std::sqrt(std::abs(1.0 + u / rn)) - 1.0);
      if (v < best) {
        best = v;
        best_u = u;
      }
    }
    u_star.push_back(best_u);
    worst = std::max(worst, std::abs(best_u - (z - lambda0 / 4.0) / c11));
  }
  // Grid spacing plus the O(u^2 / sqrt(n)) remainder of the square-root expansion.
  EXPECT_LE(worst, 0.01);
  EXPECT_NEAR(mean(u_star), -1.5, 5.0 * std::sqrt(3.0 / 4000));
  EXPECT_NEAR(variance(u_star), 3.0, 5.0 * 3.0 * std::sqrt(2.0 / 4000));
}

TEST(ShorthRadiusLimit, Variance) {
  const auto d = sample_shorth_radius_limit(0.5, 0.5, {9, 0}, 100000);
  EXPECT_NEAR(variance(d), 2.0, 5.0 * 2.0 * std::sqrt(2.0 / 1e5));
}

TEST(KmeansLimit, ScoresHaveZeroMeanAndIdentityTimesFourCovariance) {
  const auto in = estimate_kmeans_cov(1000000, {10, 0});
  for (int i = 0; i < 4; ++i) {
    EXPECT_NEAR(in.score_mean[i], 0.0, 5.0 * std::sqrt(in.sigma(i, i) / 1e6));
    for (int j = 0; j < 4; ++j)
      EXPECT_NEAR(in.sigma(i, j), i == j ? 4.0 : 0.0, 5.0 * in.standard_error(i, j)) << i << "," << j;
  }
  ASSERT_EQ(in.fd_checks.size(), 6U);
  for (const auto& c : in.fd_checks) EXPECT_LE(c.relative_error, 1e-2);
}

TEST(KmeansLimit, CovarianceStableUnderDoubling) {
  // The larger run extends the smaller one on the same stream.
  const auto small = estimate_kmeans_cov(1000000, {11, 0});
  const auto large = estimate_kmeans_cov(4000000, {11, 0});
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      EXPECT_LE(std::abs(small.sigma(i, j) - large.sigma(i, j)), 3.0 * small.standard_error(i, j)) << i << "," << j;
}

TEST(KmeansLimit, LinearizationMatchesFiniteDifferences) {
  const auto pts = sample_two_line(200000, SeedStream{12, 0});
  Rng rng({12, 1});
  std::vector<Eigen::Vector4d> dirs;
  for (int k = 0; k < 5; ++k) {
    Eigen::Vector4d v;
    for (int i = 0; i < 4; ++i) v[i] = rng.normal();
    dirs.push_back(v.normalized());
  }
  for (const auto& c : kmeans_linearization_checks(pts, dirs)) EXPECT_LE(c.relative_error, 1e-2);
}

TEST(KmeansLimit, SStarZeroWhenNoiseIsZero) {
  const auto s = kmeans_s_star(0.0, 0.0);
  EXPECT_EQ(s[0], 0.0);
  EXPECT_EQ(s[1], 0.0);
  const auto t = kmeans_t_star(0.0, 0.0, 0.6, -0.4);
  EXPECT_DOUBLE_EQ(t[0], -0.3);
  EXPECT_DOUBLE_EQ(t[1], 0.2);
}

TEST(KmeansLimit, SStarIsLocallyOptimal) {
  Rng rng({13, 0});
  for (int i = 0; i < 200; ++i) {
    const double z1 = 2.0 * rng.normal(), z2 = 2.0 * rng.normal();
    const auto s = kmeans_s_star(z1, z2);
    const double f0 = kmeans_psi1(s[0], s[1]) + z1 * s[0] + z2 * s[1];
    for (double dx : {-1e-6, 0.0, 1e-6})
      for (double dy : {-1e-6, 0.0, 1e-6})
        EXPECT_GE(kmeans_psi1(s[0] + dx, s[1] + dy) + z1 * (s[0] + dx) + z2 * (s[1] + dy), f0 - 1e-15);
  }
}

TEST(KmeansLimit, SStarBeatsACoarseGlobalGrid) {
  Rng rng({14, 0});
  for (int i = 0; i < 50; ++i) {
    const double z1 = 2.0 * rng.normal(), z2 = 2.0 * rng.normal();
    const auto s = kmeans_s_star(z1, z2);
    const double f0 = kmeans_psi1(s[0], s[1]) + z1 * s[0] + z2 * s[1];
    for (int a = -200; a <= 200; ++a)
      for (int b = -200; b <= 200; ++b) {
        const double x = a * 0.02, y = b * 0.02;
        ASSERT_GE(kmeans_psi1(x, y) + z1 * x + z2 * y, f0 - 1e-12);
      }
  }
}

TEST(KmeansLimit, TStarClosedFormMatchesNumericMinimum) {
  Rng rng({15, 0});
  for (int i = 0; i < 100; ++i) {
    const double ds = rng.normal(), ed = rng.normal(), zdd = 2.0 * rng.normal(), zes = 2.0 * rng.normal();
    const auto t = kmeans_t_star(ds, ed, zdd, zes);
    const auto u = oracle::kmeans_t_numeric(ds, ed, zdd, zes);
    EXPECT_NEAR(t[0], u[0], 1e-8);
    EXPECT_NEAR(t[1], u[1], 1e-8);
    EXPECT_LE(kmeans_t_objective(ds, ed, t[0], t[1], zdd, zes), kmeans_t_objective(ds, ed, u[0], u[1], zdd, zes) + 1e-12);
  }
}

TEST(KmeansLimit, SignSymmetry) {
  // psi1 is even in each coordinate, so flipping the sign of a noise component flips s*.
  Rng rng({16, 0});
  for (int i = 0; i < 50; ++i) {
    const double z1 = rng.normal(), z2 = rng.normal();
    const auto s = kmeans_s_star(z1, z2);
    const auto f = kmeans_s_star(-z1, z2);
    const auto g = kmeans_s_star(z1, -z2);
    EXPECT_NEAR(f[0], -s[0], 1e-7);
    EXPECT_NEAR(f[1], s[1], 1e-7);
    EXPECT_NEAR(g[0], s[0], 1e-7);
    EXPECT_NEAR(g[1], -s[1], 1e-7);
  }
}

TEST(KmeansLimit, DeterministicDraws) {
  KmeansLimitInputs in;
  in.sigma = CovMatrix(4.0 * Eigen::MatrixXd::Identity(4, 4));
  const auto a = sample_kmeans_limit(in, {17, 0}, 100);
  const auto b = sample_kmeans_limit(in, {17, 0}, 100);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].delta_s, b[i].delta_s);
    EXPECT_EQ(a[i].eps_s, b[i].eps_s);
  }
}

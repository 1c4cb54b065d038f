#pragma once

// Two-means clustering near the two tied optimal configurations of the
// two-line law: C^v = {(-1,0), (1,0)} (vertical split line) and
// C^h = {(0,-1), (0,1)} (horizontal split line).

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string_view>
#include <vector>

#include "mixrates/errors.hpp"
#include "mixrates/random.hpp"

namespace mixrates {

enum class KmeansInit { Cv, Ch };

inline std::string_view to_string(KmeansInit i) { return i == KmeansInit::Cv ? "Cv" : "Ch"; }

struct CenterPair {
  Point c1;
  Point c2;
};

inline CenterPair initial_centers(KmeansInit init) {
  return init == KmeansInit::Cv ? CenterPair{{-1.0, 0.0}, {1.0, 0.0}} : CenterPair{{0.0, -1.0}, {0.0, 1.0}};
}

/// Local coordinates of a center pair relative to C^v:
///   delta_s = (c1x + c2x)/2,     delta_d = 1 + (c1x - c2x)/2,
///   eps_s   = (c1y + c2y)/2,     eps_d   = (c1y - c2y)/2,
/// with c1 the center near (-1, 0). a = (delta_s, eps_d) is the slow block,
/// b = (delta_d, eps_s) the fast one. Pairs near C^h use the same map after
/// exchanging the x and y axes.
struct LocalCoords {
  double delta_s = 0.0;
  double eps_d = 0.0;
  double delta_d = 0.0;
  double eps_s = 0.0;
};

inline LocalCoords to_local(const CenterPair& c) {
  return {0.5 * (c.c1.x + c.c2.x), 0.5 * (c.c1.y - c.c2.y), 1.0 + 0.5 * (c.c1.x - c.c2.x), 0.5 * (c.c1.y + c.c2.y)};
}

inline CenterPair from_local(const LocalCoords& l) {
  return {{-1.0 + l.delta_s + l.delta_d, l.eps_s + l.eps_d}, {1.0 + l.delta_s - l.delta_d, l.eps_s - l.eps_d}};
}

struct KmeansCoords {
  KmeansInit init = KmeansInit::Cv;
  LocalCoords local;
  CenterPair centers;
  double w = 0.0;
  int lloyd_iterations = 0;
  bool empty_cluster_repaired = false;
  /// Hausdorff distance to the initial configuration exceeded 1/2.
  bool left_neighborhood = false;
  /// W_n after every Lloyd update, then after the polish.
  std::vector<double> w_trace;
};

inline double sq_dist(const Point& p, const Point& c) {
  const double dx = p.x - c.x, dy = p.y - c.y;
  return dx * dx + dy * dy;
}

/// W_n(C) = n^{-1} sum_i min_j |x_i - c_j|^2.
inline double kmeans_criterion(std::span<const Point> sample, const CenterPair& c) {
  double s = 0.0;
  for (const auto& p : sample) s += std::min(sq_dist(p, c.c1), sq_dist(p, c.c2));
  return s / static_cast<double>(sample.size());
}

inline double hausdorff(const CenterPair& a, const CenterPair& b) {
  auto d = [](const Point& p, const Point& q) { return std::sqrt(sq_dist(p, q)); };
  const double a1 = std::min(d(a.c1, b.c1), d(a.c1, b.c2));
  const double a2 = std::min(d(a.c2, b.c1), d(a.c2, b.c2));
  const double b1 = std::min(d(b.c1, a.c1), d(b.c1, a.c2));
  const double b2 = std::min(d(b.c2, a.c1), d(b.c2, a.c2));
  return std::max({a1, a2, b1, b2});
}

/// Lloyd iteration from C^v or C^h (nearest center, ties to the first; stop when
/// the assignment repeats or after 200 updates), followed by a best-of-poll pattern
/// search on the four center coordinates: initial step 1e-3 n^{-1/4}, halved after
/// an unsuccessful poll, 40 polls.
inline KmeansCoords fit_kmeans2(std::span<const Point> sample, KmeansInit init) {
  const std::size_t n = sample.size();
  detail::require(n >= 4, "fit_kmeans2: need at least 4 points");

  KmeansCoords out;
  out.init = init;
  CenterPair c = initial_centers(init);

  std::vector<std::uint8_t> label(n, 2), prev(n, 2);
  for (int it = 0; it < 200; ++it) {
    for (std::size_t i = 0; i < n; ++i) label[i] = sq_dist(sample[i], c.c2) < sq_dist(sample[i], c.c1) ? 1 : 0;
    if (label == prev) break;

    std::array<double, 2> sx{}, sy{};
    std::array<std::size_t, 2> cnt{};
    for (std::size_t i = 0; i < n; ++i) {
      sx[label[i]] += sample[i].x;
      sy[label[i]] += sample[i].y;
      ++cnt[label[i]];
    }
    if (cnt[0] == 0 || cnt[1] == 0) {
      // Re-seed the empty center at the point farthest from the other one.
      const int empty = cnt[0] == 0 ? 0 : 1;
      const Point& other = empty == 0 ? c.c2 : c.c1;
      std::size_t far = 0;
      for (std::size_t i = 1; i < n; ++i)
        if (sq_dist(sample[i], other) > sq_dist(sample[far], other)) far = i;
      (empty == 0 ? c.c1 : c.c2) = sample[far];
      out.empty_cluster_repaired = true;
      prev.assign(n, 2);
    } else {
      c.c1 = {sx[0] / static_cast<double>(cnt[0]), sy[0] / static_cast<double>(cnt[0])};
      c.c2 = {sx[1] / static_cast<double>(cnt[1]), sy[1] / static_cast<double>(cnt[1])};
      prev = label;
    }
    ++out.lloyd_iterations;
    out.w_trace.push_back(kmeans_criterion(sample, c));
  }

  std::array<double, 4> v{c.c1.x, c.c1.y, c.c2.x, c.c2.y};
  auto eval = [&](const std::array<double, 4>& u) { return kmeans_criterion(sample, {{u[0], u[1]}, {u[2], u[3]}}); };
  double current = eval(v);
  double step = 1e-3 * std::pow(static_cast<double>(n), -0.25);
  for (int round = 0; round < 40; ++round) {
    std::array<double, 4> best_v = v;
    double best = current;
    for (int k = 0; k < 4; ++k)
      for (double sign : {1.0, -1.0}) {
        auto u = v;
        u[k] += sign * step;
        if (const double val = eval(u); val < best) {
          best = val;
          best_v = u;
        }
      }
    if (best < current) {
      v = best_v;
      current = best;
    } else {
      step *= 0.5;
    }
  }
  c = {{v[0], v[1]}, {v[2], v[3]}};
  out.w_trace.push_back(current);

  // Label so that c1 is the center near (-1,0) for C^v, near (0,-1) for C^h.
  const bool swap = init == KmeansInit::Cv ? c.c1.x > c.c2.x : c.c1.y > c.c2.y;
  if (swap) std::swap(c.c1, c.c2);
  out.centers = c;
  out.w = current;
  out.left_neighborhood = hausdorff(c, initial_centers(init)) > 0.5;
  out.local = init == KmeansInit::Cv ? to_local(c) : to_local({{c.c1.y, c.c1.x}, {c.c2.y, c.c2.x}});
  return out;
}

struct KmeansGlobal {
  KmeansInit choice = KmeansInit::Cv;
  bool tie = false;
  KmeansCoords coords_v;
  KmeansCoords coords_h;
};

/// Fits from both configurations and keeps the lower W_n; exact ties go to C^v.
inline KmeansGlobal kmeans_global(std::span<const Point> sample) {
  KmeansGlobal g;
  g.coords_v = fit_kmeans2(sample, KmeansInit::Cv);
  g.coords_h = fit_kmeans2(sample, KmeansInit::Ch);
  g.tie = g.coords_v.w == g.coords_h.w;
  g.choice = g.coords_h.w < g.coords_v.w ? KmeansInit::Ch : KmeansInit::Cv;
  return g;
}

}  // namespace mixrates

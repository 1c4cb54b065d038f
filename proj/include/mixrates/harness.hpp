#pragma once

// Monte Carlo driver: ladders of sample sizes, replicate fan-out, log-log rate
// fits, exact-zero fractions and two-sample Kolmogorov-Smirnov distances.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <iomanip>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "mixrates/errors.hpp"
#include "mixrates/kmeans.hpp"
#include "mixrates/lasso.hpp"
#include "mixrates/parallel.hpp"
#include "mixrates/random.hpp"
#include "mixrates/rates.hpp"
#include "mixrates/shorth.hpp"

namespace mixrates {

enum class Experiment { Lasso, Shorth, Kmeans };

inline std::string_view to_string(Experiment e) {
  switch (e) {
    case Experiment::Lasso: return "lasso";
    case Experiment::Shorth: return "shorth";
    case Experiment::Kmeans: return "kmeans";
  }
  return "?";
}

inline Experiment parse_experiment(std::string_view s) {
  if (s == "lasso") return Experiment::Lasso;
  if (s == "shorth") return Experiment::Shorth;
  if (s == "kmeans") return Experiment::Kmeans;
  throw ValidationError("unknown experiment '" + std::string(s) + "' (expected lasso, shorth or kmeans)");
}

/// Components recorded per replicate, in output order.
inline std::vector<std::string> components_of(Experiment e) {
  switch (e) {
    case Experiment::Lasso: return {"alpha1", "alpha2"};
    case Experiment::Shorth: return {"m", "r"};
    case Experiment::Kmeans: return {"delta_s", "eps_d", "delta_d", "eps_s", "split"};
  }
  return {};
}

/// Predicted convergence exponent of a component, derived with the rate calculus:
/// the lasso first coefficient from the profile (2, 1/2, {(1, 1/2)}), the shorth
/// center from (2, 2, {(1, 1/2), (0, 2/3)}), the shorth radius from (2, 2, {(1, 1/2)})
/// and the k-means blocks from the two-block profile (3, 2, {(2, 1)} x 3).
inline Fraction theoretical_rate(Experiment e, std::string_view component) {
  const Fraction half(1, 2);
  switch (e) {
    case Experiment::Lasso:
      if (component == "alpha1") return compute_lemma1_rate({2, half, {{1, half}}}).tau_a;
      break;
    case Experiment::Shorth:
      if (component == "m") return compute_lemma1_rate({2, 2, {{1, half}, {0, Fraction(2, 3)}}}).tau_a;
      if (component == "r") return compute_lemma1_rate({2, 2, {{1, half}}}).tau_a;
      break;
    case Experiment::Kmeans: {
      const auto r = compute_theorem3_rates({3, 2, {{2, 1}, {2, 1}, {2, 1}}});
      if (component == "delta_s" || component == "eps_d") return r.tau_a;
      if (component == "delta_d" || component == "eps_s") return r.tau_b;
      break;
    }
  }
  throw ValidationError("no theoretical rate for " + std::string(to_string(e)) + " component " + std::string(component));
}

struct LassoParams {
  double lambda0 = 2.0;
  double gamma = 0.5;
  double sigma = 1.0;
  double beta1 = 1.0;
  double beta2 = 0.0;
  /// One design per n shared by all replicates instead of a fresh design per replicate.
  bool fixed_design = false;
};

struct LadderConfig {
  Experiment experiment = Experiment::Shorth;
  std::vector<std::size_t> n_values;
  std::size_t replicates = 50;
  std::uint64_t master_seed = 1;
  unsigned threads = 1;
  LassoParams lasso;
};

inline void validate(const LadderConfig& cfg) {
  detail::require(!cfg.n_values.empty(), "ladder: n_values must not be empty");
  for (std::size_t i = 1; i < cfg.n_values.size(); ++i)
    detail::require(cfg.n_values[i] > cfg.n_values[i - 1], "ladder: n_values must be strictly increasing");
  detail::require(cfg.replicates >= 50, "ladder: need at least 50 replicates per n");
  const std::size_t min_n = cfg.experiment == Experiment::Lasso ? 3 : (cfg.experiment == Experiment::Shorth ? 2 : 4);
  detail::require(cfg.n_values.front() >= min_n, "ladder: smallest n too small for the estimator");
  if (cfg.experiment == Experiment::Lasso) {
    detail::require(cfg.lasso.gamma > 0 && cfg.lasso.gamma <= 1, "ladder: lasso gamma must lie in (0, 1]");
    detail::require(cfg.lasso.lambda0 >= 0 && cfg.lasso.sigma >= 0, "ladder: lasso lambda0 and sigma must be >= 0");
  }
}

struct LadderRecord {
  Experiment experiment = Experiment::Shorth;
  std::size_t n = 0;
  std::size_t replicate = 0;
  std::string component;
  /// Estimate minus truth; NaN when the replicate failed.
  double error = 0.0;
  bool zero_flag = false;
  /// "Cv"/"Ch" on the k-means split record, empty otherwise.
  std::string choice;
  bool tie_flag = false;
  /// '|'-separated diagnostics, e.g. "left_neighborhood" or "failed".
  std::string diag_flags;
};

/// Stream for (experiment, n, replicate, purpose); reconstructible from the master seed.
inline SeedStream replicate_stream(std::uint64_t master_seed, Experiment e, std::size_t n, std::size_t replicate,
                                   std::uint64_t purpose) {
  return {master_seed, stream_index_of({static_cast<std::uint64_t>(e) + 1, n, replicate, purpose})};
}

namespace detail {

inline std::string join_flags(std::initializer_list<std::pair<bool, std::string_view>> flags) {
  std::string out;
  for (auto [on, name] : flags)
    if (on) {
      if (!out.empty()) out += '|';
      out += name;
    }
  return out;
}

inline std::vector<LadderRecord> lasso_replicate(const LadderConfig& cfg, std::size_t n, std::size_t r) {
  const auto& p = cfg.lasso;
  LassoConfig lc;
  lc.beta_true = Eigen::Vector2d(p.beta1, p.beta2);
  lc.gamma = p.gamma;
  lc.lambda0 = p.lambda0;
  lc.sigma = p.sigma;
  lc.design = generate_lasso_design(n, 2, replicate_stream(cfg.master_seed, cfg.experiment, n, p.fixed_design ? 0 : r, 0));
  Rng noise(replicate_stream(cfg.master_seed, cfg.experiment, n, r, 1));
  const Eigen::VectorXd y = simulate_lasso_responses(lc.design, lc.beta_true, p.sigma, noise);
  const LassoFit fit = fit_bridge_lasso(y, lc);
  const std::string diag = fit.widenings > 0 ? "box_widened" : "";
  return {{cfg.experiment, n, r, "alpha1", fit.alpha_hat[0] - p.beta1, fit.zero_flags[0], "", false, diag},
          {cfg.experiment, n, r, "alpha2", fit.alpha_hat[1] - p.beta2, fit.zero_flags[1], "", false, diag}};
}

inline std::vector<LadderRecord> shorth_replicate(const LadderConfig& cfg, std::size_t n, std::size_t r,
                                                  const ShorthPopulation& pop) {
  Rng rng(replicate_stream(cfg.master_seed, cfg.experiment, n, r, 0));
  std::vector<double> x(n);
  for (auto& v : x) v = rng.normal();
  const ShorthFit fit = fit_shorth(x);
  return {{cfg.experiment, n, r, "m", fit.m - pop.mu, false, "", false, ""},
          {cfg.experiment, n, r, "r", fit.r - pop.rho, false, "", false, ""}};
}

inline std::vector<LadderRecord> kmeans_replicate(const LadderConfig& cfg, std::size_t n, std::size_t r) {
  const auto pts = sample_two_line(n, replicate_stream(cfg.master_seed, cfg.experiment, n, r, 0));
  const KmeansGlobal g = kmeans_global(pts);
  const auto& v = g.coords_v;
  const std::string diag = join_flags({{v.empty_cluster_repaired, "empty_cluster_repaired"},
                                       {v.left_neighborhood, "left_neighborhood"}});
  const std::string split_diag =
      join_flags({{g.coords_h.empty_cluster_repaired, "empty_cluster_repaired_h"},
                  {g.coords_h.left_neighborhood, "left_neighborhood_h"}});
  const auto e = cfg.experiment;
  return {{e, n, r, "delta_s", v.local.delta_s, false, "", false, diag},
          {e, n, r, "eps_d", v.local.eps_d, false, "", false, diag},
          {e, n, r, "delta_d", v.local.delta_d, false, "", false, diag},
          {e, n, r, "eps_s", v.local.eps_s, false, "", false, diag},
          {e, n, r, "split", v.w - g.coords_h.w, false, std::string(to_string(g.choice)), g.tie, split_diag}};
}

}  // namespace detail

/// Every (n, replicate) pair is an independent task; output is sorted by n, then
/// replicate, then component regardless of scheduling. A replicate whose estimator
/// throws yields NaN-error records flagged "failed"; more than 1% failures abort.
inline std::vector<LadderRecord> run_ladder(const LadderConfig& cfg) {
  validate(cfg);
  const std::size_t per_n = cfg.replicates;
  const std::size_t tasks = cfg.n_values.size() * per_n;
  const auto comps = components_of(cfg.experiment);
  const ShorthPopulation pop = shorth_population();

  std::vector<std::vector<LadderRecord>> slots(tasks);
  parallel_for(tasks, cfg.threads, [&](std::size_t t) {
    const std::size_t n = cfg.n_values[t / per_n];
    const std::size_t r = t % per_n;
    try {
      switch (cfg.experiment) {
        case Experiment::Lasso: slots[t] = detail::lasso_replicate(cfg, n, r); break;
        case Experiment::Shorth: slots[t] = detail::shorth_replicate(cfg, n, r, pop); break;
        case Experiment::Kmeans: slots[t] = detail::kmeans_replicate(cfg, n, r); break;
      }
    } catch (const std::exception&) {
      slots[t].clear();
      for (const auto& c : comps)
        slots[t].push_back({cfg.experiment, n, r, c, std::numeric_limits<double>::quiet_NaN(), false, "", false, "failed"});
    }
  });

  std::size_t failed = 0;
  std::vector<LadderRecord> out;
  out.reserve(tasks * comps.size());
  for (auto& s : slots) {
    if (!s.empty() && s.front().diag_flags == "failed") ++failed;
    for (auto& rec : s) out.push_back(std::move(rec));
  }
  if (static_cast<double>(failed) > 0.01 * static_cast<double>(tasks))
    throw SolverError("run_ladder: " + std::to_string(failed) + " of " + std::to_string(tasks) +
                      " replicates failed (more than 1%)");
  return out;
}

enum class ErrorSummary { MedianAbs, Rmse };

struct RateEstimate {
  std::string component;
  double slope = 0.0;
  double slope_se = 0.0;
  double intercept = 0.0;
  std::size_t n_min = 0;
  std::size_t n_max = 0;
  /// (n, summary of |error|) per ladder rung.
  std::vector<std::pair<std::size_t, double>> points;
};

inline double summarize_abs(std::vector<double> abs_errors, ErrorSummary how) {
  if (how == ErrorSummary::Rmse) {
    double s = 0.0;
    for (double e : abs_errors) s += e * e;
    return std::sqrt(s / static_cast<double>(abs_errors.size()));
  }
  const std::size_t k = abs_errors.size();
  std::nth_element(abs_errors.begin(), abs_errors.begin() + static_cast<std::ptrdiff_t>(k / 2), abs_errors.end());
  const double hi = abs_errors[k / 2];
  if (k % 2 == 1) return hi;
  const double lo = *std::max_element(abs_errors.begin(), abs_errors.begin() + static_cast<std::ptrdiff_t>(k / 2));
  return 0.5 * (lo + hi);
}

/// OLS of log(summary |error|) on log(n). Failed (NaN) records are dropped;
/// exact-zero records are dropped only when `exclude_zero_flagged` is set.
inline RateEstimate fit_rate(std::span<const LadderRecord> records, std::string_view component,
                             ErrorSummary how = ErrorSummary::MedianAbs, bool exclude_zero_flagged = false) {
  std::map<std::size_t, std::vector<double>> by_n;
  for (const auto& r : records) {
    if (r.component != component || std::isnan(r.error)) continue;
    if (exclude_zero_flagged && r.zero_flag) continue;
    by_n[r.n].push_back(std::abs(r.error));
  }
  detail::require(by_n.size() >= 4, "fit_rate: need at least 4 distinct n for component " + std::string(component));
  RateEstimate est;
  est.component = component;
  std::vector<double> lx, ly;
  for (auto& [n, errs] : by_n) {
    detail::require(errs.size() >= 50, "fit_rate: need at least 50 replicates at n=" + std::to_string(n));
    const double s = summarize_abs(errs, how);
    if (!(s > 0.0))
      throw ValidationError("fit_rate: summary error is 0 at n=" + std::to_string(n) + " for component " +
                            std::string(component) + "; exclude exact-zero records or report a collapse instead");
    est.points.emplace_back(n, s);
    lx.push_back(std::log(static_cast<double>(n)));
    ly.push_back(std::log(s));
  }
  const auto k = static_cast<double>(lx.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= k;
  my /= k;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  est.slope = sxy / sxx;
  est.intercept = my - est.slope * mx;
  double rss = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    const double res = ly[i] - est.intercept - est.slope * lx[i];
    rss += res * res;
  }
  est.slope_se = std::sqrt(rss / (k - 2.0) / sxx);
  est.n_min = by_n.begin()->first;
  est.n_max = by_n.rbegin()->first;
  return est;
}

/// sup_x |F_a(x) - F_b(x)| by a merged sweep over the sorted samples.
inline double ks_two_sample(std::span<const double> a, std::span<const double> b) {
  detail::require(!a.empty() && !b.empty(), "ks_two_sample: samples must be nonempty");
  std::vector<double> x(a.begin(), a.end()), y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const auto na = static_cast<double>(x.size()), nb = static_cast<double>(y.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < x.size() && j < y.size()) {
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] == v) ++i;
    while (j < y.size() && y[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

struct ZeroFraction {
  double fraction = 0.0;
  double standard_error = 0.0;
  std::size_t count = 0;
};

inline ZeroFraction zero_fraction(std::span<const LadderRecord> records, std::string_view component,
                                  std::optional<std::size_t> n = std::nullopt) {
  std::size_t total = 0, zeros = 0;
  for (const auto& r : records) {
    if (r.component != component || (n && r.n != *n) || std::isnan(r.error)) continue;
    ++total;
    zeros += r.zero_flag ? 1 : 0;
  }
  detail::require(total >= 50, "zero_fraction: need at least 50 records");
  const double p = static_cast<double>(zeros) / static_cast<double>(total);
  return {p, std::sqrt(p * (1.0 - p) / static_cast<double>(total)), total};
}

/// n^rate * error for the records of one component at one n.
inline std::vector<double> rescaled_errors(std::span<const LadderRecord> records, std::string_view component,
                                           std::size_t n, double rate) {
  std::vector<double> out;
  const double scale = std::pow(static_cast<double>(n), rate);
  for (const auto& r : records)
    if (r.component == component && r.n == n && !std::isnan(r.error)) out.push_back(scale * r.error);
  return out;
}

inline void write_records_csv(std::ostream& os, std::span<const LadderRecord> records) {
  os << "experiment,n,replicate,component,error,zero_flag,choice,tie_flag,diag_flags\n";
  const auto old = os.precision(17);
  for (const auto& r : records)
    os << to_string(r.experiment) << ',' << r.n << ',' << r.replicate << ',' << r.component << ',' << r.error << ','
       << (r.zero_flag ? 1 : 0) << ',' << r.choice << ',' << (r.tie_flag ? 1 : 0) << ',' << r.diag_flags << '\n';
  os.precision(old);
}

}  // namespace mixrates

#pragma once

// Acceptance checks 1-9 with two tiers: Full (the reference sample sizes and
// thresholds) and Quick (reduced replicates, looser KS thresholds sized to the
// smaller samples). Each check returns its measured values and a verdict.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mixrates/errors.hpp"
#include "mixrates/harness.hpp"
#include "mixrates/lasso.hpp"
#include "mixrates/limits.hpp"
#include "mixrates/oracles.hpp"
#include "mixrates/random.hpp"
#include "mixrates/rates.hpp"
#include "mixrates/shorth.hpp"

namespace mixrates::acceptance {

enum class Tier { Quick, Full };

inline std::string_view to_string(Tier t) { return t == Tier::Quick ? "quick" : "full"; }

struct Options {
  Tier tier = Tier::Full;
  std::uint64_t seed = 20240601;
  unsigned threads = 1;
};

struct Measurement {
  std::string name;
  double value = 0.0;
  /// Human-readable bound, e.g. "<= 0.07" or "in [-0.40, -0.26]"; empty for diagnostics.
  std::string bound;
  bool ok = true;
};

struct CheckResult {
  int id = 0;
  std::string title;
  bool passed = false;
  std::vector<Measurement> measurements;
  /// Set when the check could not run to completion (the check then fails).
  std::string error;
  double seconds = 0.0;
};

inline std::string fmt6(double v) {
  std::ostringstream os;
  os << std::setprecision(6) << v;
  return os.str();
}

/// One line: "[PASS] 3 lasso first-component law: ks=0.0312 (<= 0.07); ...".
inline std::string summary_line(const CheckResult& r) {
  std::ostringstream os;
  os << (r.passed ? "[PASS] " : "[FAIL] ") << r.id << ' ' << r.title << ':';
  const char* sep = " ";
  for (const auto& m : r.measurements) {
    os << sep << m.name << '=' << fmt6(m.value);
    if (!m.bound.empty()) os << " (" << m.bound << (m.ok ? "" : ", violated") << ')';
    sep = "; ";
  }
  if (!r.error.empty()) os << sep << "error: " << r.error;
  os << " [" << fmt6(r.seconds) << " s]";
  return os.str();
}

namespace detail {

inline Measurement at_most(std::string name, double v, double limit) {
  return {std::move(name), v, "<= " + fmt6(limit), v <= limit};
}

inline Measurement at_least(std::string name, double v, double limit) {
  return {std::move(name), v, ">= " + fmt6(limit), v >= limit};
}

inline Measurement within(std::string name, double v, double lo, double hi) {
  return {std::move(name), v, "in [" + fmt6(lo) + ", " + fmt6(hi) + "]", v >= lo && v <= hi};
}

inline Measurement info(std::string name, double v) { return {std::move(name), v, "", true}; }

inline SeedStream limit_stream(const Options& o, int check, std::uint64_t purpose) {
  return {o.seed, stream_index_of({0xacce97ULL, static_cast<std::uint64_t>(check), purpose})};
}

inline bool full(const Options& o) { return o.tier == Tier::Full; }

inline LadderConfig ladder(const Options& o, Experiment e, std::vector<std::size_t> ns, std::size_t reps) {
  LadderConfig cfg;
  cfg.experiment = e;
  cfg.n_values = std::move(ns);
  cfg.replicates = reps;
  cfg.master_seed = o.seed;
  cfg.threads = o.threads;
  return cfg;
}

inline std::vector<double> component_column(const std::vector<KmeansLimitDraw>& d, double KmeansLimitDraw::*field) {
  std::vector<double> out;
  out.reserve(d.size());
  for (const auto& x : d) out.push_back(x.*field);
  return out;
}

}  // namespace detail

/// Exact rationals for the four worked two-block profiles.
inline CheckResult check_rate_calculus(const Options&) {
  CheckResult r{1, "rate calculus exactness"};
  struct Case {
    RateSpec spec;
    Fraction tau_a, tau_b;
    Regime regime;
  };
  const std::vector<Case> cases{
      {{4, 2, {}}, {1, 6}, {1, 2}, Regime::Decoupled},
      {{4, 2, {{2, 1}}}, {1, 6}, {1, 3}, Regime::Coupled},
      {{4, 2, {{3, 1}}}, {1, 6}, {1, 2}, Regime::Decoupled},
      {{3, 2, {{2, 1}, {2, 1}, {2, 1}}}, {1, 4}, {1, 2}, Regime::Decoupled},
  };
  int matched = 0;
  for (const auto& c : cases) {
    const auto res = compute_theorem3_rates(c.spec);
    matched += (res.tau_a == c.tau_a && res.tau_b == c.tau_b && res.regime == c.regime) ? 1 : 0;
  }
  r.measurements.push_back(detail::at_least("profiles_matched", matched, static_cast<double>(cases.size())));
  return r;
}

/// Zero fraction of the second lasso coefficient along the ladder.
inline CheckResult check_lasso_zero_collapse(const Options& o) {
  CheckResult r{2, "lasso exact-zero collapse"};
  const std::vector<std::size_t> ns{250, 500, 1000, 2000, 4000};
  const auto recs = run_ladder(detail::ladder(o, Experiment::Lasso, ns, detail::full(o) ? 500 : 100));
  std::vector<ZeroFraction> z;
  for (auto n : ns) z.push_back(zero_fraction(recs, "alpha2", n));
  int inversions = 0, large_inversions = 0;
  for (std::size_t i = 1; i < z.size(); ++i)
    if (z[i].fraction < z[i - 1].fraction) {
      ++inversions;
      const double se = std::hypot(z[i].standard_error, z[i - 1].standard_error);
      if (z[i - 1].fraction - z[i].fraction > 2.0 * se) ++large_inversions;
    }
  for (std::size_t i = 0; i + 1 < z.size(); ++i)
    r.measurements.push_back(detail::info("zero_fraction_n" + std::to_string(ns[i]), z[i].fraction));
  r.measurements.push_back(detail::at_least("zero_fraction_n4000", z.back().fraction, 0.80));
  r.measurements.push_back(detail::at_most("inversions", inversions, 1.0));
  r.measurements.push_back(detail::at_most("inversions_beyond_2se", large_inversions, 0.0));
  return r;
}

/// KS between sqrt(n)(alpha1_hat - 1) at n = 4000 and the Gaussian limit.
inline CheckResult check_lasso_first_component(const Options& o) {
  CheckResult r{3, "lasso first-component law"};
  const std::size_t n = 4000, reps = detail::full(o) ? 2000 : 400;
  const auto recs = run_ladder(detail::ladder(o, Experiment::Lasso, {n}, reps));
  const double rate = to_double(theoretical_rate(Experiment::Lasso, "alpha1"));
  const auto emp = rescaled_errors(recs, "alpha1", n, rate);
  const LassoParams p;
  const auto lim = sample_lasso_limits(1.0 / 3.0, p.lambda0, p.sigma, detail::limit_stream(o, 3, 0), reps);
  r.measurements.push_back(detail::at_most("ks", ks_two_sample(emp, lim), detail::full(o) ? 0.07 : 0.10));
  return r;
}

/// Log-log slopes for the shorth center and half-length.
inline CheckResult check_shorth_rates(const Options& o) {
  CheckResult r{4, "shorth rates"};
  const auto recs = run_ladder(detail::ladder(o, Experiment::Shorth, {1000, 2000, 4000, 8000, 16000, 32000, 64000},
                                              detail::full(o) ? 200 : 100));
  r.measurements.push_back(detail::within("slope_m", fit_rate(recs, "m").slope, -0.40, -0.26));
  r.measurements.push_back(detail::within("slope_r", fit_rate(recs, "r").slope, -0.58, -0.42));
  return r;
}

/// Rescaled shorth errors against Z/c1 (Var Z = 1/2) and the Chernoff argmax.
/// The Var Z = 1/4 comparison and the radius bias are reported as diagnostics.
inline CheckResult check_shorth_limits(const Options& o) {
  CheckResult r{5, "shorth limit laws"};
  const bool f = detail::full(o);
  const std::size_t n = f ? 64000 : 16000, reps = f ? 2000 : 400;
  const auto recs = run_ladder(detail::ladder(o, Experiment::Shorth, {n}, reps));
  const ShorthPopulation pop = shorth_population();

  const auto r_emp = rescaled_errors(recs, "r", n, to_double(theoretical_rate(Experiment::Shorth, "r")));
  const auto r_lim = sample_shorth_radius_limit(pop.c1, 0.5, detail::limit_stream(o, 5, 0), reps);
  const auto r_quarter = sample_shorth_radius_limit(pop.c1, 0.25, detail::limit_stream(o, 5, 1), reps);
  double mean = 0.0;
  for (double v : r_emp) mean += v;
  mean /= static_cast<double>(r_emp.size());

  const auto m_emp = rescaled_errors(recs, "m", n, to_double(theoretical_rate(Experiment::Shorth, "m")));
  const auto m_lim =
      sample_chernoff_argmax(default_chernoff_config(pop.c1, pop.c2, reps), detail::limit_stream(o, 5, 2)).values;

  r.measurements.push_back(detail::at_most("ks_radius_var_half", ks_two_sample(r_emp, r_lim), 0.06));
  r.measurements.push_back(detail::at_most("ks_center_chernoff", ks_two_sample(m_emp, m_lim), f ? 0.10 : 0.15));
  r.measurements.push_back(detail::info("ks_radius_var_quarter", ks_two_sample(r_emp, r_quarter)));
  r.measurements.push_back(detail::info("radius_mean", mean));
  return r;
}

/// Slopes of the four local coordinates of the C^v-initialized solution.
inline CheckResult check_kmeans_rates(const Options& o) {
  CheckResult r{6, "k-means rates"};
  const auto recs =
      run_ladder(detail::ladder(o, Experiment::Kmeans, {1000, 2000, 4000, 8000, 16000}, detail::full(o) ? 300 : 150));
  for (const char* c : {"delta_s", "eps_d"})
    r.measurements.push_back(detail::within(std::string("slope_") + c, fit_rate(recs, c).slope, -0.32, -0.18));
  for (const char* c : {"delta_d", "eps_s"})
    r.measurements.push_back(detail::within(std::string("slope_") + c, fit_rate(recs, c).slope, -0.60, -0.40));
  return r;
}

/// Fraction of replicates whose global minimizer is the C^v-type configuration.
inline CheckResult check_kmeans_split(const Options& o) {
  CheckResult r{7, "k-means split choice"};
  const std::size_t n = 10000;
  const auto recs = run_ladder(detail::ladder(o, Experiment::Kmeans, {n}, detail::full(o) ? 1000 : 300));
  std::size_t cv = 0, total = 0, ties = 0;
  for (const auto& rec : recs)
    if (rec.component == "split" && !std::isnan(rec.error)) {
      ++total;
      cv += rec.choice == "Cv" ? 1 : 0;
      ties += rec.tie_flag ? 1 : 0;
    }
  r.measurements.push_back(
      detail::within("fraction_cv", static_cast<double>(cv) / static_cast<double>(std::max<std::size_t>(total, 1)), 0.42,
                     0.58));
  r.measurements.push_back(detail::info("ties", static_cast<double>(ties)));
  return r;
}

/// KS of rescaled delta_s and delta_d errors against the limit sampler's marginals.
inline CheckResult check_kmeans_limit(const Options& o) {
  CheckResult r{8, "k-means limit comparison"};
  const bool f = detail::full(o);
  const std::size_t n = 16000, reps = f ? 2000 : 400;
  const auto recs = run_ladder(detail::ladder(o, Experiment::Kmeans, {n}, reps));
  const auto inputs = estimate_kmeans_cov(f ? 1000000 : 200000, detail::limit_stream(o, 8, 0));
  const auto draws = sample_kmeans_limit(inputs, detail::limit_stream(o, 8, 1), reps);
  const double limit = f ? 0.12 : 0.16;
  const auto ds = rescaled_errors(recs, "delta_s", n, to_double(theoretical_rate(Experiment::Kmeans, "delta_s")));
  const auto dd = rescaled_errors(recs, "delta_d", n, to_double(theoretical_rate(Experiment::Kmeans, "delta_d")));
  r.measurements.push_back(
      detail::at_most("ks_delta_s", ks_two_sample(ds, detail::component_column(draws, &KmeansLimitDraw::delta_s)), limit));
  r.measurements.push_back(
      detail::at_most("ks_delta_d", ks_two_sample(dd, detail::component_column(draws, &KmeansLimitDraw::delta_d)), limit));
  return r;
}

/// Solver-versus-oracle agreement on small instances.
inline CheckResult check_oracles(const Options& o) {
  CheckResult r{9, "oracle equivalences"};
  const bool f = detail::full(o);

  // Shorth against the O(n^2) enumeration.
  {
    Rng rng(detail::limit_stream(o, 9, 0));
    int mismatches = 0;
    for (int inst = 0; inst < 200; ++inst) {
      const auto n = static_cast<std::size_t>(2 + rng.bits() % 199);
      std::vector<double> x(n);
      for (auto& v : x) v = rng.normal();
      const ShorthFit fit = fit_shorth(x);
      const auto brute = oracle::shorth_brute_force(x);
      mismatches += (2.0 * fit.r != brute.width || fit.hi_index - fit.lo_index + 1 != brute.count) ? 1 : 0;
    }
    r.measurements.push_back(detail::at_most("shorth_mismatches", mismatches, 0.0));
  }

  // Bridge lasso against a 2001 x 2001 grid over the solver's search box.
  {
    Rng rng(detail::limit_stream(o, 9, 1));
    double worst = -1.0;
    const int instances = f ? 50 : 15;
    for (int inst = 0; inst < instances; ++inst) {
      LassoConfig cfg;
      cfg.lambda0 = rng.uniform(0.25, 3.0);
      cfg.beta_true = Eigen::Vector2d(rng.uniform(-1.5, 1.5), inst % 2 == 0 ? 0.0 : rng.uniform(-1.5, 1.5));
      cfg.design = generate_lasso_design(6, 2, detail::limit_stream(o, 9, 100 + static_cast<std::uint64_t>(inst)));
      const Eigen::VectorXd y = simulate_lasso_responses(cfg.design, cfg.beta_true, cfg.sigma, rng);
      const LassoFit fit = fit_bridge_lasso(y, cfg);
      const double lambda_n = cfg.lambda0 * std::sqrt(6.0);
      const double solver = oracle::bridge_criterion_direct(cfg.design, y, fit.alpha_hat, lambda_n, cfg.gamma);
      const double brute = oracle::bridge_brute_force(cfg.design, y, lambda_n, cfg.gamma,
                                                      Eigen::Vector2d(fit.box_center), fit.box_half_width);
      worst = std::max(worst, (solver - brute) / std::max(std::abs(brute), 1e-12));
    }
    r.measurements.push_back(detail::at_most("lasso_relative_gap", worst, 1e-4));
  }

  // Closed-form t* against direct minimization.
  {
    Rng rng(detail::limit_stream(o, 9, 2));
    double worst = 0.0;
    for (int inst = 0; inst < 100; ++inst) {
      const double ds = rng.normal(), ed = rng.normal(), zdd = 2.0 * rng.normal(), zes = 2.0 * rng.normal();
      const auto t = kmeans_t_star(ds, ed, zdd, zes);
      const auto u = oracle::kmeans_t_numeric(ds, ed, zdd, zes);
      worst = std::max({worst, std::abs(t[0] - u[0]), std::abs(t[1] - u[1])});
    }
    r.measurements.push_back(detail::at_most("t_star_max_abs_diff", worst, 1e-8));
  }

  // Scaling law: argmax for (c1, c2) equals (sqrt(c1)/|c2|)^{2/3} times the (1, -1) argmax in law.
  {
    const std::size_t draws = f ? 10000 : 4000;
    const auto base = sample_chernoff_argmax(default_chernoff_config(1.0, -1.0, draws), detail::limit_stream(o, 9, 3));
    double worst = 0.0;
    std::uint64_t purpose = 4;
    for (auto [c1, c2] : {std::pair{4.0, -2.0}, {4.0, -1.0}}) {
      const double scale = std::pow(std::sqrt(c1) / std::abs(c2), 2.0 / 3.0);
      std::vector<double> scaled = base.values;
      for (auto& v : scaled) v *= scale;
      const auto other =
          sample_chernoff_argmax(default_chernoff_config(c1, c2, draws), detail::limit_stream(o, 9, purpose++));
      worst = std::max(worst, ks_two_sample(scaled, other.values));
    }
    r.measurements.push_back(detail::at_most("chernoff_scaling_ks", worst, f ? 0.03 : 0.05));
  }

  // Finite-difference check of the k-means score linearization.
  {
    const auto sample = sample_two_line(200000, detail::limit_stream(o, 9, 6));
    std::vector<Eigen::Vector4d> dirs{Eigen::Vector4d::UnitX(), Eigen::Vector4d::UnitY(), Eigen::Vector4d::UnitZ(),
                                      Eigen::Vector4d::UnitW(), Eigen::Vector4d(0.5, 0.5, 0.5, 0.5)};
    double worst = 0.0;
    for (const auto& c : kmeans_linearization_checks(sample, dirs)) worst = std::max(worst, c.relative_error);
    r.measurements.push_back(detail::at_most("linearization_relative_error", worst, 1e-2));
  }
  return r;
}

struct CheckEntry {
  int id;
  std::string_view title;
  std::function<CheckResult(const Options&)> run;
};

inline const std::vector<CheckEntry>& registry() {
  static const std::vector<CheckEntry> checks{
      {1, "rate calculus exactness", check_rate_calculus},
      {2, "lasso exact-zero collapse", check_lasso_zero_collapse},
      {3, "lasso first-component law", check_lasso_first_component},
      {4, "shorth rates", check_shorth_rates},
      {5, "shorth limit laws", check_shorth_limits},
      {6, "k-means rates", check_kmeans_rates},
      {7, "k-means split choice", check_kmeans_split},
      {8, "k-means limit comparison", check_kmeans_limit},
      {9, "oracle equivalences", check_oracles},
  };
  return checks;
}

/// Runs one check; exceptions become a failed result carrying the message.
inline CheckResult run_check(int id, const Options& o) {
  for (const auto& e : registry())
    if (e.id == id) {
      const auto start = std::chrono::steady_clock::now();
      CheckResult r;
      try {
        r = e.run(o);
        r.passed = r.error.empty() && std::all_of(r.measurements.begin(), r.measurements.end(),
                                                  [](const Measurement& m) { return m.ok; });
      } catch (const std::exception& ex) {
        r = {id, std::string(e.title), false, {}, ex.what()};
      }
      r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      return r;
    }
  throw ValidationError("unknown acceptance check " + std::to_string(id) + " (expected 1-9)");
}

}  // namespace mixrates::acceptance

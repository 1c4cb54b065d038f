#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mixrates/acceptance.hpp"
#include "mixrates/config.hpp"
#include "mixrates/harness.hpp"
#include "mixrates/limits.hpp"
#include "mixrates/rates.hpp"
#include "mixrates/shorth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace mixrates;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUnexpected = 1;
constexpr int kExitUsage = 2;
constexpr int kExitInvalid = 3;
constexpr int kExitVerifyFailed = 4;
constexpr int kExitSolver = 5;

constexpr const char* kExitCodeHelp =
    "Exit codes: 0 success; 1 unexpected error; 2 usage error (unknown flag or subcommand);\n"
    "3 invalid configuration or parameters; 4 verify ran and a check failed; 5 numerical solver failure.";

/// Rounds to 6 significant digits for reports.
double sig6(double v) {
  if (!std::isfinite(v)) return v;
  return std::stod(acceptance::fmt6(v));
}

json sig6_or_null(double v) { return std::isfinite(v) ? json(sig6(v)) : json(nullptr); }

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

void write_file(const fs::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << content;
}

json checks_json(const std::vector<acceptance::CheckResult>& results) {
  json arr = json::array();
  for (const auto& r : results) {
    json m = json::array();
    for (const auto& x : r.measurements)
      m.push_back({{"name", x.name}, {"value", sig6_or_null(x.value)}, {"bound", x.bound}, {"ok", x.ok}});
    json entry{{"id", r.id}, {"title", r.title}, {"passed", r.passed}, {"measurements", m},
               {"seconds", sig6(r.seconds)}};
    if (!r.error.empty()) entry["error"] = r.error;
    arr.push_back(entry);
  }
  return arr;
}

json manifest_json(const json& config, std::uint64_t seed, const std::string& start, const std::string& end,
                   const std::vector<acceptance::CheckResult>& checks) {
  return {{"tool", "mixrates"},        {"version", MIXRATES_VERSION}, {"config", config},
          {"master_seed", seed},       {"started_at", start},         {"finished_at", end},
          {"checks", checks_json(checks)}};
}

// ---------------------------------------------------------------------------
// rates

struct RatesArgs {
  std::string alpha, beta;
  std::vector<std::string> terms;
  bool lemma = false;
};

std::pair<Fraction, Fraction> parse_term(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw ValidationError("term '" + text + "' must be written gamma:eta");
  return {parse_fraction(text.substr(0, colon)), parse_fraction(text.substr(colon + 1))};
}

int run_rates(const RatesArgs& a) {
  const Fraction alpha = parse_fraction(a.alpha), beta = parse_fraction(a.beta);
  json out;
  if (a.lemma) {
    Lemma1Spec spec{alpha, beta, {}};
    for (const auto& t : a.terms) {
      const auto [g, e] = parse_term(t);
      spec.noise_terms.push_back({g, e});
    }
    const auto r = compute_lemma1_rate(spec);
    out = {{"tau_a", to_string(r.tau_a)}, {"b_rate", to_string(r.b_rate)}};
  } else {
    RateSpec spec{alpha, beta, {}};
    for (const auto& t : a.terms) {
      const auto [g, e] = parse_term(t);
      spec.terms.push_back({g, e});
    }
    const auto r = compute_theorem3_rates(spec);
    json lambdas = json::array();
    for (const auto& l : r.lambdas) lambdas.push_back(to_string(l));
    out = {{"tau_a", to_string(r.tau_a)},
           {"tau_b", to_string(r.tau_b)},
           {"lambda0", to_string(r.lambda0)},
           {"lambdas", lambdas},
           {"active_indices", r.active_indices},
           {"lambda0_active", r.lambda0_active},
           {"regime", std::string(to_string(r.regime))}};
  }
  std::cout << out.dump(2) << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateArgs {
  std::string config_file;
  ConfigMap overrides;
  std::string out_dir = "mixrates-out";
};

/// Limit-law draws matching the rescaled errors of `component`, or nullopt when the
/// configuration has no reference law.
std::optional<std::vector<double>> limit_draws(const LadderConfig& cfg, const std::string& component,
                                               std::size_t draws, std::optional<KmeansLimitInputs>& kmeans_inputs) {
  const SeedStream s{cfg.master_seed, stream_index_of({0x11317ULL, fnv1a64(component)})};
  switch (cfg.experiment) {
    case Experiment::Lasso: {
      const auto& p = cfg.lasso;
      if (component != "alpha1" || p.beta1 != 1.0 || p.beta2 != 0.0 || p.gamma != 0.5 || p.fixed_design)
        return std::nullopt;
      return sample_lasso_limits(1.0 / 3.0, p.lambda0, p.sigma, s, draws);
    }
    case Experiment::Shorth: {
      const auto pop = shorth_population();
      if (component == "r") return sample_shorth_radius_limit(pop.c1, 0.5, s, draws);
      if (component == "m") return sample_chernoff_argmax(default_chernoff_config(pop.c1, pop.c2, draws), s).values;
      return std::nullopt;
    }
    case Experiment::Kmeans: {
      if (component == "split") return std::nullopt;
      if (!kmeans_inputs) kmeans_inputs = estimate_kmeans_cov(1000000, {cfg.master_seed, 0x5167aULL});
      const auto d = sample_kmeans_limit(*kmeans_inputs, s, draws);
      std::vector<double> out;
      for (const auto& x : d)
        out.push_back(component == "delta_s" ? x.delta_s
                      : component == "eps_d" ? x.eps_d
                      : component == "delta_d" ? x.delta_d
                                               : x.eps_s);
      return out;
    }
  }
  return std::nullopt;
}

void write_two_columns(const fs::path& p, const std::string& header, const std::vector<double>& a,
                       const std::vector<double>& b) {
  std::ostringstream os;
  os << header << '\n' << std::setprecision(17);
  for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i) os << a[i] << ',' << b[i] << '\n';
  write_file(p, os.str());
}

int run_simulate(const SimulateArgs& a) {
  const std::string start = utc_now();
  ConfigMap values;
  if (!a.config_file.empty()) {
    std::ifstream in(a.config_file);
    if (!in) throw ValidationError("cannot open config file '" + a.config_file + "'");
    values = parse_config(in);
  }
  for (const auto& [k, v] : a.overrides) values[k] = v;
  LadderConfig base;
  base.threads = default_thread_count();
  const LadderConfig cfg = ladder_config_from(values, base);

  const fs::path out_dir(a.out_dir);
  fs::create_directories(out_dir / "plotdata");

  const auto records = run_ladder(cfg);
  std::ostringstream csv;
  write_records_csv(csv, records);
  write_file(out_dir / "records.csv", csv.str());

  json summary{{"experiment", std::string(to_string(cfg.experiment))},
               {"replicates", cfg.replicates},
               {"n_values", cfg.n_values}};
  json rates = json::array(), zeros = json::object(), ks = json::array();
  std::optional<KmeansLimitInputs> kmeans_inputs;
  const std::size_t n_top = cfg.n_values.back();

  for (const auto& comp : components_of(cfg.experiment)) {
    if (comp == "split") {
      std::size_t cv = 0, total = 0;
      for (const auto& r : records)
        if (r.component == comp && r.n == n_top && !std::isnan(r.error)) {
          ++total;
          cv += r.choice == "Cv" ? 1 : 0;
        }
      summary["split_fraction_cv"] = {{"n", n_top},
                                      {"fraction", sig6(static_cast<double>(cv) / static_cast<double>(total))},
                                      {"replicates", total}};
      continue;
    }

    json zf = json::array();
    if (cfg.experiment == Experiment::Lasso) {
      for (auto n : cfg.n_values) {
        const auto z = zero_fraction(records, comp, n);
        zf.push_back({{"n", n}, {"fraction", sig6(z.fraction)}, {"se", sig6(z.standard_error)}, {"count", z.count}});
      }
      zeros[comp] = zf;
    }

    json entry{{"component", comp}};
    try {
      entry["theoretical_slope"] = sig6(-to_double(theoretical_rate(cfg.experiment, comp)));
    } catch (const ValidationError&) {
    }
    const bool collapsed = cfg.experiment == Experiment::Lasso && zero_fraction(records, comp, n_top).fraction > 0.9;
    if (collapsed) {
      entry["status"] = "collapsed to 0";
    } else if (cfg.n_values.size() < 4) {
      entry["status"] = "rate fit needs at least 4 distinct n";
    } else {
      try {
        const auto est = fit_rate(records, comp);
        entry["status"] = "fitted";
        entry["slope"] = sig6(est.slope);
        entry["slope_se"] = sig6(est.slope_se);
        entry["intercept"] = sig6(est.intercept);
        entry["n_min"] = est.n_min;
        entry["n_max"] = est.n_max;
        std::vector<double> lx, ly;
        for (auto [n, s] : est.points) {
          lx.push_back(std::log(static_cast<double>(n)));
          ly.push_back(std::log(s));
        }
        write_two_columns(out_dir / "plotdata" / ("rate_" + comp + ".csv"), "log_n,log_median_abs_error", lx, ly);
      } catch (const ValidationError& e) {
        entry["status"] = std::string("not fitted: ") + e.what();
      }
    }
    rates.push_back(entry);

    if (entry.contains("theoretical_slope") && !collapsed) {
      const double rate = to_double(theoretical_rate(cfg.experiment, comp));
      auto emp = rescaled_errors(records, comp, n_top, rate);
      if (auto lim = limit_draws(cfg, comp, emp.size(), kmeans_inputs)) {
        ks.push_back({{"component", comp},
                      {"n", n_top},
                      {"rate", to_string(theoretical_rate(cfg.experiment, comp))},
                      {"statistic", sig6(ks_two_sample(emp, *lim))},
                      {"n_empirical", emp.size()},
                      {"n_limit", lim->size()}});
        std::sort(emp.begin(), emp.end());
        std::sort(lim->begin(), lim->end());
        write_two_columns(out_dir / "plotdata" / ("overlay_" + comp + ".csv"), "rescaled_error,limit_draw", emp, *lim);
      }
    }
  }
  summary["rates"] = rates;
  if (cfg.experiment == Experiment::Lasso) summary["zero_fractions"] = zeros;
  summary["ks"] = ks;
  std::size_t failed = 0;
  for (const auto& r : records) failed += r.diag_flags == "failed" ? 1 : 0;
  summary["failed_records"] = failed;
  write_file(out_dir / "summary.json", summary.dump(2) + "\n");

  json config = to_config_map(cfg);
  json manifest = manifest_json(config, cfg.master_seed, start, utc_now(), {});
  manifest["records_fnv1a64"] = hex64(fnv1a64(csv.str()));
  write_file(out_dir / "manifest.json", manifest.dump(2) + "\n");

  std::cout << summary.dump(2) << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------------------
// limit

struct LimitArgs {
  std::string law;
  std::size_t draws = 1000;
  std::uint64_t seed = 1;
  std::string out;
  std::optional<double> c1, c2, horizon, step;
  double c11 = 1.0 / 3.0, lambda0 = 2.0, sigma = 1.0, var_z = 0.5;
  std::size_t cov_samples = 1000000;
};

int run_limit(const LimitArgs& a) {
  const SeedStream s{a.seed, stream_index_of({0x1abc1ULL})};
  std::ostringstream os;
  os << std::setprecision(17);
  if (a.law == "chernoff") {
    const auto pop = shorth_population();
    auto cfg = default_chernoff_config(a.c1.value_or(pop.c1), a.c2.value_or(pop.c2), a.draws);
    if (a.horizon) cfg.horizon = *a.horizon;
    if (a.step) cfg.step = *a.step;
    os << "argmax\n";
    for (double v : sample_chernoff_argmax(cfg, s).values) os << v << '\n';
  } else if (a.law == "lasso") {
    os << "u\n";
    for (double v : sample_lasso_limits(a.c11, a.lambda0, a.sigma, s, a.draws)) os << v << '\n';
  } else if (a.law == "shorth-radius") {
    os << "radius\n";
    for (double v : sample_shorth_radius_limit(a.c1.value_or(shorth_population().c1), a.var_z, s, a.draws))
      os << v << '\n';
  } else {
    const auto inputs = estimate_kmeans_cov(a.cov_samples, s.child(1));
    os << "delta_s,eps_d,delta_d,eps_s\n";
    for (const auto& d : sample_kmeans_limit(inputs, s.child(2), a.draws))
      os << d.delta_s << ',' << d.eps_d << ',' << d.delta_d << ',' << d.eps_s << '\n';
  }
  if (a.out.empty()) {
    std::cout << os.str();
  } else {
    write_file(a.out, os.str());
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// verify

struct VerifyArgs {
  bool quick = false;
  std::vector<int> checks;
  std::string out_dir;
  acceptance::Options opts;
};

int run_verify(VerifyArgs a) {
  const std::string start = utc_now();
  a.opts.tier = a.quick ? acceptance::Tier::Quick : acceptance::Tier::Full;
  if (a.checks.empty())
    for (const auto& e : acceptance::registry()) a.checks.push_back(e.id);
  std::vector<acceptance::CheckResult> results;
  bool all = true;
  for (int id : a.checks) {
    results.push_back(acceptance::run_check(id, a.opts));
    std::cout << acceptance::summary_line(results.back()) << std::endl;
    all = all && results.back().passed;
  }
  if (!a.out_dir.empty()) {
    fs::create_directories(a.out_dir);
    const json config{{"tier", std::string(acceptance::to_string(a.opts.tier))},
                      {"seed", a.opts.seed},
                      {"threads", a.opts.threads},
                      {"checks", a.checks}};
    write_file(fs::path(a.out_dir) / "manifest.json",
               manifest_json(config, a.opts.seed, start, utc_now(), results).dump(2) + "\n");
  }
  std::cout << (all ? "verify: all checks passed" : "verify: at least one check failed") << std::endl;
  return all ? kExitOk : kExitVerifyFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mixrates: rate calculus and Monte Carlo experiments for estimators with mixed convergence rates"};
  app.footer(kExitCodeHelp);
  app.require_subcommand(1);
  app.set_version_flag("--version", MIXRATES_VERSION);

  RatesArgs rates;
  auto* rates_cmd = app.add_subcommand("rates", "Exact convergence exponents from a criterion profile (JSON)");
  rates_cmd->add_option("--alpha", rates.alpha, "Slow-block curvature exponent (integer, p/q or decimal)")->required();
  rates_cmd->add_option("--beta", rates.beta, "Fast-block curvature exponent")->required();
  rates_cmd->add_option("--term", rates.terms, "Cross term gamma:eta, i.e. |a|^gamma |b|^eta; repeatable");
  rates_cmd->add_flag("--lemma1", rates.lemma,
                      "Single-rate bound instead: --term gives noise terms gamma:eta of order n^{-eta}|.|^gamma");

  SimulateArgs sim;
  auto* sim_cmd = app.add_subcommand("simulate", "Run a ladder of sample sizes and write records, summary and plot data");
  sim_cmd->add_option("--config", sim.config_file, "File of key = value lines ('#' comments); flags override it");
  sim_cmd->add_option("--out-dir", sim.out_dir, "Output directory")->capture_default_str();
  for (const auto& key : ladder_config_keys()) {
    std::string flag = "--" + key;
    std::replace(flag.begin(), flag.end(), '_', '-');
    sim_cmd->add_option_function<std::string>(
        flag, [&sim, key](const std::string& v) { sim.overrides[key] = v; },
        "Config key '" + key + "'");
  }

  LimitArgs lim;
  auto* lim_cmd = app.add_subcommand(
      "limit",
      "Draws from a limiting law as CSV.\n"
      "  chernoff:      argmax_t [c2 t^2 + sqrt(c1) B(t)], B two-sided Brownian motion. Some statements of the\n"
      "                 shorth limit write the drift as c2 t; the quadratic drift c2 t^2 is the one sampled here.\n"
      "                 Defaults c1, c2 are the standard normal shorth constants.\n"
      "  lasso:         N(-lambda0/(4 C11), sigma^2/C11)\n"
      "  shorth-radius: Z/c1 with Z ~ N(0, var_z)\n"
      "  kmeans:        (s*, t*) for the two-line law, covariance estimated by Monte Carlo");
  lim_cmd->add_option("--law", lim.law, "chernoff | lasso | kmeans | shorth-radius")
      ->required()
      ->check(CLI::IsMember({"chernoff", "lasso", "kmeans", "shorth-radius"}));
  lim_cmd->add_option("--draws", lim.draws, "Number of draws")->capture_default_str()->check(CLI::PositiveNumber);
  lim_cmd->add_option("--seed", lim.seed, "Master seed")->capture_default_str();
  lim_cmd->add_option("--out", lim.out, "CSV file (default: standard output)");
  lim_cmd->add_option("--c1", lim.c1, "Brownian scale (chernoff) or divisor (shorth-radius)");
  lim_cmd->add_option("--c2", lim.c2, "Drift coefficient, negative (chernoff)");
  lim_cmd->add_option("--horizon", lim.horizon, "Half-width T of the simulation window (chernoff)");
  lim_cmd->add_option("--step", lim.step, "Grid step h; T/h must be an integer (chernoff)");
  lim_cmd->add_option("--c11", lim.c11, "Design second moment (lasso)")->capture_default_str();
  lim_cmd->add_option("--lambda0", lim.lambda0, "Penalty level (lasso)")->capture_default_str();
  lim_cmd->add_option("--sigma", lim.sigma, "Noise standard deviation (lasso)")->capture_default_str();
  lim_cmd->add_option("--var-z", lim.var_z, "Variance of Z (shorth-radius)")->capture_default_str();
  lim_cmd->add_option("--cov-samples", lim.cov_samples, "Monte Carlo size for the covariance (kmeans)")
      ->capture_default_str();

  VerifyArgs ver;
  ver.opts.threads = default_thread_count();
  auto* ver_cmd = app.add_subcommand("verify", "Run the acceptance checks; exit 0 iff all pass");
  auto* quick = ver_cmd->add_flag("--quick", ver.quick, "Reduced replicates and sample sizes (minutes)");
  ver_cmd->add_flag("--full", "Reference sizes and thresholds (default)")->excludes(quick);
  ver_cmd->add_option("--check", ver.checks, "Run only these checks (1-9); repeatable")->check(CLI::Range(1, 9));
  ver_cmd->add_option("--seed", ver.opts.seed, "Master seed")->capture_default_str();
  ver_cmd->add_option("--threads", ver.opts.threads, "Worker threads")->check(CLI::PositiveNumber);
  ver_cmd->add_option("--out-dir", ver.out_dir, "Write manifest.json with per-check results here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*rates_cmd) return run_rates(rates);
    if (*sim_cmd) return run_simulate(sim);
    if (*lim_cmd) return run_limit(lim);
    if (*ver_cmd) return run_verify(ver);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const SolverError& e) {
    std::cerr << "solver error: " << e.what() << '\n';
    return kExitSolver;
  } catch (const std::exception& e) {
    std::cerr << "unexpected error: " << e.what() << '\n';
    return kExitUnexpected;
  }
  return kExitUsage;
}

#pragma once

// Exact rate calculus for two-block M-estimators whose population criterion
// has a singular Hessian at the optimum.
//
// A profile (alpha, beta, {(gamma_i, eta_i)}) describes a criterion that grows
// like |a|^alpha along the slow block, |b|^beta along the fast block, and
// carries mixed terms phi_i(a, b) homogeneous of degree gamma_i in a and
// eta_i in b. All exponents are exact rationals so that the coupled/decoupled
// dichotomy (alpha*tau_a == beta*tau_b) is decided without rounding.

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <boost/rational.hpp>

#include "mixrates/errors.hpp"

namespace mixrates {

using Fraction = boost::rational<std::int64_t>;

/// Parses "3", "-2", "1/6", "2/1" or a finite decimal such as "0.25".
inline Fraction parse_fraction(std::string_view text) {
  auto fail = [&] { return ValidationError("not a fraction: '" + std::string(text) + "'"); };
  if (text.empty()) throw fail();

  auto parse_int = [&](std::string_view s) {
    std::int64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) throw fail();
    return v;
  };

  if (auto slash = text.find('/'); slash != std::string_view::npos) {
    const auto num = parse_int(text.substr(0, slash));
    const auto den = parse_int(text.substr(slash + 1));
    if (den == 0) throw ValidationError("zero denominator in '" + std::string(text) + "'");
    return Fraction(num, den);
  }
  if (auto dot = text.find('.'); dot != std::string_view::npos) {
    const auto frac = text.substr(dot + 1);
    if (frac.size() > 15 || frac.find_first_not_of("0123456789") != std::string_view::npos) throw fail();
    std::string digits(text.substr(0, dot));
    const bool negative = !digits.empty() && digits.front() == '-';
    if (digits.empty() || digits == "-" || digits == "+") digits += '0';
    std::int64_t scale = 1;
    for (std::size_t i = 0; i < frac.size(); ++i) scale *= 10;
    const auto whole = parse_int(digits);
    const auto part = frac.empty() ? 0 : parse_int(frac);
    return Fraction(whole * scale + (negative ? -part : part), scale);
  }
  return Fraction(parse_int(text));
}

/// "p/q" in lowest terms, or "p" when the denominator is one.
inline std::string to_string(const Fraction& f) {
  if (f.denominator() == 1) return std::to_string(f.numerator());
  return std::to_string(f.numerator()) + "/" + std::to_string(f.denominator());
}

inline double to_double(const Fraction& f) {
  return static_cast<double>(f.numerator()) / static_cast<double>(f.denominator());
}

/// Mixed term phi_i: homogeneous of degree gamma in the slow block, eta in the fast block.
struct CrossTerm {
  Fraction gamma;
  Fraction eta;
};

struct RateSpec {
  Fraction alpha;
  Fraction beta;
  std::vector<CrossTerm> terms;
};

enum class Regime { Coupled, Decoupled };

inline std::string_view to_string(Regime r) { return r == Regime::Coupled ? "coupled" : "decoupled"; }

struct RateResult {
  Fraction tau_a;
  Fraction tau_b;
  Fraction lambda0;
  std::vector<Fraction> lambdas;
  /// 1-based indices i with lambda_i == tau_b, matching the phi_i numbering.
  std::vector<std::size_t> active_indices;
  bool lambda0_active = false;
  Regime regime = Regime::Decoupled;
};

inline void validate(const RateSpec& spec) {
  if (!(spec.alpha > spec.beta && spec.beta > 1))
    throw ValidationError("rate profile violates alpha > beta > 1 (alpha=" + to_string(spec.alpha) +
                          ", beta=" + to_string(spec.beta) + ")");
  for (std::size_t i = 0; i < spec.terms.size(); ++i) {
    const auto& t = spec.terms[i];
    const auto idx = std::to_string(i + 1);
    if (t.gamma < 0) throw ValidationError("cross term " + idx + " violates gamma >= 0");
    if (t.eta <= 0) throw ValidationError("cross term " + idx + " violates eta > 0");
    if (t.eta >= spec.beta) throw ValidationError("cross term " + idx + " violates beta > eta");
    // A cross term that can turn negative is dominated by |a|^alpha + |b|^beta near the
    // origin only when its homogeneity degrees satisfy this weighted inequality.
    if (t.gamma / spec.alpha + t.eta / spec.beta < 1)
      throw ValidationError("cross term " + idx + " violates gamma/alpha + eta/beta >= 1 (growth condition)");
  }
}

/// Slow-block rate 1/(2(alpha-1)), the fast-block candidates lambda_0 = 1/(2(beta-1))
/// and lambda_i = tau_a*gamma_i/(beta-eta_i), their minimum tau_b and the regime.
inline RateResult compute_theorem3_rates(const RateSpec& spec) {
  validate(spec);
  RateResult out;
  out.tau_a = Fraction(1) / (2 * (spec.alpha - 1));
  out.lambda0 = Fraction(1) / (2 * (spec.beta - 1));
  out.tau_b = out.lambda0;
  out.lambdas.reserve(spec.terms.size());
  for (const auto& t : spec.terms) {
    out.lambdas.push_back(out.tau_a * t.gamma / (spec.beta - t.eta));
    out.tau_b = std::min(out.tau_b, out.lambdas.back());
  }
  out.lambda0_active = out.lambda0 == out.tau_b;
  for (std::size_t i = 0; i < out.lambdas.size(); ++i)
    if (out.lambdas[i] == out.tau_b) out.active_indices.push_back(i + 1);
  out.regime = spec.alpha * out.tau_a == spec.beta * out.tau_b ? Regime::Coupled : Regime::Decoupled;
  return out;
}

struct NoiseTerm {
  Fraction gamma;
  Fraction eta;
};

struct Lemma1Spec {
  Fraction alpha;
  Fraction beta;
  std::vector<NoiseTerm> noise_terms;
};

struct Lemma1Rates {
  Fraction tau_a;
  /// Preliminary fast-block rate alpha*tau_a/beta.
  Fraction b_rate;
};

/// Rate bound from a criterion bounded below by |a|^alpha + |b|^beta with noise of
/// order sum_i n^{-eta_i} |(a,b)|^{gamma_i}.
inline Lemma1Rates compute_lemma1_rate(const Lemma1Spec& spec) {
  if (spec.beta <= 0) throw ValidationError("lemma profile violates beta > 0");
  if (spec.alpha < spec.beta) throw ValidationError("lemma profile violates alpha >= beta");
  if (spec.noise_terms.empty()) throw ValidationError("lemma profile needs at least one noise term");
  std::optional<Fraction> tau;
  for (std::size_t i = 0; i < spec.noise_terms.size(); ++i) {
    const auto& t = spec.noise_terms[i];
    const auto idx = std::to_string(i + 1);
    if (t.gamma < 0 || t.eta < 0) throw ValidationError("noise term " + idx + " must be nonnegative");
    if (t.gamma >= spec.alpha) throw ValidationError("noise term " + idx + " violates gamma < alpha");
    const Fraction r = t.eta / (spec.alpha - t.gamma);
    tau = tau ? std::min(*tau, r) : r;
  }
  return {*tau, spec.alpha * *tau / spec.beta};
}

}  // namespace mixrates

#include <algorithm>
#include <random>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "mixrates/rates.hpp"

using namespace mixrates;

namespace {

const Fraction kHalf(1, 2);

RateSpec spec(Fraction a, Fraction b, std::vector<CrossTerm> terms) { return {a, b, std::move(terms)}; }

std::string validation_message(const RateSpec& s) {
  try {
    compute_theorem3_rates(s);
  } catch (const ValidationError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST(ParseFraction, AcceptsIntegersFractionsAndDecimals) {
  EXPECT_EQ(parse_fraction("4"), Fraction(4));
  EXPECT_EQ(parse_fraction("2/3"), Fraction(2, 3));
  EXPECT_EQ(parse_fraction("-6/4"), Fraction(-3, 2));
  EXPECT_EQ(parse_fraction("0.25"), Fraction(1, 4));
  EXPECT_EQ(parse_fraction("1.5"), Fraction(3, 2));
  EXPECT_THROW(parse_fraction("abc"), ValidationError);
  EXPECT_THROW(parse_fraction("1/0"), ValidationError);
  EXPECT_THROW(parse_fraction(""), ValidationError);
}

TEST(ParseFraction, PrintsReducedForm) {
  EXPECT_EQ(to_string(Fraction(2, 12)), "1/6");
  EXPECT_EQ(to_string(Fraction(4, 2)), "2");
  EXPECT_DOUBLE_EQ(to_double(Fraction(1, 4)), 0.25);
}

TEST(Theorem3, QuarticPlusQuadratic) {
  const auto r = compute_theorem3_rates(spec(4, 2, {}));
  EXPECT_EQ(r.tau_a, Fraction(1, 6));
  EXPECT_EQ(r.tau_b, Fraction(1, 2));
  EXPECT_EQ(r.lambda0, Fraction(1, 2));
  EXPECT_TRUE(r.lambda0_active);
  EXPECT_TRUE(r.active_indices.empty());
  EXPECT_EQ(r.regime, Regime::Decoupled);
}

TEST(Theorem3, CrossTermOutgrowingTheCurvatureIsRejected) {
  // |a| |b|^{1/2} is not dominated by a^4 + b^2: 1/4 + 1/4 < 1.
  EXPECT_NE(validation_message(spec(4, 2, {{1, kHalf}})).find("gamma/alpha + eta/beta >= 1"), std::string::npos);
  // Boundary case 2/4 + 1/2 = 1 is admitted.
  EXPECT_NO_THROW(compute_theorem3_rates(spec(4, 2, {{2, 1}})));
}

TEST(Theorem3, CoupledCase) {
  const auto r = compute_theorem3_rates(spec(4, 2, {{2, 1}}));
  EXPECT_EQ(r.tau_a, Fraction(1, 6));
  EXPECT_EQ(r.tau_b, Fraction(1, 3));
  EXPECT_EQ(r.regime, Regime::Coupled);
  EXPECT_EQ(r.active_indices, std::vector<std::size_t>{1});
  EXPECT_FALSE(r.lambda0_active);
}

TEST(Theorem3, CubicCrossTermTiesLambdaZero) {
  const auto r = compute_theorem3_rates(spec(4, 2, {{3, 1}}));
  EXPECT_EQ(r.tau_a, Fraction(1, 6));
  EXPECT_EQ(r.tau_b, Fraction(1, 2));
  EXPECT_EQ(r.lambdas, std::vector<Fraction>{Fraction(1, 2)});
  EXPECT_TRUE(r.lambda0_active);
  EXPECT_EQ(r.active_indices, std::vector<std::size_t>{1});
  EXPECT_EQ(r.regime, Regime::Decoupled);
}

TEST(Theorem3, KmeansProfile) {
  const auto r = compute_theorem3_rates(spec(3, 2, {{2, 1}, {2, 1}, {2, 1}}));
  EXPECT_EQ(r.tau_a, Fraction(1, 4));
  EXPECT_EQ(r.tau_b, Fraction(1, 2));
  EXPECT_EQ(r.regime, Regime::Decoupled);
  EXPECT_EQ(r.lambda0, Fraction(1, 2));
  EXPECT_EQ(r.lambdas, (std::vector<Fraction>{Fraction(1, 2), Fraction(1, 2), Fraction(1, 2)}));
  EXPECT_EQ(r.active_indices, (std::vector<std::size_t>{1, 2, 3}));
  EXPECT_TRUE(r.lambda0_active);
}

TEST(Theorem3, NoCrossTermsIsDecoupledWithStandardFastRate) {
  const auto r = compute_theorem3_rates(spec(3, 2, {}));
  EXPECT_EQ(r.tau_a, Fraction(1, 4));
  EXPECT_EQ(r.tau_b, Fraction(1, 2));
  EXPECT_EQ(r.regime, Regime::Decoupled);
}

TEST(Theorem3, ErrorsNameTheViolatedHypothesis) {
  EXPECT_NE(validation_message(spec(2, 4, {})).find("alpha > beta > 1"), std::string::npos);
  EXPECT_NE(validation_message(spec(2, 2, {})).find("alpha > beta > 1"), std::string::npos);
  EXPECT_NE(validation_message(spec(3, 1, {})).find("alpha > beta > 1"), std::string::npos);
  EXPECT_NE(validation_message(spec(4, 2, {{2, 3}})).find("beta > eta"), std::string::npos);
  EXPECT_NE(validation_message(spec(4, 2, {{2, 2}})).find("beta > eta"), std::string::npos);
  EXPECT_NE(validation_message(spec(4, 2, {{2, 0}})).find("eta > 0"), std::string::npos);
  EXPECT_NE(validation_message(spec(4, 2, {{-1, 1}})).find("gamma >= 0"), std::string::npos);
  EXPECT_NE(validation_message(spec(4, 2, {{0, 1}})).find("growth condition"), std::string::npos);
}

TEST(Lemma1, ExamplesFromTheCatalogue) {
  auto l = compute_lemma1_rate({2, 2, {{1, kHalf}}});
  EXPECT_EQ(l.tau_a, kHalf);
  EXPECT_EQ(l.b_rate, kHalf);

  l = compute_lemma1_rate({2, kHalf, {{1, kHalf}}});
  EXPECT_EQ(l.tau_a, kHalf);
  EXPECT_EQ(l.b_rate, Fraction(2));

  // Two-block k-means profile: curvature 3 and 2, noise n^{-1/2}|.|.
  l = compute_lemma1_rate({3, 2, {{1, kHalf}}});
  EXPECT_EQ(l.tau_a, Fraction(1, 4));
  EXPECT_EQ(l.b_rate, Fraction(3, 8));
}

TEST(Lemma1, RejectsInvalidProfiles) {
  EXPECT_THROW(compute_lemma1_rate({1, 2, {{0, kHalf}}}), ValidationError);
  EXPECT_THROW(compute_lemma1_rate({2, 0, {{0, kHalf}}}), ValidationError);
  EXPECT_THROW(compute_lemma1_rate({2, 2, {}}), ValidationError);
  EXPECT_THROW(compute_lemma1_rate({2, 2, {{2, kHalf}}}), ValidationError);
  EXPECT_THROW(compute_lemma1_rate({2, 2, {{-1, kHalf}}}), ValidationError);
}

// Random profiles with small rational exponents.
class RandomProfiles : public ::testing::Test {
 protected:
  std::mt19937_64 gen{12345};

  Fraction rational(int lo_num, int hi_num, int max_den) {
    std::uniform_int_distribution<int> den(1, max_den);
    const int d = den(gen);
    std::uniform_int_distribution<int> num(lo_num * d, hi_num * d);
    return {num(gen), d};
  }

  /// alpha > beta > 1, 0 < eta < beta, gamma/alpha + eta/beta >= 1.
  RateSpec random_spec(int terms) {
    RateSpec s;
    do {
      s.beta = rational(1, 4, 6);
      s.alpha = rational(1, 8, 6);
    } while (!(s.beta > 1 && s.alpha > s.beta));
    for (int i = 0; i < terms; ++i) {
      Fraction eta, gamma;
      do {
        eta = rational(0, 4, 6);
        gamma = rational(0, 8, 6);
      } while (!(eta > 0 && eta < s.beta && gamma / s.alpha + eta / s.beta >= 1));
      s.terms.push_back({gamma, eta});
    }
    return s;
  }
};

TEST_F(RandomProfiles, SlowBlockNeverOutpacesFastBlock) {
  for (int trial = 0; trial < 500; ++trial) {
    const auto s = random_spec(trial % 4);
    const auto r = compute_theorem3_rates(s);
    EXPECT_LE(s.alpha * r.tau_a, s.beta * r.tau_b) << "trial " << trial;
    EXPECT_LE(r.tau_b, r.lambda0);
    EXPECT_EQ(r.regime == Regime::Coupled, s.alpha * r.tau_a == s.beta * r.tau_b);
  }
}

TEST_F(RandomProfiles, TauBIsTheMinimumOfItsCandidates) {
  for (int trial = 0; trial < 500; ++trial) {
    const auto s = random_spec(1 + trial % 4);
    const auto r = compute_theorem3_rates(s);
    // Independent recomputation of the candidate list.
    const Fraction ta = Fraction(1) / (2 * (s.alpha - 1));
    Fraction best = Fraction(1) / (2 * (s.beta - 1));
    for (const auto& t : s.terms) best = std::min(best, ta * t.gamma / (s.beta - t.eta));
    EXPECT_EQ(r.tau_a, ta);
    EXPECT_EQ(r.tau_b, best);
    for (std::size_t idx : r.active_indices) EXPECT_EQ(r.lambdas.at(idx - 1), r.tau_b);
  }
}

TEST_F(RandomProfiles, AddingACrossTermNeverRaisesTauB) {
  for (int trial = 0; trial < 300; ++trial) {
    auto s = random_spec(trial % 3);
    const auto before = compute_theorem3_rates(s).tau_b;
    Fraction eta, gamma;
    do {
      eta = rational(0, 4, 6);
      gamma = rational(0, 8, 6);
    } while (!(eta > 0 && eta < s.beta && gamma / s.alpha + eta / s.beta >= 1));
    s.terms.push_back({gamma, eta});
    EXPECT_LE(compute_theorem3_rates(s).tau_b, before);
  }
}

TEST_F(RandomProfiles, Lemma1MatchesBruteForceMinimum) {
  for (int trial = 0; trial < 300; ++trial) {
    const Fraction beta = rational(1, 4, 5);
    Fraction alpha = beta + rational(0, 3, 5);
    if (!(beta > 0)) continue;
    std::vector<NoiseTerm> terms;
    for (int i = 0; i <= trial % 3; ++i) {
      Fraction g;
      do g = rational(0, 6, 5);
      while (!(g >= 0 && g < alpha));
      terms.push_back({g, rational(0, 2, 5)});
      if (terms.back().eta < 0) terms.back().eta = -terms.back().eta;
    }
    const auto r = compute_lemma1_rate({alpha, beta, terms});
    // The minimum is attained and is a lower bound for every term.
    bool attained = false;
    for (const auto& t : terms) {
      const Fraction v = t.eta / (alpha - t.gamma);
      EXPECT_LE(r.tau_a, v);
      attained = attained || v == r.tau_a;
    }
    EXPECT_TRUE(attained);
    EXPECT_EQ(r.b_rate, alpha * r.tau_a / beta);
  }
}

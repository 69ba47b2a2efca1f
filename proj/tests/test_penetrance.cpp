#include <gtest/gtest.h>

#include <random>

#include "mbmdr/penetrance.hpp"

using namespace mbmdr;

namespace {

// Rows are SNP A, columns SNP B.
const std::vector<double> kAdditiveExample{0.62, 0.62, 0.82, 0.62, 0.62, 0.82, 0.73, 0.73, 0.88};
const std::vector<double> kNoMarginals{0, 0, 1, 0, 0.5, 0, 1, 0, 0};

PenetranceTable no_marginal_table() { return make_hwe_table({0.5, 0.5}, kNoMarginals); }

double direct_prevalence(const std::vector<double>& f, const std::vector<GenotypeProbs>& p) {
  double k = 0.0;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) k += p[0][a] * p[1][b] * f[a * 3 + b];
  return k;
}

void expect_constant_marginals(const PenetranceTable& t, double tol) {
  // Marginalize all loci but one; the survivor must be flat.
  for (std::size_t keep = 0; keep < t.d(); ++keep) {
    PenetranceTable m = t;
    for (std::size_t k = t.d(); k-- > 0;)
      if (k != keep) m = marginal_penetrance(m, k);
    ASSERT_EQ(m.f.size(), 3u);
    EXPECT_NEAR(m.f[0], m.f[1], tol);
    EXPECT_NEAR(m.f[1], m.f[2], tol);
  }
}

}  // namespace

TEST(Hwe, KnownFrequencies) {
  const auto half = hwe_probs(0.5);
  EXPECT_DOUBLE_EQ(half[0], 0.25);
  EXPECT_DOUBLE_EQ(half[1], 0.5);
  EXPECT_DOUBLE_EQ(half[2], 0.25);
  const auto quarter = hwe_probs(0.25);
  EXPECT_DOUBLE_EQ(quarter[0], 0.5625);
  EXPECT_DOUBLE_EQ(quarter[1], 0.375);
  EXPECT_DOUBLE_EQ(quarter[2], 0.0625);
  for (double m = 0.01; m <= 0.5; m += 0.01) {
    const auto p = hwe_probs(m);
    EXPECT_NEAR(p[0] + p[1] + p[2], 1.0, 1e-15);
  }
}

TEST(Penetrance, NoMarginalExampleSummaries) {
  const auto t = no_marginal_table();
  EXPECT_NEAR(t.K, 0.25, 1e-15);
  EXPECT_NEAR(t.K, direct_prevalence(t.f, t.genotype_probs), 1e-15);
  // sum P(g)(f-K)^2 = 0.125, K(1-K) = 0.1875
  EXPECT_NEAR(t.h2, 2.0 / 3.0, 1e-12);
  for (std::size_t drop : {0u, 1u}) {
    const auto m = marginal_penetrance(t, drop);
    for (double v : m.f) EXPECT_NEAR(v, 0.25, 1e-15);
  }
}

TEST(Penetrance, ConstantTable) {
  const auto t = make_hwe_table({0.3, 0.2}, std::vector<double>(9, 0.37));
  EXPECT_NEAR(t.h2, 0.0, 1e-15);
  for (double v : marginal_penetrance(t, 1).f) EXPECT_NEAR(v, 0.37, 1e-15);
  EXPECT_TRUE(std::isnan(make_hwe_table({0.3}, {0.0, 0.0, 0.0}).h2));
}

TEST(Effects, AdditiveExampleIsAdditiveOnLogitScale) {
  const auto ev = penetrance_to_effects(kAdditiveExample, 2);
  EXPECT_NEAR(ev.effects.at({2, 0}), 0.505, 1e-3);
  EXPECT_NEAR(ev.effects.at({0, 2}), 1.027, 1e-3);
  EXPECT_NEAR(ev.effects.at({1, 0}), 0.0, 1e-12);
  EXPECT_NEAR(ev.effects.at({0, 1}), 0.0, 1e-12);
  for (const auto& [g, v] : ev.effects)
    if (g[0] != 0 && g[1] != 0) {
      EXPECT_LE(std::abs(v), 0.03) << g[0] << g[1];
    }
}

TEST(Effects, ScaleEffectOnPenetranceScale) {
  const auto lin = penetrance_scale_effects(kAdditiveExample, 2);
  EXPECT_NEAR(lin.effects.at({2, 2}), -0.05, 1e-12);
  const auto logit_scale = penetrance_to_effects(kAdditiveExample, 2);
  EXPECT_LT(std::abs(logit_scale.effects.at({2, 2})), std::abs(lin.effects.at({2, 2})));
}

TEST(Effects, LogitParametersReproduceExample) {
  EffectVector ev;
  ev.beta0 = logit(0.62);
  ev.effects[{2, 0}] = 0.5;
  ev.effects[{0, 2}] = 1.0;
  const auto f = effects_to_penetrance(ev, 2);
  for (std::size_t i = 0; i < f.size(); ++i) EXPECT_NEAR(f[i], kAdditiveExample[i], 0.005) << i;
}

TEST(Effects, ZeroEffectsGiveConstantTable) {
  EffectVector ev;
  ev.beta0 = 0.3;
  for (double v : effects_to_penetrance(ev, 3)) EXPECT_NEAR(v, expit(0.3), 1e-15);
}

TEST(Effects, RoundTrip) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.02, 0.98);
  for (std::size_t d : {1u, 2u, 3u}) {
    for (int rep = 0; rep < 20; ++rep) {
      std::vector<double> f(pow3(d));
      for (auto& v : f) v = u(rng);
      const auto back = effects_to_penetrance(penetrance_to_effects(f, d), d);
      for (std::size_t i = 0; i < f.size(); ++i) EXPECT_NEAR(back[i], f[i], 1e-10);
    }
  }
}

TEST(Effects, AdditiveConstructionHasNoInteraction) {
  EffectVector ev;
  ev.beta0 = -0.4;
  ev.effects[{1, 0}] = 0.2;
  ev.effects[{2, 0}] = 0.7;
  ev.effects[{0, 1}] = -0.3;
  ev.effects[{0, 2}] = 0.9;
  const auto back = penetrance_to_effects(effects_to_penetrance(ev, 2), 2);
  for (const auto& [g, v] : back.effects)
    if (g[0] != 0 && g[1] != 0) {
      EXPECT_NEAR(v, 0.0, 1e-10);
    }
}

TEST(Effects, BoundaryPenetranceRejected) {
  EXPECT_THROW(penetrance_to_effects(kNoMarginals, 2), ContractError);
}

TEST(PureTable, SucceedsAtHalfMafsAndStrongSignal) {
  const auto t = generate_pure_epistasis_table({0.5, 0.5}, 2.0 / 3.0, 3);
  EXPECT_NEAR(t.K, 0.5, 1e-9);
  EXPECT_NEAR(t.h2, 2.0 / 3.0, 1e-6);
  expect_constant_marginals(t, 1e-9);
}

TEST(PureTable, PropertiesAcrossSettings) {
  const std::vector<std::pair<std::vector<double>, double>> cases{
      {{0.4, 0.4}, 0.2}, {{0.2, 0.2}, 0.05}, {{0.1, 0.4}, 0.1}, {{0.4, 0.4, 0.4}, 0.2}, {{0.2, 0.2, 0.2}, 0.05}};
  std::uint64_t seed = 40;
  for (const auto& [mafs, h2] : cases) {
    const auto t = generate_pure_epistasis_table(mafs, h2, ++seed);
    EXPECT_NEAR(t.K, 0.5, 1e-9);
    EXPECT_NEAR(t.h2, h2, 1e-6);
    EXPECT_NEAR(prevalence(t.f, t.genotype_probs), t.K, 1e-12);
    EXPECT_NEAR(heritability(t.f, t.genotype_probs), t.h2, 1e-12);
    for (double v : t.f) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
    expect_constant_marginals(t, 1e-9);
  }
}

TEST(PureTable, UnreachableHeritabilityIsInfeasible) {
  PureTableOptions opts;
  opts.max_tries = 20;
  try {
    generate_pure_epistasis_table({0.1, 0.2, 0.4}, 0.2, 9, opts);
    FAIL() << "expected InfeasibleError";
  } catch (const InfeasibleError& e) {
    EXPECT_NE(std::string(e.what()).find("largest achievable"), std::string::npos);
  }
}

TEST(MainEffectTable, HitsTargetAndIsMonotone) {
  for (double maf : {0.1, 0.2, 0.4})
    for (double h2 : {0.05, 0.1, 0.2}) {
      const auto t = generate_main_effect_table(maf, h2);
      EXPECT_NEAR(t.h2, h2, 1e-6);
      EXPECT_NEAR(t.K, 0.5, 1e-9);
      EXPECT_LT(t.f[0], t.f[1]);
      EXPECT_LT(t.f[1], t.f[2]);
      // additive on the logit scale by construction
      const auto ev = penetrance_to_effects(t.f, 1);
      EXPECT_NEAR(ev.effects.at({2}), 2 * ev.effects.at({1}), 1e-8);
    }
}

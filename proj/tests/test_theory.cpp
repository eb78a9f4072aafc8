#include <gtest/gtest.h>

#include <cmath>

#include "dac/stats.hpp"
#include "dac/theory.hpp"

namespace {

using dac::Regime;

TEST(LlnLimit, SubcriticalIsDeterministic) {
  const auto law = dac::lln_limit_law(dac::TwoPoint{-1, 1, 0.7}, 0.0);
  ASSERT_TRUE(std::holds_alternative<dac::PointMass>(law));
  EXPECT_NEAR(std::get<dac::PointMass>(law).value, 0.4, 1e-15);
}

TEST(LlnLimit, ThetaOneIsTheColorLaw) {
  const auto law = dac::lln_limit_law(dac::TwoPoint{-1, 2, 0.25}, 1.0);
  const auto atoms = dac::law_atoms(law);
  ASSERT_TRUE(atoms);
  EXPECT_EQ((*atoms)[0].value, 2.0);
  EXPECT_EQ((*atoms)[0].weight, 0.25);
  EXPECT_EQ((*atoms)[1].value, -1.0);
}

TEST(LlnLimit, GaussianScalesVariance) {
  const auto law = dac::lln_limit_law(dac::GaussianLaw{0, 1}, 0.6);
  const auto& g = std::get<dac::GaussianLaw>(law);
  EXPECT_EQ(g.mean, 0.0);
  EXPECT_NEAR(g.variance, 0.36, 1e-15);
}

TEST(LlnLimit, DiscreteUsesSampler) {
  const dac::ColorMeasure nu = dac::FiniteDiscrete{{{0, 0.5}, {1, 0.25}, {3, 0.25}}};
  const auto law = dac::lln_limit_law(nu, 0.5);
  EXPECT_NEAR(dac::law_mean(law), nu.mean(), 1e-12);
  EXPECT_NEAR(dac::law_variance(law), 0.25 * nu.variance(), 1e-12);
}

TEST(Magnetization, BasicValues) {
  const auto a = dac::two_point_magnetization(0.5, 0.0);
  ASSERT_TRUE(std::holds_alternative<dac::PointMass>(a));
  EXPECT_EQ(std::get<dac::PointMass>(a).value, 0.0);

  const auto b = std::get<dac::TwoPointLaw>(dac::two_point_magnetization(0.5, 0.5));
  EXPECT_NEAR(b.first.value, 0.5, 1e-15);
  EXPECT_NEAR(b.second.value, -0.5, 1e-15);
  EXPECT_EQ(b.first.weight, 0.5);

  const auto c = std::get<dac::TwoPointLaw>(dac::two_point_magnetization(0.8, 0.25));
  EXPECT_NEAR(c.first.value, 0.7, 1e-15);
  EXPECT_NEAR(c.first.weight, 0.8, 1e-15);
  EXPECT_NEAR(c.second.value, 0.2, 1e-15);
  EXPECT_NEAR(c.second.weight, 0.2, 1e-15);
}

TEST(Magnetization, AgreesWithGeneralLimit) {
  for (double alpha : {0.2, 0.7})
    for (double theta : {0.1, 0.5, 0.9}) {
      const auto m = std::get<dac::TwoPointLaw>(dac::two_point_magnetization(alpha, theta));
      const auto g = std::get<dac::TwoPointLaw>(dac::lln_limit_law(dac::TwoPoint{-1, 1, alpha}, theta));
      EXPECT_NEAR(m.first.value, g.first.value, 1e-14);
      EXPECT_NEAR(m.second.value, g.second.value, 1e-14);
      EXPECT_NEAR(m.first.weight, g.first.weight, 1e-14);
    }
  EXPECT_THROW(dac::two_point_magnetization(1.2, 0.5), std::invalid_argument);
}

TEST(SignDeterminism, BasicValues) {
  EXPECT_TRUE(dac::sign_deterministic(0.9, 0.1));
  EXPECT_FALSE(dac::sign_deterministic(0.5, 0.6));
  EXPECT_TRUE(dac::sign_deterministic(1.0, 0.0));
  for (double alpha : {0.0, 0.3, 0.5, 0.8, 1.0}) EXPECT_FALSE(dac::sign_deterministic(alpha, 0.55));
}

TEST(SignDeterminism, MatchesAtomSigns) {
  for (double alpha = 0.05; alpha < 1; alpha += 0.1)
    for (double theta = 0.05; theta < 1; theta += 0.1) {
      const auto law = std::get<dac::TwoPointLaw>(dac::two_point_magnetization(alpha, theta));
      const bool same_sign = (law.first.value >= 0) == (law.second.value >= 0);
      EXPECT_EQ(dac::sign_deterministic(alpha, theta), same_sign) << alpha << ' ' << theta;
    }
}

TEST(Gamma, SubcriticalGaussian) {
  const auto law = dac::gamma_law(Regime::Subcritical, 2.0, 1.0, 0.7, dac::TwoPoint{-1, 1, 0.3});
  const auto& g = std::get<dac::GaussianLaw>(law);
  EXPECT_EQ(g.variance, 2.0);
  EXPECT_TRUE(std::holds_alternative<dac::PointMass>(
      dac::gamma_law(Regime::Subcritical, 2.0, 0.0, 0.7, dac::ColorMeasure::point_mass(1))));
}

TEST(Gamma, SymmetricTwoPointCollapses) {
  const auto law = dac::gamma_law(Regime::Supercritical, 1.5, 1.0, 0.4, dac::TwoPoint{-1, 1, 0.5});
  ASSERT_TRUE(std::holds_alternative<dac::GaussianLaw>(law));
  EXPECT_NEAR(std::get<dac::GaussianLaw>(law).variance, 1.9, 1e-15);
}

TEST(Gamma, AsymmetricTwoPointMixture) {
  const double alpha = 0.3, chi = 1.5, sp = 0.8;
  const dac::ColorMeasure nu = dac::TwoPoint{-1, 1, alpha};
  const auto law = dac::gamma_law(Regime::Supercritical, chi, nu.variance(), sp, nu);
  const auto& mix = std::get<dac::GaussianMixture>(law);
  ASSERT_EQ(mix.components.size(), 2u);
  const double s2 = 4 * alpha * (1 - alpha);
  double var_b = 0, var_a = 0;
  for (const auto& c : mix.components) (c.weight == alpha ? var_b : var_a) = c.variance;
  EXPECT_NEAR(var_b, s2 * chi + 4 * (1 - alpha) * (1 - alpha) * sp, 1e-12);
  EXPECT_NEAR(var_a, s2 * chi + 4 * alpha * alpha * sp, 1e-12);
  EXPECT_THROW(dac::gamma_law(Regime::Supercritical, -1, 1, 1, nu), std::invalid_argument);
}

TEST(Gamma, MixtureMatchesSampler) {
  const dac::ColorMeasure nu = dac::TwoPoint{-1, 1, 0.3};
  const auto closed = dac::gamma_law(Regime::Supercritical, 1.2, nu.variance(), 0.9, nu);
  const auto sampler = dac::gamma_sampler(Regime::Supercritical, 1.2, nu.variance(), 0.9, nu);
  const auto draws = dac::sample_law(sampler, 50000, 3);
  const auto t = dac::ks_one_sample(draws, [&](double x) { return dac::law_cdf(closed, x); }, 0.001);
  EXPECT_TRUE(t.passed) << t.p_value;
  EXPECT_NEAR(dac::law_variance(closed), dac::law_variance(sampler), 1e-12);
  const auto direct = dac::sample_law(closed, 50000, 4);
  EXPECT_TRUE(dac::ks_two_sample(draws, direct, 0.001).passed);
}

TEST(Gamma, MixtureKurtosisMatchesClosedForm) {
  // w1 N(0, a) + w2 N(0, b): kurtosis 3 (w1 a^2 + w2 b^2) / (w1 a + w2 b)^2 - 3.
  dac::GaussianMixture mix{{{0.3, 0, 1.0}, {0.7, 0, 4.0}}};
  const double expected = 3 * (0.3 * 1 + 0.7 * 16) / std::pow(0.3 + 0.7 * 4, 2) - 3;
  EXPECT_NEAR(dac::mixture_excess_kurtosis(mix), expected, 1e-12);
  dac::GaussianMixture single{{{1.0, 0, 2.0}}};
  EXPECT_NEAR(dac::mixture_excess_kurtosis(single), 0.0, 1e-15);
}

TEST(Gamma, GaussianColorUsesSampler) {
  const auto law = dac::gamma_law(Regime::Supercritical, 1.0, 1.0, 0.5, dac::GaussianLaw{0, 1});
  EXPECT_TRUE(std::holds_alternative<dac::SampledLaw>(law));
  EXPECT_THROW(dac::law_cdf(law, 0.0), std::logic_error);
}

TEST(Gamma, AffineInvariance) {
  // Shifting nu moves m by the same amount, so the law of x + y (z - m) is unchanged.
  const dac::ColorMeasure nu = dac::TwoPoint{-1, 1, 0.3};
  const auto a = dac::gamma_law(Regime::Supercritical, 1.0, nu.variance(), 0.5, nu);
  const auto b = dac::gamma_law(Regime::Supercritical, 1.0, nu.variance(), 0.5, nu.shifted(3.0));
  const auto& ma = std::get<dac::GaussianMixture>(a);
  const auto& mb = std::get<dac::GaussianMixture>(b);
  for (std::size_t i = 0; i < ma.components.size(); ++i)
    EXPECT_NEAR(ma.components[i].variance, mb.components[i].variance, 1e-12);
  const auto xa = dac::sample_law(dac::gamma_sampler(Regime::Supercritical, 1, 0.84, 0.5, nu), 1000, 1);
  const auto xb = dac::sample_law(dac::gamma_sampler(Regime::Supercritical, 1, 0.84, 0.5, nu.shifted(3.0)), 1000, 1);
  for (std::size_t i = 0; i < xa.size(); ++i) EXPECT_NEAR(xa[i], xb[i], 1e-12);
}

TEST(Gaussianity, Characterization) {
  EXPECT_TRUE(dac::is_gamma_gaussian(dac::TwoPoint{-1, 1, 0.5}));
  EXPECT_TRUE(dac::is_gamma_gaussian(dac::TwoPoint{2, 7, 0.5}));
  EXPECT_FALSE(dac::is_gamma_gaussian(dac::TwoPoint{-1, 1, 0.3}));
  EXPECT_FALSE(dac::is_gamma_gaussian(dac::GaussianLaw{0, 1}));
  EXPECT_TRUE(dac::is_gamma_gaussian(dac::ColorMeasure::point_mass(1)));
  EXPECT_TRUE(dac::is_gamma_gaussian(dac::FiniteDiscrete{{{0, 0.25}, {1, 0.5}, {0, 0.25}}}));
  EXPECT_FALSE(dac::is_gamma_gaussian(dac::FiniteDiscrete{{{0, 0.4}, {1, 0.3}, {2, 0.3}}}));
}

TEST(Gaussianity, AgreesWithMixtureCollapse) {
  for (double alpha : {0.1, 0.3, 0.5, 0.9}) {
    const dac::ColorMeasure nu = dac::TwoPoint{-1, 1, alpha};
    const auto law = dac::gamma_law(Regime::Supercritical, 1, nu.variance(), 0.7, nu);
    EXPECT_EQ(std::holds_alternative<dac::GaussianLaw>(law), dac::is_gamma_gaussian(nu));
  }
}

TEST(GammaPrime, BasicValues) {
  const dac::ColorMeasure sym = dac::TwoPoint{-1, 1, 0.5};
  const dac::ColorMeasure gauss = dac::GaussianLaw{0, 1};
  const double s = 0.7;
  EXPECT_NEAR(dac::gamma_prime_moment(1, sym, s), s, 1e-15);
  EXPECT_NEAR(dac::gamma_prime_moment(2, sym, s), 3 * s * s, 1e-14);
  EXPECT_NEAR(dac::gamma_prime_moment(2, gauss, s), 9 * s * s, 1e-14);
  EXPECT_NEAR(dac::gamma_prime_moment(3, gauss, s), 15 * 15 * s * s * s, 1e-12);
  EXPECT_THROW(dac::gamma_prime_moment(0, sym, s), std::invalid_argument);
}

TEST(GammaPrime, SymmetricTwoPointMatchesGaussianMoments) {
  const dac::ColorMeasure sym = dac::TwoPoint{-1, 1, 0.5};
  for (int k = 1; k <= 4; ++k)
    EXPECT_NEAR(dac::gamma_prime_moment(k, sym, 1.0), dac::double_factorial_odd(k), 1e-12);
}

TEST(Covariance, Prediction) {
  EXPECT_EQ(dac::covariance_prediction(0.84, 1.0), 0.84);
  EXPECT_EQ(dac::covariance_prediction(0.84, 0.0), 0.0);
  EXPECT_NEAR(dac::covariance_prediction(4 * 0.3 * 0.7, 0.6), 4 * 0.3 * 0.7 * 0.6, 1e-15);
  EXPECT_THROW(dac::covariance_prediction(1, 1.5), std::invalid_argument);
}

TEST(RegimeText, RoundTrip) {
  for (auto r : {Regime::Subcritical, Regime::Supercritical}) EXPECT_EQ(dac::parse_regime(dac::to_string(r)), r);
  EXPECT_THROW(dac::parse_regime("critical"), std::invalid_argument);
}

}  // namespace

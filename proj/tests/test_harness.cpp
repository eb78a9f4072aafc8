#include <gtest/gtest.h>

#include <cmath>

#include "dac/harness.hpp"
#include "dac/report.hpp"

namespace {

using dac::ExperimentConfig;
using dac::Mode;

ExperimentConfig base(Mode mode, int radius, double p) {
  ExperimentConfig c;
  c.mode = mode;
  c.radii = {radius};
  c.p = p;
  c.graph_replicates = 60;
  c.color_replicates = 2000;
  c.master_seed = 17;
  return c;
}

const dac::ToleranceCheck* find_check(const dac::RunResult& r, const std::string& name) {
  for (const auto& c : r.checks)
    if (c.name == name) return &c;
  return nullptr;
}

TEST(Resolve, FillsDefaults) {
  auto c = dac::resolve(base(Mode::Annealed, 32, 0.3));
  EXPECT_EQ(*c.margin, static_cast<int>(std::ceil(4 * std::log(65.0))));
  EXPECT_EQ(*c.regime, dac::Regime::Subcritical);
  EXPECT_EQ(*c.proxy_rule, dac::ProxyRule::Disabled);
  c = dac::resolve(base(Mode::Annealed, 32, 0.7));
  EXPECT_EQ(*c.regime, dac::Regime::Supercritical);
  EXPECT_EQ(*c.proxy_rule, dac::ProxyRule::BoundaryLargest);
  auto three = base(Mode::Annealed, 4, 0.3);
  three.dim = 3;
  EXPECT_FALSE(dac::resolve(three).regime);
}

TEST(Resolve, RejectsBadConfigs) {
  auto c = base(Mode::Annealed, 8, 0.3);
  c.radii = {8, 4};
  EXPECT_THROW(dac::resolve(c), std::invalid_argument);
  c = base(Mode::Annealed, 8, 1.3);
  EXPECT_THROW(dac::resolve(c), std::invalid_argument);
  c = base(Mode::Annealed, 8, 0.3);
  c.margin = 9;
  EXPECT_THROW(dac::resolve(c), std::invalid_argument);
  c = base(Mode::Annealed, 8, 0.3);
  EXPECT_THROW(dac::run_quenched_lln(c), std::invalid_argument);
}

TEST(QuenchedLln, PointMassTrajectoryIsConstant) {
  auto c = base(Mode::Quenched, 16, 0.6);
  c.radii = {4, 8, 16};
  c.nu = dac::ColorMeasure::point_mass(0.1);
  const auto r = dac::run_quenched_lln(c);
  ASSERT_EQ(r.trajectory.size(), 3u);
  for (const auto& t : r.trajectory) EXPECT_EQ(t.magnetization, 0.1);
  EXPECT_EQ(find_check(r, "terminal_deviation")->deviation, 0.0);
  EXPECT_TRUE(r.passed());
}

TEST(QuenchedLln, SubcriticalTendsToMean) {
  auto c = base(Mode::Quenched, 64, 0.0);
  c.nu = dac::TwoPoint{-1, 1, 0.7};
  const auto r = dac::run_quenched_lln(c);
  EXPECT_LT(std::abs(r.trajectory.back().magnetization - 0.4), c.lln_tolerance);
  EXPECT_TRUE(r.passed());
}

TEST(QuenchedLln, DecompositionIdentityHolds) {
  for (double p : {0.3, 0.5, 0.8})
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      auto c = base(Mode::Quenched, 12, p);
      c.master_seed = seed;
      c.nu = dac::GaussianLaw{0.3, 2.0};
      const auto r = dac::run_quenched_lln(c);
      EXPECT_TRUE(find_check(r, "decomposition_identity")->passed);
    }
}

TEST(AnnealedLln, SubcriticalConcentrates) {
  auto c = base(Mode::Annealed, 128, 0.2);
  c.nu = dac::TwoPoint{-1, 1, 0.7};
  c.workers = 4;
  const auto r = dac::run_annealed_lln(c);
  ASSERT_TRUE(std::holds_alternative<dac::PointMass>(r.predictions[0].law));
  EXPECT_TRUE(r.passed()) << find_check(r, "tv_distance")->observed;
}

TEST(AnnealedLln, FullyOpenBox) {
  auto c = base(Mode::Annealed, 8, 1.0);
  c.nu = dac::TwoPoint{-1, 1, 0.7};
  c.graph_replicates = 2000;
  const auto r = dac::run_annealed_lln(c);
  for (double m : r.statistics()) EXPECT_TRUE(m == 1.0 || m == -1.0);
  const auto law = std::get<dac::TwoPointLaw>(r.predictions[0].law);
  EXPECT_EQ(law.first.value, 1.0);
  EXPECT_TRUE(r.passed());
}

TEST(AnnealedLln, GaussianSupercritical) {
  auto c = base(Mode::Annealed, 24, 0.7);
  c.nu = dac::GaussianLaw{0, 1};
  c.graph_replicates = 300;
  c.workers = 4;
  const auto r = dac::run_annealed_lln(c);
  ASSERT_EQ(r.tests.size(), 2u);
  EXPECT_TRUE(r.passed()) << r.tests[0].p_value << ' ' << r.tests[1].p_value;
}

TEST(QuenchedClt, PointMassIsIdenticallyZero) {
  auto c = base(Mode::Quenched, 16, 0.4);
  c.nu = dac::ColorMeasure::point_mass(0.1);
  const auto r = dac::run_quenched_clt(c);
  for (double x : r.statistics()) EXPECT_EQ(x, 0.0);
  EXPECT_TRUE(find_check(r, "identically_zero")->passed);
}

TEST(QuenchedClt, ClosedBoxTargetsColorVariance) {
  auto c = base(Mode::Quenched, 48, 0.0);
  c.workers = 4;
  const auto r = dac::run_quenched_clt(c);
  EXPECT_EQ(r.records[0].square_sum_density, 1.0);
  EXPECT_TRUE(r.passed());
}

TEST(QuenchedClt, ModerateBox) {
  auto c = base(Mode::Quenched, 32, 0.3);
  c.color_replicates = 5000;
  c.workers = 4;
  const auto r = dac::run_quenched_clt(c);
  EXPECT_TRUE(find_check(r, "exact_variance")->passed);
  EXPECT_TRUE(r.tests.at(0).passed) << r.tests[0].p_value;
}

TEST(AnnealedClt, Subcritical) {
  auto c = base(Mode::Annealed, 24, 0.3);
  c.graph_replicates = 400;
  c.workers = 4;
  const auto r = dac::run_annealed_clt(c);
  ASSERT_TRUE(std::holds_alternative<dac::GaussianLaw>(r.predictions[0].law));
  EXPECT_TRUE(r.passed());
}

TEST(AnnealedClt, SymmetricSupercriticalIsGaussian) {
  auto c = base(Mode::Annealed, 64, 0.7);
  c.graph_replicates = 400;
  c.workers = 4;
  const auto r = dac::run_annealed_clt(c);
  ASSERT_TRUE(std::holds_alternative<dac::GaussianLaw>(r.predictions[0].law));
  EXPECT_TRUE(r.passed());
}

TEST(AnnealedClt, FullyOpenIsIdenticallyZero) {
  auto c = base(Mode::Annealed, 8, 1.0);
  const auto r = dac::run_annealed_clt(c);
  for (double x : r.statistics()) EXPECT_EQ(x, 0.0);
  EXPECT_TRUE(r.passed());
}

TEST(AnnealedClt, RegimeMismatch) {
  auto c = base(Mode::Annealed, 8, 0.7);
  c.proxy_rule = dac::ProxyRule::Disabled;
  c.regime = dac::Regime::Supercritical;
  EXPECT_THROW(dac::run_annealed_clt(c), dac::RegimeMismatch);
}

TEST(ClusterClt, DegenerateEndpoints) {
  auto c = base(Mode::Annealed, 8, 1.0);
  auto r = dac::run_cluster_clt(c);
  for (double x : r.statistics()) EXPECT_EQ(x, 0.0);
  EXPECT_TRUE(r.passed());
  c = base(Mode::Annealed, 8, 0.0);
  c.proxy_rule = dac::ProxyRule::Disabled;
  r = dac::run_cluster_clt(c);
  for (double x : r.statistics()) EXPECT_EQ(x, 0.0);
  EXPECT_TRUE(r.passed());
}

TEST(ClusterClt, SupercriticalGaussian) {
  auto c = base(Mode::Annealed, 64, 0.7);
  c.graph_replicates = 400;
  c.workers = 4;
  const auto r = dac::run_cluster_clt(c);
  EXPECT_TRUE(r.passed());
}

TEST(WeightedLln, ClosedBoxRatioIsOne) {
  auto c = base(Mode::Annealed, 8, 0.0);
  const auto r = dac::run_weighted_lln_check(c);
  for (const auto& rec : r.records) EXPECT_EQ(rec.condition_ratio, 1.0);
  EXPECT_EQ(find_check(r, "condition_ratio")->expected, 1.0);
  EXPECT_TRUE(r.passed());
}

TEST(WeightedLln, PointMassIsExact) {
  auto c = base(Mode::Annealed, 12, 0.4);
  c.nu = dac::ColorMeasure::point_mass(0.1);
  const auto r = dac::run_weighted_lln_check(c);
  for (const auto& rec : r.records) EXPECT_EQ(rec.weighted_mean, 0.1);
  EXPECT_TRUE(find_check(r, "weighted_mean")->passed);
}

TEST(WeightedLln, FullyOpenIsSkipped) {
  const auto r = dac::run_weighted_lln_check(base(Mode::Annealed, 8, 1.0));
  EXPECT_TRUE(r.checks.empty());
  EXPECT_FALSE(r.warnings.empty());
}

TEST(NearCritical, WarnsButRuns) {
  auto c = base(Mode::Annealed, 8, 0.5);
  c.graph_replicates = 10;
  const auto r = dac::run_cluster_clt(c);
  EXPECT_FALSE(r.warnings.empty());
}

TEST(Determinism, WorkerCountDoesNotChangeReports) {
  auto c = base(Mode::Annealed, 16, 0.7);
  c.nu = dac::TwoPoint{-1, 1, 0.3};
  c.graph_replicates = 50;
  auto serial = c, parallel = c;
  serial.workers = 1;
  parallel.workers = 8;
  const auto a = dac::report::run_report(dac::run_annealed_clt(serial), false).dump();
  const auto b = dac::report::run_report(dac::run_annealed_clt(parallel), false).dump();
  EXPECT_EQ(a, b);
  auto q = c;
  q.mode = Mode::Quenched;
  q.color_replicates = 300;
  auto q8 = q;
  q8.workers = 8;
  EXPECT_EQ(dac::report::run_report(dac::run_quenched_clt(q), false).dump(),
            dac::report::run_report(dac::run_quenched_clt(q8), false).dump());
}

}  // namespace

#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "bdarma/covariates.hpp"
#include "bdarma/errors.hpp"
#include "bdarma/simulation.hpp"
#include "test_support.hpp"

using namespace bdarma;

TEST(Covariates, TrendAndHarmonics) {
  CovariateDesign d;
  d.trend = true;
  d.harmonics = {12.0, 6.0};
  d.trend_scale = 85.0;
  EXPECT_EQ(d.k_mean(), 5);
  EXPECT_EQ(d.mean_names(), (std::vector<std::string>{"trend", "sin12", "cos12", "sin6", "cos6"}));
  const CovariateSet c = d.build(1, 85);
  EXPECT_NEAR(c.mean(0, 0), 1.0 / 85.0, 1e-15);
  EXPECT_NEAR(c.mean(84, 0), 1.0, 1e-15);
  EXPECT_NEAR(c.mean(2, 1), 1.0, 1e-12);   // sin(2 pi 3 / 12)
  EXPECT_NEAR(c.mean(11, 2), 1.0, 1e-12);  // cos(2 pi 12 / 12)
  EXPECT_NEAR(c.mean(2, 4), -1.0, 1e-12);  // cos(2 pi 3 / 6)
  EXPECT_EQ(c.prec, Matrix::Ones(85, 1));
}

TEST(Covariates, ExtensionMatchesFullBuild) {
  CovariateDesign d;
  d.harmonics = {12.0};
  d.precision_trend = true;
  d.trend_scale = 40.0;
  const CovariateSet full = d.build(1, 40);
  const CovariateSet tail = d.build(31, 10);
  EXPECT_EQ(full.mean.bottomRows(10), tail.mean);
  EXPECT_EQ(full.prec.bottomRows(10), tail.prec);
}

TEST(Covariates, RejectsBadDesign) {
  CovariateDesign d;
  d.trend_scale = 0.0;
  EXPECT_THROW(d.build(1, 3), ValidationError);
  d.trend_scale = 1.0;
  d.harmonics = {-12.0};
  EXPECT_THROW(d.build(1, 3), ValidationError);
}

TEST(Scenario, NamesRoundTrip) {
  const auto grid = standard_scenarios(3, 1);
  ASSERT_EQ(grid.size(), 8u);
  std::set<std::string> names;
  for (const auto& s : grid) {
    names.insert(s.name());
    const ScenarioSpec parsed = scenario_from_name(s.name());
    EXPECT_EQ(parsed.kappa_true, s.kappa_true);
    EXPECT_EQ(parsed.delta_true, s.delta_true);
    EXPECT_EQ(parsed.delta_phi_true, s.delta_phi_true);
    EXPECT_EQ(s.replications, 3);
  }
  EXPECT_EQ(names.size(), 8u);
  EXPECT_TRUE(names.count("k0.5_dneg_p0"));
  EXPECT_TRUE(names.count("k1.0_dpos_p0.3"));
  EXPECT_THROW(scenario_from_name("fast"), ValidationError);
}

TEST(SimulateDgp, ShapeAndValidity) {
  const ScenarioSpec s = scenario_from_name("k0.5_dneg_p0");
  const SimulatedData d = simulate_dgp(s, 1);
  ASSERT_EQ(d.rows.size(), 120u);
  for (const auto& y : d.rows) {
    ASSERT_EQ(y.size(), 5);
    EXPECT_NEAR(y.values().sum(), 1.0, 1e-12);
    EXPECT_GT(y.values().minCoeff(), 0.0);
  }
  EXPECT_EQ(d.covariates.mean.rows(), 120);
  EXPECT_NEAR(d.covariates.mean(119, 0), 1.0, 1e-15);
  EXPECT_NEAR(d.truth.gamma[0], 4.605170, 1e-6);
  EXPECT_GT(d.truth.v_raw[0], 0.0);
  EXPECT_NEAR(d.truth.v_raw.norm(), 1.0, 1e-12);
  EXPECT_LT(d.truth.ar.cwiseAbs().maxCoeff(), kCoefficientBound);
  EXPECT_LT(d.truth.ma.cwiseAbs().maxCoeff(), kCoefficientBound);
  EXPECT_EQ(d.truth.delta, -0.6);
  EXPECT_EQ(d.truth.tau, 62.0);
  EXPECT_EQ(d.truth.kappa, 0.5);
}

TEST(SimulateDgp, SeedDeterminesDataset) {
  const ScenarioSpec s = scenario_from_name("k1.0_dpos_p0.3");
  const SimulatedData a = simulate_dgp(s, 5), b = simulate_dgp(s, 5), c = simulate_dgp(s, 6);
  for (size_t t = 0; t < a.rows.size(); ++t) EXPECT_EQ(a.rows[t].values(), b.rows[t].values());
  EXPECT_NE(a.rows[0].values(), c.rows[0].values());
}

TEST(SimulateDgp, TrueMeanMatchesModelState) {
  const ScenarioSpec s = scenario_from_name("k1.0_dpos_p0.3");
  const SimulatedData d = simulate_dgp(s, 3);
  const Matrix v = helmert_contrast(5);
  const SeriesState st = build_state(d.spec, d.truth, d.covariates, Series(d.rows, v).ilr_coords(), v);
  EXPECT_LT((st.mu - d.true_mu).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LT((st.lambda - d.true_lambda).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_NEAR(d.true_lambda[0], 100.0, 1e-10);
  EXPECT_NEAR(d.true_lambda[119], 100.0 * std::exp(0.3 * st.gate[119]), 1e-8);
}

TEST(SimulateDgp, NoShiftMeansDriftIsTrendOnly) {
  ScenarioSpec s = scenario_from_name("k1.0_dpos_p0");
  s.delta_true = 0.0;
  const SimulatedData d = simulate_dgp(s, 4);
  const Matrix v = helmert_contrast(5);
  const SeriesState st = build_state(d.spec, d.truth, d.covariates, Series(d.rows, v).ilr_coords(), v);
  for (int t = 0; t < 120; ++t) {
    const Vector expected = d.truth.b + d.truth.B * d.covariates.mean.row(t).transpose();
    EXPECT_LT((st.drift.row(t).transpose() - expected).cwiseAbs().maxCoeff(), 1e-14);
  }
}

TEST(CovidLike, PresetShape) {
  const SimulatedData d = simulate_covid_like(1);
  EXPECT_EQ(d.rows.size(), 85u);
  EXPECT_EQ(d.rows[0].size(), 10);
  EXPECT_EQ(d.part_names.size(), 10u);
  EXPECT_EQ(d.start_month, "2014-01");
  EXPECT_EQ(*d.spec.break_index, 74);
  EXPECT_EQ(d.spec.k_mean, 5);
  // The shift raises the two shortest buckets.
  const Vector u = clr_direction(d.truth.v_raw, helmert_contrast(10)) * d.truth.delta;
  EXPECT_GT(u[0], 0.0);
  EXPECT_GT(u[1], 0.0);
  for (int j = 4; j < 10; ++j) EXPECT_LT(u[j], 0.0);
}

TEST(RecoveryMetrics, ExactDrawsAndJointFlip) {
  const ScenarioSpec s = scenario_from_name("k0.5_dpos_p0");
  const SimulatedData d = simulate_dgp(s, 2);
  const RecoveryRecord exact = recovery_metrics(d, testing_support::draws_from(d.spec, {d.truth}));
  EXPECT_NEAR(exact.cosine, 1.0, 1e-12);
  EXPECT_NEAR(exact.delta_bias, 0.0, 1e-12);
  EXPECT_NEAR(exact.tau_bias, 0.0, 1e-12);

  ParamSet flipped = d.truth;
  flipped.v_raw = -flipped.v_raw;
  flipped.delta = -flipped.delta;
  const RecoveryRecord r = recovery_metrics(d, testing_support::draws_from(d.spec, {flipped}));
  EXPECT_NEAR(r.cosine, -1.0, 1e-12);
  EXPECT_NEAR(r.delta_bias, -2.0 * d.truth.delta, 1e-12);
  EXPECT_GE(r.coverage, 0.0);
  EXPECT_LE(r.coverage, 1.0);
}

TEST(RecoveryMetrics, CoverageCountsCells) {
  const ScenarioSpec s = scenario_from_name("k0.5_dpos_p0");
  SimulatedData d = simulate_dgp(s, 2);
  const Matrix v = helmert_contrast(5);
  d.true_mu = build_state(d.spec, d.truth, d.covariates, Series(d.rows, v).ilr_coords(), v).mu;
  // Each cell's true value is itself one of the draws and the 10%/90%
  // type-7 quantiles of nine draws in three tied groups are the extremes.
  std::vector<ParamSet> sets;
  for (int rep = 0; rep < 3; ++rep) {
    for (double shift : {-0.05, 0.0, 0.05}) {
      ParamSet p = d.truth;
      p.b.array() += shift;
      sets.push_back(p);
    }
  }
  EXPECT_EQ(recovery_metrics(d, testing_support::draws_from(d.spec, sets)).coverage, 1.0);
  ParamSet far = d.truth;
  far.b.array() += 1.0;
  EXPECT_EQ(recovery_metrics(d, testing_support::draws_from(d.spec, {far, far})).coverage, 0.0);
}

TEST(Summarize, ConditionalAndUnconditionalAggregates) {
  const auto grid = standard_scenarios(2, 1);
  std::vector<RecoveryRecord> records(4);
  records[0] = {grid[0].name(), 0, false, "", 0.95, 0.1, 1.0, 0.8, 1.0, 0, true};
  records[1] = {grid[0].name(), 1, false, "", 0.6, -0.3, -1.0, 0.7, 1.0, 0, true};
  records[2] = {grid[0].name(), 2, false, "", -0.9, -1.2, 2.0, 0.9, 1.0, 0, true};
  records[3] = {grid[0].name(), 3, true, "boom", 0, 0, 0, 0, 0, 0, false};
  const StudyReport r = summarize(records, {grid[0]}, 0.5);
  ASSERT_EQ(r.by_scenario.size(), 1u);
  const ScenarioSummary& s = r.by_scenario[0];
  EXPECT_EQ(s.fits, 3);
  EXPECT_EQ(s.failures, 1);
  EXPECT_EQ(s.recovered, 2);
  EXPECT_NEAR(s.recovery_rate, 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(s.delta_bias, -0.1, 1e-15);
  EXPECT_NEAR(s.cosine, 0.775, 1e-15);
  EXPECT_NEAR(s.tau_bias, 0.0, 1e-15);
  EXPECT_NEAR(s.coverage, 0.75, 1e-15);
  EXPECT_NEAR(s.cosine_all, 0.65 / 3.0, 1e-15);
  EXPECT_NEAR(s.coverage_all, 0.8, 1e-15);
  EXPECT_EQ(summarize(records, {grid[0]}, 0.9).by_scenario[0].recovered, 1);
  EXPECT_EQ(r.overall.fits, 3);
}

TEST(RunStudy, ZeroReplicationsGiveEmptyReport) {
  const StudyResult r = run_study(standard_scenarios(0, 1), SamplerConfig{});
  EXPECT_TRUE(r.records.empty());
  EXPECT_EQ(r.primary.by_scenario.size(), 8u);
  EXPECT_EQ(r.primary.overall.fits, 0);
}

TEST(RunStudy, ParallelMatchesSerialReference) {
  ScenarioSpec s = scenario_from_name("k1.0_dneg_p0");
  s.parts = 3;
  s.length = 30;
  s.break_index = 15;
  s.tau_true = 17.0;
  s.replications = 2;
  SamplerConfig c;
  c.chains = 2;
  c.warmup = 40;
  c.draws = 20;
  const StudyResult a = run_study({s}, c), b = run_study_serial({s}, c);
  ASSERT_EQ(a.records.size(), 2u);
  for (size_t i = 0; i < a.records.size(); ++i) {
    EXPECT_FALSE(a.records[i].failed) << a.records[i].error;
    EXPECT_EQ(a.records[i].cosine, b.records[i].cosine);
    EXPECT_EQ(a.records[i].delta_bias, b.records[i].delta_bias);
    EXPECT_EQ(a.records[i].coverage, b.records[i].coverage);
  }
}

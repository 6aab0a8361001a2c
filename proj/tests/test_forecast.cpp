#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "bdarma/errors.hpp"
#include "bdarma/forecast.hpp"
#include "bdarma/simulation.hpp"
#include "test_support.hpp"

using namespace bdarma;
using testing_support::draws_from;

namespace {

struct History {
  ModelSpec spec;
  Series series;
  CovariateSet cov;
};

History history_for(Variant variant, int t_len, int break_index, unsigned seed) {
  std::mt19937_64 gen(seed);
  History h;
  h.spec.variant = variant;
  h.spec.parts = 4;
  h.spec.k_mean = 0;
  h.spec.k_prec = 1;
  if (variant != Variant::kBaseline) h.spec.break_index = break_index;
  std::vector<Composition> rows;
  for (int t = 0; t < t_len; ++t) rows.push_back(testing_support::random_composition(gen, 4));
  h.series = Series(rows, helmert_contrast(4));
  h.cov = {Matrix(t_len, 0), Matrix::Ones(t_len, 1)};
  return h;
}

ForecastConfig config_for(int horizon, int per_draw = 1) {
  ForecastConfig c;
  c.horizon = horizon;
  c.draws_per_posterior = per_draw;
  c.seed = 3;
  c.future = {Matrix(horizon, 0), Matrix::Ones(horizon, 1)};
  return c;
}

ParamSet random_params(const ModelSpec& spec, std::mt19937_64& gen) {
  ParamSet p = ParamSet::zeros(spec);
  p.b = testing_support::random_normal(gen, spec.dim(), 0.5);
  p.ar = testing_support::random_normal(gen, spec.dim(), 0.3).cwiseMax(-0.9).cwiseMin(0.9);
  p.ma = testing_support::random_normal(gen, spec.dim(), 0.3).cwiseMax(-0.9).cwiseMin(0.9);
  p.gamma[0] = std::log(80.0);
  if (spec.has_fixed_effect()) p.beta_covid = testing_support::random_normal(gen, spec.dim(), 0.5);
  if (spec.has_intervention()) {
    p.v_raw = testing_support::random_normal(gen, spec.dim());
    p.delta = 0.8;
    p.tau = *spec.break_index + 3.0;
    p.kappa = 0.7;
    p.delta_phi = 0.2;
  }
  return p;
}

}  // namespace

TEST(Forecast, DriftOnlyMeanIsConstantAcrossHorizons) {
  const History h = history_for(Variant::kBaseline, 30, 0, 1);
  std::mt19937_64 gen(2);
  std::vector<ParamSet> sets;
  for (int k = 0; k < 4; ++k) {
    ParamSet p = ParamSet::zeros(h.spec);
    p.b = testing_support::random_normal(gen, 3);
    p.gamma[0] = 3.0;
    sets.push_back(p);
  }
  const ForecastDraws f = forecast(draws_from(h.spec, sets), h.series, h.cov, config_for(6));
  for (int m = 0; m < f.size(); ++m) {
    for (int step = 1; step < 6; ++step) {
      EXPECT_LT((f.means[step].row(m) - f.means[0].row(m)).cwiseAbs().maxCoeff(), 1e-15);
    }
  }
}

TEST(Forecast, SaturatedGateAppliesFullShift) {
  const History h = history_for(Variant::kIntervention, 40, 10, 3);
  ParamSet p = ParamSet::zeros(h.spec);
  p.b << 0.1, -0.2, 0.3;
  p.gamma[0] = 4.0;
  p.v_raw << 1.0, 2.0, -2.0;
  p.delta = 0.9;
  p.tau = 12.0;
  p.kappa = 5.0;
  const ForecastDraws f = forecast(draws_from(h.spec, {p}), h.series, h.cov, config_for(3));
  const Matrix v = helmert_contrast(4);
  const Vector expected = p.b + p.delta * p.shift_axis();
  for (int step = 0; step < 3; ++step) {
    EXPECT_GT(f.gate(step, 0), 1.0 - 1e-12);
    const Vector coords = ilr(Composition(f.means[step].row(0).transpose()), v);
    EXPECT_LT((coords - expected).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(Forecast, FixedEffectAfterBreakAppliesFullStep) {
  const History h = history_for(Variant::kFixedEffect, 40, 30, 4);
  ParamSet p = ParamSet::zeros(h.spec);
  p.b << 0.1, -0.2, 0.3;
  p.beta_covid << 0.5, 0.25, -0.4;
  p.gamma[0] = 4.0;
  const ForecastDraws f = forecast(draws_from(h.spec, {p}), h.series, h.cov, config_for(4));
  const Matrix v = helmert_contrast(4);
  for (int step = 0; step < 4; ++step) {
    const Vector coords = ilr(Composition(f.means[step].row(0).transpose()), v);
    EXPECT_LT((coords - (p.b + p.beta_covid)).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Forecast, SamplesInsideSimplexAndGateNondecreasing) {
  const History h = history_for(Variant::kIntervention, 40, 30, 5);
  std::mt19937_64 gen(6);
  std::vector<ParamSet> sets;
  for (int k = 0; k < 20; ++k) sets.push_back(random_params(h.spec, gen));
  const ForecastDraws f = forecast(draws_from(h.spec, sets), h.series, h.cov, config_for(8, 2));
  ASSERT_EQ(f.size(), 40);
  for (int step = 0; step < 8; ++step) {
    for (int m = 0; m < f.size(); ++m) {
      EXPECT_GT(f.samples[step].row(m).minCoeff(), 0.0);
      EXPECT_NEAR(f.samples[step].row(m).sum(), 1.0, 1e-12);
      EXPECT_NEAR(f.means[step].row(m).sum(), 1.0, 1e-12);
      if (step > 0) EXPECT_GE(f.gate(step, m), f.gate(step - 1, m));
    }
  }
}

TEST(Forecast, FirstStepMeanMatchesBruteForce) {
  const History h = history_for(Variant::kIntervention, 35, 25, 7);
  std::mt19937_64 gen(8);
  std::vector<ParamSet> sets;
  for (int k = 0; k < 5; ++k) sets.push_back(random_params(h.spec, gen));
  const ForecastDraws f = forecast(draws_from(h.spec, sets), h.series, h.cov, config_for(2));
  const Matrix v = helmert_contrast(4);
  const Matrix& z = h.series.ilr_coords();
  Vector brute = Vector::Zero(4);
  for (const ParamSet& p : sets) {
    // Re-run the in-sample recursion from scratch, then take one step.
    Vector d_prev, e_prev;
    for (int t = 1; t <= 35; ++t) {
      const double w = gate(t, p.tau, p.kappa, 25.0);
      const Vector d = p.b + p.delta * w * p.v_raw.normalized();
      Vector eta = d;
      if (t > 1) {
        eta.array() += p.ar.array() * (z.row(t - 2).transpose() - d_prev).array() + p.ma.array() * e_prev.array();
      }
      e_prev = z.row(t - 1).transpose() - eta;
      d_prev = d;
    }
    const double w = gate(36, p.tau, p.kappa, 25.0);
    const Vector d = p.b + p.delta * w * p.v_raw.normalized();
    const Vector eta = d + p.ar.cwiseProduct(z.row(34).transpose() - d_prev) + p.ma.cwiseProduct(e_prev);
    brute += ilr_inv(eta, v).values();
  }
  brute /= 5.0;
  const Vector got = f.means[0].colwise().mean().transpose();
  EXPECT_LT((got - brute).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Forecast, ParallelMatchesSerialReference) {
  const History h = history_for(Variant::kIntervention, 40, 30, 9);
  std::mt19937_64 gen(10);
  std::vector<ParamSet> sets;
  for (int k = 0; k < 30; ++k) sets.push_back(random_params(h.spec, gen));
  const PosteriorDraws d = draws_from(h.spec, sets);
  const ForecastDraws a = forecast(d, h.series, h.cov, config_for(5, 3));
  const ForecastDraws b = forecast_serial(d, h.series, h.cov, config_for(5, 3));
  for (int step = 0; step < 5; ++step) {
    EXPECT_EQ(a.samples[step], b.samples[step]);
    EXPECT_EQ(a.means[step], b.means[step]);
  }
  EXPECT_EQ(a.lambda, b.lambda);
}

TEST(Forecast, MissingFutureCovariatesRejected) {
  const History h = history_for(Variant::kBaseline, 30, 0, 11);
  std::mt19937_64 gen(12);
  ForecastConfig c = config_for(3);
  c.future = {Matrix(2, 0), Matrix::Ones(2, 1)};
  EXPECT_THROW(forecast(draws_from(h.spec, {random_params(h.spec, gen)}), h.series, h.cov, c), ValidationError);
}

TEST(ForecastSummary, OrderedQuantilesAndUnitMean) {
  const History h = history_for(Variant::kIntervention, 40, 30, 13);
  std::mt19937_64 gen(14);
  std::vector<ParamSet> sets;
  for (int k = 0; k < 50; ++k) sets.push_back(random_params(h.spec, gen));
  const ForecastDraws f = forecast(draws_from(h.spec, sets), h.series, h.cov, config_for(3));
  const auto summary = summarize_forecast(f);
  ASSERT_EQ(summary.size(), 3u);
  for (const auto& s : summary) {
    EXPECT_NEAR(s.mean.sum(), 1.0, 1e-12);
    EXPECT_TRUE((s.lower.array() <= s.median.array()).all());
    EXPECT_TRUE((s.median.array() <= s.upper.array()).all());
    EXPECT_GT(s.lambda_hat, 0.0);
  }
  const MetricRecord r = score_forecast(f, 0, h.series.row(0));
  EXPECT_GE(r.aitchison, 0.0);
  EXPECT_GE(r.coverage, 0.0);
  EXPECT_LE(r.coverage, 1.0);
  EXPECT_TRUE(std::isfinite(r.log_score));
}

TEST(Rolling, EmptyPlanGivesEmptyTable) {
  const SimulatedData d = simulate_dgp(scenario_from_name("k1.0_dpos_p0"), 1);
  RollingPlan plan;
  const RollingResult r = rolling_evaluate(d.rows, d.design, {d.spec}, plan, SamplerConfig{});
  EXPECT_TRUE(r.cases.empty());
  EXPECT_TRUE(r.summary.empty());
}

TEST(Rolling, HorizonsOnlyScoreObservedTargets) {
  ScenarioSpec s = scenario_from_name("k1.0_dpos_p0");
  s.parts = 3;
  s.length = 40;
  s.break_index = 28;
  s.tau_true = 30.0;
  const SimulatedData d = simulate_dgp(s, 2);
  ModelSpec baseline = d.spec;
  baseline.variant = Variant::kBaseline;
  baseline.break_index.reset();
  RollingPlan plan;
  for (int o = 34; o <= 40; ++o) plan.origins.push_back(o);
  plan.origins.push_back(20);  // too little training data
  plan.horizons = {1, 3, 6};
  SamplerConfig c;
  c.chains = 1;
  c.warmup = 20;
  c.draws = 10;
  const RollingResult r = rolling_evaluate(d.rows, d.design, {baseline, d.spec}, plan, c);
  auto count = [&](const std::string& model, int h) {
    for (const auto& s : r.summary) {
      if (s.model == model && s.horizon == h) return s.cases;
    }
    return 0;
  };
  for (const char* m : {"baseline", "intervention"}) {
    EXPECT_EQ(count(m, 1), 7);
    EXPECT_EQ(count(m, 3), 5);
    EXPECT_EQ(count(m, 6), 2);
  }
  ASSERT_EQ(r.skipped.size(), 2u);
  EXPECT_EQ(r.skipped[0].origin, 20);
  for (const auto& cs : r.cases) EXPECT_EQ(cs.target, cs.origin + cs.horizon - 1);

  const RollingResult serial = rolling_evaluate_serial(d.rows, d.design, {baseline, d.spec}, plan, c);
  ASSERT_EQ(serial.cases.size(), r.cases.size());
  for (size_t i = 0; i < r.cases.size(); ++i) {
    EXPECT_EQ(serial.cases[i].metrics.aitchison, r.cases[i].metrics.aitchison);
    EXPECT_EQ(serial.cases[i].metrics.energy, r.cases[i].metrics.energy);
  }
}

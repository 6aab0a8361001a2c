#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bdarma/covariates.hpp"
#include "bdarma/metrics.hpp"
#include "bdarma/sampler.hpp"

namespace bdarma {

struct ForecastConfig {
  int horizon = 1;
  int draws_per_posterior = 1;  // predictive trajectories per posterior draw
  std::uint64_t seed = 1;
  CovariateSet future;          // horizon rows, times T+1 .. T+horizon

  void validate(const ModelSpec& spec) const;
};

/// Predictive sample. Entry m of each horizon comes from posterior draw
/// m / draws_per_posterior.
struct ForecastDraws {
  int horizon = 0;
  int parts = 0;
  std::vector<Matrix> samples;  // per horizon: M x C sampled compositions Y*
  std::vector<Matrix> means;    // per horizon: M x C mean compositions mu
  Matrix lambda;                // horizon x M
  Matrix gate;                  // horizon x M (zero outside the intervention variant)

  int size() const { return samples.empty() ? 0 : static_cast<int>(samples[0].rows()); }
  std::vector<Composition> sample_compositions(int h) const;  // h is 0-based
};

/// Posterior-predictive simulation through the break. For each posterior
/// draw the in-sample state on `history` gives (Z_T, d_T, e_T); the
/// recursion then runs forward with observed quantities at h = 1 and
/// simulated ones afterwards. Parallel over posterior draws, one RNG stream
/// per (draw, trajectory); bit-identical to forecast_serial.
ForecastDraws forecast(const PosteriorDraws& draws, const Series& history,
                       const CovariateSet& history_covariates, const ForecastConfig& config);
ForecastDraws forecast_serial(const PosteriorDraws& draws, const Series& history,
                              const CovariateSet& history_covariates, const ForecastConfig& config);

struct HorizonSummary {
  Vector mean;    // mean of predictive compositions, renormalized
  Vector median;
  Vector lower;   // type-7 10% quantile
  Vector upper;   // type-7 90% quantile
  Composition mu_hat;  // mean of mu draws, renormalized
  double lambda_hat = 0.0;
};

std::vector<HorizonSummary> summarize_forecast(const ForecastDraws& forecast);

/// The five forecast metrics for one horizon against observation y.
MetricRecord score_forecast(const ForecastDraws& forecast, int h, const Composition& y);

/// Forecast origins are 1-based times of the first out-of-sample
/// observation; the model is fit to times 1 .. origin - 1 and horizon h
/// targets time origin + h - 1.
struct RollingPlan {
  std::vector<int> origins;
  std::vector<int> horizons{1};
  int min_training = 24;
  int draws_per_posterior = 1;
};

struct RollingCase {
  std::string model;
  int origin = 0;
  int horizon = 0;
  int target = 0;
  MetricRecord metrics;
};

struct RollingSummary {
  std::string model;
  int horizon = 0;
  int cases = 0;
  MetricRecord mean;
};

struct RollingSkip {
  std::string model;
  int origin = 0;
  std::string reason;
};

struct RollingResult {
  std::vector<RollingCase> cases;       // ordered by model, origin, horizon
  std::vector<RollingSummary> summary;  // ordered by model, horizon
  std::vector<RollingSkip> skipped;
};

/// Refit-and-forecast backtest. Only targets inside the data are scored;
/// origins with fewer than plan.min_training training rows, or whose
/// training window does not extend past a model's break, are skipped and
/// listed. (model, origin) fits run concurrently.
RollingResult rolling_evaluate(const std::vector<Composition>& data, const CovariateDesign& design,
                               const std::vector<ModelSpec>& models, const RollingPlan& plan,
                               const SamplerConfig& config);
RollingResult rolling_evaluate_serial(const std::vector<Composition>& data,
                                      const CovariateDesign& design,
                                      const std::vector<ModelSpec>& models, const RollingPlan& plan,
                                      const SamplerConfig& config);

}  // namespace bdarma

#include "bdarma/forecast.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <mutex>

#include "bdarma/errors.hpp"
#include "bdarma/posterior.hpp"
#include "bdarma/recursion.hpp"
#include "bdarma/rng.hpp"

namespace bdarma {

namespace {

constexpr std::uint64_t kForecastStream = 0x464f5245;  // "FORE"
constexpr std::uint64_t kRollingFit = 0x524f4c46;       // "ROLF"
constexpr std::uint64_t kRollingForecast = 0x524f4c50;  // "ROLP"

ForecastDraws allocate(const PosteriorDraws& draws, const ForecastConfig& config) {
  const int m = draws.total_draws() * config.draws_per_posterior;
  ForecastDraws out;
  out.horizon = config.horizon;
  out.parts = draws.spec.parts;
  out.samples.assign(config.horizon, Matrix(m, out.parts));
  out.means.assign(config.horizon, Matrix(m, out.parts));
  out.lambda.resize(config.horizon, m);
  out.gate.resize(config.horizon, m);
  return out;
}

void check_inputs(const PosteriorDraws& draws, const Series& history, const CovariateSet& cov,
                  const ForecastConfig& config) {
  if (draws.total_draws() == 0) throw ValidationError("forecast needs posterior draws");
  config.validate(draws.spec);
  if (history.size() == 0) throw ValidationError("forecast needs a non-empty history");
  if (history.parts() != draws.spec.parts) throw DimensionError("history does not match the fitted model");
  cov.validate(draws.spec, history.size());
}

// Propagates every trajectory of posterior draw k.
void forecast_draw(const PosteriorDraws& draws, const Series& history, const CovariateSet& cov,
                   const ForecastConfig& config, const Matrix& contrast, int k, ForecastDraws& out) {
  const ModelSpec& spec = draws.spec;
  const ParamSet params = draws.draw(k);
  const SeriesState state = build_state(spec, params, cov, history.ilr_coords(), contrast);
  const Carry start = carry_from_state(state, history.ilr_coords());
  const double t_end = static_cast<double>(history.size());
  for (int j = 0; j < config.draws_per_posterior; ++j) {
    const int m = k * config.draws_per_posterior + j;
    Rng rng(config.seed, {kForecastStream, static_cast<std::uint64_t>(k), static_cast<std::uint64_t>(j)});
    Carry carry = start;
    for (int h = 0; h < config.horizon; ++h) {
      const SimulatedStep step =
          simulate_step(spec, params, contrast, config.future.mean.row(h).transpose(),
                        config.future.prec.row(h).transpose(), t_end + h + 1.0, carry, rng);
      out.samples[h].row(m) = step.y.values().transpose();
      out.means[h].row(m) = step.mu.transpose();
      out.lambda(h, m) = step.lambda;
      out.gate(h, m) = step.gate;
    }
  }
}

struct FitJob {
  int model;
  int origin;
};

std::vector<RollingCase> run_fit_job(const std::vector<Composition>& data, const CovariateDesign& design,
                                     const ModelSpec& spec, const std::string& label, int model_index,
                                     int origin, const RollingPlan& plan, const SamplerConfig& base) {
  const int train = origin - 1;
  const int data_len = static_cast<int>(data.size());
  int horizon = 0;
  for (int h : plan.horizons) {
    if (origin + h - 1 <= data_len) horizon = std::max(horizon, h);
  }
  const Matrix contrast = helmert_contrast(spec.parts);
  const std::vector<Composition> train_rows(data.begin(), data.begin() + train);
  const Series history(train_rows, contrast);
  const CovariateSet cov = design.build(1, train);

  SamplerConfig config = base;
  config.seed = stream_key(base.seed, {kRollingFit, static_cast<std::uint64_t>(model_index),
                                       static_cast<std::uint64_t>(origin)});
  const PosteriorDraws draws = run_chains_serial(LogDensity(spec, cov, history), config);

  ForecastConfig fc;
  fc.horizon = horizon;
  fc.draws_per_posterior = plan.draws_per_posterior;
  fc.seed = stream_key(base.seed, {kRollingForecast, static_cast<std::uint64_t>(model_index),
                                   static_cast<std::uint64_t>(origin)});
  fc.future = design.build(origin, horizon);
  const ForecastDraws fd = forecast_serial(draws, history, cov, fc);

  std::vector<RollingCase> out;
  for (int h : plan.horizons) {
    const int target = origin + h - 1;
    if (target > data_len) continue;
    out.push_back({label, origin, h, target, score_forecast(fd, h - 1, data[target - 1])});
  }
  return out;
}

std::vector<std::string> model_labels(const std::vector<ModelSpec>& models) {
  std::vector<std::string> labels;
  for (const auto& m : models) labels.push_back(to_string(m.variant));
  for (size_t i = 0; i < labels.size(); ++i) {
    if (std::count(labels.begin(), labels.end(), labels[i]) > 1) labels[i] += "_" + std::to_string(i);
  }
  return labels;
}

struct Planned {
  std::vector<FitJob> jobs;
  std::vector<RollingSkip> skipped;
};

Planned plan_jobs(const std::vector<Composition>& data, const std::vector<ModelSpec>& models,
                  const std::vector<std::string>& labels, const RollingPlan& plan) {
  Planned out;
  const int data_len = static_cast<int>(data.size());
  for (int mi = 0; mi < static_cast<int>(models.size()); ++mi) {
    for (int origin : plan.origins) {
      const int train = origin - 1;
      bool any_target = false;
      for (int h : plan.horizons) any_target = any_target || (origin + h - 1 <= data_len);
      if (origin < 1 || !any_target) {
        out.skipped.push_back({labels[mi], origin, "no observed target"});
      } else if (train < plan.min_training) {
        out.skipped.push_back({labels[mi], origin,
                               "training window of " + std::to_string(train) + " rows is shorter than " +
                                   std::to_string(plan.min_training)});
      } else if (models[mi].break_index && *models[mi].break_index >= train) {
        out.skipped.push_back({labels[mi], origin, "training window ends before the break"});
      } else {
        out.jobs.push_back({mi, origin});
      }
    }
  }
  return out;
}

void validate_plan(const std::vector<Composition>& data, const CovariateDesign& design,
                   const std::vector<ModelSpec>& models, const RollingPlan& plan,
                   const SamplerConfig& config) {
  config.validate();
  design.validate();
  if (plan.min_training < 2) throw ValidationError("min_training must be >= 2");
  if (plan.draws_per_posterior < 1) throw ValidationError("draws_per_posterior must be >= 1");
  for (int h : plan.horizons) {
    if (h < 1) throw ValidationError("horizons must be >= 1");
  }
  for (const auto& m : models) {
    m.validate();
    if (m.k_mean != design.k_mean() || m.k_prec != design.k_prec()) {
      throw ValidationError("model covariate counts do not match the covariate design");
    }
    for (const auto& row : data) {
      if (row.size() != m.parts) throw DimensionError("data rows do not match model parts");
    }
  }
}

RollingResult assemble(std::vector<std::vector<RollingCase>> per_job, std::vector<RollingSkip> skipped,
                       const std::vector<std::string>& labels, const RollingPlan& plan) {
  RollingResult out;
  out.skipped = std::move(skipped);
  for (auto& cases : per_job) {
    for (auto& c : cases) out.cases.push_back(std::move(c));
  }
  std::stable_sort(out.cases.begin(), out.cases.end(), [&](const RollingCase& a, const RollingCase& b) {
    const auto ia = std::find(labels.begin(), labels.end(), a.model) - labels.begin();
    const auto ib = std::find(labels.begin(), labels.end(), b.model) - labels.begin();
    if (ia != ib) return ia < ib;
    if (a.origin != b.origin) return a.origin < b.origin;
    return a.horizon < b.horizon;
  });
  std::vector<int> horizons = plan.horizons;
  std::sort(horizons.begin(), horizons.end());
  horizons.erase(std::unique(horizons.begin(), horizons.end()), horizons.end());
  for (const auto& label : labels) {
    for (int h : horizons) {
      RollingSummary s;
      s.model = label;
      s.horizon = h;
      for (const auto& c : out.cases) {
        if (c.model != label || c.horizon != h) continue;
        ++s.cases;
        s.mean.aitchison += c.metrics.aitchison;
        s.mean.energy += c.metrics.energy;
        s.mean.log_score += c.metrics.log_score;
        s.mean.coverage += c.metrics.coverage;
        s.mean.mae += c.metrics.mae;
      }
      if (s.cases == 0) continue;
      const double n = s.cases;
      s.mean = {s.mean.aitchison / n, s.mean.energy / n, s.mean.log_score / n, s.mean.coverage / n,
                s.mean.mae / n};
      out.summary.push_back(s);
    }
  }
  return out;
}

}  // namespace

void ForecastConfig::validate(const ModelSpec& spec) const {
  if (horizon < 1) throw ValidationError("forecast horizon must be >= 1");
  if (draws_per_posterior < 1) throw ValidationError("draws_per_posterior must be >= 1");
  if (future.mean.rows() != horizon || future.prec.rows() != horizon) {
    throw ValidationError("future covariates must have one row per horizon step");
  }
  future.validate(spec, horizon);
}

std::vector<Composition> ForecastDraws::sample_compositions(int h) const {
  std::vector<Composition> out;
  const Matrix& s = samples.at(h);
  out.reserve(s.rows());
  for (Eigen::Index m = 0; m < s.rows(); ++m) out.push_back(Composition::normalized(s.row(m).transpose()));
  return out;
}

ForecastDraws forecast(const PosteriorDraws& draws, const Series& history,
                       const CovariateSet& history_covariates, const ForecastConfig& config) {
  check_inputs(draws, history, history_covariates, config);
  const Matrix contrast = helmert_contrast(draws.spec.parts);
  ForecastDraws out = allocate(draws, config);
  std::exception_ptr failure;
  std::mutex lock;
  const int n = draws.total_draws();
#pragma omp parallel for schedule(dynamic, 8)
  for (int k = 0; k < n; ++k) {
    try {
      forecast_draw(draws, history, history_covariates, config, contrast, k, out);
    } catch (...) {
      std::lock_guard<std::mutex> guard(lock);
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

ForecastDraws forecast_serial(const PosteriorDraws& draws, const Series& history,
                              const CovariateSet& history_covariates, const ForecastConfig& config) {
  check_inputs(draws, history, history_covariates, config);
  const Matrix contrast = helmert_contrast(draws.spec.parts);
  ForecastDraws out = allocate(draws, config);
  for (int k = 0; k < draws.total_draws(); ++k) {
    forecast_draw(draws, history, history_covariates, config, contrast, k, out);
  }
  return out;
}

std::vector<HorizonSummary> summarize_forecast(const ForecastDraws& fd) {
  std::vector<HorizonSummary> out;
  const int m = fd.size();
  if (m == 0) throw ValidationError("empty forecast");
  std::vector<double> column(m);
  for (int h = 0; h < fd.horizon; ++h) {
    const Matrix& s = fd.samples[h];
    Vector median(fd.parts), lower(fd.parts), upper(fd.parts);
    for (int j = 0; j < fd.parts; ++j) {
      for (int k = 0; k < m; ++k) column[k] = s(k, j);
      median[j] = quantile(column, 0.5);
      lower[j] = quantile(column, 0.1);
      upper[j] = quantile(column, 0.9);
    }
    const Vector mean = s.colwise().mean().transpose();
    const Vector mu_mean = fd.means[h].colwise().mean().transpose();
    out.push_back({mean / mean.sum(), median, lower, upper, Composition::normalized(mu_mean),
                   fd.lambda.row(h).mean()});
  }
  return out;
}

MetricRecord score_forecast(const ForecastDraws& fd, int h, const Composition& y) {
  if (h < 0 || h >= fd.horizon) throw ValidationError("horizon index out of range");
  if (y.size() != fd.parts) throw DimensionError("observation does not match forecast parts");
  const std::vector<Composition> samples = fd.sample_compositions(h);
  const Composition mu_hat = Composition::normalized(fd.means[h].colwise().mean().transpose());
  const double lambda_hat = fd.lambda.row(h).mean();
  MetricRecord r;
  r.aitchison = aitchison_point(mu_hat, y);
  r.energy = energy_score_serial(samples, y);
  r.log_score = plugin_log_score(mu_hat, lambda_hat, y);
  r.coverage = componentwise_coverage(central_intervals(samples, 0.8), y);
  r.mae = mae({mu_hat}, {y});
  return r;
}

RollingResult rolling_evaluate(const std::vector<Composition>& data, const CovariateDesign& design,
                               const std::vector<ModelSpec>& models, const RollingPlan& plan,
                               const SamplerConfig& config) {
  validate_plan(data, design, models, plan, config);
  const auto labels = model_labels(models);
  Planned planned = plan_jobs(data, models, labels, plan);
  std::vector<std::vector<RollingCase>> results(planned.jobs.size());
  std::exception_ptr failure;
  std::mutex lock;
#pragma omp parallel for schedule(dynamic, 1)
  for (int i = 0; i < static_cast<int>(planned.jobs.size()); ++i) {
    try {
      const FitJob& job = planned.jobs[i];
      results[i] = run_fit_job(data, design, models[job.model], labels[job.model], job.model, job.origin,
                               plan, config);
    } catch (...) {
      std::lock_guard<std::mutex> guard(lock);
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return assemble(std::move(results), std::move(planned.skipped), labels, plan);
}

RollingResult rolling_evaluate_serial(const std::vector<Composition>& data,
                                      const CovariateDesign& design,
                                      const std::vector<ModelSpec>& models, const RollingPlan& plan,
                                      const SamplerConfig& config) {
  validate_plan(data, design, models, plan, config);
  const auto labels = model_labels(models);
  Planned planned = plan_jobs(data, models, labels, plan);
  std::vector<std::vector<RollingCase>> results;
  for (const FitJob& job : planned.jobs) {
    results.push_back(run_fit_job(data, design, models[job.model], labels[job.model], job.model,
                                  job.origin, plan, config));
  }
  return assemble(std::move(results), std::move(planned.skipped), labels, plan);
}

}  // namespace bdarma

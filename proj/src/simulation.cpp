#include "bdarma/simulation.hpp"

#include <cmath>
#include <cstdio>
#include <exception>
#include <regex>
#include <sstream>

#include "bdarma/errors.hpp"
#include "bdarma/metrics.hpp"
#include "bdarma/posterior.hpp"
#include "bdarma/recursion.hpp"
#include "bdarma/rng.hpp"

namespace bdarma {

namespace {

constexpr std::uint64_t kReplicationStream = 0x5245504c;  // "REPL"
constexpr std::uint64_t kFitStream = 0x46495421;          // "FIT!"
constexpr std::uint64_t kScenarioStream = 0x5343454e;     // "SCEN"

double truncated_normal(Rng& rng, double sd) {
  for (;;) {
    const double x = rng.normal(0.0, sd);
    if (x > -kCoefficientBound && x < kCoefficientBound) return x;
  }
}

struct Job {
  int scenario;
  int replication;
};

std::vector<Job> jobs_for(const std::vector<ScenarioSpec>& scenarios) {
  std::vector<Job> jobs;
  for (int s = 0; s < static_cast<int>(scenarios.size()); ++s) {
    for (int r = 0; r < scenarios[s].replications; ++r) jobs.push_back({s, r});
  }
  return jobs;
}

RecoveryRecord run_job(const ScenarioSpec& scenario, int rep, const SamplerConfig& base) {
  RecoveryRecord record;
  record.scenario = scenario.name();
  record.replication = rep;
  try {
    const std::uint64_t seed = replication_seed(scenario, rep);
    const SimulatedData data = simulate_dgp(scenario, seed);
    SamplerConfig config = base;
    config.seed = stream_key(base.seed, {kFitStream, seed});
    const LogDensity target(data.spec, data.covariates, Series(data.rows, helmert_contrast(data.spec.parts)));
    const PosteriorDraws draws = run_chains_serial(target, config);
    RecoveryRecord metrics = recovery_metrics(data, draws);
    metrics.scenario = record.scenario;
    metrics.replication = rep;
    return metrics;
  } catch (const std::exception& e) {
    record.failed = true;
    record.error = e.what();
  }
  return record;
}

StudyResult finish(std::vector<RecoveryRecord> records, const std::vector<ScenarioSpec>& scenarios) {
  StudyResult out;
  out.primary = summarize(records, scenarios, 0.5);
  out.sensitivity = summarize(records, scenarios, 0.9);
  out.records = std::move(records);
  return out;
}

double mean_of(const std::vector<double>& x) {
  if (x.empty()) return std::nan("");
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

ScenarioSummary summarize_group(const std::vector<const RecoveryRecord*>& group, double threshold) {
  ScenarioSummary s;
  std::vector<double> bias, cosine, tau, coverage, cosine_all, coverage_all;
  for (const RecoveryRecord* r : group) {
    if (r->failed) {
      ++s.failures;
      continue;
    }
    ++s.fits;
    if (r->converged) ++s.converged;
    s.divergences += r->divergences;
    cosine_all.push_back(r->cosine);
    coverage_all.push_back(r->coverage);
    if (r->cosine > threshold) {
      ++s.recovered;
      bias.push_back(r->delta_bias);
      cosine.push_back(r->cosine);
      tau.push_back(r->tau_bias);
      coverage.push_back(r->coverage);
    }
  }
  s.recovery_rate = s.fits > 0 ? static_cast<double>(s.recovered) / s.fits : std::nan("");
  s.delta_bias = mean_of(bias);
  s.cosine = mean_of(cosine);
  s.tau_bias = mean_of(tau);
  s.coverage = mean_of(coverage);
  s.cosine_all = mean_of(cosine_all);
  s.coverage_all = mean_of(coverage_all);
  return s;
}

}  // namespace

std::string ScenarioSpec::name() const {
  char kappa_text[32];
  std::snprintf(kappa_text, sizeof kappa_text, "%.1f", kappa_true);
  std::ostringstream phi;
  phi << delta_phi_true;
  return std::string("k") + kappa_text + (delta_true < 0.0 ? "_dneg" : "_dpos") + "_p" + phi.str();
}

void ScenarioSpec::validate() const {
  if (parts < 3) throw ValidationError("scenario needs at least 3 parts");
  if (break_index < 1 || break_index >= length) throw ValidationError("scenario break must lie in [1, T)");
  if (!(kappa_true > 0.0)) throw ValidationError("scenario kappa must be positive");
  if (!(lambda_base > 0.0)) throw ValidationError("scenario base concentration must be positive");
  if (replications < 0) throw ValidationError("replications must be >= 0");
  if (!std::isfinite(delta_true) || !std::isfinite(delta_phi_true) || !std::isfinite(tau_true)) {
    throw ValidationError("scenario parameters must be finite");
  }
}

ModelSpec ScenarioSpec::model_spec() const {
  ModelSpec spec;
  spec.variant = Variant::kIntervention;
  spec.parts = parts;
  const CovariateDesign d = design();
  spec.k_mean = d.k_mean();
  spec.k_prec = d.k_prec();
  spec.break_index = break_index;
  return spec;
}

CovariateDesign ScenarioSpec::design() const {
  CovariateDesign d;
  d.trend = true;
  d.trend_scale = length;
  return d;
}

std::uint64_t scenario_seed(std::uint64_t study_seed, std::uint64_t index) {
  return stream_key(study_seed, {kScenarioStream, index});
}

ScenarioSpec scenario_from_name(const std::string& name) {
  static const std::regex pattern(R"(^k([0-9]*\.?[0-9]+)_d(neg|pos)_p([0-9]*\.?[0-9]+)$)");
  std::smatch m;
  if (!std::regex_match(name, m, pattern)) {
    throw ValidationError("unknown scenario '" + name + "' (expected e.g. k0.5_dneg_p0)");
  }
  ScenarioSpec s;
  s.kappa_true = std::stod(m[1].str());
  s.delta_true = m[2].str() == "neg" ? -0.6 : 0.6;
  s.delta_phi_true = std::stod(m[3].str());
  s.validate();
  return s;
}

std::vector<ScenarioSpec> standard_scenarios(int replications, std::uint64_t study_seed) {
  std::vector<ScenarioSpec> out;
  for (double kappa : {0.5, 1.0}) {
    for (double delta : {-0.6, 0.6}) {
      for (double phi : {0.0, 0.3}) {
        ScenarioSpec s;
        s.kappa_true = kappa;
        s.delta_true = delta;
        s.delta_phi_true = phi;
        s.replications = replications;
        s.seed = scenario_seed(study_seed, out.size());
        out.push_back(s);
      }
    }
  }
  return out;
}

std::uint64_t replication_seed(const ScenarioSpec& scenario, int rep) {
  return stream_key(scenario.seed, {kReplicationStream, static_cast<std::uint64_t>(rep)});
}

SimulatedData simulate_dgp(const ScenarioSpec& scenario, std::uint64_t seed) {
  scenario.validate();
  Rng rng(seed);
  SimulatedData out;
  out.spec = scenario.model_spec();
  out.design = scenario.design();
  out.covariates = out.design.build(1, scenario.length);
  const int d = out.spec.dim();

  ParamSet& p = out.truth;
  p = ParamSet::zeros(out.spec);
  for (int i = 0; i < d; ++i) p.b[i] = rng.normal(0.0, 0.5);
  for (int i = 0; i < d; ++i) {
    for (int k = 0; k < out.spec.k_mean; ++k) p.B(i, k) = rng.normal(0.0, 0.3);
  }
  for (int i = 0; i < d; ++i) p.ar[i] = truncated_normal(rng, 0.25);
  for (int i = 0; i < d; ++i) p.ma[i] = truncated_normal(rng, 0.20);
  p.gamma[0] = std::log(scenario.lambda_base);
  Vector v(d);
  do {
    for (int i = 0; i < d; ++i) v[i] = rng.normal();
  } while (!(v.norm() > 0.0) || v[0] == 0.0);
  v /= v.norm();
  if (v[0] < 0.0) v = -v;
  p.v_raw = v;
  p.delta = scenario.delta_true;
  p.tau = scenario.tau_true;
  p.kappa = scenario.kappa_true;
  p.delta_phi = scenario.delta_phi_true;

  const Matrix contrast = helmert_contrast(scenario.parts);
  out.true_mu.resize(scenario.length, scenario.parts);
  out.true_lambda.resize(scenario.length);
  out.rows.reserve(scenario.length);
  for (int j = 0; j < scenario.parts; ++j) out.part_names.push_back("c" + std::to_string(j + 1));
  Carry carry;
  for (int i = 0; i < scenario.length; ++i) {
    SimulatedStep step = simulate_step(out.spec, p, contrast, out.covariates.mean.row(i).transpose(),
                                       out.covariates.prec.row(i).transpose(), i + 1.0, carry, rng);
    out.true_mu.row(i) = step.mu.transpose();
    out.true_lambda[i] = step.lambda;
    out.rows.push_back(std::move(step.y));
  }
  return out;
}

SimulatedData simulate_covid_like(std::uint64_t seed) {
  Rng rng(seed);
  constexpr int kParts = 10;
  SimulatedData out;
  out.design.trend = true;
  out.design.harmonics = {12.0, 6.0};
  out.design.trend_scale = kCovidLikeLength;
  out.spec.variant = Variant::kIntervention;
  out.spec.parts = kParts;
  out.spec.k_mean = out.design.k_mean();
  out.spec.k_prec = out.design.k_prec();
  out.spec.break_index = kCovidLikeBreak;
  out.covariates = out.design.build(1, kCovidLikeLength);
  out.start_month = "2014-01";
  for (int j = 0; j < kParts - 1; ++j) out.part_names.push_back("m" + std::to_string(j));
  out.part_names.emplace_back("m9plus");

  const Matrix contrast = helmert_contrast(kParts);
  const int d = out.spec.dim();
  Vector base(kParts);
  base << 0.06, 0.07, 0.08, 0.10, 0.11, 0.11, 0.11, 0.10, 0.10, 0.16;
  Vector toward_short(kParts);
  toward_short << 0.45, 0.35, 0.10, 0.0, -0.10, -0.12, -0.15, -0.15, -0.18, -0.20;
  toward_short.array() -= toward_short.mean();

  ParamSet& p = out.truth;
  p = ParamSet::zeros(out.spec);
  p.b = ilr(Composition::normalized(base), contrast);
  for (int i = 0; i < d; ++i) p.b[i] += rng.normal(0.0, 0.1);
  for (int i = 0; i < d; ++i) {
    p.B(i, 0) = rng.normal(0.0, 0.2);
    for (int k = 1; k < out.spec.k_mean; ++k) p.B(i, k) = rng.normal(0.0, 0.15);
  }
  for (int i = 0; i < d; ++i) p.ar[i] = truncated_normal(rng, 0.25);
  for (int i = 0; i < d; ++i) p.ma[i] = truncated_normal(rng, 0.20);
  p.gamma[0] = std::log(400.0);
  p.v_raw = contrast.transpose() * toward_short;
  p.delta = 0.73;
  p.canonicalize();
  p.tau = kCovidLikeBreak + 5.2;
  p.kappa = 0.85;
  p.delta_phi = -0.18;

  out.true_mu.resize(kCovidLikeLength, kParts);
  out.true_lambda.resize(kCovidLikeLength);
  Carry carry;
  for (int i = 0; i < kCovidLikeLength; ++i) {
    SimulatedStep step = simulate_step(out.spec, p, contrast, out.covariates.mean.row(i).transpose(),
                                       out.covariates.prec.row(i).transpose(), i + 1.0, carry, rng);
    out.true_mu.row(i) = step.mu.transpose();
    out.true_lambda[i] = step.lambda;
    out.rows.push_back(std::move(step.y));
  }
  return out;
}

RecoveryRecord recovery_metrics(const SimulatedData& data, const PosteriorDraws& draws) {
  const int n_draws = draws.total_draws();
  if (n_draws == 0) throw ValidationError("recovery metrics need at least one draw");
  if (!data.spec.has_intervention()) throw ValidationError("recovery metrics need an intervention fit");
  const Matrix contrast = helmert_contrast(data.spec.parts);
  const Series series(data.rows, contrast);
  const auto t_len = series.size();
  const auto parts = series.parts();

  Vector v_sum = Vector::Zero(data.spec.dim());
  double delta_sum = 0.0, tau_sum = 0.0;
  Matrix mu_draws(t_len * parts, n_draws);
  for (int k = 0; k < n_draws; ++k) {
    const ParamSet p = draws.draw(k);
    v_sum += p.v_raw;
    delta_sum += p.delta;
    tau_sum += p.tau;
    const SeriesState s = build_state(data.spec, p, data.covariates, series.ilr_coords(), contrast);
    for (Eigen::Index t = 0; t < t_len; ++t) mu_draws.col(k).segment(t * parts, parts) = s.mu.row(t).transpose();
  }

  RecoveryRecord r;
  const Vector v_hat = v_sum.normalized();
  r.cosine = std::clamp(v_hat.dot(data.truth.v_raw.normalized()), -1.0, 1.0);
  r.delta_bias = delta_sum / n_draws - data.truth.delta;
  r.tau_bias = tau_sum / n_draws - data.truth.tau;

  int inside = 0;
  std::vector<double> cell(n_draws);
  for (Eigen::Index t = 0; t < t_len; ++t) {
    for (Eigen::Index j = 0; j < parts; ++j) {
      const Eigen::Index row = t * parts + j;
      for (int k = 0; k < n_draws; ++k) cell[k] = mu_draws(row, k);
      const double truth = data.true_mu(t, j);
      if (truth >= quantile(cell, 0.1) && truth <= quantile(cell, 0.9)) ++inside;
    }
  }
  r.coverage = static_cast<double>(inside) / static_cast<double>(t_len * parts);

  const Diagnostics diag = diagnose(draws);
  r.max_rhat = diag.max_rhat;
  r.divergences = diag.divergences;
  r.converged = diag.converged();
  return r;
}

StudyReport summarize(const std::vector<RecoveryRecord>& records,
                      const std::vector<ScenarioSpec>& scenarios, double threshold) {
  StudyReport report;
  report.records = records;
  report.threshold = threshold;
  std::vector<const RecoveryRecord*> all;
  for (const auto& scenario : scenarios) {
    std::vector<const RecoveryRecord*> group;
    for (const auto& r : records) {
      if (r.scenario == scenario.name()) group.push_back(&r);
    }
    ScenarioSummary s = summarize_group(group, threshold);
    s.scenario = scenario.name();
    s.kappa = scenario.kappa_true;
    s.delta = scenario.delta_true;
    s.delta_phi = scenario.delta_phi_true;
    report.by_scenario.push_back(s);
  }
  for (const auto& r : records) all.push_back(&r);
  report.overall = summarize_group(all, threshold);
  report.overall.scenario = "overall";
  return report;
}

StudyResult run_study(const std::vector<ScenarioSpec>& scenarios, const SamplerConfig& config) {
  config.validate();
  for (const auto& s : scenarios) s.validate();
  const std::vector<Job> jobs = jobs_for(scenarios);
  std::vector<RecoveryRecord> records(jobs.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (int i = 0; i < static_cast<int>(jobs.size()); ++i) {
    records[i] = run_job(scenarios[jobs[i].scenario], jobs[i].replication, config);
  }
  return finish(std::move(records), scenarios);
}

StudyResult run_study_serial(const std::vector<ScenarioSpec>& scenarios, const SamplerConfig& config) {
  config.validate();
  for (const auto& s : scenarios) s.validate();
  std::vector<RecoveryRecord> records;
  for (const Job& job : jobs_for(scenarios)) {
    records.push_back(run_job(scenarios[job.scenario], job.replication, config));
  }
  return finish(std::move(records), scenarios);
}

}  // namespace bdarma

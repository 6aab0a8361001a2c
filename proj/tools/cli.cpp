#include "cli.hpp"

#include <omp.h>

#include <algorithm>
#include <filesystem>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "bdarma/config.hpp"
#include "bdarma/diagnostics.hpp"
#include "bdarma/errors.hpp"
#include "bdarma/forecast.hpp"
#include "bdarma/io.hpp"
#include "bdarma/params.hpp"
#include "bdarma/rng.hpp"
#include "bdarma/simulation.hpp"

namespace bdarma::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr std::uint64_t kDefaultSeed = 1;

struct Globals {
  std::optional<std::uint64_t> seed;
  int threads = 0;
  std::string out;
  bool no_strict = false;

  std::uint64_t seed_or(std::optional<std::uint64_t> config_seed) const {
    return seed.value_or(config_seed.value_or(kDefaultSeed));
  }
  fs::path out_dir(const std::string& config_dir) const {
    if (!out.empty()) return out;
    return config_dir.empty() ? fs::path(".") : fs::path(config_dir);
  }
};

std::string fmt(double x) { return format_double(x); }

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string csv_safe(std::string s) {
  std::replace(s.begin(), s.end(), ',', ';');
  std::replace(s.begin(), s.end(), '\n', ' ');
  return s;
}

json params_json(const ModelSpec& spec, const ParamSet& params) {
  const ParamLayout layout(spec);
  const Vector report = layout.to_report(params);
  json values = json::object();
  for (int i = 0; i < layout.size(); ++i) values[layout.names()[i]] = report[i];
  return values;
}

SeriesFile series_of(const SimulatedData& data) {
  SeriesFile s;
  s.part_names = data.part_names;
  s.rows = data.rows;
  s.times = time_labels(data.start_month, static_cast<int>(data.rows.size()));
  return s;
}

// Ground truth of a simulated data set, published next to the data.
json truth_json(const SimulatedData& data, const std::string& generator, std::uint64_t seed) {
  const SeriesFile s = series_of(data);
  json doc;
  doc["synthetic"] = true;
  doc["generator"] = generator;
  doc["seed"] = seed;
  doc["variant"] = to_string(data.spec.variant);
  doc["parts"] = data.spec.parts;
  doc["length"] = data.rows.size();
  doc["break_index"] = *data.spec.break_index;
  doc["break"] = s.times[*data.spec.break_index - 1];
  doc["covariates"] = {{"trend", data.design.trend},
                       {"harmonics", data.design.harmonics},
                       {"precision_trend", data.design.precision_trend},
                       {"trend_scale", data.design.trend_scale},
                       {"mean_names", data.design.mean_names()},
                       {"prec_names", data.design.prec_names()}};
  doc["parameters"] = params_json(data.spec, data.truth);
  doc["true_lambda"] = std::vector<double>(data.true_lambda.data(), data.true_lambda.data() + data.true_lambda.size());
  return doc;
}

void write_covariates(const fs::path& path, const SimulatedData& data) {
  const SeriesFile s = series_of(data);
  std::vector<std::string> header{s.time_column};
  for (const auto& n : data.design.mean_names()) header.push_back(n);
  for (const auto& n : data.design.prec_names()) header.push_back("prec_" + n);
  std::vector<std::vector<std::string>> rows;
  for (Eigen::Index i = 0; i < data.covariates.rows(); ++i) {
    std::vector<std::string> r{s.times[i]};
    for (Eigen::Index k = 0; k < data.covariates.mean.cols(); ++k) r.push_back(fmt(data.covariates.mean(i, k)));
    for (Eigen::Index k = 0; k < data.covariates.prec.cols(); ++k) r.push_back(fmt(data.covariates.prec(i, k)));
    rows.push_back(std::move(r));
  }
  write_table(path, header, rows);
}

int cmd_simulate(const Globals& g, const std::string& scenario, const std::string& preset, std::ostream& out) {
  if (scenario.empty() == preset.empty()) throw ValidationError("simulate needs exactly one of --scenario or --preset");
  const std::uint64_t seed = g.seed_or(std::nullopt);
  SimulatedData data;
  std::string generator;
  if (!preset.empty()) {
    if (preset != "covid-like") throw ValidationError("unknown preset '" + preset + "' (available: covid-like)");
    data = simulate_covid_like(seed);
    generator = "preset:covid-like";
  } else {
    data = simulate_dgp(scenario_from_name(scenario), seed);
    generator = "scenario:" + scenario;
  }
  const fs::path dir = g.out_dir("");
  const SeriesFile s = series_of(data);
  write_series(dir / "data.csv", s);
  write_covariates(dir / "covariates.csv", data);
  write_file_atomic(dir / "truth.json", truth_json(data, generator, seed).dump(2) + "\n");

  RunConfig cfg;
  cfg.variant = data.spec.variant;
  cfg.break_ref = s.times[*data.spec.break_index - 1];
  cfg.trend = data.design.trend;
  cfg.harmonics = data.design.harmonics;
  cfg.precision_trend = data.design.precision_trend;
  cfg.trend_scale = data.design.trend_scale;
  cfg.seed = seed;
  write_file_atomic(dir / "config.json", dump_run_config(cfg));

  out << "simulated " << s.size() << " x " << s.part_names.size() << " (" << generator << ") into "
      << dir.string() << "\n";
  return kOk;
}

struct Loaded {
  SeriesFile data;
  RunConfig config;
  ResolvedRun run;
  CovariateSet covariates;
  Series series;
};

Loaded load(const std::string& data_path, const std::string& config_path) {
  Loaded l;
  l.data = read_series(data_path);
  l.config = load_run_config(config_path);
  l.run = resolve(l.config, l.data);
  l.covariates = l.run.design.build(1, l.data.size());
  l.series = Series(l.data.rows, helmert_contrast(l.run.spec.parts));
  return l;
}

int cmd_fit(const Globals& g, const std::string& data_path, const std::string& config_path, std::ostream& out,
            std::ostream& err) {
  const Loaded l = load(data_path, config_path);
  SamplerConfig sampler = l.config.sampler;
  sampler.seed = g.seed_or(l.config.seed);
  const LogDensity target(l.run.spec, l.covariates, l.series);
  const PosteriorDraws draws = run_chains(target, sampler);
  const Diagnostics diag = diagnose(draws);

  const fs::path dir = g.out_dir(l.config.output_dir);
  write_draws(dir / "draws.csv", draws);
  std::vector<std::vector<std::string>> rows;
  for (size_t p = 0; p < diag.names.size(); ++p) rows.push_back({diag.names[p], fmt(diag.rhat[p])});
  write_table(dir / "diagnostics.csv", {"parameter", "rhat"}, rows);
  json report = {{"variant", to_string(l.run.spec.variant)},
                 {"parts", l.run.spec.parts},
                 {"length", l.data.size()},
                 {"trend_scale", l.run.design.trend_scale},
                 {"seed", sampler.seed},
                 {"chains", sampler.chains},
                 {"warmup", sampler.warmup},
                 {"draws", sampler.draws},
                 {"max_rhat", fmt(diag.max_rhat)},
                 {"divergences", diag.divergences},
                 {"mean_accept_stat", diag.mean_accept_stat},
                 {"rhat_ok", diag.rhat_ok()}};
  if (l.run.spec.break_index) report["break_index"] = *l.run.spec.break_index;
  write_file_atomic(dir / "diagnostics.json", report.dump(2) + "\n");

  out << "fit " << to_string(l.run.spec.variant) << ": " << draws.total_draws() << " draws, max R-hat "
      << fmt(diag.max_rhat) << ", " << diag.divergences << " divergences\n";
  if (!diag.rhat_ok()) {
    err << "warning: max R-hat " << fmt(diag.max_rhat) << " is not below 1.01\n";
    if (!g.no_strict) return kConvergence;
  }
  return kOk;
}

int cmd_forecast(const Globals& g, const std::string& data_path, const std::string& config_path,
                 const std::string& draws_path, int horizon, bool save_draws, std::ostream& out) {
  const Loaded l = load(data_path, config_path);
  const PosteriorDraws draws = read_draws(draws_path, l.run.spec);
  ForecastConfig fc;
  fc.horizon = horizon > 0 ? horizon : l.config.horizon;
  fc.draws_per_posterior = l.config.draws_per_posterior;
  fc.seed = g.seed_or(l.config.seed);
  fc.future = l.run.design.build(l.data.size() + 1, fc.horizon);
  const ForecastDraws fd = forecast(draws, l.series, l.covariates, fc);
  const std::vector<HorizonSummary> summary = summarize_forecast(fd);

  std::vector<std::string> labels;
  if (l.data.monthly()) {
    const int last = parse_month(l.data.times.back());
    for (int h = 1; h <= fc.horizon; ++h) labels.push_back(format_month(last + h));
  } else {
    const long long last = std::stoll(l.data.times.back());
    for (int h = 1; h <= fc.horizon; ++h) labels.push_back(std::to_string(last + h));
  }

  std::vector<std::string> header{"horizon", "time", "statistic"};
  for (const auto& n : l.data.part_names) header.push_back(n);
  std::vector<std::vector<std::string>> rows;
  for (int h = 0; h < fc.horizon; ++h) {
    const HorizonSummary& s = summary[h];
    const std::pair<const char*, Vector> stats[] = {
        {"mean", s.mean}, {"median", s.median}, {"q10", s.lower}, {"q90", s.upper}, {"mu_hat", s.mu_hat.values()}};
    for (const auto& [name, v] : stats) {
      std::vector<std::string> r{std::to_string(h + 1), labels[h], name};
      for (Eigen::Index j = 0; j < v.size(); ++j) r.push_back(fmt(v[j]));
      rows.push_back(std::move(r));
    }
  }
  const fs::path dir = g.out_dir(l.config.output_dir);
  write_table(dir / "forecast_summary.csv", header, rows);

  if (save_draws) {
    std::vector<std::string> dh{"horizon", "time", "draw"};
    for (const auto& n : l.data.part_names) dh.push_back(n);
    dh.emplace_back("lambda");
    std::vector<std::vector<std::string>> drows;
    for (int h = 0; h < fc.horizon; ++h) {
      for (int m = 0; m < fd.size(); ++m) {
        std::vector<std::string> r{std::to_string(h + 1), labels[h], std::to_string(m + 1)};
        for (int j = 0; j < fd.parts; ++j) r.push_back(fmt(fd.samples[h](m, j)));
        r.push_back(fmt(fd.lambda(h, m)));
        drows.push_back(std::move(r));
      }
    }
    write_table(dir / "forecast_draws.csv", dh, drows);
  }
  out << "forecast " << fc.horizon << " step(s) from " << fd.size() << " predictive draws into " << dir.string()
      << "\n";
  return kOk;
}

std::vector<std::string> summary_row(double threshold, const ScenarioSummary& s) {
  return {fmt(threshold),       s.scenario,          fmt(s.kappa),        fmt(s.delta),
          fmt(s.delta_phi),     std::to_string(s.fits), std::to_string(s.failures), std::to_string(s.recovered),
          fmt(s.recovery_rate), fmt(s.delta_bias),   fmt(s.cosine),       fmt(s.tau_bias),
          fmt(s.coverage),      fmt(s.cosine_all),   fmt(s.coverage_all), std::to_string(s.converged),
          std::to_string(s.divergences)};
}

int cmd_study(const Globals& g, const std::string& config_path, const std::string& scenarios,
              int replications, std::ostream& out) {
  StudyConfig cfg = config_path.empty() ? StudyConfig{} : load_study_config(config_path);
  if (scenarios != "\x01") {
    cfg.scenarios = split_list(scenarios);
    if (cfg.scenarios.empty()) throw ValidationError("--scenarios must name at least one scenario or \"all\"");
  }
  if (replications >= 0) cfg.replications = replications;
  const std::uint64_t seed = g.seed_or(cfg.seed);
  const std::vector<ScenarioSpec> specs = study_scenarios(cfg, seed);
  SamplerConfig sampler = cfg.sampler;
  sampler.seed = seed;
  const StudyResult result = run_study(specs, sampler);

  const fs::path dir = g.out_dir(cfg.output_dir);
  std::vector<std::vector<std::string>> rows;
  for (const auto& r : result.records) {
    rows.push_back({r.scenario, std::to_string(r.replication + 1), r.failed ? "1" : "0", fmt(r.cosine),
                    fmt(r.delta_bias), fmt(r.tau_bias), fmt(r.coverage), fmt(r.max_rhat),
                    std::to_string(r.divergences), r.converged ? "1" : "0", csv_safe(r.error)});
  }
  write_table(dir / "study_records.csv",
              {"scenario", "replication", "failed", "cosine", "delta_bias", "tau_bias", "coverage", "max_rhat",
               "divergences", "converged", "error"},
              rows);
  rows.clear();
  for (const StudyReport* report : {&result.primary, &result.sensitivity}) {
    for (const auto& s : report->by_scenario) rows.push_back(summary_row(report->threshold, s));
    rows.push_back(summary_row(report->threshold, report->overall));
  }
  write_table(dir / "study_summary.csv",
              {"threshold", "scenario", "kappa", "delta", "delta_phi", "fits", "failures", "recovered",
               "recovery_rate", "delta_bias", "cosine", "tau_bias", "coverage", "cosine_all", "coverage_all",
               "converged", "divergences"},
              rows);
  for (const auto& s : specs) {
    for (int rep = 0; rep < s.replications; ++rep) {
      const std::uint64_t rs = replication_seed(s, rep);
      const SimulatedData data = simulate_dgp(s, rs);
      write_file_atomic(dir / "truth" / (s.name() + "_r" + std::to_string(rep + 1) + ".json"),
                        truth_json(data, "scenario:" + s.name(), rs).dump(2) + "\n");
    }
  }
  const ScenarioSummary& o = result.primary.overall;
  out << "study: " << result.records.size() << " fits, " << o.failures << " failed, recovery rate "
      << fmt(o.recovery_rate) << " (cosine > 0.5)\n";
  return kOk;
}

std::vector<std::string> metric_cells(const MetricRecord& m) {
  return {fmt(m.aitchison), fmt(m.energy), fmt(m.log_score), fmt(m.coverage), fmt(m.mae)};
}

int cmd_compare(const Globals& g, const std::string& data_path, const std::vector<std::string>& config_paths,
                const std::string& variants, std::ostream& out) {
  if (config_paths.empty()) throw ValidationError("compare needs at least one --config");
  const SeriesFile data = read_series(data_path);
  std::vector<RunConfig> configs;
  for (const auto& p : config_paths) configs.push_back(load_run_config(p));
  if (!variants.empty()) {
    if (configs.size() != 1) throw ValidationError("--variants needs exactly one --config");
    const RunConfig base = configs.front();
    configs.clear();
    for (const auto& v : split_list(variants)) {
      RunConfig c = base;
      c.variant = parse_variant(v);
      configs.push_back(c);
    }
    if (configs.empty()) throw ValidationError("--variants must name at least one variant");
  }
  std::vector<ModelSpec> models;
  std::vector<ResolvedRun> runs;
  for (const auto& c : configs) {
    runs.push_back(resolve(c, data));
    models.push_back(runs.back().spec);
    const ResolvedRun& first = runs.front();
    const ResolvedRun& r = runs.back();
    if (r.design.trend != first.design.trend || r.design.harmonics != first.design.harmonics ||
        r.design.precision_trend != first.design.precision_trend ||
        r.design.trend_scale != first.design.trend_scale || r.plan.origins != first.plan.origins ||
        r.plan.horizons != first.plan.horizons || r.plan.min_training != first.plan.min_training) {
      throw ValidationError("compared configurations must share covariates and the rolling plan");
    }
    for (size_t i = 0; i + 1 < models.size(); ++i) {
      if (models[i].variant == r.spec.variant) throw ValidationError("variant " + to_string(r.spec.variant) + " listed twice");
    }
  }
  const RollingPlan& plan = runs.front().plan;
  if (plan.origins.empty()) throw ValidationError("'rolling.origins' must list at least one forecast origin");
  SamplerConfig sampler = configs.front().sampler;
  sampler.seed = g.seed_or(configs.front().seed);
  const RollingResult result = rolling_evaluate(data.rows, runs.front().design, models, plan, sampler);

  const std::vector<std::string> metric_names{"aitchison", "energy", "log_score", "coverage", "mae"};
  const fs::path dir = g.out_dir(configs.front().output_dir);
  std::vector<std::string> header{"model", "horizon", "cases"};
  header.insert(header.end(), metric_names.begin(), metric_names.end());
  std::vector<std::vector<std::string>> rows;
  for (const auto& s : result.summary) {
    std::vector<std::string> r{s.model, std::to_string(s.horizon), std::to_string(s.cases)};
    for (auto& c : metric_cells(s.mean)) r.push_back(c);
    rows.push_back(std::move(r));
  }
  write_table(dir / "compare_summary.csv", header, rows);

  header = {"model", "origin", "origin_time", "horizon", "target", "target_time"};
  header.insert(header.end(), metric_names.begin(), metric_names.end());
  rows.clear();
  for (const auto& c : result.cases) {
    std::vector<std::string> r{c.model,
                               std::to_string(c.origin),
                               data.times[c.origin - 1],
                               std::to_string(c.horizon),
                               std::to_string(c.target),
                               data.times[c.target - 1]};
    for (auto& m : metric_cells(c.metrics)) r.push_back(m);
    rows.push_back(std::move(r));
  }
  write_table(dir / "compare_cases.csv", header, rows);

  rows.clear();
  for (const auto& s : result.skipped) rows.push_back({s.model, std::to_string(s.origin), csv_safe(s.reason)});
  write_table(dir / "compare_skipped.csv", {"model", "origin", "reason"}, rows);

  out << "compare: " << models.size() << " model(s), " << result.cases.size() << " scored cases, "
      << result.skipped.size() << " skipped\n";
  for (const auto& s : result.summary) {
    out << "  " << s.model << " h=" << s.horizon << " aitchison=" << fmt(s.mean.aitchison)
        << " coverage=" << fmt(s.mean.coverage) << "\n";
  }
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Directional-shift Bayesian Dirichlet ARMA models for compositional time series", "bdarma"};
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  std::uint64_t seed_value = 0;
  auto* seed_opt = app.add_option("--seed", seed_value, "Seed for all randomness (overrides the config)");
  app.add_option("--threads", g.threads, "OpenMP threads (0 keeps the runtime default)")->check(CLI::NonNegativeNumber);
  app.add_option("--out", g.out, "Output directory (overrides the config)");
  app.add_flag("--no-strict", g.no_strict, "Exit 0 even when R-hat >= 1.01");

  std::string scenario, preset;
  auto* sim = app.add_subcommand("simulate", "Simulate a data set with published ground truth");
  sim->add_option("--scenario", scenario, "Study scenario label, e.g. k0.5_dneg_p0");
  sim->add_option("--preset", preset, "Named preset: covid-like");

  std::string data_path, config_path, draws_path;
  auto* fit = app.add_subcommand("fit", "Fit a model and write posterior draws and diagnostics");
  fit->add_option("--data", data_path, "Series file")->required();
  fit->add_option("--config", config_path, "Run configuration")->required();

  int horizon = 0;
  bool save_draws = false;
  auto* fc = app.add_subcommand("forecast", "Forecast from saved posterior draws");
  fc->add_option("--data", data_path, "Series file")->required();
  fc->add_option("--config", config_path, "Run configuration")->required();
  fc->add_option("--draws", draws_path, "Draws file written by fit")->required();
  fc->add_option("--horizon", horizon, "Forecast horizon (overrides the config)")->check(CLI::PositiveNumber);
  fc->add_flag("--save-draws", save_draws, "Also write raw predictive draws");

  std::string study_config, scenarios = "\x01";
  int replications = -1;
  auto* study = app.add_subcommand("study", "Run the direction-recovery simulation study");
  study->add_option("--config", study_config, "Study configuration");
  study->add_option("--scenarios", scenarios, "Comma-separated scenario labels or \"all\"");
  study->add_option("--replications", replications, "Replications per scenario")->check(CLI::NonNegativeNumber);

  std::vector<std::string> compare_configs;
  std::string variants;
  auto* cmp = app.add_subcommand("compare", "Rolling-origin comparison of model variants");
  cmp->add_option("--data", data_path, "Series file")->required();
  cmp->add_option("--config", compare_configs, "Run configuration (repeat for each variant)")->required();
  cmp->add_option("--variants", variants, "Comma-separated variants applied to a single config");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kValidation;
  }
  if (seed_opt->count() > 0) g.seed = seed_value;
  if (g.threads > 0) omp_set_num_threads(g.threads);

  try {
    if (sim->parsed()) return cmd_simulate(g, scenario, preset, out);
    if (fit->parsed()) return cmd_fit(g, data_path, config_path, out, err);
    if (fc->parsed()) return cmd_forecast(g, data_path, config_path, draws_path, horizon, save_draws, out);
    if (study->parsed()) return cmd_study(g, study_config, scenarios, replications, out);
    if (cmp->parsed()) return cmd_compare(g, data_path, compare_configs, variants, out);
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kValidation;
  } catch (const DimensionError& e) {
    err << "error: " << e.what() << "\n";
    return kValidation;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << "\n";
    return kValidation;
  } catch (const InitializationError& e) {
    err << "error: " << e.what() << "\n";
    return kConvergence;
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kIo;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kIo;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kInternal;
  }
  return kInternal;
}

}  // namespace bdarma::cli

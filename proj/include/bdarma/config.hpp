#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "bdarma/covariates.hpp"
#include "bdarma/forecast.hpp"
#include "bdarma/io.hpp"
#include "bdarma/sampler.hpp"
#include "bdarma/simulation.hpp"

namespace bdarma {

inline constexpr int kSchemaVersion = 1;

/// Declarative run configuration. Time references (the break and rolling
/// origins) are kept as written: either "YYYY-MM" or a 1-based row index.
struct RunConfig {
  int schema_version = kSchemaVersion;
  Variant variant = Variant::kIntervention;
  std::optional<std::string> break_ref;

  bool trend = true;
  std::vector<double> harmonics;
  bool precision_trend = false;
  std::optional<double> trend_scale;  // defaults to the number of data rows

  PriorConfig priors;
  SamplerConfig sampler;

  int horizon = 1;
  int draws_per_posterior = 1;

  std::vector<std::string> origins;
  std::vector<int> horizons{1};
  int min_training = 24;

  std::string output_dir;
  std::optional<std::uint64_t> seed;
};

/// Parses a configuration document. Throws ValidationError on a missing or
/// unsupported schema_version, unknown keys, wrong types or invalid values.
RunConfig parse_run_config(const std::string& text);
std::string dump_run_config(const RunConfig& config);
RunConfig load_run_config(const std::filesystem::path& path);

/// A configuration bound to a data set: time references resolved to row
/// indices and the model dimensions taken from the data.
struct ResolvedRun {
  ModelSpec spec;
  CovariateDesign design;
  RollingPlan plan;
};

ResolvedRun resolve(const RunConfig& config, const SeriesFile& data);

/// Recovery-study configuration. `scenarios` holds scenario labels; the
/// single entry "all" selects the eight standard scenarios.
struct StudyConfig {
  int schema_version = kSchemaVersion;
  std::vector<std::string> scenarios{"all"};
  int replications = 10;
  SamplerConfig sampler;
  std::string output_dir;
  std::optional<std::uint64_t> seed;
};

StudyConfig parse_study_config(const std::string& text);
std::string dump_study_config(const StudyConfig& config);
StudyConfig load_study_config(const std::filesystem::path& path);

/// Scenario list for a study. Throws ValidationError when empty.
std::vector<ScenarioSpec> study_scenarios(const StudyConfig& config, std::uint64_t seed);

}  // namespace bdarma

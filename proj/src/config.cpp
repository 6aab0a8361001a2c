#include "bdarma/config.hpp"

#include <cmath>
#include <limits>
#include <set>

#include <json.hpp>

#include "bdarma/errors.hpp"

namespace bdarma {

namespace {

using nlohmann::json;

bool is_month_label(const std::string& s) {
  try {
    parse_month(s);
    return true;
  } catch (const ValidationError&) {
    return false;
  }
}

// Reads the keys of one JSON object and rejects anything left unread.
class Section {
 public:
  Section(const json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) throw ValidationError(label() + " must be an object");
  }

  bool has(const std::string& key) const { return node_.contains(key); }

  const json* child(const std::string& key) {
    seen_.insert(key);
    const auto it = node_.find(key);
    return it == node_.end() ? nullptr : &*it;
  }

  void read(const std::string& key, bool& out) {
    if (const json* v = child(key)) {
      if (!v->is_boolean()) throw type_error(key, "a boolean");
      out = v->get<bool>();
    }
  }

  void read(const std::string& key, int& out) {
    if (const json* v = child(key)) {
      if (!v->is_number_integer()) throw type_error(key, "an integer");
      const auto x = v->get<long long>();
      if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max()) {
        throw type_error(key, "an integer in range");
      }
      out = static_cast<int>(x);
    }
  }

  void read(const std::string& key, double& out) {
    if (const json* v = child(key)) {
      if (!v->is_number()) throw type_error(key, "a number");
      out = v->get<double>();
    }
  }

  void read(const std::string& key, std::string& out) {
    if (const json* v = child(key)) {
      if (!v->is_string()) throw type_error(key, "a string");
      out = v->get<std::string>();
    }
  }

  void read_seed(const std::string& key, std::optional<std::uint64_t>& out) {
    if (const json* v = child(key)) {
      if (!v->is_number_unsigned()) throw type_error(key, "a non-negative integer");
      out = v->get<std::uint64_t>();
    }
  }

  void read_time(const std::string& key, std::optional<std::string>& out) {
    if (const json* v = child(key)) out = time_ref(*v, key);
  }

  std::string time_ref(const json& v, const std::string& key) const {
    if (v.is_number_integer()) {
      if (v.get<long long>() < 1) throw type_error(key, "a positive row index or YYYY-MM month");
      return std::to_string(v.get<long long>());
    }
    if (v.is_string() && is_month_label(v.get<std::string>())) return v.get<std::string>();
    throw type_error(key, "a positive row index or YYYY-MM month");
  }

  template <typename T>
  void read_list(const std::string& key, std::vector<T>& out) {
    if (const json* v = child(key)) {
      if (!v->is_array()) throw type_error(key, "an array");
      out.clear();
      for (const auto& item : *v) {
        if constexpr (std::is_same_v<T, int>) {
          if (!item.is_number_integer()) throw type_error(key, "an array of integers");
        } else {
          if (!item.is_number()) throw type_error(key, "an array of numbers");
        }
        out.push_back(item.get<T>());
      }
    }
  }

  void finish() const {
    for (const auto& [key, value] : node_.items()) {
      if (!seen_.count(key)) throw ValidationError("unknown key '" + path_prefix() + key + "'");
    }
  }

  std::string label() const { return path_.empty() ? "configuration" : "'" + path_ + "'"; }

  ValidationError type_error(const std::string& key, const std::string& what) const {
    return ValidationError("'" + path_prefix() + key + "' must be " + what);
  }

 private:
  std::string path_prefix() const { return path_.empty() ? "" : path_ + "."; }

  const json& node_;
  std::string path_;
  std::set<std::string> seen_;
};

json parse_document(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("malformed configuration: ") + e.what());
  }
}

void read_schema(Section& root) {
  if (!root.has("schema_version")) throw ValidationError("configuration is missing 'schema_version'");
  int version = 0;
  root.read("schema_version", version);
  if (version != kSchemaVersion) {
    throw ValidationError("unsupported schema_version " + std::to_string(version) + " (expected " +
                          std::to_string(kSchemaVersion) + ")");
  }
}

void read_sampler(Section& root, SamplerConfig& sampler) {
  const json* node = root.child("sampler");
  if (!node) return;
  Section s(*node, "sampler");
  s.read("chains", sampler.chains);
  s.read("warmup", sampler.warmup);
  s.read("draws", sampler.draws);
  s.read("target_accept", sampler.target_accept);
  s.read("max_depth", sampler.max_depth);
  s.read("divergence_threshold", sampler.divergence_threshold);
  s.read("init_radius", sampler.init_radius);
  s.finish();
  sampler.validate();
  if (!(sampler.init_radius > 0.0)) throw ValidationError("'sampler.init_radius' must be positive");
}

json sampler_json(const SamplerConfig& s) {
  return {{"chains", s.chains},
          {"warmup", s.warmup},
          {"draws", s.draws},
          {"target_accept", s.target_accept},
          {"max_depth", s.max_depth},
          {"divergence_threshold", s.divergence_threshold},
          {"init_radius", s.init_radius}};
}

json time_json(const std::string& ref) {
  if (is_month_label(ref)) return ref;
  return std::stoll(ref);
}

struct PriorField {
  const char* name;
  double PriorConfig::*member;
  bool positive;
};

constexpr PriorField kPriorFields[] = {
    {"b_sd", &PriorConfig::b_sd, true},
    {"B_sd", &PriorConfig::B_sd, true},
    {"gamma_sd", &PriorConfig::gamma_sd, true},
    {"delta_sd", &PriorConfig::delta_sd, true},
    {"tau_offset", &PriorConfig::tau_offset, false},
    {"tau_sd", &PriorConfig::tau_sd, true},
    {"kappa_log_mean", &PriorConfig::kappa_log_mean, false},
    {"kappa_log_sd", &PriorConfig::kappa_log_sd, true},
    {"delta_phi_sd", &PriorConfig::delta_phi_sd, true},
    {"beta_covid_sd", &PriorConfig::beta_covid_sd, true},
};

}  // namespace

RunConfig parse_run_config(const std::string& text) {
  const json doc = parse_document(text);
  RunConfig cfg;
  Section root(doc, "");
  read_schema(root);

  if (const json* node = root.child("model")) {
    Section s(*node, "model");
    std::string variant = to_string(cfg.variant);
    s.read("variant", variant);
    try {
      cfg.variant = parse_variant(variant);
    } catch (const std::exception&) {
      throw ValidationError("'model.variant' must be baseline, fixed_effect or intervention");
    }
    s.read_time("break", cfg.break_ref);
    s.finish();
  }
  if (cfg.variant != Variant::kBaseline && !cfg.break_ref) {
    throw ValidationError("'model.break' is required for the " + to_string(cfg.variant) + " variant");
  }

  if (const json* node = root.child("covariates")) {
    Section s(*node, "covariates");
    s.read("trend", cfg.trend);
    s.read_list("harmonics", cfg.harmonics);
    s.read("precision_trend", cfg.precision_trend);
    if (const json* v = s.child("trend_scale")) {
      if (!v->is_number() || !(v->get<double>() > 0.0)) {
        throw ValidationError("'covariates.trend_scale' must be a positive number");
      }
      cfg.trend_scale = v->get<double>();
    }
    s.finish();
    for (double p : cfg.harmonics) {
      if (!(p > 0.0)) throw ValidationError("'covariates.harmonics' periods must be positive");
    }
  }

  if (const json* node = root.child("priors")) {
    Section s(*node, "priors");
    for (const auto& f : kPriorFields) {
      s.read(f.name, cfg.priors.*f.member);
      if (f.positive && !(cfg.priors.*f.member > 0.0)) {
        throw ValidationError(std::string("'priors.") + f.name + "' must be positive");
      }
    }
    s.finish();
  }

  read_sampler(root, cfg.sampler);

  if (const json* node = root.child("forecast")) {
    Section s(*node, "forecast");
    s.read("horizon", cfg.horizon);
    s.read("draws_per_posterior", cfg.draws_per_posterior);
    s.finish();
    if (cfg.horizon < 1) throw ValidationError("'forecast.horizon' must be >= 1");
    if (cfg.draws_per_posterior < 1) throw ValidationError("'forecast.draws_per_posterior' must be >= 1");
  }

  if (const json* node = root.child("rolling")) {
    Section s(*node, "rolling");
    if (const json* v = s.child("origins")) {
      if (!v->is_array()) throw ValidationError("'rolling.origins' must be an array");
      for (const auto& item : *v) cfg.origins.push_back(s.time_ref(item, "origins"));
    }
    s.read_list("horizons", cfg.horizons);
    s.read("min_training", cfg.min_training);
    s.finish();
    if (cfg.horizons.empty()) throw ValidationError("'rolling.horizons' must not be empty");
    for (int h : cfg.horizons) {
      if (h < 1) throw ValidationError("'rolling.horizons' entries must be >= 1");
    }
    if (cfg.min_training < 1) throw ValidationError("'rolling.min_training' must be >= 1");
  }

  root.read("output_dir", cfg.output_dir);
  root.read_seed("seed", cfg.seed);
  root.finish();
  return cfg;
}

std::string dump_run_config(const RunConfig& cfg) {
  json doc;
  doc["schema_version"] = cfg.schema_version;
  doc["model"] = {{"variant", to_string(cfg.variant)}};
  if (cfg.break_ref) doc["model"]["break"] = time_json(*cfg.break_ref);
  doc["covariates"] = {{"trend", cfg.trend}, {"harmonics", cfg.harmonics}, {"precision_trend", cfg.precision_trend}};
  if (cfg.trend_scale) doc["covariates"]["trend_scale"] = *cfg.trend_scale;
  json priors = json::object();
  for (const auto& f : kPriorFields) priors[f.name] = cfg.priors.*f.member;
  doc["priors"] = priors;
  doc["sampler"] = sampler_json(cfg.sampler);
  doc["forecast"] = {{"horizon", cfg.horizon}, {"draws_per_posterior", cfg.draws_per_posterior}};
  json origins = json::array();
  for (const auto& o : cfg.origins) origins.push_back(time_json(o));
  doc["rolling"] = {{"origins", origins}, {"horizons", cfg.horizons}, {"min_training", cfg.min_training}};
  if (!cfg.output_dir.empty()) doc["output_dir"] = cfg.output_dir;
  if (cfg.seed) doc["seed"] = *cfg.seed;
  return doc.dump(2) + "\n";
}

RunConfig load_run_config(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  try {
    return parse_run_config(text);
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

ResolvedRun resolve(const RunConfig& cfg, const SeriesFile& data) {
  ResolvedRun out;
  out.design.trend = cfg.trend;
  out.design.harmonics = cfg.harmonics;
  out.design.precision_trend = cfg.precision_trend;
  out.design.trend_scale = cfg.trend_scale.value_or(static_cast<double>(data.size()));
  out.design.validate();

  out.spec.variant = cfg.variant;
  out.spec.parts = static_cast<int>(data.part_names.size());
  out.spec.k_mean = out.design.k_mean();
  out.spec.k_prec = out.design.k_prec();
  out.spec.priors = cfg.priors;
  if (cfg.variant != Variant::kBaseline) out.spec.break_index = data.resolve(*cfg.break_ref);
  out.spec.validate(data.size());

  for (const auto& o : cfg.origins) {
    const int origin = data.resolve(o);
    if (origin < 2 || origin > data.size()) {
      throw ValidationError("rolling origin '" + o + "' must fall on rows 2.." + std::to_string(data.size()));
    }
    out.plan.origins.push_back(origin);
  }
  out.plan.horizons = cfg.horizons;
  out.plan.min_training = cfg.min_training;
  out.plan.draws_per_posterior = cfg.draws_per_posterior;
  return out;
}

StudyConfig parse_study_config(const std::string& text) {
  const json doc = parse_document(text);
  StudyConfig cfg;
  Section root(doc, "");
  read_schema(root);
  if (const json* v = root.child("scenarios")) {
    if (v->is_string()) {
      cfg.scenarios = {v->get<std::string>()};
    } else if (v->is_array()) {
      cfg.scenarios.clear();
      for (const auto& item : *v) {
        if (!item.is_string()) throw ValidationError("'scenarios' entries must be strings");
        cfg.scenarios.push_back(item.get<std::string>());
      }
    } else {
      throw ValidationError("'scenarios' must be \"all\" or an array of scenario labels");
    }
  }
  root.read("replications", cfg.replications);
  read_sampler(root, cfg.sampler);
  root.read("output_dir", cfg.output_dir);
  root.read_seed("seed", cfg.seed);
  root.finish();
  if (cfg.replications < 0) throw ValidationError("'replications' must be >= 0");
  if (cfg.scenarios.empty()) throw ValidationError("'scenarios' must not be empty");
  return cfg;
}

std::string dump_study_config(const StudyConfig& cfg) {
  json doc;
  doc["schema_version"] = cfg.schema_version;
  doc["scenarios"] = cfg.scenarios;
  doc["replications"] = cfg.replications;
  doc["sampler"] = sampler_json(cfg.sampler);
  if (!cfg.output_dir.empty()) doc["output_dir"] = cfg.output_dir;
  if (cfg.seed) doc["seed"] = *cfg.seed;
  return doc.dump(2) + "\n";
}

StudyConfig load_study_config(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  try {
    return parse_study_config(text);
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

std::vector<ScenarioSpec> study_scenarios(const StudyConfig& cfg, std::uint64_t seed) {
  if (cfg.scenarios.empty()) throw ValidationError("study needs at least one scenario");
  const std::vector<ScenarioSpec> grid = standard_scenarios(cfg.replications, seed);
  if (cfg.scenarios.size() == 1 && cfg.scenarios[0] == "all") return grid;
  std::vector<ScenarioSpec> out;
  for (size_t i = 0; i < cfg.scenarios.size(); ++i) {
    const std::string& name = cfg.scenarios[i];
    if (name == "all") throw ValidationError("\"all\" cannot be combined with other scenarios");
    ScenarioSpec s;
    bool found = false;
    for (const auto& g : grid) {
      if (g.name() == name) {
        s = g;
        found = true;
      }
    }
    if (!found) {
      s = scenario_from_name(name);
      s.replications = cfg.replications;
      s.seed = scenario_seed(seed, grid.size() + i);
    }
    for (const auto& prev : out) {
      if (prev.name() == s.name()) throw ValidationError("scenario '" + name + "' listed twice");
    }
    out.push_back(s);
  }
  return out;
}

}  // namespace bdarma

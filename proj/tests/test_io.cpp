#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "bdarma/config.hpp"
#include "bdarma/errors.hpp"
#include "bdarma/io.hpp"
#include "bdarma/simulation.hpp"
#include "test_support.hpp"

namespace bdarma {
namespace {

namespace fs = std::filesystem;

class TempDir : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("bdarma_io_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  void write(const std::string& name, const std::string& text) { std::ofstream(dir_ / name) << text; }

  fs::path dir_;
};

using SeriesIo = TempDir;
using DrawsIo = TempDir;
using ConfigIo = TempDir;

TEST(Months, ParseAndFormat) {
  EXPECT_EQ(parse_month("2014-01"), 2014 * 12);
  EXPECT_EQ(format_month(parse_month("2020-02")), "2020-02");
  EXPECT_EQ(parse_month("2021-01") - parse_month("2014-01") + 1, 85);
  EXPECT_THROW(parse_month("2020-13"), ValidationError);
  EXPECT_THROW(parse_month("2020-1"), ValidationError);
  const auto labels = time_labels("2019-11", 4);
  EXPECT_EQ(labels, (std::vector<std::string>{"2019-11", "2019-12", "2020-01", "2020-02"}));
  EXPECT_EQ(time_labels("", 3), (std::vector<std::string>{"1", "2", "3"}));
}

TEST(FormatDouble, ShortestRoundTrip) {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int i = 0; i < 1000; ++i) {
    const double x = u(gen) * std::pow(10.0, static_cast<int>(gen() % 40) - 20);
    EXPECT_EQ(std::stod(format_double(x)), x);
  }
  EXPECT_EQ(format_double(0.1), "0.1");
}

TEST_F(SeriesIo, RoundTripIsExact) {
  const SimulatedData data = simulate_covid_like(4);
  SeriesFile s;
  s.part_names = data.part_names;
  s.rows = data.rows;
  s.times = time_labels(data.start_month, static_cast<int>(data.rows.size()));
  write_series(dir_ / "data.csv", s);
  const SeriesFile back = read_series(dir_ / "data.csv");
  ASSERT_EQ(back.size(), s.size());
  EXPECT_EQ(back.part_names, s.part_names);
  EXPECT_EQ(back.times, s.times);
  EXPECT_TRUE(back.monthly());
  for (int i = 0; i < s.size(); ++i) EXPECT_EQ(back.rows[i].values(), s.rows[i].values()) << "row " << i;
  EXPECT_EQ(back.resolve("2020-02"), 74);
  EXPECT_EQ(back.resolve("74"), 74);
  EXPECT_THROW(back.resolve("2022-01"), ValidationError);
}

TEST_F(SeriesIo, ClosesRowsThatAreNotCompositions) {
  write("d.csv", "t,a,b,c\n1,2,1,1\n2,0.5,0,0.5\n");
  const SeriesFile s = read_series(dir_ / "d.csv");
  EXPECT_NEAR(s.rows[0][0], 0.5, 1e-15);
  EXPECT_GT(s.rows[1][1], 0.0);
  EXPECT_NEAR(s.rows[1].values().sum(), 1.0, 1e-12);
}

TEST_F(SeriesIo, ErrorsNameTheLine) {
  write("bad.csv", "t,a,b,c\n1,0.2,0.3,0.5\n2,0.2,x,0.6\n");
  try {
    read_series(dir_ / "bad.csv");
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
  write("neg.csv", "t,a,b,c\n1,0.2,-0.3,0.5\n");
  EXPECT_THROW(read_series(dir_ / "neg.csv"), ValidationError);
  write("order.csv", "t,a,b,c\n2,0.2,0.3,0.5\n1,0.2,0.3,0.5\n");
  EXPECT_THROW(read_series(dir_ / "order.csv"), ValidationError);
  write("width.csv", "t,a,b,c\n1,0.2,0.8\n");
  EXPECT_THROW(read_series(dir_ / "width.csv"), ValidationError);
  EXPECT_THROW(read_series(dir_ / "missing.csv"), IoError);
}

TEST_F(DrawsIo, RoundTripIsExact) {
  ModelSpec spec;
  spec.variant = Variant::kIntervention;
  spec.parts = 4;
  spec.k_mean = 1;
  spec.break_index = 10;
  std::mt19937_64 gen(2);
  std::vector<ParamSet> sets;
  for (int i = 0; i < 5; ++i) {
    ParamSet p = ParamSet::zeros(spec);
    p.b = testing_support::random_normal(gen, 3);
    p.v_raw = testing_support::random_normal(gen, 3).normalized();
    if (p.v_raw[0] < 0) p.v_raw = -p.v_raw;
    p.delta = 0.3 * i;
    sets.push_back(p);
  }
  PosteriorDraws draws = testing_support::draws_from(spec, sets);
  draws.chains[0].log_posterior = testing_support::random_normal(gen, 5);
  draws.chains[0].divergent[2] = 1;
  draws.chains.push_back(draws.chains[0]);
  write_draws(dir_ / "draws.csv", draws);
  const PosteriorDraws back = read_draws(dir_ / "draws.csv", spec);
  ASSERT_EQ(back.num_chains(), 2);
  EXPECT_EQ(back.names, draws.names);
  for (int c = 0; c < 2; ++c) {
    EXPECT_EQ(back.chains[c].values, draws.chains[c].values);
    EXPECT_EQ(back.chains[c].log_posterior, draws.chains[c].log_posterior);
    EXPECT_EQ(back.chains[c].divergent, draws.chains[c].divergent);
  }

  ModelSpec other = spec;
  other.variant = Variant::kBaseline;
  EXPECT_THROW(read_draws(dir_ / "draws.csv", other), ValidationError);
}

TEST_F(DrawsIo, BaselineHasNoInterventionColumns) {
  ModelSpec spec;
  spec.parts = 3;
  PosteriorDraws draws = testing_support::draws_from(spec, {ParamSet::zeros(spec)});
  write_draws(dir_ / "draws.csv", draws);
  const std::string text = read_file(dir_ / "draws.csv");
  const std::string header = text.substr(0, text.find('\n'));
  EXPECT_EQ(header, "chain,iteration,b.1,b.2,A.1,A.2,Theta.1,Theta.2,gamma.1,log_posterior,divergent");
}

TEST(WriteFileAtomic, ReplacesContentsAndLeavesNoTemporary) {
  const fs::path dir = fs::temp_directory_path() / "bdarma_atomic";
  fs::remove_all(dir);
  write_file_atomic(dir / "nested" / "f.txt", "one");
  write_file_atomic(dir / "nested" / "f.txt", "two");
  EXPECT_EQ(read_file(dir / "nested" / "f.txt"), "two");
  EXPECT_FALSE(fs::exists(dir / "nested" / "f.txt.tmp"));
  fs::remove_all(dir);
}

constexpr const char* kFullConfig = R"({
  "schema_version": 1,
  "model": {"variant": "intervention", "break": "2020-02"},
  "covariates": {"trend": true, "harmonics": [12, 6], "precision_trend": true, "trend_scale": 85},
  "priors": {"delta_sd": 2.0, "tau_sd": 3.5},
  "sampler": {"chains": 2, "warmup": 100, "draws": 150, "target_accept": 0.9, "max_depth": 8},
  "forecast": {"horizon": 3, "draws_per_posterior": 2},
  "rolling": {"origins": ["2020-07", 80], "horizons": [1, 2], "min_training": 30},
  "output_dir": "out",
  "seed": 42
})";

TEST(RunConfigParse, ReadsEveryField) {
  const RunConfig c = parse_run_config(kFullConfig);
  EXPECT_EQ(c.variant, Variant::kIntervention);
  EXPECT_EQ(*c.break_ref, "2020-02");
  EXPECT_EQ(c.harmonics, (std::vector<double>{12, 6}));
  EXPECT_TRUE(c.precision_trend);
  EXPECT_EQ(*c.trend_scale, 85.0);
  EXPECT_EQ(c.priors.delta_sd, 2.0);
  EXPECT_EQ(c.priors.tau_sd, 3.5);
  EXPECT_EQ(c.priors.b_sd, PriorConfig{}.b_sd);
  EXPECT_EQ(c.sampler.chains, 2);
  EXPECT_EQ(c.sampler.target_accept, 0.9);
  EXPECT_EQ(c.horizon, 3);
  EXPECT_EQ(c.draws_per_posterior, 2);
  EXPECT_EQ(c.origins, (std::vector<std::string>{"2020-07", "80"}));
  EXPECT_EQ(c.horizons, (std::vector<int>{1, 2}));
  EXPECT_EQ(c.min_training, 30);
  EXPECT_EQ(c.output_dir, "out");
  EXPECT_EQ(*c.seed, 42u);
}

TEST(RunConfigParse, DumpRoundTrips) {
  const RunConfig c = parse_run_config(kFullConfig);
  const std::string text = dump_run_config(c);
  const RunConfig back = parse_run_config(text);
  EXPECT_EQ(dump_run_config(back), text);
  EXPECT_EQ(back.origins, c.origins);
  EXPECT_EQ(*back.break_ref, *c.break_ref);

  RunConfig minimal;
  minimal.variant = Variant::kBaseline;
  EXPECT_EQ(dump_run_config(parse_run_config(dump_run_config(minimal))), dump_run_config(minimal));
}

TEST(RunConfigParse, RejectsInvalidDocuments) {
  const auto bad = [](const std::string& text) { EXPECT_THROW(parse_run_config(text), ValidationError) << text; };
  bad("{}");
  bad(R"({"schema_version": 2, "model": {"variant": "baseline"}})");
  bad(R"({"schema_version": 1, "model": {"variant": "baseline"}, "extra": 1})");
  bad(R"({"schema_version": 1, "model": {"variant": "baseline", "brk": 3}})");
  bad(R"({"schema_version": 1, "model": {"variant": "baseline"}, "sampler": {"chain": 2}})");
  bad(R"({"schema_version": 1, "model": {"variant": "baseline"}, "priors": {"delta_sd": -1}})");
  bad(R"({"schema_version": 1, "model": {"variant": "baseline"}, "sampler": {"chains": 1.5}})");
  bad(R"({"schema_version": 1, "model": {"variant": "intervention"}})");
  bad(R"({"schema_version": 1, "model": {"variant": "arima"}})");
  bad(R"({"schema_version": 1, "model": {"variant": "fixed_effect", "break": "2020/02"}})");
  bad(R"({"schema_version": 1, "model": {"variant": "baseline"}, "seed": -3})");
  bad("{not json");
}

TEST_F(ConfigIo, ResolveBindsTimesToRows) {
  write("d.csv", "time,a,b,c\n2020-01,0.2,0.3,0.5\n2020-02,0.2,0.3,0.5\n2020-03,0.2,0.3,0.5\n"
                 "2020-04,0.2,0.3,0.5\n");
  const SeriesFile data = read_series(dir_ / "d.csv");
  RunConfig c = parse_run_config(
      R"({"schema_version": 1, "model": {"variant": "fixed_effect", "break": "2020-02"},
          "covariates": {"harmonics": [12]}, "rolling": {"origins": ["2020-04", 3]}})");
  const ResolvedRun r = resolve(c, data);
  EXPECT_EQ(*r.spec.break_index, 2);
  EXPECT_EQ(r.spec.parts, 3);
  EXPECT_EQ(r.spec.k_mean, 3);
  EXPECT_EQ(r.design.trend_scale, 4.0);
  EXPECT_EQ(r.plan.origins, (std::vector<int>{4, 3}));

  c.break_ref = "4";
  EXPECT_THROW(resolve(c, data), ValidationError);

  c.variant = Variant::kBaseline;
  EXPECT_FALSE(resolve(c, data).spec.break_index.has_value());
}

TEST(StudyConfigParse, ScenarioSelection) {
  const StudyConfig all = parse_study_config(R"({"schema_version": 1, "scenarios": "all", "replications": 3})");
  const auto specs = study_scenarios(all, 9);
  ASSERT_EQ(specs.size(), 8u);
  EXPECT_EQ(specs[0].replications, 3);

  const StudyConfig two =
      parse_study_config(R"({"schema_version": 1, "scenarios": ["k1.0_dpos_p0.3", "k0.5_dneg_p0"]})");
  const auto picked = study_scenarios(two, 9);
  ASSERT_EQ(picked.size(), 2u);
  EXPECT_EQ(picked[0].name(), "k1.0_dpos_p0.3");
  EXPECT_EQ(picked[1].seed, specs[0].seed);

  EXPECT_THROW(parse_study_config(R"({"schema_version": 1, "scenarios": []})"), ValidationError);
  EXPECT_THROW(parse_study_config(R"({"schema_version": 1, "reps": 3})"), ValidationError);
  StudyConfig dup;
  dup.scenarios = {"k0.5_dneg_p0", "k0.5_dneg_p0"};
  EXPECT_THROW(study_scenarios(dup, 1), ValidationError);

  const std::string text = dump_study_config(two);
  EXPECT_EQ(dump_study_config(parse_study_config(text)), text);
}

}  // namespace
}  // namespace bdarma

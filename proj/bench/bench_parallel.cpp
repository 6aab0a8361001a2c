// Serial reference implementations against their OpenMP counterparts.

#include <benchmark/benchmark.h>

#include <random>

#include "bdarma/forecast.hpp"
#include "bdarma/metrics.hpp"
#include "bdarma/sampler.hpp"
#include "bdarma/simulation.hpp"

namespace {

using namespace bdarma;

SamplerConfig small_sampler() {
  SamplerConfig c;
  c.chains = 4;
  c.warmup = 60;
  c.draws = 60;
  c.seed = 3;
  return c;
}

const SimulatedData& scenario_data() {
  static const SimulatedData data = simulate_dgp(standard_scenarios(1, 1)[0], 11);
  return data;
}

template <bool Parallel>
void BM_Chains(benchmark::State& state) {
  const SimulatedData& data = scenario_data();
  const LogDensity target(data.spec, data.covariates, Series(data.rows, helmert_contrast(data.spec.parts)));
  for (auto _ : state) {
    PosteriorDraws d = Parallel ? run_chains(target, small_sampler()) : run_chains_serial(target, small_sampler());
    benchmark::DoNotOptimize(d.chains.data());
  }
}
BENCHMARK(BM_Chains<false>)->Name("chains/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Chains<true>)->Name("chains/parallel")->Unit(benchmark::kMillisecond);

std::vector<Composition> random_draws(int m, int parts) {
  std::mt19937_64 gen(7);
  std::gamma_distribution<double> g(2.0, 1.0);
  std::vector<Composition> out;
  for (int i = 0; i < m; ++i) {
    Vector v(parts);
    for (int j = 0; j < parts; ++j) v[j] = g(gen);
    out.emplace_back(v / v.sum());
  }
  return out;
}

template <bool Parallel>
void BM_EnergyScore(benchmark::State& state) {
  const auto draws = random_draws(static_cast<int>(state.range(0)), 10);
  const Composition y = draws.front();
  for (auto _ : state) {
    benchmark::DoNotOptimize(Parallel ? energy_score(draws, y) : energy_score_serial(draws, y));
  }
}
BENCHMARK(BM_EnergyScore<false>)->Name("energy_score/serial")->Arg(500)->Arg(3000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_EnergyScore<true>)->Name("energy_score/parallel")->Arg(500)->Arg(3000)->Unit(benchmark::kMillisecond);

template <bool Parallel>
void BM_Forecast(benchmark::State& state) {
  const SimulatedData& data = scenario_data();
  const Series history(data.rows, helmert_contrast(data.spec.parts));
  static const PosteriorDraws draws =
      run_chains_serial(LogDensity(data.spec, data.covariates, history), small_sampler());
  ForecastConfig fc;
  fc.horizon = 12;
  fc.draws_per_posterior = 10;
  fc.future = data.design.build(static_cast<int>(data.rows.size()) + 1, fc.horizon);
  for (auto _ : state) {
    ForecastDraws f = Parallel ? forecast(draws, history, data.covariates, fc)
                               : forecast_serial(draws, history, data.covariates, fc);
    benchmark::DoNotOptimize(f.samples.data());
  }
}
BENCHMARK(BM_Forecast<false>)->Name("forecast/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Forecast<true>)->Name("forecast/parallel")->Unit(benchmark::kMillisecond);

template <bool Parallel>
void BM_Study(benchmark::State& state) {
  auto scenarios = standard_scenarios(1, 5);
  scenarios.resize(4);
  SamplerConfig c = small_sampler();
  c.chains = 2;
  for (auto _ : state) {
    StudyResult r = Parallel ? run_study(scenarios, c) : run_study_serial(scenarios, c);
    benchmark::DoNotOptimize(r.records.data());
  }
}
BENCHMARK(BM_Study<false>)->Name("study/serial")->Unit(benchmark::kMillisecond)->Iterations(1);
BENCHMARK(BM_Study<true>)->Name("study/parallel")->Unit(benchmark::kMillisecond)->Iterations(1);

template <bool Parallel>
void BM_Rolling(benchmark::State& state) {
  const SimulatedData data = simulate_covid_like(2);
  std::vector<ModelSpec> models{data.spec};
  models[0].variant = Variant::kFixedEffect;
  RollingPlan plan;
  plan.origins = {82, 83, 84, 85};
  SamplerConfig c = small_sampler();
  c.chains = 1;
  for (auto _ : state) {
    RollingResult r = Parallel ? rolling_evaluate(data.rows, data.design, models, plan, c)
                               : rolling_evaluate_serial(data.rows, data.design, models, plan, c);
    benchmark::DoNotOptimize(r.cases.data());
  }
}
BENCHMARK(BM_Rolling<false>)->Name("rolling/serial")->Unit(benchmark::kMillisecond)->Iterations(1);
BENCHMARK(BM_Rolling<true>)->Name("rolling/parallel")->Unit(benchmark::kMillisecond)->Iterations(1);

}  // namespace

BENCHMARK_MAIN();

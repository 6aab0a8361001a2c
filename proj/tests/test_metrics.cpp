#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "bdarma/errors.hpp"
#include "bdarma/metrics.hpp"
#include "bdarma/rng.hpp"
#include "test_support.hpp"

using namespace bdarma;
using testing_support::random_composition;

namespace {

Composition comp(std::initializer_list<double> v) {
  Vector x(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double a : v) x[i++] = a;
  return Composition::normalized(x);
}

// Direct double loop over ordered pairs.
double oracle_energy(const std::vector<Composition>& draws, const Composition& y, bool unbiased) {
  const double m = draws.size();
  double first = 0.0, second = 0.0;
  for (const auto& a : draws) first += aitchison_distance(a, y);
  for (size_t i = 0; i < draws.size(); ++i) {
    for (size_t j = 0; j < draws.size(); ++j) {
      if (i != j) second += aitchison_distance(draws[i], draws[j]);
    }
  }
  return first / m - second / (2.0 * (unbiased ? m * (m - 1.0) : m * m));
}

Composition permute(const Composition& x, const std::vector<int>& order) {
  Vector out(x.size());
  for (Eigen::Index j = 0; j < x.size(); ++j) out[j] = x[order[j]];
  return Composition(out);
}

}  // namespace

TEST(Quantile, TypeSevenInterpolation) {
  const std::vector<double> x{4.0, 1.0, 3.0, 2.0};
  EXPECT_NEAR(quantile(x, 0.1), 1.3, 1e-15);
  EXPECT_NEAR(quantile(x, 0.9), 3.7, 1e-15);
  EXPECT_NEAR(quantile(x, 0.5), 2.5, 1e-15);
  EXPECT_EQ(quantile(x, 0.0), 1.0);
  EXPECT_EQ(quantile(x, 1.0), 4.0);
  EXPECT_EQ(quantile({5.0}, 0.3), 5.0);
  EXPECT_THROW(quantile({}, 0.5), ValidationError);
}

TEST(AitchisonPoint, Examples) {
  const Composition y = comp({0.5, 0.25, 0.25});
  EXPECT_EQ(aitchison_point(y, y), 0.0);
  const double expected = std::sqrt(2.0 / 3.0) * std::log(2.0);
  EXPECT_NEAR(aitchison_point(y, comp({1, 1, 1})), expected, 1e-12);
  EXPECT_NEAR(expected, 0.5659524, 1e-7);
}

TEST(AitchisonPoint, PermutationInvariantAndTriangle) {
  std::mt19937_64 gen(1);
  const std::vector<int> order{3, 0, 4, 1, 2};
  for (int i = 0; i < 200; ++i) {
    const Composition a = random_composition(gen, 5), b = random_composition(gen, 5),
                      c = random_composition(gen, 5);
    EXPECT_NEAR(aitchison_point(a, b), aitchison_point(permute(a, order), permute(b, order)), 1e-12);
    EXPECT_LE(aitchison_point(a, c), aitchison_point(a, b) + aitchison_point(b, c) + 1e-10);
  }
}

TEST(AitchisonPoint, DimensionMismatchThrows) {
  EXPECT_THROW(aitchison_point(comp({1, 1, 1}), comp({1, 1, 1, 1})), DimensionError);
}

TEST(EnergyScore, DegeneratePredictiveIsZero) {
  const Composition y = comp({0.2, 0.3, 0.5});
  EXPECT_NEAR(energy_score({y, y, y, y}, y), 0.0, 1e-12);
}

TEST(EnergyScore, TwoDrawHandEvaluation) {
  const Composition a = comp({0.2, 0.3, 0.5});
  const Composition b = comp({0.6, 0.3, 0.1});
  const double d = aitchison_distance(a, b);
  // (1/2)(0 + d) - (1/(2*2*1)) * 2d = 0
  EXPECT_NEAR(energy_score({a, b}, a), 0.0, 1e-12);
  // V-statistic: (1/2)d - (1/(2*4)) * 2d = d/4
  EXPECT_NEAR(energy_score({a, b}, a, EnergyEstimator::kVStatistic), 0.25 * d, 1e-12);
}

TEST(EnergyScore, ConcentratingTowardsObservationLowersScore) {
  const Composition y = comp({0.3, 0.3, 0.4});
  const std::vector<Composition> wide{comp({0.1, 0.1, 0.8}), comp({0.6, 0.2, 0.2}), comp({0.2, 0.7, 0.1})};
  const std::vector<Composition> tight{comp({0.28, 0.32, 0.4}), comp({0.32, 0.3, 0.38}), comp({0.3, 0.27, 0.43})};
  const double s_wide = energy_score(wide, y), s_tight = energy_score(tight, y);
  EXPECT_NEAR(s_wide, oracle_energy(wide, y, true), 1e-12);
  EXPECT_NEAR(s_tight, oracle_energy(tight, y, true), 1e-12);
  EXPECT_LT(s_tight, s_wide);
}

TEST(EnergyScore, MatchesOracleAndSerialReference) {
  std::mt19937_64 gen(2);
  for (int rep = 0; rep < 10; ++rep) {
    std::vector<Composition> draws;
    for (int m = 0; m < 40; ++m) draws.push_back(random_composition(gen, 4));
    const Composition y = random_composition(gen, 4);
    const double s = energy_score(draws, y);
    EXPECT_EQ(s, energy_score_serial(draws, y));
    EXPECT_NEAR(s, oracle_energy(draws, y, true), 1e-10);
    EXPECT_NEAR(energy_score(draws, y, EnergyEstimator::kVStatistic), oracle_energy(draws, y, false), 1e-10);
    EXPECT_GE(s, 0.0);
  }
}

TEST(EnergyScore, NeedsTwoDraws) {
  const Composition y = comp({1, 1, 1});
  EXPECT_THROW(energy_score({y}, y), ValidationError);
}

TEST(PluginLogScore, FlatDirichlet) {
  std::mt19937_64 gen(3);
  for (int i = 0; i < 20; ++i) {
    EXPECT_NEAR(plugin_log_score(comp({1, 1, 1}), 3.0, random_composition(gen, 3)), std::log(2.0), 1e-10);
  }
}

TEST(PluginLogScore, SharperConcentrationAtTheMeanScoresHigher) {
  const Composition y = comp({0.5, 0.3, 0.2});
  EXPECT_GT(plugin_log_score(y, 100.0, y), plugin_log_score(y, 10.0, y));
}

TEST(PluginLogScore, RejectsInvalidConcentration) {
  const Composition y = comp({1, 1, 1});
  EXPECT_THROW(plugin_log_score(y, 0.0, y), DomainError);
  EXPECT_THROW(plugin_log_score(y, std::nan(""), y), DomainError);
}

TEST(PluginLogScore, FiniteAcrossConcentrationRange) {
  std::mt19937_64 gen(4);
  for (double lambda : {1.0, 10.0, 1e3, 1e6}) {
    const Composition mu = random_composition(gen, 5), y = random_composition(gen, 5);
    EXPECT_TRUE(std::isfinite(plugin_log_score(mu, lambda, y))) << lambda;
  }
}

TEST(Coverage, InsideAndOutside) {
  const Composition y = comp({0.2, 0.3, 0.5});
  Intervals wide{Vector::Zero(3), Vector::Ones(3)};
  EXPECT_EQ(componentwise_coverage(wide, y), 1.0);
  Intervals miss{Vector::Constant(3, 0.6), Vector::Constant(3, 0.7)};
  EXPECT_EQ(componentwise_coverage(miss, y), 0.0);
  Intervals partial{Vector::Constant(3, 0.25), Vector::Constant(3, 0.6)};
  EXPECT_NEAR(componentwise_coverage(partial, y), 2.0 / 3.0, 1e-15);
}

TEST(Coverage, InvariantToDrawOrder) {
  std::mt19937_64 gen(5);
  std::vector<Composition> draws;
  for (int m = 0; m < 101; ++m) draws.push_back(random_composition(gen, 4));
  const Composition y = random_composition(gen, 4);
  const Intervals a = central_intervals(draws);
  std::shuffle(draws.begin(), draws.end(), gen);
  const Intervals b = central_intervals(draws);
  EXPECT_EQ(a.lower, b.lower);
  EXPECT_EQ(a.upper, b.upper);
  EXPECT_EQ(componentwise_coverage(a, y), componentwise_coverage(b, y));
}

TEST(Coverage, NominalWhenWellSpecified) {
  Rng rng(17);
  Vector alpha(5);
  alpha << 8.0, 5.0, 12.0, 3.0, 20.0;
  double total = 0.0;
  const int cases = 200;
  for (int c = 0; c < cases; ++c) {
    std::vector<Composition> draws;
    for (int m = 0; m < 1000; ++m) draws.push_back(rng.dirichlet(alpha));
    total += componentwise_coverage(central_intervals(draws, 0.8), rng.dirichlet(alpha));
  }
  EXPECT_NEAR(total / cases, 0.80, 0.05);
}

TEST(Coverage, EmptyDrawsThrow) { EXPECT_THROW(central_intervals({}), ValidationError); }

TEST(Mae, HandExample) {
  EXPECT_NEAR(mae({comp({0.5, 0.5})}, {comp({0.6, 0.4})}), 0.1, 1e-12);
  const Composition y = comp({0.2, 0.3, 0.5});
  EXPECT_EQ(mae({y, y}, {y, y}), 0.0);
}

TEST(Mae, MisalignedInputsThrow) {
  const Composition y = comp({0.2, 0.3, 0.5});
  EXPECT_THROW(mae({y}, {y, y}), DimensionError);
  EXPECT_THROW(mae({comp({1, 1})}, {y}), DimensionError);
}

TEST(MeanComposition, RenormalizedAverage) {
  const Composition m = mean_composition({comp({0.2, 0.8}), comp({0.6, 0.4})});
  EXPECT_NEAR(m[0], 0.4, 1e-15);
  EXPECT_NEAR(m[1], 0.6, 1e-15);
}

#pragma once

#include <vector>

#include "bdarma/simplex.hpp"

namespace bdarma {

/// Type-7 empirical quantile (linear interpolation between order statistics,
/// h = (n - 1) p). Throws ValidationError on empty input.
double quantile(std::vector<double> values, double p);

/// Aitchison distance between a point forecast and the observation.
double aitchison_point(const Composition& mu_hat, const Composition& y);

enum class EnergyEstimator {
  kUnbiased,    // pairwise term averaged over the M(M-1) ordered pairs m != m'
  kVStatistic,  // pairwise term averaged over all M^2 pairs
};

/// Energy score under the Aitchison metric,
/// mean_m d(Y_m, y) - 1/2 * mean_pairs d(Y_m, Y_m').
/// Parallel over draws; row sums are reduced in index order, so the result
/// is bit-identical to energy_score_serial.
double energy_score(const std::vector<Composition>& draws, const Composition& y,
                    EnergyEstimator estimator = EnergyEstimator::kUnbiased);
double energy_score_serial(const std::vector<Composition>& draws, const Composition& y,
                           EnergyEstimator estimator = EnergyEstimator::kUnbiased);

/// Dirichlet log density of y at alpha = lambda_hat * mu_hat.
double plugin_log_score(const Composition& mu_hat, double lambda_hat, const Composition& y);

struct Intervals {
  Vector lower;
  Vector upper;
};

/// Per-component central intervals from type-7 quantiles at (1-level)/2 and
/// (1+level)/2.
Intervals central_intervals(const std::vector<Composition>& draws, double level = 0.8);

/// Fraction of components whose observed share lies inside [lower, upper].
double componentwise_coverage(const Intervals& intervals, const Composition& y);

/// Mean absolute error over all components of all aligned cases.
double mae(const std::vector<Composition>& mu_hat, const std::vector<Composition>& y);

/// Component-wise mean of compositions, renormalized.
Composition mean_composition(const std::vector<Composition>& values);

struct MetricRecord {
  double aitchison = 0.0;
  double energy = 0.0;
  double log_score = 0.0;
  double coverage = 0.0;
  double mae = 0.0;
};

}  // namespace bdarma

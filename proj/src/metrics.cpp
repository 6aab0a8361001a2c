#include "bdarma/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "bdarma/errors.hpp"
#include "bdarma/model.hpp"

namespace bdarma {

namespace {

void require_draws(const std::vector<Composition>& draws, const Composition& y, size_t minimum) {
  if (draws.size() < minimum) {
    throw ValidationError("need at least " + std::to_string(minimum) + " predictive draws");
  }
  for (const auto& d : draws) {
    if (d.size() != y.size()) throw DimensionError("draw and observation differ in size");
  }
}

Matrix clr_rows(const std::vector<Composition>& draws) {
  Matrix out(draws.size(), draws.front().size());
  for (size_t m = 0; m < draws.size(); ++m) out.row(m) = clr(draws[m]).transpose();
  return out;
}

// Sum over m' > m of |clr_m - clr_m'|.
double pair_row_sum(const Matrix& c, Eigen::Index m) {
  double s = 0.0;
  for (Eigen::Index k = m + 1; k < c.rows(); ++k) s += (c.row(m) - c.row(k)).norm();
  return s;
}

double combine(const Matrix& c, const Vector& to_obs, const Vector& pair_rows,
               EnergyEstimator estimator) {
  const double m = static_cast<double>(c.rows());
  double obs = 0.0, pairs = 0.0;
  for (Eigen::Index i = 0; i < c.rows(); ++i) {
    obs += to_obs[i];
    pairs += pair_rows[i];
  }
  const double ordered_pairs = 2.0 * pairs;
  const double denom = estimator == EnergyEstimator::kUnbiased ? m * (m - 1.0) : m * m;
  return obs / m - 0.5 * ordered_pairs / denom;
}

}  // namespace

double quantile(std::vector<double> values, double p) {
  if (values.empty()) throw ValidationError("quantile of empty sample");
  if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("quantile level must lie in [0, 1]");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * p;
  const auto lo = static_cast<size_t>(std::floor(h));
  const size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

double aitchison_point(const Composition& mu_hat, const Composition& y) {
  return aitchison_distance(mu_hat, y);
}

double energy_score(const std::vector<Composition>& draws, const Composition& y,
                    EnergyEstimator estimator) {
  require_draws(draws, y, 2);
  const Matrix c = clr_rows(draws);
  const Vector cy = clr(y);
  const auto n = c.rows();
  Vector to_obs(n), pair_rows(n);
#pragma omp parallel for schedule(dynamic, 16)
  for (Eigen::Index m = 0; m < n; ++m) {
    to_obs[m] = (c.row(m) - cy.transpose()).norm();
    pair_rows[m] = pair_row_sum(c, m);
  }
  return combine(c, to_obs, pair_rows, estimator);
}

double energy_score_serial(const std::vector<Composition>& draws, const Composition& y,
                           EnergyEstimator estimator) {
  require_draws(draws, y, 2);
  const Matrix c = clr_rows(draws);
  const Vector cy = clr(y);
  const auto n = c.rows();
  Vector to_obs(n), pair_rows(n);
  for (Eigen::Index m = 0; m < n; ++m) {
    to_obs[m] = (c.row(m) - cy.transpose()).norm();
    pair_rows[m] = pair_row_sum(c, m);
  }
  return combine(c, to_obs, pair_rows, estimator);
}

double plugin_log_score(const Composition& mu_hat, double lambda_hat, const Composition& y) {
  if (!(lambda_hat > 0.0) || !std::isfinite(lambda_hat)) {
    throw DomainError("plugin_log_score: concentration must be positive and finite");
  }
  return dirichlet_log_pdf(y, lambda_hat * mu_hat.values());
}

Intervals central_intervals(const std::vector<Composition>& draws, double level) {
  if (draws.empty()) throw ValidationError("intervals need at least one draw");
  if (!(level > 0.0 && level < 1.0)) throw ValidationError("interval level must lie in (0, 1)");
  const auto parts = draws.front().size();
  Intervals out{Vector(parts), Vector(parts)};
  std::vector<double> column(draws.size());
  for (Eigen::Index j = 0; j < parts; ++j) {
    for (size_t m = 0; m < draws.size(); ++m) column[m] = draws[m][j];
    out.lower[j] = quantile(column, 0.5 * (1.0 - level));
    out.upper[j] = quantile(column, 0.5 * (1.0 + level));
  }
  return out;
}

double componentwise_coverage(const Intervals& intervals, const Composition& y) {
  if (intervals.lower.size() != y.size() || intervals.upper.size() != y.size()) {
    throw DimensionError("coverage: interval and observation differ in size");
  }
  int inside = 0;
  for (Eigen::Index j = 0; j < y.size(); ++j) {
    if (y[j] >= intervals.lower[j] && y[j] <= intervals.upper[j]) ++inside;
  }
  return static_cast<double>(inside) / static_cast<double>(y.size());
}

double mae(const std::vector<Composition>& mu_hat, const std::vector<Composition>& y) {
  if (mu_hat.size() != y.size()) throw DimensionError("mae: forecast and observation counts differ");
  if (y.empty()) throw ValidationError("mae of zero cases");
  double total = 0.0;
  double cells = 0.0;
  for (size_t i = 0; i < y.size(); ++i) {
    if (mu_hat[i].size() != y[i].size()) throw DimensionError("mae: composition sizes differ");
    total += (mu_hat[i].values() - y[i].values()).cwiseAbs().sum();
    cells += static_cast<double>(y[i].size());
  }
  return total / cells;
}

Composition mean_composition(const std::vector<Composition>& values) {
  if (values.empty()) throw ValidationError("mean of zero compositions");
  Vector sum = Vector::Zero(values.front().size());
  for (const auto& v : values) {
    if (v.size() != sum.size()) throw DimensionError("mean_composition: sizes differ");
    sum += v.values();
  }
  return Composition::normalized(sum);
}

}  // namespace bdarma

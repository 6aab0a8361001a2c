#pragma once

#include <string>
#include <vector>

#include "bdarma/model.hpp"

namespace bdarma {

/// Deterministic regressors generated from the time index, so they can be
/// extended past the end of the sample when forecasting.
///
/// Mean columns, in order: trend t / trend_scale (when `trend`), then
/// sin(2 pi t / p) and cos(2 pi t / p) for each period p in `harmonics`.
/// Precision columns: intercept, then t / trend_scale when `precision_trend`.
struct CovariateDesign {
  bool trend = true;
  std::vector<double> harmonics;
  bool precision_trend = false;
  double trend_scale = 1.0;

  int k_mean() const { return (trend ? 1 : 0) + 2 * static_cast<int>(harmonics.size()); }
  int k_prec() const { return precision_trend ? 2 : 1; }
  std::vector<std::string> mean_names() const;
  std::vector<std::string> prec_names() const;
  void validate() const;

  /// Rows for 1-based times first_t, ..., first_t + rows - 1.
  CovariateSet build(int first_t, int rows) const;
};

}  // namespace bdarma

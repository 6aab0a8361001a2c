#include "bdarma/covariates.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "bdarma/errors.hpp"

namespace bdarma {

namespace {

std::string period_label(double p) {
  std::ostringstream out;
  out << p;
  return out.str();
}

}  // namespace

std::vector<std::string> CovariateDesign::mean_names() const {
  std::vector<std::string> names;
  if (trend) names.emplace_back("trend");
  for (double p : harmonics) {
    names.push_back("sin" + period_label(p));
    names.push_back("cos" + period_label(p));
  }
  return names;
}

std::vector<std::string> CovariateDesign::prec_names() const {
  std::vector<std::string> names{"intercept"};
  if (precision_trend) names.emplace_back("trend");
  return names;
}

void CovariateDesign::validate() const {
  if (!(trend_scale > 0.0) || !std::isfinite(trend_scale)) {
    throw ValidationError("trend_scale must be positive");
  }
  for (double p : harmonics) {
    if (!(p > 0.0) || !std::isfinite(p)) throw ValidationError("harmonic periods must be positive");
  }
}

CovariateSet CovariateDesign::build(int first_t, int rows) const {
  validate();
  if (rows < 0) throw DimensionError("covariate rows must be >= 0");
  CovariateSet out{Matrix(rows, k_mean()), Matrix(rows, k_prec())};
  for (int i = 0; i < rows; ++i) {
    const double t = first_t + i;
    int col = 0;
    if (trend) out.mean(i, col++) = t / trend_scale;
    for (double p : harmonics) {
      const double angle = 2.0 * std::numbers::pi * t / p;
      out.mean(i, col++) = std::sin(angle);
      out.mean(i, col++) = std::cos(angle);
    }
    out.prec(i, 0) = 1.0;
    if (precision_trend) out.prec(i, 1) = t / trend_scale;
  }
  return out;
}

}  // namespace bdarma

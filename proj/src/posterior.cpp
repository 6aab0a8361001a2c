#include "bdarma/posterior.hpp"

#include <cmath>
#include <limits>

#include "bdarma/errors.hpp"

namespace bdarma {

LogDensity::LogDensity(ModelSpec spec, CovariateSet covariates, Series series)
    : layout_(spec), covariates_(std::move(covariates)), series_(std::move(series)),
      contrast_(helmert_contrast(spec.parts)) {
  spec.validate(static_cast<int>(series_.size()));
  covariates_.validate(spec, series_.size());
  if (series_.size() > 0 && series_.parts() != spec.parts) {
    throw DimensionError("series has " + std::to_string(series_.parts()) + " parts, spec expects " +
                         std::to_string(spec.parts));
  }
}

double LogDensity::operator()(const Vector& theta, Vector& grad) const {
  double log_jac = 0.0;
  const ParamSet p = layout_.constrain(theta, &log_jac);
  const double prior = log_prior(spec(), p);
  if (!std::isfinite(prior)) return -std::numeric_limits<double>::infinity();
  ParamSet g;
  const double lik = log_likelihood_gradient(spec(), p, covariates_, series_, contrast_, g);
  if (!std::isfinite(lik)) return -std::numeric_limits<double>::infinity();
  add_log_prior_gradient(spec(), p, g);
  grad = layout_.pullback(theta, g);
  return prior + lik + log_jac;
}

double LogDensity::value(const Vector& theta) const {
  Vector scratch;
  return (*this)(theta, scratch);
}

double LogDensity::log_posterior_at(const Vector& theta) const {
  return log_posterior(spec(), layout_.constrain(theta), covariates_, series_, contrast_);
}

GradientFn LogDensity::as_function() const {
  return [this](const Vector& theta, Vector& grad) { return (*this)(theta, grad); };
}

Vector grad_log_posterior(const ModelSpec& spec, const ParamSet& params,
                          const CovariateSet& covariates, const Series& series) {
  const LogDensity target(spec, covariates, series);
  const Vector theta = target.layout().unconstrain(params);
  Vector grad;
  const double lp = target(theta, grad);
  if (!std::isfinite(lp)) throw DomainError("log posterior is not finite at these parameters");
  return grad;
}

}  // namespace bdarma

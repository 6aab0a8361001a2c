#pragma once

#include <functional>

#include "bdarma/model.hpp"
#include "bdarma/params.hpp"

namespace bdarma {

/// Log density and gradient on the unconstrained scale. Returns -inf outside
/// the support; `grad` is only meaningful for finite returns.
using GradientFn = std::function<double(const Vector& theta, Vector& grad)>;

/// Unnormalized log posterior of a model on the unconstrained scale,
/// log_prior + log_likelihood + log |Jacobian|.
class LogDensity {
 public:
  LogDensity(ModelSpec spec, CovariateSet covariates, Series series);

  const ModelSpec& spec() const { return layout_.spec(); }
  const ParamLayout& layout() const { return layout_; }
  const Matrix& contrast() const { return contrast_; }
  const Series& series() const { return series_; }
  const CovariateSet& covariates() const { return covariates_; }
  int dim() const { return layout_.size(); }

  double operator()(const Vector& theta, Vector& grad) const;
  double value(const Vector& theta) const;

  /// Constrained-scale log posterior at theta (no Jacobian).
  double log_posterior_at(const Vector& theta) const;

  GradientFn as_function() const;

 private:
  ParamLayout layout_;
  CovariateSet covariates_;
  Series series_;
  Matrix contrast_;
};

/// Gradient of the unconstrained log density of `spec` at `params`.
/// Throws DomainError if params sit on the support boundary.
Vector grad_log_posterior(const ModelSpec& spec, const ParamSet& params,
                          const CovariateSet& covariates, const Series& series);

}  // namespace bdarma

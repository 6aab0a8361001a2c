#pragma once

#include <optional>
#include <string>
#include <vector>

#include "bdarma/simplex.hpp"

namespace bdarma {

enum class Variant { kBaseline, kFixedEffect, kIntervention };

std::string to_string(Variant variant);
Variant parse_variant(const std::string& name);

/// Hyperparameters of the independent priors. Defaults are the weakly
/// informative choices used for every variant.
struct PriorConfig {
  double b_sd = 2.5;
  double B_sd = 1.0;
  double gamma_sd = 1.0;
  double delta_sd = 1.5;
  double tau_offset = 2.0;  // prior mean of tau is break_index + tau_offset
  double tau_sd = 4.0;
  double kappa_log_mean = -0.5;
  double kappa_log_sd = 1.0;
  double delta_phi_sd = 0.5;
  double beta_covid_sd = 1.0;
};

/// Diagonal P = Q = 1 model. Time indices are 1-based: row i of a series is
/// time t = i + 1, and `break_index` is the last pre-break time.
struct ModelSpec {
  Variant variant = Variant::kBaseline;
  int parts = 3;
  int k_mean = 0;
  int k_prec = 1;
  std::optional<int> break_index;
  PriorConfig priors;

  int dim() const { return parts - 1; }
  bool has_intervention() const { return variant == Variant::kIntervention; }
  bool has_fixed_effect() const { return variant == Variant::kFixedEffect; }

  /// Structural checks. When `series_length` > 0 the break must also satisfy
  /// 1 <= break_index < series_length.
  void validate(int series_length = 0) const;
};

/// Coefficient bounds for the diagonal AR and MA operators.
inline constexpr double kCoefficientBound = 0.99;

struct ParamSet {
  Vector b;           // dim
  Matrix B;           // dim x k_mean
  Vector ar;          // dim, in (-0.99, 0.99)
  Vector ma;          // dim, in (-0.99, 0.99)
  Vector gamma;       // k_prec
  Vector beta_covid;  // dim, fixed-effect variant only
  double delta = 0.0;
  double tau = 0.0;
  double kappa = 1.0;
  Vector v_raw;  // dim, intervention only
  double delta_phi = 0.0;

  /// Zero coefficients, kappa = 1, tau at its prior mean, v_raw = e_1.
  static ParamSet zeros(const ModelSpec& spec);

  /// Unit shift axis v_raw / |v_raw| as used in the drift (no hemisphere flip).
  Vector shift_axis() const;

  /// Replaces (v_raw, delta) by the equivalent pair with v_raw[0] >= 0 and
  /// |v_raw| = 1. The implied shift delta * v is unchanged.
  void canonicalize();
};

struct CovariateSet {
  Matrix mean;  // T x k_mean
  Matrix prec;  // T x k_prec, column 0 is the intercept

  Eigen::Index rows() const { return prec.rows(); }
  void validate(const ModelSpec& spec, Eigen::Index series_length) const;
  CovariateSet head(Eigen::Index n) const;
};

/// Observed compositions with cached logs and ILR coordinates.
class Series {
 public:
  Series() = default;
  Series(const std::vector<Composition>& rows, const Matrix& contrast);

  Eigen::Index size() const { return values_.rows(); }
  Eigen::Index parts() const { return values_.cols(); }
  const Matrix& values() const { return values_; }
  const Matrix& log_values() const { return log_values_; }
  const Matrix& ilr_coords() const { return ilr_; }
  Composition row(Eigen::Index t) const;
  Series head(Eigen::Index n) const;

 private:
  Matrix values_;      // T x C
  Matrix log_values_;  // T x C
  Matrix ilr_;         // T x (C-1)
};

/// Latent paths implied by a parameter set on an observed series.
struct SeriesState {
  Matrix eta;    // T x dim
  Matrix drift;  // T x dim
  Matrix resid;  // T x dim, resid = Z - eta
  Vector gate;   // T
  Vector lambda; // T
  Matrix mu;     // T x C, rows on the simplex
};

/// Normalized logistic gate; 0 for t <= ell and rising towards 1 afterwards.
double gate(double t, double tau, double kappa, double ell);

struct GateValue {
  double w = 0.0;
  double d_tau = 0.0;
  double d_kappa = 0.0;
};
GateValue gate_with_derivatives(double t, double tau, double kappa, double ell);

/// Hemisphere direction: v_raw / |v_raw|, negated when the first entry is negative.
Vector direction(const Vector& v_raw);

/// CLR-space image u = V v of an ILR direction.
Vector clr_direction(const Vector& v, const Matrix& contrast);

/// Drift d_t, gate w_t and log concentration at 1-based time t for one row
/// of mean and precision covariates.
struct TimeTerms {
  Vector drift;
  double gate = 0.0;
  double log_lambda = 0.0;
};
TimeTerms time_terms(const ModelSpec& spec, const ParamSet& params, const Vector& mean_row,
                     const Vector& prec_row, double t);

SeriesState build_state(const ModelSpec& spec, const ParamSet& params,
                        const CovariateSet& covariates, const Matrix& ilr_series,
                        const Matrix& contrast);

double dirichlet_log_pdf(const Composition& y, const Vector& alpha);

double log_prior(const ModelSpec& spec, const ParamSet& params);

double log_likelihood(const ModelSpec& spec, const ParamSet& params,
                      const CovariateSet& covariates, const Series& series,
                      const Matrix& contrast);

double log_posterior(const ModelSpec& spec, const ParamSet& params,
                     const CovariateSet& covariates, const Series& series,
                     const Matrix& contrast);

}  // namespace bdarma

namespace bdarma {

/// Log likelihood together with its gradient with respect to every field of
/// the constrained parameter set (`grad` has the same shapes as `params`).
/// The MA recursion is differentiated by a reverse sweep over time.
/// Returns -inf (and leaves `grad` unspecified) outside the support.
double log_likelihood_gradient(const ModelSpec& spec, const ParamSet& params,
                               const CovariateSet& covariates, const Series& series,
                               const Matrix& contrast, ParamSet& grad);

/// Adds d log_prior / d params to `grad`.
void add_log_prior_gradient(const ModelSpec& spec, const ParamSet& params, ParamSet& grad);

}  // namespace bdarma

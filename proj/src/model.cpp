#include "bdarma/model.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "bdarma/errors.hpp"
#include "special.hpp"

namespace bdarma {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kAlphaFloor = 1e-10;

double normal_log_pdf(double x, double mean, double sd) {
  const double z = (x - mean) / sd;
  return -0.5 * z * z - std::log(sd) - 0.5 * std::log(2.0 * std::numbers::pi);
}

bool inside_bound(double x) { return x > -kCoefficientBound && x < kCoefficientBound; }

void require_shapes(const ModelSpec& spec, const ParamSet& p) {
  const int d = spec.dim();
  if (p.b.size() != d || p.B.rows() != d || p.B.cols() != spec.k_mean || p.ar.size() != d ||
      p.ma.size() != d || p.gamma.size() != spec.k_prec) {
    throw DimensionError("parameter set does not match model spec");
  }
  if (spec.has_fixed_effect() && p.beta_covid.size() != d) {
    throw DimensionError("beta_covid must have dim entries");
  }
  if (spec.has_intervention() && p.v_raw.size() != d) {
    throw DimensionError("v_raw must have dim entries");
  }
}

double break_of(const ModelSpec& spec) {
  return spec.break_index ? static_cast<double>(*spec.break_index) : 0.0;
}

}  // namespace

std::string to_string(Variant variant) {
  switch (variant) {
    case Variant::kBaseline: return "baseline";
    case Variant::kFixedEffect: return "fixed_effect";
    case Variant::kIntervention: return "intervention";
  }
  return "unknown";
}

Variant parse_variant(const std::string& name) {
  if (name == "baseline") return Variant::kBaseline;
  if (name == "fixed_effect") return Variant::kFixedEffect;
  if (name == "intervention") return Variant::kIntervention;
  throw ValidationError("unknown model variant '" + name + "'");
}

void ModelSpec::validate(int series_length) const {
  if (parts < 3) throw DimensionError("model requires C >= 3 parts");
  if (k_mean < 0) throw DimensionError("k_mean must be >= 0");
  if (k_prec < 1) throw DimensionError("k_prec must be >= 1 (intercept)");
  if (variant != Variant::kBaseline) {
    if (!break_index) throw ValidationError(to_string(variant) + " variant requires a break index");
    if (*break_index < 1) throw ValidationError("break index must be >= 1");
    if (series_length > 0 && *break_index >= series_length) {
      throw ValidationError("break index must be < series length");
    }
  }
}

ParamSet ParamSet::zeros(const ModelSpec& spec) {
  const int d = spec.dim();
  ParamSet p;
  p.b = Vector::Zero(d);
  p.B = Matrix::Zero(d, spec.k_mean);
  p.ar = Vector::Zero(d);
  p.ma = Vector::Zero(d);
  p.gamma = Vector::Zero(spec.k_prec);
  if (spec.has_fixed_effect()) p.beta_covid = Vector::Zero(d);
  if (spec.has_intervention()) {
    p.v_raw = Vector::Unit(d, 0);
    p.tau = break_of(spec) + spec.priors.tau_offset;
  }
  return p;
}

Vector ParamSet::shift_axis() const {
  const double norm = v_raw.norm();
  if (!(norm > 0.0)) throw DomainError("direction vector must be nonzero");
  return v_raw / norm;
}

void ParamSet::canonicalize() {
  if (v_raw.size() == 0) return;
  Vector axis = shift_axis();
  if (axis[0] < 0.0) {
    axis = -axis;
    delta = -delta;
  }
  v_raw = std::move(axis);
}

void CovariateSet::validate(const ModelSpec& spec, Eigen::Index series_length) const {
  if (mean.cols() != spec.k_mean || prec.cols() != spec.k_prec) {
    throw DimensionError("covariate columns do not match model spec");
  }
  if (mean.rows() != series_length || prec.rows() != series_length) {
    throw DimensionError("covariate rows do not match series length");
  }
  if (!mean.allFinite() || !prec.allFinite()) throw DomainError("non-finite covariates");
}

CovariateSet CovariateSet::head(Eigen::Index n) const {
  return {mean.topRows(n), prec.topRows(n)};
}

Series::Series(const std::vector<Composition>& rows, const Matrix& contrast) {
  const auto t_len = static_cast<Eigen::Index>(rows.size());
  const Eigen::Index c = contrast.rows();
  values_.resize(t_len, c);
  for (Eigen::Index t = 0; t < t_len; ++t) {
    if (rows[t].size() != c) throw DimensionError("series row has wrong number of parts");
    values_.row(t) = rows[t].values().transpose();
  }
  log_values_ = values_.array().log();
  ilr_.resize(t_len, c - 1);
  for (Eigen::Index t = 0; t < t_len; ++t) {
    const Vector logs = log_values_.row(t).transpose();
    const Vector centred = logs.array() - logs.mean();
    ilr_.row(t) = (contrast.transpose() * centred).transpose();
  }
}

Composition Series::row(Eigen::Index t) const { return Composition(values_.row(t).transpose()); }

Series Series::head(Eigen::Index n) const {
  Series out;
  out.values_ = values_.topRows(n);
  out.log_values_ = log_values_.topRows(n);
  out.ilr_ = ilr_.topRows(n);
  return out;
}

GateValue gate_with_derivatives(double t, double tau, double kappa, double ell) {
  if (!(kappa > 0.0)) throw DomainError("gate: kappa must be positive");
  GateValue g;
  if (t <= ell) return g;
  // w = 1 - sigma(-a) / sigma(-c) with a = kappa (t - tau), c = kappa (ell - tau).
  const double a = kappa * (t - tau);
  const double c = kappa * (ell - tau);
  const double r = detail::log_sigmoid(-a) - detail::log_sigmoid(-c);
  g.w = -std::expm1(r);
  const double survive = std::exp(r);  // 1 - w
  const double sa = detail::sigmoid(a);
  const double sc = detail::sigmoid(c);
  g.d_tau = -survive * kappa * (sa - sc);
  g.d_kappa = survive * (sa * (t - tau) - sc * (ell - tau));
  return g;
}

double gate(double t, double tau, double kappa, double ell) {
  return gate_with_derivatives(t, tau, kappa, ell).w;
}

Vector direction(const Vector& v_raw) {
  const double norm = v_raw.norm();
  if (!(norm > 0.0) || !std::isfinite(norm)) throw DomainError("direction: zero or non-finite vector");
  Vector v = v_raw / norm;
  if (v[0] < 0.0) v = -v;
  return v;
}

Vector clr_direction(const Vector& v, const Matrix& contrast) {
  if (contrast.cols() != v.size()) throw DimensionError("clr_direction: size mismatch");
  return contrast * v;
}

TimeTerms time_terms(const ModelSpec& spec, const ParamSet& params, const Vector& mean_row,
                     const Vector& prec_row, double t) {
  TimeTerms out;
  out.drift = params.b;
  if (spec.k_mean > 0) out.drift.noalias() += params.B * mean_row;
  const double ell = break_of(spec);
  if (spec.has_intervention()) {
    out.gate = gate(t, params.tau, params.kappa, ell);
    out.drift += params.delta * out.gate * params.shift_axis();
  } else if (spec.has_fixed_effect() && t > ell) {
    out.drift += params.beta_covid;
  }
  out.log_lambda = prec_row.dot(params.gamma) + params.delta_phi * out.gate;
  return out;
}

SeriesState build_state(const ModelSpec& spec, const ParamSet& params,
                        const CovariateSet& covariates, const Matrix& ilr_series,
                        const Matrix& contrast) {
  require_shapes(spec, params);
  const Eigen::Index t_len = ilr_series.rows();
  const int d = spec.dim();
  if (ilr_series.cols() != d || contrast.rows() != spec.parts || contrast.cols() != d) {
    throw DimensionError("build_state: series or contrast does not match spec");
  }
  covariates.validate(spec, t_len);
  SeriesState s;
  s.eta.resize(t_len, d);
  s.drift.resize(t_len, d);
  s.resid.resize(t_len, d);
  s.gate = Vector::Zero(t_len);
  s.lambda.resize(t_len);
  s.mu.resize(t_len, spec.parts);
  Vector mu_row(spec.parts);
  for (Eigen::Index i = 0; i < t_len; ++i) {
    const TimeTerms terms = time_terms(spec, params, covariates.mean.row(i).transpose(),
                                       covariates.prec.row(i).transpose(), static_cast<double>(i + 1));
    const Vector& drift = terms.drift;
    s.gate[i] = terms.gate;
    Vector eta = drift;
    if (i > 0) {
      eta.array() += params.ar.array() * (ilr_series.row(i - 1) - s.drift.row(i - 1)).transpose().array() +
                     params.ma.array() * s.resid.row(i - 1).transpose().array();
    }
    s.drift.row(i) = drift.transpose();
    s.eta.row(i) = eta.transpose();
    s.resid.row(i) = ilr_series.row(i) - s.eta.row(i);
    s.lambda[i] = std::exp(terms.log_lambda);
    ilr_inv_into(eta, contrast, mu_row);
    s.mu.row(i) = mu_row.transpose();
  }
  return s;
}

double dirichlet_log_pdf(const Composition& y, const Vector& alpha) {
  if (alpha.size() != y.size()) throw DimensionError("dirichlet_log_pdf: size mismatch");
  if (!alpha.allFinite() || (alpha.array() <= 0.0).any()) {
    throw DomainError("dirichlet_log_pdf: alpha must be positive and finite");
  }
  double out = detail::log_gamma(alpha.sum());
  for (Eigen::Index j = 0; j < alpha.size(); ++j) {
    out += -detail::log_gamma(alpha[j]) + (alpha[j] - 1.0) * std::log(y[j]);
  }
  return out;
}

double log_prior(const ModelSpec& spec, const ParamSet& p) {
  require_shapes(spec, p);
  const PriorConfig& pr = spec.priors;
  double lp = 0.0;
  for (Eigen::Index i = 0; i < p.b.size(); ++i) lp += normal_log_pdf(p.b[i], 0.0, pr.b_sd);
  for (Eigen::Index i = 0; i < p.B.size(); ++i) lp += normal_log_pdf(p.B.data()[i], 0.0, pr.B_sd);
  const double uniform = -std::log(2.0 * kCoefficientBound);
  for (Eigen::Index i = 0; i < p.ar.size(); ++i) {
    if (!inside_bound(p.ar[i]) || !inside_bound(p.ma[i])) return kNegInf;
    lp += 2.0 * uniform;
  }
  for (Eigen::Index i = 0; i < p.gamma.size(); ++i) lp += normal_log_pdf(p.gamma[i], 0.0, pr.gamma_sd);
  if (spec.has_fixed_effect()) {
    for (Eigen::Index i = 0; i < p.beta_covid.size(); ++i) {
      lp += normal_log_pdf(p.beta_covid[i], 0.0, pr.beta_covid_sd);
    }
  }
  if (spec.has_intervention()) {
    if (!(p.kappa > 0.0)) return kNegInf;
    lp += normal_log_pdf(p.delta, 0.0, pr.delta_sd);
    lp += normal_log_pdf(p.tau, break_of(spec) + pr.tau_offset, pr.tau_sd);
    const double log_kappa = std::log(p.kappa);
    lp += normal_log_pdf(log_kappa, pr.kappa_log_mean, pr.kappa_log_sd) - log_kappa;
    for (Eigen::Index i = 0; i < p.v_raw.size(); ++i) lp += normal_log_pdf(p.v_raw[i], 0.0, 1.0);
    lp += normal_log_pdf(p.delta_phi, 0.0, pr.delta_phi_sd);
  }
  return lp;
}

void add_log_prior_gradient(const ModelSpec& spec, const ParamSet& p, ParamSet& g) {
  const PriorConfig& pr = spec.priors;
  g.b.array() -= p.b.array() / (pr.b_sd * pr.b_sd);
  g.B.array() -= p.B.array() / (pr.B_sd * pr.B_sd);
  g.gamma.array() -= p.gamma.array() / (pr.gamma_sd * pr.gamma_sd);
  if (spec.has_fixed_effect()) {
    g.beta_covid.array() -= p.beta_covid.array() / (pr.beta_covid_sd * pr.beta_covid_sd);
  }
  if (spec.has_intervention()) {
    g.delta -= p.delta / (pr.delta_sd * pr.delta_sd);
    g.tau -= (p.tau - break_of(spec) - pr.tau_offset) / (pr.tau_sd * pr.tau_sd);
    const double log_kappa = std::log(p.kappa);
    g.kappa += (-1.0 - (log_kappa - pr.kappa_log_mean) / (pr.kappa_log_sd * pr.kappa_log_sd)) / p.kappa;
    g.v_raw -= p.v_raw;
    g.delta_phi -= p.delta_phi / (pr.delta_phi_sd * pr.delta_phi_sd);
  }
}

double log_likelihood_gradient(const ModelSpec& spec, const ParamSet& p,
                               const CovariateSet& cov, const Series& series,
                               const Matrix& contrast, ParamSet& g) {
  require_shapes(spec, p);
  const Eigen::Index t_len = series.size();
  const int d = spec.dim();
  const int c_parts = spec.parts;
  if (t_len > 0 && (series.parts() != c_parts)) throw DimensionError("series does not match spec");
  if (contrast.rows() != c_parts || contrast.cols() != d) throw DimensionError("contrast does not match spec");
  cov.validate(spec, t_len);

  g = ParamSet::zeros(spec);
  g.tau = 0.0;
  g.kappa = 0.0;
  if (spec.has_intervention()) g.v_raw.setZero();
  if (t_len == 0) return 0.0;

  for (Eigen::Index i = 0; i < d; ++i) {
    if (!inside_bound(p.ar[i]) || !inside_bound(p.ma[i])) return kNegInf;
  }
  const double ell = break_of(spec);
  Vector axis;
  double axis_norm = 0.0;
  if (spec.has_intervention()) {
    if (!(p.kappa > 0.0)) return kNegInf;
    axis_norm = p.v_raw.norm();
    if (!(axis_norm > 0.0)) throw DomainError("direction vector must be nonzero");
    axis = p.v_raw / axis_norm;
  }

  const Matrix& z = series.ilr_coords();
  const Matrix& log_y = series.log_values();

  // Forward sweep. Rows are stored as columns for contiguous access.
  Matrix drift(d, t_len), resid(d, t_len), g_eta(d, t_len);
  std::vector<GateValue> gates(static_cast<size_t>(t_len));
  Vector g_log_lambda(t_len);
  Vector eta(d), mu(c_parts), alpha(c_parts), g_mu(c_parts), g_clr(c_parts);
  double total = 0.0;

  for (Eigen::Index i = 0; i < t_len; ++i) {
    const double t = static_cast<double>(i + 1);
    auto d_i = drift.col(i);
    d_i = p.b;
    if (spec.k_mean > 0) d_i.noalias() += p.B * cov.mean.row(i).transpose();
    if (spec.has_intervention()) {
      gates[i] = gate_with_derivatives(t, p.tau, p.kappa, ell);
      d_i += (p.delta * gates[i].w) * axis;
    } else if (spec.has_fixed_effect() && t > ell) {
      d_i += p.beta_covid;
    }
    eta = d_i;
    if (i > 0) {
      eta.array() += p.ar.array() * (z.row(i - 1).transpose() - drift.col(i - 1)).array() +
                     p.ma.array() * resid.col(i - 1).array();
    }
    resid.col(i) = z.row(i).transpose() - eta;

    const double log_lambda = cov.prec.row(i).dot(p.gamma) + p.delta_phi * gates[i].w;
    const double lambda = std::exp(log_lambda);
    ilr_inv_into(eta, contrast, mu);
    alpha = lambda * mu;
    if (!std::isfinite(lambda) || !alpha.allFinite() || alpha.minCoeff() < kAlphaFloor) return kNegInf;

    double ll = detail::log_gamma(alpha.sum());
    double g_ll = lambda * detail::digamma(lambda);
    for (int j = 0; j < c_parts; ++j) {
      const double ly = log_y(i, j);
      const double psi = detail::digamma(alpha[j]);
      ll += -detail::log_gamma(alpha[j]) + (alpha[j] - 1.0) * ly;
      g_mu[j] = lambda * (ly - psi);
      g_ll += alpha[j] * (ly - psi);
    }
    total += ll;
    g_log_lambda[i] = g_ll;
    // Softmax Jacobian, then back through the contrast.
    const double mean_g = mu.dot(g_mu);
    g_clr = mu.array() * (g_mu.array() - mean_g);
    g_eta.col(i).noalias() = contrast.transpose() * g_clr;
  }
  if (!std::isfinite(total)) return kNegInf;

  // Reverse sweep; `carry` is the total adjoint of eta at i + 1.
  Vector carry = Vector::Zero(d);
  Vector g_eta_total(d), g_drift(d);
  Vector g_axis = Vector::Zero(d);
  for (Eigen::Index i = t_len - 1; i >= 0; --i) {
    const double t = static_cast<double>(i + 1);
    g_eta_total = g_eta.col(i).array() - p.ma.array() * carry.array();
    g_drift = g_eta_total.array() - p.ar.array() * carry.array();
    if (i + 1 < t_len) {
      g.ar.array() += carry.array() * (z.row(i).transpose() - drift.col(i)).array();
      g.ma.array() += carry.array() * resid.col(i).array();
    }
    g.b += g_drift;
    if (spec.k_mean > 0) g.B.noalias() += g_drift * cov.mean.row(i);
    g.gamma.noalias() += g_log_lambda[i] * cov.prec.row(i).transpose();
    if (spec.has_intervention()) {
      const GateValue& w = gates[i];
      const double proj = axis.dot(g_drift);
      g.delta += w.w * proj;
      g_axis += (p.delta * w.w) * g_drift;
      g.delta_phi += g_log_lambda[i] * w.w;
      const double g_w = p.delta * proj + p.delta_phi * g_log_lambda[i];
      g.tau += g_w * w.d_tau;
      g.kappa += g_w * w.d_kappa;
    } else if (spec.has_fixed_effect() && t > ell) {
      g.beta_covid += g_drift;
    }
    carry = g_eta_total;
  }
  if (spec.has_intervention()) {
    g.v_raw = (g_axis - axis * axis.dot(g_axis)) / axis_norm;
  }
  return total;
}

double log_likelihood(const ModelSpec& spec, const ParamSet& params,
                      const CovariateSet& covariates, const Series& series,
                      const Matrix& contrast) {
  ParamSet scratch;
  return log_likelihood_gradient(spec, params, covariates, series, contrast, scratch);
}

double log_posterior(const ModelSpec& spec, const ParamSet& params,
                     const CovariateSet& covariates, const Series& series,
                     const Matrix& contrast) {
  const double prior = log_prior(spec, params);
  if (!std::isfinite(prior)) return prior;
  return prior + log_likelihood(spec, params, covariates, series, contrast);
}

}  // namespace bdarma

#include "bdarma/params.hpp"

#include <algorithm>
#include <cmath>

#include "bdarma/errors.hpp"

namespace bdarma {

double bounded_from_real(double u) { return kCoefficientBound * std::tanh(0.5 * u); }

double bounded_to_real(double x) {
  if (!(x > -kCoefficientBound && x < kCoefficientBound)) {
    throw DomainError("coefficient outside (-0.99, 0.99)");
  }
  return 2.0 * std::atanh(x / kCoefficientBound);
}

ParamLayout::ParamLayout(const ModelSpec& spec) : spec_(spec) {
  const int d = spec.dim();
  auto push = [&](const std::string& base, int n) {
    const int start = size_;
    for (int i = 0; i < n; ++i) names_.push_back(base + "." + std::to_string(i + 1));
    size_ += n;
    return start;
  };
  b_ = push("b", d);
  B_ = size_;
  for (int r = 0; r < d; ++r) {
    for (int k = 0; k < spec.k_mean; ++k) {
      names_.push_back("B." + std::to_string(r + 1) + "." + std::to_string(k + 1));
    }
  }
  size_ += d * spec.k_mean;
  ar_ = push("A", d);
  ma_ = push("Theta", d);
  gamma_ = push("gamma", spec.k_prec);
  if (spec.has_fixed_effect()) beta_ = push("beta_covid", d);
  if (spec.has_intervention()) {
    auto scalar = [&](const std::string& name) {
      names_.push_back(name);
      return size_++;
    };
    delta_ = scalar("Delta");
    tau_ = scalar("tau");
    kappa_ = scalar("kappa");
    v_ = push("v", d);
    delta_phi_ = scalar("delta_phi");
  }
}

int ParamLayout::index_of(const std::string& name) const {
  const auto it = std::find(names_.begin(), names_.end(), name);
  return it == names_.end() ? -1 : static_cast<int>(it - names_.begin());
}

namespace {

// B is stored row-major in flat vectors: entry (r, k) at offset + r * k_mean + k.
void write_common(const ParamLayout& lay, const ParamSet& p, Vector& out) {
  const ModelSpec& spec = lay.spec();
  const int d = spec.dim();
  out.segment(lay.b_offset(), d) = p.b;
  for (int r = 0; r < d; ++r) {
    for (int k = 0; k < spec.k_mean; ++k) out[lay.B_offset() + r * spec.k_mean + k] = p.B(r, k);
  }
  out.segment(lay.gamma_offset(), spec.k_prec) = p.gamma;
  if (spec.has_fixed_effect()) out.segment(lay.beta_offset(), d) = p.beta_covid;
  if (spec.has_intervention()) {
    out[lay.tau_offset()] = p.tau;
    out[lay.delta_phi_offset()] = p.delta_phi;
  }
}

ParamSet read_common(const ParamLayout& lay, const Vector& in) {
  const ModelSpec& spec = lay.spec();
  const int d = spec.dim();
  if (in.size() != lay.size()) throw DimensionError("parameter vector has wrong length");
  ParamSet p = ParamSet::zeros(spec);
  p.b = in.segment(lay.b_offset(), d);
  for (int r = 0; r < d; ++r) {
    for (int k = 0; k < spec.k_mean; ++k) p.B(r, k) = in[lay.B_offset() + r * spec.k_mean + k];
  }
  p.gamma = in.segment(lay.gamma_offset(), spec.k_prec);
  if (spec.has_fixed_effect()) p.beta_covid = in.segment(lay.beta_offset(), d);
  if (spec.has_intervention()) {
    p.tau = in[lay.tau_offset()];
    p.delta_phi = in[lay.delta_phi_offset()];
  }
  return p;
}

}  // namespace

Vector ParamLayout::unconstrain(const ParamSet& p) const {
  Vector out(size_);
  write_common(*this, p, out);
  const int d = spec_.dim();
  for (int i = 0; i < d; ++i) {
    out[ar_ + i] = bounded_to_real(p.ar[i]);
    out[ma_ + i] = bounded_to_real(p.ma[i]);
  }
  if (spec_.has_intervention()) {
    if (!(p.kappa > 0.0)) throw DomainError("kappa must be positive");
    out[delta_] = p.delta;
    out[kappa_] = std::log(p.kappa);
    out.segment(v_, d) = p.v_raw;
  }
  return out;
}

ParamSet ParamLayout::constrain(const Vector& theta, double* log_jacobian) const {
  ParamSet p = read_common(*this, theta);
  const int d = spec_.dim();
  double log_jac = 0.0;
  for (int i = 0; i < d; ++i) {
    for (const auto& [offset, target] : {std::pair{ar_, &p.ar}, std::pair{ma_, &p.ma}}) {
      const double u = theta[offset + i];
      const double th = std::tanh(0.5 * u);
      (*target)[i] = kCoefficientBound * th;
      log_jac += std::log(0.5 * kCoefficientBound) + std::log1p(-th * th);
    }
  }
  if (spec_.has_intervention()) {
    p.delta = theta[delta_];
    p.kappa = std::exp(theta[kappa_]);
    log_jac += theta[kappa_];
    p.v_raw = theta.segment(v_, d);
  }
  if (log_jacobian) *log_jacobian += log_jac;
  return p;
}

Vector ParamLayout::pullback(const Vector& theta, const ParamSet& g) const {
  Vector out(size_);
  write_common(*this, g, out);
  const int d = spec_.dim();
  for (int i = 0; i < d; ++i) {
    for (const auto& [offset, source] : {std::pair{ar_, &g.ar}, std::pair{ma_, &g.ma}}) {
      const double th = std::tanh(0.5 * theta[offset + i]);
      out[offset + i] = (*source)[i] * 0.5 * kCoefficientBound * (1.0 - th * th) - th;
    }
  }
  if (spec_.has_intervention()) {
    out[delta_] = g.delta;
    out[kappa_] = g.kappa * std::exp(theta[kappa_]) + 1.0;
    out.segment(v_, d) = g.v_raw;
  }
  return out;
}

Vector ParamLayout::to_report(const ParamSet& params) const {
  ParamSet p = params;
  p.canonicalize();
  Vector out(size_);
  write_common(*this, p, out);
  out.segment(ar_, spec_.dim()) = p.ar;
  out.segment(ma_, spec_.dim()) = p.ma;
  if (spec_.has_intervention()) {
    out[delta_] = p.delta;
    out[kappa_] = p.kappa;
    out.segment(v_, spec_.dim()) = p.v_raw;
  }
  return out;
}

ParamSet ParamLayout::from_report(const Vector& values) const {
  ParamSet p = read_common(*this, values);
  p.ar = values.segment(ar_, spec_.dim());
  p.ma = values.segment(ma_, spec_.dim());
  if (spec_.has_intervention()) {
    p.delta = values[delta_];
    p.kappa = values[kappa_];
    p.v_raw = values.segment(v_, spec_.dim());
  }
  return p;
}

}  // namespace bdarma

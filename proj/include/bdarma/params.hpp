#pragma once

#include <string>
#include <vector>

#include "bdarma/model.hpp"

namespace bdarma {

/// Flat ordering of the free parameters of a ModelSpec.
///
/// The same ordering is used for the unconstrained sampling vector and for
/// the constrained "report" vector written to draws files. In the report
/// vector kappa is on its natural scale and (v, Delta) are canonical
/// (|v| = 1, v[0] >= 0); in the unconstrained vector kappa is log kappa,
/// AR/MA entries are scaled logits and v_raw is free.
class ParamLayout {
 public:
  explicit ParamLayout(const ModelSpec& spec);

  const ModelSpec& spec() const { return spec_; }
  int size() const { return size_; }
  const std::vector<std::string>& names() const { return names_; }
  int index_of(const std::string& name) const;  // -1 when absent

  /// Throws DomainError outside the support (|A| or |Theta| >= 0.99, kappa <= 0).
  Vector unconstrain(const ParamSet& params) const;

  /// Inverse of unconstrain. Adds log |d constrain / d theta| to *log_jacobian when given.
  ParamSet constrain(const Vector& theta, double* log_jacobian = nullptr) const;

  /// Pulls a constrained-space gradient back to theta, including the
  /// log-Jacobian terms.
  Vector pullback(const Vector& theta, const ParamSet& constrained_grad) const;

  Vector to_report(const ParamSet& params) const;
  ParamSet from_report(const Vector& values) const;

  int b_offset() const { return b_; }
  int B_offset() const { return B_; }
  int ar_offset() const { return ar_; }
  int ma_offset() const { return ma_; }
  int gamma_offset() const { return gamma_; }
  int beta_offset() const { return beta_; }   // -1 unless fixed effect
  int delta_offset() const { return delta_; } // -1 unless intervention
  int tau_offset() const { return tau_; }
  int kappa_offset() const { return kappa_; }
  int v_offset() const { return v_; }
  int delta_phi_offset() const { return delta_phi_; }

 private:
  ModelSpec spec_;
  int size_ = 0;
  int b_ = 0, B_ = 0, ar_ = 0, ma_ = 0, gamma_ = 0;
  int beta_ = -1, delta_ = -1, tau_ = -1, kappa_ = -1, v_ = -1, delta_phi_ = -1;
  std::vector<std::string> names_;
};

/// x = 0.99 (2 sigmoid(u) - 1), mapping the real line onto (-0.99, 0.99).
double bounded_from_real(double u);
double bounded_to_real(double x);

}  // namespace bdarma

#include "bdarma/recursion.hpp"

#include <cmath>

#include "bdarma/errors.hpp"

namespace bdarma {

SimulatedStep simulate_step(const ModelSpec& spec, const ParamSet& params, const Matrix& contrast,
                            const Vector& mean_row, const Vector& prec_row, double t, Carry& carry,
                            Rng& rng) {
  const TimeTerms terms = time_terms(spec, params, mean_row, prec_row, t);
  Vector eta = terms.drift;
  if (!carry.empty()) {
    eta.array() += params.ar.array() * (carry.z - carry.drift).array() +
                   params.ma.array() * carry.resid.array();
  }
  Vector mu(spec.parts);
  ilr_inv_into(eta, contrast, mu);
  const double lambda = std::exp(terms.log_lambda);
  if (!std::isfinite(lambda) || !(lambda > 0.0)) throw DomainError("simulated concentration is not finite");
  Composition y = rng.dirichlet(lambda * mu);
  carry.z = ilr(y, contrast);
  carry.drift = terms.drift;
  carry.resid = carry.z - eta;
  return {std::move(eta), std::move(mu), lambda, terms.gate, std::move(y)};
}

Carry carry_from_state(const SeriesState& state, const Matrix& ilr_series) {
  const Eigen::Index n = ilr_series.rows();
  if (n == 0) return {};
  return {ilr_series.row(n - 1).transpose(), state.drift.row(n - 1).transpose(),
          state.resid.row(n - 1).transpose()};
}

}  // namespace bdarma

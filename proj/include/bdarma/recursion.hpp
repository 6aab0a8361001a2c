#pragma once

#include "bdarma/model.hpp"
#include "bdarma/rng.hpp"

namespace bdarma {

/// Quantities the DARMA recursion carries from one step to the next.
/// An empty carry means the next step is t = 1 (eta_1 = d_1).
struct Carry {
  Vector z;
  Vector drift;
  Vector resid;

  bool empty() const { return z.size() == 0; }
};

struct SimulatedStep {
  Vector eta;
  Vector mu;
  double lambda = 0.0;
  double gate = 0.0;
  Composition y;
};

/// One generative step at 1-based time t: builds eta_t from the carry, draws
/// Y_t ~ Dirichlet(lambda_t mu_t) and advances the carry with Z_t = ilr(Y_t)
/// and e_t = Z_t - eta_t.
SimulatedStep simulate_step(const ModelSpec& spec, const ParamSet& params, const Matrix& contrast,
                            const Vector& mean_row, const Vector& prec_row, double t, Carry& carry,
                            Rng& rng);

/// Carry after the last row of an observed series under `params`.
Carry carry_from_state(const SeriesState& state, const Matrix& ilr_series);

}  // namespace bdarma

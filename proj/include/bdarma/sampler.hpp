#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bdarma/nuts.hpp"
#include "bdarma/posterior.hpp"

namespace bdarma {

struct SamplerConfig {
  int chains = 4;
  int warmup = 500;
  int draws = 750;
  std::uint64_t seed = 1;
  double target_accept = 0.8;
  int max_depth = 10;
  double divergence_threshold = 1000.0;
  double init_radius = 2.0;
  int max_init_attempts = 100;

  void validate() const;
};

/// Raw output of one chain on the unconstrained scale.
struct ChainTrace {
  Matrix theta;                    // draws x dim
  Vector log_density;              // unconstrained log density per draw
  std::vector<std::uint8_t> divergent;
  Vector energy_error;
  Vector accept_stat;
  std::vector<int> n_leapfrog;
  double step_size = 0.0;
  Vector inv_metric;
  int warmup_divergences = 0;
};

/// Runs warmup then sampling from `init`.
///
/// Warmup: step size adapted by dual averaging throughout; the diagonal
/// metric is re-estimated at the end of two slow windows, [15%, 50%) and
/// [50%, 90%) of warmup, so the final metric comes from the second half.
/// Each metric update restarts the dual averaging. Warmups shorter than 20
/// iterations only adapt the step size.
ChainTrace run_chain(const GradientFn& target, const Vector& init, const SamplerConfig& config,
                     Rng& rng);

/// Draws uniform on [-radius, radius] for every unconstrained coordinate,
/// retrying until the density and gradient are finite.
/// Throws InitializationError after config.max_init_attempts failures.
Vector initialize_unconstrained(const GradientFn& target, int dim, const SamplerConfig& config,
                                Rng& rng);

/// Seeded initial parameter set for a model.
ParamSet initialize(const LogDensity& target, std::uint64_t seed, const SamplerConfig& config = {});

/// Posterior sample of one chain on the constrained, canonical scale.
struct ChainDraws {
  Matrix values;            // draws x n_params, ParamLayout report order
  Vector log_posterior;     // constrained log posterior (no Jacobian)
  std::vector<std::uint8_t> divergent;
  Vector energy_error;
  Vector accept_stat;
  std::vector<int> n_leapfrog;
  double step_size = 0.0;
  Vector inv_metric;
};

struct PosteriorDraws {
  ModelSpec spec;
  std::vector<std::string> names;
  std::vector<ChainDraws> chains;

  int num_chains() const { return static_cast<int>(chains.size()); }
  int draws_per_chain() const { return chains.empty() ? 0 : static_cast<int>(chains[0].values.rows()); }
  int total_draws() const { return num_chains() * draws_per_chain(); }
  int num_params() const { return static_cast<int>(names.size()); }

  /// Chain-major flattening: draw k is chain k / n, iteration k % n.
  ParamSet draw(int k) const;
  Vector column(int param) const;                     // all chains stacked
  std::vector<Vector> per_chain(int param) const;
  Vector posterior_mean() const;
};

/// Chains run concurrently with OpenMP, one RNG stream per chain index; the
/// result is identical to run_chains_serial for the same seed.
PosteriorDraws run_chains(const LogDensity& target, const SamplerConfig& config);

/// Single-threaded reference implementation of run_chains.
PosteriorDraws run_chains_serial(const LogDensity& target, const SamplerConfig& config);

/// Generic-target chains (unconstrained values stored as-is). Used for toy
/// targets pushed through the same machinery.
std::vector<ChainTrace> run_target_chains(const GradientFn& target, int dim,
                                          const SamplerConfig& config);

}  // namespace bdarma

#pragma once

#include <string>
#include <vector>

#include "bdarma/sampler.hpp"

namespace bdarma {

/// Split potential scale reduction. Each chain is cut into two halves (the
/// middle draw of odd-length chains is dropped). Returns +inf when the
/// within-half variance is zero. Requires >= 4 draws per half.
double rhat(const std::vector<Vector>& chains);

struct Diagnostics {
  std::vector<std::string> names;
  Vector rhat;
  int divergences = 0;
  double mean_accept_stat = 0.0;
  double max_rhat = 0.0;

  bool converged(double threshold = 1.01) const { return max_rhat < threshold && divergences == 0; }
  bool rhat_ok(double threshold = 1.01) const { return max_rhat < threshold; }
};

/// R-hat is NaN (and the fit reported as not converged) when chains hold
/// fewer than 8 draws.
Diagnostics diagnose(const PosteriorDraws& draws);

/// Iterations whose recorded energy error exceeds `threshold`, as
/// (chain, iteration) pairs in chain-major order.
std::vector<std::pair<int, int>> divergent_iterations(const PosteriorDraws& draws, double threshold);

}  // namespace bdarma

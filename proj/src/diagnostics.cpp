#include "bdarma/diagnostics.hpp"

#include <cmath>
#include <limits>

#include "bdarma/errors.hpp"

namespace bdarma {

double rhat(const std::vector<Vector>& chains) {
  if (chains.empty()) throw ValidationError("rhat: no chains");
  const Eigen::Index len = chains.front().size();
  for (const auto& c : chains) {
    if (c.size() != len) throw DimensionError("rhat: chains have different lengths");
  }
  const Eigen::Index half = len / 2;
  if (half < 4) throw ValidationError("rhat: need at least 4 draws per half chain");

  std::vector<Vector> halves;
  for (const auto& c : chains) {
    halves.emplace_back(c.head(half));
    halves.emplace_back(c.tail(half));
  }
  const double m = static_cast<double>(halves.size());
  const double n = static_cast<double>(half);
  Vector means(halves.size());
  double within = 0.0;
  for (size_t k = 0; k < halves.size(); ++k) {
    means[k] = halves[k].mean();
    within += (halves[k].array() - means[k]).square().sum() / (n - 1.0);
  }
  within /= m;
  if (!(within > 0.0)) return std::numeric_limits<double>::infinity();
  const double between_over_n = (means.array() - means.mean()).square().sum() / (m - 1.0);
  const double var_plus = (n - 1.0) / n * within + between_over_n;
  return std::sqrt(var_plus / within);
}

Diagnostics diagnose(const PosteriorDraws& draws) {
  Diagnostics d;
  d.names = draws.names;
  d.rhat.resize(draws.num_params());
  d.max_rhat = 0.0;
  const bool long_enough = draws.draws_per_chain() >= 8;
  for (int p = 0; p < draws.num_params(); ++p) {
    d.rhat[p] = long_enough ? rhat(draws.per_chain(p)) : std::numeric_limits<double>::quiet_NaN();
    if (std::isnan(d.max_rhat)) continue;
    if (std::isnan(d.rhat[p]) || d.rhat[p] > d.max_rhat) d.max_rhat = d.rhat[p];
  }
  double accept = 0.0;
  for (const auto& ch : draws.chains) {
    for (auto flag : ch.divergent) d.divergences += flag;
    accept += ch.accept_stat.sum();
  }
  d.mean_accept_stat = accept / std::max(1, draws.total_draws());
  return d;
}

std::vector<std::pair<int, int>> divergent_iterations(const PosteriorDraws& draws, double threshold) {
  std::vector<std::pair<int, int>> out;
  for (int c = 0; c < draws.num_chains(); ++c) {
    const Vector& err = draws.chains[c].energy_error;
    for (Eigen::Index i = 0; i < err.size(); ++i) {
      if (err[i] > threshold || std::isnan(err[i])) out.emplace_back(c, static_cast<int>(i));
    }
  }
  return out;
}

}  // namespace bdarma

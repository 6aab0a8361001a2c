#include "bdarma/rng.hpp"

namespace bdarma {

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t stream_key(std::uint64_t seed, std::initializer_list<std::uint64_t> path) {
  std::uint64_t key = mix64(seed);
  for (const std::uint64_t step : path) key = mix64(key ^ mix64(step + 0x632be59bd9b4e019ULL));
  return key;
}

Composition Rng::dirichlet(const Vector& alpha) {
  Vector g(alpha.size());
  for (Eigen::Index j = 0; j < alpha.size(); ++j) g[j] = gamma(alpha[j]);
  if (!(g.array() > 0.0).any()) {
    // Every shape parameter underflowed; fall back to the mean.
    g = alpha;
  }
  return close_with_floor(g / g.sum(), 1e-8);
}

}  // namespace bdarma

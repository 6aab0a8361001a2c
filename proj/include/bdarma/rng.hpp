#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

#include "bdarma/simplex.hpp"

namespace bdarma {

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

/// Deterministic stream key for (seed, path...). Distinct paths give
/// statistically independent streams; the same path always gives the same one.
std::uint64_t stream_key(std::uint64_t seed, std::initializer_list<std::uint64_t> path);

/// Per-worker random stream. Each chain, replication or predictive draw owns
/// one, keyed by its position in the computation, so results do not depend on
/// thread scheduling.
class Rng {
 public:
  explicit Rng(std::uint64_t key) : engine_(key) {}
  Rng(std::uint64_t seed, std::initializer_list<std::uint64_t> path) : engine_(stream_key(seed, path)) {}

  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }
  double normal() { return std::normal_distribution<double>(0.0, 1.0)(engine_); }
  double normal(double mean, double sd) { return mean + sd * normal(); }
  double gamma(double shape) { return std::gamma_distribution<double>(shape, 1.0)(engine_); }

  /// Dirichlet draw, floored at 1e-8 and renormalized so the result is a
  /// valid Composition even when tiny shape parameters underflow.
  Composition dirichlet(const Vector& alpha);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace bdarma

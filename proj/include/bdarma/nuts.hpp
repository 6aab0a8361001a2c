#pragma once

#include "bdarma/posterior.hpp"
#include "bdarma/rng.hpp"

namespace bdarma {

struct NutsOptions {
  int max_depth = 10;
  double divergence_threshold = 1000.0;
};

struct NutsTransition {
  double accept_stat = 0.0;
  int n_leapfrog = 0;
  int depth = 0;
  bool divergent = false;
  double energy_error = 0.0;  // largest H - H0 seen along the trajectory
  double log_density = 0.0;
};

/// Multinomial no-U-turn sampler with a diagonal metric.
///
/// Trajectories double in a random direction until the generalized U-turn
/// criterion fails on the full tree or across either pair of merged subtrees,
/// the depth limit is hit, or the energy error exceeds the divergence threshold.
/// Proposals are drawn by biased progressive sampling between subtrees and
/// uniform multinomial sampling within them.
class Nuts {
 public:
  Nuts(GradientFn target, int dim, NutsOptions options = {});

  void set_step_size(double eps) { step_size_ = eps; }
  double step_size() const { return step_size_; }
  void set_inv_metric(Vector inv_metric) { inv_metric_ = std::move(inv_metric); }
  const Vector& inv_metric() const { return inv_metric_; }

  /// Throws InitializationError if the density or gradient is not finite.
  void set_position(const Vector& theta);
  const Vector& position() const { return current_.q; }
  double log_density() const { return current_.lp; }

  NutsTransition transition(Rng& rng);

  /// Doubles or halves the step size until one leapfrog step from the
  /// current position crosses an acceptance probability of 0.8.
  void init_step_size(Rng& rng);

 private:
  struct Point {
    Vector q, p, grad;
    double lp = 0.0;
  };

  struct TreeState {
    double log_sum_weight;
    double sum_accept = 0.0;
    int n_leapfrog = 0;
    double max_energy_error;
    bool divergent = false;
  };

  void sample_momentum(Point& z, Rng& rng) const;
  double hamiltonian(const Point& z) const;
  Vector sharp(const Point& z) const { return inv_metric_.cwiseProduct(z.p); }
  void leapfrog(Point& z, double eps) const;
  bool build_tree(int depth, Point& z, Point& z_propose, Vector& p_sharp_beg, Vector& p_sharp_end,
                  Vector& rho, Vector& p_beg, Vector& p_end, double h0, double sign,
                  TreeState& tree, double& log_sum_weight, Rng& rng) const;

  GradientFn target_;
  int dim_;
  NutsOptions options_;
  double step_size_ = 0.1;
  Vector inv_metric_;
  Point current_;
};

}  // namespace bdarma

#include "bdarma/nuts.hpp"

#include <cmath>
#include <limits>

#include "bdarma/errors.hpp"

namespace bdarma {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double log_sum_exp(double a, double b) {
  if (a == -kInf) return b;
  if (b == -kInf) return a;
  const double hi = std::max(a, b);
  return hi + std::log1p(std::exp(-std::abs(a - b)));
}

bool no_u_turn(const Vector& p_sharp_minus, const Vector& p_sharp_plus, const Vector& rho) {
  return p_sharp_plus.dot(rho) > 0.0 && p_sharp_minus.dot(rho) > 0.0;
}

}  // namespace

Nuts::Nuts(GradientFn target, int dim, NutsOptions options)
    : target_(std::move(target)), dim_(dim), options_(options), inv_metric_(Vector::Ones(dim)) {}

void Nuts::set_position(const Vector& theta) {
  Point z;
  z.q = theta;
  z.lp = target_(z.q, z.grad);
  if (!std::isfinite(z.lp) || z.grad.size() != dim_ || !z.grad.allFinite()) {
    throw InitializationError("log density or gradient not finite at initial point");
  }
  z.p = Vector::Zero(dim_);
  current_ = std::move(z);
}

void Nuts::sample_momentum(Point& z, Rng& rng) const {
  z.p.resize(dim_);
  for (int i = 0; i < dim_; ++i) z.p[i] = rng.normal() / std::sqrt(inv_metric_[i]);
}

double Nuts::hamiltonian(const Point& z) const {
  if (!std::isfinite(z.lp)) return kInf;
  return -z.lp + 0.5 * z.p.dot(inv_metric_.cwiseProduct(z.p));
}

void Nuts::leapfrog(Point& z, double eps) const {
  z.p += 0.5 * eps * z.grad;
  z.q += eps * inv_metric_.cwiseProduct(z.p);
  z.lp = target_(z.q, z.grad);
  if (!std::isfinite(z.lp) || !z.grad.allFinite()) {
    z.lp = -kInf;
    return;
  }
  z.p += 0.5 * eps * z.grad;
}

void Nuts::init_step_size(Rng& rng) {
  Point z = current_;
  sample_momentum(z, rng);
  double h0 = hamiltonian(z);
  leapfrog(z, step_size_);
  double delta_h = h0 - hamiltonian(z);
  const double target = std::log(0.8);
  const int direction = delta_h > target ? 1 : -1;
  for (int iter = 0; iter < 100; ++iter) {
    z = current_;
    sample_momentum(z, rng);
    h0 = hamiltonian(z);
    leapfrog(z, step_size_);
    delta_h = h0 - hamiltonian(z);
    if (std::isnan(delta_h)) delta_h = -kInf;
    if (direction == 1 && !(delta_h > target)) break;
    if (direction == -1 && !(delta_h < target)) break;
    step_size_ = direction == 1 ? 2.0 * step_size_ : 0.5 * step_size_;
    if (step_size_ > 1e7) throw InitializationError("step size diverged; posterior may be improper");
    if (step_size_ < 1e-12) throw InitializationError("step size collapsed to zero");
  }
}

bool Nuts::build_tree(int depth, Point& z, Point& z_propose, Vector& p_sharp_beg,
                      Vector& p_sharp_end, Vector& rho, Vector& p_beg, Vector& p_end, double h0,
                      double sign, TreeState& tree, double& log_sum_weight, Rng& rng) const {
  if (depth == 0) {
    leapfrog(z, sign * step_size_);
    ++tree.n_leapfrog;
    double h = hamiltonian(z);
    if (std::isnan(h)) h = kInf;
    tree.max_energy_error = std::max(tree.max_energy_error, h - h0);
    if (h - h0 > options_.divergence_threshold) tree.divergent = true;
    log_sum_weight = log_sum_exp(log_sum_weight, h0 - h);
    tree.sum_accept += h0 - h > 0.0 ? 1.0 : std::exp(h0 - h);
    z_propose = z;
    p_sharp_beg = sharp(z);
    p_sharp_end = p_sharp_beg;
    rho += z.p;
    p_beg = z.p;
    p_end = p_beg;
    return !tree.divergent;
  }

  double log_sum_weight_init = -kInf;
  Vector p_init_end(dim_), p_sharp_init_end(dim_);
  Vector rho_init = Vector::Zero(dim_);
  if (!build_tree(depth - 1, z, z_propose, p_sharp_beg, p_sharp_init_end, rho_init, p_beg,
                  p_init_end, h0, sign, tree, log_sum_weight_init, rng)) {
    return false;
  }

  Point z_propose_final = z;
  double log_sum_weight_final = -kInf;
  Vector p_final_beg(dim_), p_sharp_final_beg(dim_);
  Vector rho_final = Vector::Zero(dim_);
  if (!build_tree(depth - 1, z, z_propose_final, p_sharp_final_beg, p_sharp_end, rho_final,
                  p_final_beg, p_end, h0, sign, tree, log_sum_weight_final, rng)) {
    return false;
  }

  const double log_sum_weight_subtree = log_sum_exp(log_sum_weight_init, log_sum_weight_final);
  log_sum_weight = log_sum_exp(log_sum_weight, log_sum_weight_subtree);
  if (log_sum_weight_final > log_sum_weight_subtree) {
    z_propose = z_propose_final;
  } else if (rng.uniform() < std::exp(log_sum_weight_final - log_sum_weight_subtree)) {
    z_propose = z_propose_final;
  }

  const Vector rho_subtree = rho_init + rho_final;
  rho += rho_subtree;
  bool persist = no_u_turn(p_sharp_beg, p_sharp_end, rho_subtree);
  persist = persist && no_u_turn(p_sharp_beg, p_sharp_final_beg, rho_init + p_final_beg);
  persist = persist && no_u_turn(p_sharp_init_end, p_sharp_end, rho_final + p_init_end);
  return persist;
}

NutsTransition Nuts::transition(Rng& rng) {
  Point z = current_;
  sample_momentum(z, rng);
  const double h0 = hamiltonian(z);

  Point z_fwd = z, z_bck = z, z_sample = z, z_propose = z;
  Vector p_fwd_fwd = z.p, p_sharp_fwd_fwd = sharp(z);
  Vector p_fwd_bck = z.p, p_sharp_fwd_bck = p_sharp_fwd_fwd;
  Vector p_bck_fwd = z.p, p_sharp_bck_fwd = p_sharp_fwd_fwd;
  Vector p_bck_bck = z.p, p_sharp_bck_bck = p_sharp_fwd_fwd;
  Vector rho = z.p;
  double log_sum_weight = 0.0;

  TreeState tree{0.0, 0.0, 0, -kInf, false};
  int depth = 0;
  while (depth < options_.max_depth) {
    Vector rho_fwd = Vector::Zero(dim_), rho_bck = Vector::Zero(dim_);
    double log_sum_weight_subtree = -kInf;
    bool valid = false;
    if (rng.uniform() > 0.5) {
      z = z_fwd;
      rho_bck = rho;
      p_bck_fwd = p_fwd_bck;
      p_sharp_bck_fwd = p_sharp_fwd_bck;
      valid = build_tree(depth, z, z_propose, p_sharp_fwd_bck, p_sharp_fwd_fwd, rho_fwd, p_fwd_bck,
                         p_fwd_fwd, h0, 1.0, tree, log_sum_weight_subtree, rng);
      z_fwd = z;
    } else {
      z = z_bck;
      rho_fwd = rho;
      p_fwd_bck = p_bck_fwd;
      p_sharp_fwd_bck = p_sharp_bck_fwd;
      valid = build_tree(depth, z, z_propose, p_sharp_bck_fwd, p_sharp_bck_bck, rho_bck, p_bck_fwd,
                         p_bck_bck, h0, -1.0, tree, log_sum_weight_subtree, rng);
      z_bck = z;
    }
    if (!valid) break;
    ++depth;

    if (log_sum_weight_subtree > log_sum_weight) {
      z_sample = z_propose;
    } else if (rng.uniform() < std::exp(log_sum_weight_subtree - log_sum_weight)) {
      z_sample = z_propose;
    }
    log_sum_weight = log_sum_exp(log_sum_weight, log_sum_weight_subtree);

    rho = rho_bck + rho_fwd;
    bool persist = no_u_turn(p_sharp_bck_bck, p_sharp_fwd_fwd, rho);
    persist = persist && no_u_turn(p_sharp_bck_bck, p_sharp_fwd_bck, rho_bck + p_fwd_bck);
    persist = persist && no_u_turn(p_sharp_bck_fwd, p_sharp_fwd_fwd, rho_fwd + p_bck_fwd);
    if (!persist) break;
  }

  current_ = z_sample;
  NutsTransition out;
  out.n_leapfrog = tree.n_leapfrog;
  out.accept_stat = tree.n_leapfrog > 0 ? tree.sum_accept / tree.n_leapfrog : 0.0;
  out.depth = depth;
  out.divergent = tree.divergent;
  out.energy_error = tree.max_energy_error;
  out.log_density = current_.lp;
  return out;
}

}  // namespace bdarma

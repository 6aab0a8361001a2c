#include "bdarma/sampler.hpp"

#include <cmath>
#include <exception>
#include <limits>
#include <mutex>

#include "bdarma/errors.hpp"

namespace bdarma {

namespace {

constexpr std::uint64_t kChainStream = 0x43484149;  // "CHAI"
constexpr std::uint64_t kInitStream = 0x494e4954;   // "INIT"

// Nesterov dual averaging of log step size towards a target acceptance rate.
class DualAveraging {
 public:
  explicit DualAveraging(double target) : target_(target) {}

  void restart(double step_size) {
    mu_ = std::log(10.0 * step_size);
    counter_ = 0.0;
    s_bar_ = 0.0;
    x_bar_ = 0.0;
  }

  double update(double accept_stat) {
    counter_ += 1.0;
    accept_stat = std::min(1.0, accept_stat);
    const double eta = 1.0 / (counter_ + kT0);
    s_bar_ = (1.0 - eta) * s_bar_ + eta * (target_ - accept_stat);
    const double x = mu_ - s_bar_ * std::sqrt(counter_) / kGamma;
    const double x_eta = std::pow(counter_, -kKappa);
    x_bar_ = (1.0 - x_eta) * x_bar_ + x_eta * x;
    return std::exp(x);
  }

  double final_step_size() const { return std::exp(x_bar_); }

 private:
  static constexpr double kGamma = 0.05;
  static constexpr double kT0 = 10.0;
  static constexpr double kKappa = 0.75;
  double target_;
  double mu_ = 0.0;
  double counter_ = 0.0;
  double s_bar_ = 0.0;
  double x_bar_ = 0.0;
};

class VarianceWindow {
 public:
  explicit VarianceWindow(int dim) : mean_(Vector::Zero(dim)), m2_(Vector::Zero(dim)) {}

  void add(const Vector& x) {
    ++n_;
    const Vector delta = x - mean_;
    mean_ += delta / n_;
    m2_ += delta.cwiseProduct(x - mean_);
  }

  // Shrunk towards 1e-3 as in the usual windowed adaptation.
  Vector regularized() const {
    const double n = n_;
    const Vector var = m2_ / std::max(1.0, n - 1.0);
    return (n / (n + 5.0)) * var.array() + 1e-3 * (5.0 / (n + 5.0));
  }

  int count() const { return n_; }

 private:
  int n_ = 0;
  Vector mean_;
  Vector m2_;
};

template <class Body>
void parallel_for_chains(int n, Body&& body) {
  std::exception_ptr failure;
  std::mutex lock;
#pragma omp parallel for schedule(dynamic, 1)
  for (int c = 0; c < n; ++c) {
    try {
      body(c);
    } catch (...) {
      std::lock_guard<std::mutex> guard(lock);
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
}

ChainDraws to_chain_draws(const LogDensity& target, const ChainTrace& trace) {
  const ParamLayout& layout = target.layout();
  ChainDraws out;
  const Eigen::Index n = trace.theta.rows();
  out.values.resize(n, layout.size());
  out.log_posterior.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double log_jac = 0.0;
    const ParamSet p = layout.constrain(trace.theta.row(i).transpose(), &log_jac);
    out.values.row(i) = layout.to_report(p).transpose();
    out.log_posterior[i] = trace.log_density[i] - log_jac;
  }
  out.divergent = trace.divergent;
  out.energy_error = trace.energy_error;
  out.accept_stat = trace.accept_stat;
  out.n_leapfrog = trace.n_leapfrog;
  out.step_size = trace.step_size;
  out.inv_metric = trace.inv_metric;
  return out;
}

ChainTrace model_chain(const LogDensity& target, const SamplerConfig& config, int chain) {
  Rng rng(config.seed, {kChainStream, static_cast<std::uint64_t>(chain)});
  const GradientFn fn = target.as_function();
  const Vector init = initialize_unconstrained(fn, target.dim(), config, rng);
  return run_chain(fn, init, config, rng);
}

PosteriorDraws assemble(const LogDensity& target, const std::vector<ChainTrace>& traces) {
  PosteriorDraws out;
  out.spec = target.spec();
  out.names = target.layout().names();
  out.chains.reserve(traces.size());
  for (const auto& trace : traces) out.chains.push_back(to_chain_draws(target, trace));
  return out;
}

}  // namespace

void SamplerConfig::validate() const {
  if (chains < 1 || warmup < 1 || draws < 1) {
    throw ValidationError("sampler requires chains >= 1, warmup >= 1, draws >= 1");
  }
  if (!(target_accept > 0.0 && target_accept < 1.0)) {
    throw ValidationError("target_accept must lie in (0, 1)");
  }
  if (max_depth < 1) throw ValidationError("max_depth must be >= 1");
  if (!(divergence_threshold > 0.0)) throw ValidationError("divergence_threshold must be positive");
}

Vector initialize_unconstrained(const GradientFn& target, int dim, const SamplerConfig& config,
                                Rng& rng) {
  Vector theta(dim), grad;
  for (int attempt = 0; attempt < config.max_init_attempts; ++attempt) {
    for (int i = 0; i < dim; ++i) theta[i] = rng.uniform(-config.init_radius, config.init_radius);
    const double lp = target(theta, grad);
    if (std::isfinite(lp) && grad.size() == dim && grad.allFinite()) return theta;
  }
  throw InitializationError("no finite log posterior after " +
                            std::to_string(config.max_init_attempts) + " initialization attempts");
}

ParamSet initialize(const LogDensity& target, std::uint64_t seed, const SamplerConfig& config) {
  Rng rng(seed, {kInitStream});
  const Vector theta = initialize_unconstrained(target.as_function(), target.dim(), config, rng);
  return target.layout().constrain(theta);
}

ChainTrace run_chain(const GradientFn& target, const Vector& init, const SamplerConfig& config,
                     Rng& rng) {
  config.validate();
  const int dim = static_cast<int>(init.size());
  Nuts nuts(target, dim, {config.max_depth, config.divergence_threshold});
  nuts.set_position(init);
  nuts.set_step_size(1.0);
  nuts.init_step_size(rng);

  DualAveraging adapter(config.target_accept);
  adapter.restart(nuts.step_size());

  const int w = config.warmup;
  const bool adapt_metric = w >= 20;
  const int first_start = static_cast<int>(0.15 * w);
  const int first_end = w / 2;
  const int second_end = static_cast<int>(0.9 * w);
  VarianceWindow window(dim);

  ChainTrace trace;
  for (int it = 0; it < w; ++it) {
    const NutsTransition tr = nuts.transition(rng);
    if (tr.divergent) ++trace.warmup_divergences;
    nuts.set_step_size(adapter.update(tr.accept_stat));
    if (!adapt_metric || it < first_start || it >= second_end) continue;
    window.add(nuts.position());
    if (it + 1 == first_end || it + 1 == second_end) {
      nuts.set_inv_metric(window.regularized());
      window = VarianceWindow(dim);
      nuts.init_step_size(rng);
      adapter.restart(nuts.step_size());
    }
  }
  nuts.set_step_size(adapter.final_step_size());

  const int n = config.draws;
  trace.theta.resize(n, dim);
  trace.log_density.resize(n);
  trace.divergent.assign(n, 0);
  trace.energy_error.resize(n);
  trace.accept_stat.resize(n);
  trace.n_leapfrog.assign(n, 0);
  for (int it = 0; it < n; ++it) {
    const NutsTransition tr = nuts.transition(rng);
    trace.theta.row(it) = nuts.position().transpose();
    trace.log_density[it] = tr.log_density;
    trace.divergent[it] = tr.divergent ? 1 : 0;
    trace.energy_error[it] = tr.energy_error;
    trace.accept_stat[it] = tr.accept_stat;
    trace.n_leapfrog[it] = tr.n_leapfrog;
  }
  trace.step_size = nuts.step_size();
  trace.inv_metric = nuts.inv_metric();
  return trace;
}

PosteriorDraws run_chains(const LogDensity& target, const SamplerConfig& config) {
  config.validate();
  std::vector<ChainTrace> traces(static_cast<size_t>(config.chains));
  parallel_for_chains(config.chains, [&](int c) { traces[c] = model_chain(target, config, c); });
  return assemble(target, traces);
}

PosteriorDraws run_chains_serial(const LogDensity& target, const SamplerConfig& config) {
  config.validate();
  std::vector<ChainTrace> traces;
  for (int c = 0; c < config.chains; ++c) traces.push_back(model_chain(target, config, c));
  return assemble(target, traces);
}

std::vector<ChainTrace> run_target_chains(const GradientFn& target, int dim,
                                          const SamplerConfig& config) {
  config.validate();
  std::vector<ChainTrace> traces(static_cast<size_t>(config.chains));
  parallel_for_chains(config.chains, [&](int c) {
    Rng rng(config.seed, {kChainStream, static_cast<std::uint64_t>(c)});
    const Vector init = initialize_unconstrained(target, dim, config, rng);
    traces[c] = run_chain(target, init, config, rng);
  });
  return traces;
}

ParamSet PosteriorDraws::draw(int k) const {
  const int n = draws_per_chain();
  const ParamLayout layout(spec);
  return layout.from_report(chains.at(k / n).values.row(k % n).transpose());
}

Vector PosteriorDraws::column(int param) const {
  const int n = draws_per_chain();
  Vector out(total_draws());
  for (int c = 0; c < num_chains(); ++c) out.segment(c * n, n) = chains[c].values.col(param);
  return out;
}

std::vector<Vector> PosteriorDraws::per_chain(int param) const {
  std::vector<Vector> out;
  for (const auto& ch : chains) out.emplace_back(ch.values.col(param));
  return out;
}

Vector PosteriorDraws::posterior_mean() const {
  Vector sum = Vector::Zero(num_params());
  for (const auto& ch : chains) sum += ch.values.colwise().sum().transpose();
  return sum / std::max(1, total_draws());
}

}  // namespace bdarma

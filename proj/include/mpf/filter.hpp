#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "mpf/diagnostics.hpp"
#include "mpf/errors.hpp"
#include "mpf/kernelsum.hpp"
#include "mpf/model.hpp"
#include "mpf/particle.hpp"
#include "mpf/proposal.hpp"
#include "mpf/random.hpp"
#include "mpf/resample.hpp"
#include "mpf/series.hpp"

namespace mpf {

enum class Algorithm { sir, asir, mpf, ampf };

struct FilterConfig {
  std::size_t n_particles = 500;
  Algorithm algorithm = Algorithm::sir;
  ResampleScheme resampler = ResampleScheme::stratified;
  double resample_threshold = 1.0;  // resample when ESS/N <= threshold
  KernelBackend kernel_backend = KernelBackend::naive;
  double epsilon = 1e-3;  // fast-backend tolerance for the mixture sums
  std::uint64_t seed = 1;
};

// First-stage weights of the auxiliary filters:
// lambda_i ∝ w_{t-1}^(i) p(y_t | mu_t^(i)), with mu_t^(i) the deterministic
// representative of the transition from particle i (chosen independently of
// the new samples, which is what keeps the step unbiased).
template <class State>
struct SimulationWeights {
  std::vector<double> lambda;          // normalized
  std::vector<State> representatives;  // mu_t^(i)
  std::vector<double> log_obs_at_rep;  // log p(y_t | mu_t^(i))
};

// One filtering step. `weighted` is the normalized importance-weighted
// measure at t, which estimates and diagnostics read; `carry` is what the
// next step consumes (equal to `weighted` unless a selection step ran).
template <class State>
struct StepOutput {
  ParticleSet<State> weighted;
  ParticleSet<State> carry;
  std::vector<std::uint32_t> ancestry;  // source component per particle
  bool resampled = false;
};

namespace detail {

// log sum_j w_j exp(ld(target_i, source_j)) for every target, max-shifted.
template <class State, class LogDensity>
std::vector<double> direct_mixture_logsums(const std::vector<State>& sources,
                                           const std::vector<double>& weights,
                                           const std::vector<State>& targets, LogDensity&& ld) {
  const std::size_t m = sources.size(), n = targets.size();
  std::vector<double> logw(m);
  for (std::size_t j = 0; j < m; ++j) logw[j] = std::log(weights[j]);
  std::vector<double> out(n);
  std::vector<double> row(m);
  for (std::size_t i = 0; i < n; ++i) {
    double shift = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < m; ++j) {
      row[j] = logw[j] + ld(targets[i], sources[j]);
      if (row[j] > shift) shift = row[j];
    }
    if (!std::isfinite(shift)) {
      out[i] = -std::numeric_limits<double>::infinity();
      continue;
    }
    double acc = 0.0;
    for (std::size_t j = 0; j < m; ++j) acc += std::exp(row[j] - shift);
    out[i] = shift + std::log(acc);
  }
  return out;
}

// Same mixture evaluated through the kernel-summation engine for densities
// of the form w_j N(x; mean_j, sd^2). All backends (naive included) go
// through the same request, so backend comparisons are like for like.
inline std::vector<double> gaussian_mixture_logsums(std::vector<double> means,
                                                    std::vector<double> weights,
                                                    std::vector<double> targets, double sd,
                                                    KernelBackend backend, double epsilon,
                                                    KernelSumStats* stats) {
  KernelSumRequest req;
  req.dim = 1;
  req.sources = std::move(means);
  req.source_weights = std::move(weights);
  req.targets = std::move(targets);
  req.kernel = KernelSpec::gaussian1d(sd);
  req.epsilon = epsilon;
  const auto sums = kernel_sum(req, backend, stats);
  const double log_norm = -0.5 * kLog2Pi - std::log(sd);
  std::vector<double> out(sums.size());
  for (std::size_t i = 0; i < sums.size(); ++i)
    out[i] = sums[i] > 0.0 ? std::log(sums[i]) + log_norm
                           : -std::numeric_limits<double>::infinity();
  return out;
}

// log sum_j w_j p(x_i | prev_j) via the configured backend.
template <StateSpaceModel M>
std::vector<double> transition_mixture_logsums(const M& model,
                                               const std::vector<typename M::State>& prev_states,
                                               const std::vector<double>& weights,
                                               const std::vector<typename M::State>& targets,
                                               int t, const FilterConfig& cfg,
                                               KernelSumStats* stats) {
  if constexpr (GaussianTransitionModel<M>) {
    const double sd = model.transition_stddev(t);
    if (sd > 0.0) {
      std::vector<double> means(prev_states.size());
      for (std::size_t j = 0; j < prev_states.size(); ++j)
        means[j] = model.transition_representative(prev_states[j], t);
      return gaussian_mixture_logsums(std::move(means), weights, targets, sd,
                                      cfg.kernel_backend, cfg.epsilon, stats);
    }
  }
  if (cfg.kernel_backend != KernelBackend::naive)
    throw KernelBackendError(
        "transition density is not expressible as a gaussian kernel; use the naive backend");
  return direct_mixture_logsums(prev_states, weights, targets,
                                [&](const typename M::State& x, const typename M::State& prev) {
                                  return model.transition_logdensity(x, prev, t);
                                });
}

// log sum_j w_j q(x_i | y, prev_j) via the configured backend.
template <class M, class P>
std::vector<double> proposal_mixture_logsums(const P& proposal,
                                             const std::vector<typename M::State>& prev_states,
                                             const std::vector<double>& weights,
                                             const std::vector<typename M::State>& targets,
                                             const typename M::Obs& y, int t,
                                             const FilterConfig& cfg, KernelSumStats* stats) {
  if constexpr (GaussianFormProposal<P>) {
    const double sd = proposal.stddev(y, t);
    if (sd > 0.0) {
      std::vector<double> means(prev_states.size());
      for (std::size_t j = 0; j < prev_states.size(); ++j)
        means[j] = proposal.mean(y, prev_states[j], t);
      return gaussian_mixture_logsums(std::move(means), weights, targets, sd,
                                      cfg.kernel_backend, cfg.epsilon, stats);
    }
  }
  if (cfg.kernel_backend != KernelBackend::naive)
    throw KernelBackendError(
        "proposal density is not expressible as a gaussian kernel; use the naive backend");
  return direct_mixture_logsums(prev_states, weights, targets,
                                [&](const typename M::State& x, const typename M::State& prev) {
                                  return proposal.logdensity(x, y, prev, t);
                                });
}

inline std::vector<std::uint32_t> identity_ancestry(std::size_t n) {
  std::vector<std::uint32_t> a(n);
  std::iota(a.begin(), a.end(), 0u);
  return a;
}

}  // namespace detail

template <StateSpaceModel M>
SimulationWeights<typename M::State> compute_simulation_weights(
    const ParticleSet<typename M::State>& prev, const typename M::Obs& y, const M& model) {
  const int t = prev.time_index + 1;
  const std::size_t n = prev.size();
  SimulationWeights<typename M::State> sim;
  sim.representatives.resize(n);
  sim.log_obs_at_rep.resize(n);
  std::vector<double> log_lambda(n);
  double shift = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    sim.representatives[i] = model.transition_representative(prev.states[i], t);
    sim.log_obs_at_rep[i] = model.observation_logdensity(y, sim.representatives[i], t);
    log_lambda[i] = std::log(prev.norm_weights[i]) + sim.log_obs_at_rep[i];
    if (log_lambda[i] > shift) shift = log_lambda[i];
  }
  if (!std::isfinite(shift)) throw DegenerateSimulationWeightsError(t);
  sim.lambda.resize(n);
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sim.lambda[i] = std::exp(log_lambda[i] - shift);
    sum += sim.lambda[i];
  }
  for (double& l : sim.lambda) l /= sum;
  return sim;
}

// Sequential importance sampling with selection: propagate each particle
// through the proposal, reweight by likelihood * transition / proposal, then
// resample when ESS/N falls to the configured threshold.
template <StateSpaceModel M, class P, class Rng>
  requires ProposalFor<P, M>
StepOutput<typename M::State> sir_step(const ParticleSet<typename M::State>& prev,
                                       const typename M::Obs& y, const M& model,
                                       const P& proposal, const FilterConfig& cfg, Rng& rng) {
  using State = typename M::State;
  const std::size_t n = prev.size();
  const int t = prev.time_index + 1;
  StepOutput<State> out;
  auto& cur = out.weighted;
  cur.time_index = t;
  cur.states.resize(n);
  cur.log_weights.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    cur.states[i] = proposal.sample(rng, y, prev.states[i], t);
    cur.log_weights[i] = std::log(prev.norm_weights[i]) +
                         model.observation_logdensity(y, cur.states[i], t) +
                         model.transition_logdensity(cur.states[i], prev.states[i], t) -
                         proposal.logdensity(cur.states[i], y, prev.states[i], t);
  }
  normalize_weights(cur);
  const double ess = effective_sample_size(cur.norm_weights);
  if (ess <= cfg.resample_threshold * static_cast<double>(n)) {
    out.carry = resample(cur, cfg.resampler, rng, &out.ancestry);
    out.resampled = true;
  } else {
    out.carry = cur;
    out.ancestry = detail::identity_ancestry(n);
  }
  return out;
}

// Auxiliary SIR: draw the mixture index k with probability lambda_k, then
// sample from q conditioned on that component. The weight is
//   p(y|x) p(x|x_k) / (p(y|mu_k) q(x|y,x_k)),
// the two-stage realization in which w_{t-1}/lambda cancels to 1/p(y|mu).
template <StateSpaceModel M, class P, class Rng>
  requires ProposalFor<P, M>
StepOutput<typename M::State> asir_step(const ParticleSet<typename M::State>& prev,
                                        const typename M::Obs& y, const M& model,
                                        const P& proposal, const FilterConfig& cfg, Rng& rng) {
  using State = typename M::State;
  const std::size_t n = prev.size();
  const int t = prev.time_index + 1;
  const auto sim = compute_simulation_weights(prev, y, model);
  StepOutput<State> out;
  out.ancestry = resample_indices(std::span<const double>(sim.lambda), n, cfg.resampler, rng);
  auto& cur = out.weighted;
  cur.time_index = t;
  cur.states.resize(n);
  cur.log_weights.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto k = out.ancestry[i];
    cur.states[i] = proposal.sample(rng, y, prev.states[k], t);
    cur.log_weights[i] = model.observation_logdensity(y, cur.states[i], t) +
                         model.transition_logdensity(cur.states[i], prev.states[k], t) -
                         sim.log_obs_at_rep[k] -
                         proposal.logdensity(cur.states[i], y, prev.states[k], t);
  }
  normalize_weights(cur);
  out.carry = cur;
  return out;
}

// Marginal particle filter: sample from the mixture proposal
// sum_j w_{t-1}^(j) q(x|y,x_j) by stratified component selection, then weight
//   w_t^(i) = p(y|x_i) sum_j w_j p(x_i|x_j) / sum_j w_j q(x_i|y,x_j).
// Both N-term sums go through the configured kernel backend. Sampling from
// the weighted mixture already plays the role of the selection step.
template <StateSpaceModel M, class P, class Rng>
  requires ProposalFor<P, M>
StepOutput<typename M::State> mpf_step(const ParticleSet<typename M::State>& prev,
                                       const typename M::Obs& y, const M& model,
                                       const P& proposal, const FilterConfig& cfg, Rng& rng,
                                       KernelSumStats* stats = nullptr) {
  using State = typename M::State;
  const std::size_t n = prev.size();
  const int t = prev.time_index + 1;
  StepOutput<State> out;
  out.ancestry =
      resample_indices(std::span<const double>(prev.norm_weights), n, ResampleScheme::stratified, rng);
  auto& cur = out.weighted;
  cur.time_index = t;
  cur.states.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    cur.states[i] = proposal.sample(rng, y, prev.states[out.ancestry[i]], t);

  const auto log_num = detail::transition_mixture_logsums(model, prev.states, prev.norm_weights,
                                                          cur.states, t, cfg, stats);
  const auto log_den = detail::proposal_mixture_logsums<M>(proposal, prev.states,
                                                           prev.norm_weights, cur.states, y, t,
                                                           cfg, stats);
  cur.log_weights.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    cur.log_weights[i] =
        model.observation_logdensity(y, cur.states[i], t) + log_num[i] - log_den[i];
  normalize_weights(cur);
  out.carry = cur;
  return out;
}

// Auxiliary marginal particle filter: the proposal mixture is weighted by the
// simulation weights lambda, while the predictive mixture keeps w_{t-1}:
//   w_t^(i) = p(y|x_i) sum_j w_j p(x_i|x_j) / sum_j lambda_j q(x_i|y,x_j).
template <StateSpaceModel M, class P, class Rng>
  requires ProposalFor<P, M>
StepOutput<typename M::State> ampf_step(const ParticleSet<typename M::State>& prev,
                                        const typename M::Obs& y, const M& model,
                                        const P& proposal, const FilterConfig& cfg, Rng& rng,
                                        KernelSumStats* stats = nullptr) {
  using State = typename M::State;
  const std::size_t n = prev.size();
  const int t = prev.time_index + 1;
  const auto sim = compute_simulation_weights(prev, y, model);
  StepOutput<State> out;
  out.ancestry =
      resample_indices(std::span<const double>(sim.lambda), n, ResampleScheme::stratified, rng);
  auto& cur = out.weighted;
  cur.time_index = t;
  cur.states.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    cur.states[i] = proposal.sample(rng, y, prev.states[out.ancestry[i]], t);

  const auto log_num = detail::transition_mixture_logsums(model, prev.states, prev.norm_weights,
                                                          cur.states, t, cfg, stats);
  const auto log_den = detail::proposal_mixture_logsums<M>(proposal, prev.states, sim.lambda,
                                                           cur.states, y, t, cfg, stats);
  cur.log_weights.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    cur.log_weights[i] =
        model.observation_logdensity(y, cur.states[i], t) + log_num[i] - log_den[i];
  normalize_weights(cur);
  out.carry = cur;
  return out;
}

// t = 1: importance sampling from p(x_1) with likelihood weights, identical
// for every algorithm. SIR additionally applies its per-step selection.
template <StateSpaceModel M, class Rng>
StepOutput<typename M::State> init_step(const typename M::Obs& y1, const M& model,
                                        const FilterConfig& cfg, Rng& rng) {
  using State = typename M::State;
  const std::size_t n = cfg.n_particles;
  StepOutput<State> out;
  auto& cur = out.weighted;
  cur.time_index = 1;
  cur.states.resize(n);
  cur.log_weights.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    cur.states[i] = model.sample_initial(rng);
    cur.log_weights[i] = model.observation_logdensity(y1, cur.states[i], 1);
  }
  normalize_weights(cur);
  if (cfg.algorithm == Algorithm::sir &&
      effective_sample_size(cur.norm_weights) <=
          cfg.resample_threshold * static_cast<double>(n)) {
    out.carry = resample(cur, cfg.resampler, rng, &out.ancestry);
    out.resampled = true;
  } else {
    out.carry = cur;
    out.ancestry = detail::identity_ancestry(n);
  }
  return out;
}

template <StateSpaceModel M, class P, class Rng>
  requires ProposalFor<P, M>
StepOutput<typename M::State> filter_step(const ParticleSet<typename M::State>& prev,
                                          const typename M::Obs& y, const M& model,
                                          const P& proposal, const FilterConfig& cfg, Rng& rng,
                                          KernelSumStats* stats = nullptr) {
  switch (cfg.algorithm) {
    case Algorithm::sir:
      return sir_step(prev, y, model, proposal, cfg, rng);
    case Algorithm::asir:
      return asir_step(prev, y, model, proposal, cfg, rng);
    case Algorithm::mpf:
      return mpf_step(prev, y, model, proposal, cfg, rng, stats);
    case Algorithm::ampf:
      return ampf_step(prev, y, model, proposal, cfg, rng, stats);
  }
  throw std::invalid_argument("filter_step: unknown algorithm");
}

// Runs the configured filter over the whole series. Deterministic given the
// config seed; timings are the only non-reproducible output.
template <StateSpaceModel M, class P>
  requires ProposalFor<P, M>
FilterTrace<typename M::State> run_filter(
    const ObservationSeries<typename M::State, typename M::Obs>& series, const M& model,
    const P& proposal, const FilterConfig& cfg, KernelSumStats* stats = nullptr) {
  using State = typename M::State;
  if (cfg.n_particles < 1) throw std::invalid_argument("run_filter: n_particles must be >= 1");
  if (!(cfg.epsilon > 0.0)) throw std::invalid_argument("run_filter: epsilon must be > 0");
  if (series.t_max() < 1) throw std::invalid_argument("run_filter: empty series");

  auto rng = make_rng(cfg.seed);
  FilterTrace<State> trace;
  trace.steps.reserve(series.t_max());
  const auto run_start = std::chrono::steady_clock::now();
  StepOutput<State> step;
  for (std::size_t t = 1; t <= series.t_max(); ++t) {
    const auto t0 = std::chrono::steady_clock::now();
    try {
      if (t == 1)
        step = init_step(series.observations[0], model, cfg, rng);
      else
        step = filter_step(step.carry, series.observations[t - 1], model, proposal, cfg, rng,
                           stats);
    } catch (const KernelBackendError& e) {
      throw KernelBackendError("t=" + std::to_string(t) + ": " + e.what());
    }
    const auto t1 = std::chrono::steady_clock::now();
    StepDiagnostics<State> diag;
    diag.t = static_cast<int>(t);
    diag.weight_variance = weight_variance(step.weighted.norm_weights);
    diag.unique_particles = unique_count(step.ancestry);
    diag.ess = effective_sample_size(step.weighted.norm_weights);
    diag.estimate = weighted_mean(step.weighted);
    diag.step_seconds = std::chrono::duration<double>(t1 - t0).count();
    trace.steps.push_back(diag);
  }
  trace.total_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - run_start).count();
  return trace;
}

}  // namespace mpf

#pragma once

#include <concepts>

#include "mpf/model.hpp"
#include "mpf/random.hpp"

namespace mpf {

// Proposal interface: q(x_t | y_t, x_{t-1}), duck-typed.
//   State sample(Rng&, y, prev, t)
//   double logdensity(x, y, prev, t)
// Contract: the support of q covers the support of
// p(y_t | x_t) p(x_t | x_{t-1}) wherever the filter evaluates it.
template <class P, class M>
concept ProposalFor = requires(const P& p, const typename M::State& x, const typename M::Obs& y,
                               int t, Rng& rng) {
  { p.sample(rng, y, x, t) } -> std::convertible_to<typename M::State>;
  { p.logdensity(x, y, x, t) } -> std::convertible_to<double>;
};

// Proposals that are Gaussian in x_t with a bandwidth independent of the
// previous state: q(x_t | y_t, x_{t-1}) = N(x_t; mean(y, prev, t), stddev^2).
// Required by the fast kernel backends.
template <class P>
concept GaussianFormProposal = requires(const P& p, double y, double prev, int t) {
  { p.mean(y, prev, t) } -> std::convertible_to<double>;
  { p.stddev(y, t) } -> std::convertible_to<double>;
};

// q = p(x_t | x_{t-1}), the bootstrap choice.
template <StateSpaceModel M>
struct TransitionPriorProposal {
  const M* model;

  explicit TransitionPriorProposal(const M& m) : model(&m) {}

  typename M::State sample(Rng& rng, const typename M::Obs&, const typename M::State& prev,
                           int t) const {
    return model->sample_transition(prev, t, rng);
  }
  double logdensity(const typename M::State& x, const typename M::Obs&,
                    const typename M::State& prev, int t) const {
    return model->transition_logdensity(x, prev, t);
  }

  double mean(double, double prev, int t) const
    requires GaussianTransitionModel<M>
  {
    return model->transition_representative(prev, t);
  }
  double stddev(double, int t) const
    requires GaussianTransitionModel<M>
  {
    return model->transition_stddev(t);
  }
};

// Transition prior with the noise scale inflated; the "heavier tails"
// proposal used to stress a filter's tolerance of poor proposals.
template <GaussianTransitionModel M>
struct ScaledTransitionProposal {
  const M* model;
  double inflation = 2.0;

  ScaledTransitionProposal(const M& m, double inflation_) : model(&m), inflation(inflation_) {}

  double sample(Rng& rng, double, double prev, int t) const {
    return draw_normal(rng, model->transition_representative(prev, t),
                       inflation * model->transition_stddev(t));
  }
  double logdensity(double x, double, double prev, int t) const {
    return gaussian_logpdf(x, model->transition_representative(prev, t),
                           inflation * model->transition_stddev(t));
  }
  double mean(double, double prev, int t) const { return model->transition_representative(prev, t); }
  double stddev(double, int t) const { return inflation * model->transition_stddev(t); }
};

}  // namespace mpf

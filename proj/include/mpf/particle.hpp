#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "mpf/errors.hpp"

namespace mpf {

// Weighted particle approximation of the filtering distribution at one
// timestep. Weights are carried in the log domain; norm_weights holds the
// max-shifted normalization and sums to 1.
template <class State>
struct ParticleSet {
  std::vector<State> states;
  std::vector<double> log_weights;
  std::vector<double> norm_weights;
  int time_index = 1;

  std::size_t size() const { return states.size(); }
};

template <class State>
void normalize_weights(ParticleSet<State>& ps) {
  double shift = -std::numeric_limits<double>::infinity();
  for (double lw : ps.log_weights)
    if (lw > shift) shift = lw;
  if (!std::isfinite(shift)) throw DegenerateWeightsError(ps.time_index);
  ps.norm_weights.resize(ps.log_weights.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < ps.log_weights.size(); ++i) {
    ps.norm_weights[i] = std::exp(ps.log_weights[i] - shift);
    sum += ps.norm_weights[i];
  }
  for (double& w : ps.norm_weights) w /= sum;
}

// Posterior mean under the normalized weights (the Monte Carlo estimate of
// the conditional expectation with f(x) = x).
template <class State>
State weighted_mean(const ParticleSet<State>& ps) {
  State acc{};
  for (std::size_t i = 0; i < ps.size(); ++i) acc += ps.norm_weights[i] * ps.states[i];
  return acc;
}

}  // namespace mpf

#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <vector>

#include "mpf/particle.hpp"
#include "mpf/random.hpp"

namespace mpf {

enum class ResampleScheme { multinomial, stratified };

// Selects n_out source indices from a normalized weight vector.
//
// stratified: one point per stratum [k/n, (k+1)/n), placed by a shared
// uniform offset. Offspring counts are then confined to
// {floor(n w_i), ..., ceil(n w_i)}, the low-variance selection the marginal
// filters rely on.
// multinomial: n_out independent categorical draws.
template <class Rng>
std::vector<std::uint32_t> resample_indices(std::span<const double> weights, std::size_t n_out,
                                            ResampleScheme scheme, Rng& rng) {
  const std::size_t n = weights.size();
  std::vector<std::uint32_t> out(n_out);
  if (scheme == ResampleScheme::stratified) {
    const double offset = draw_uniform(rng);
    std::size_t j = 0;
    double cum = weights[0];
    for (std::size_t k = 0; k < n_out; ++k) {
      const double point = (static_cast<double>(k) + offset) / static_cast<double>(n_out);
      while (cum < point && j + 1 < n) cum += weights[++j];
      out[k] = static_cast<std::uint32_t>(j);
    }
  } else {
    std::vector<double> cdf(n);
    double cum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      cum += weights[i];
      cdf[i] = cum;
    }
    cdf[n - 1] = 1.0;  // guard against rounding in the final bin
    for (std::size_t k = 0; k < n_out; ++k) {
      const double u = draw_uniform(rng);
      const auto it = std::lower_bound(cdf.begin(), cdf.end(), u);
      out[k] = static_cast<std::uint32_t>(it - cdf.begin());
    }
  }
  return out;
}

// Selection step: replaces the weighted measure with an equally weighted one.
template <class State, class Rng>
ParticleSet<State> resample(const ParticleSet<State>& ps, ResampleScheme scheme, Rng& rng,
                            std::vector<std::uint32_t>* chosen = nullptr) {
  const auto idx = resample_indices<Rng>(ps.norm_weights, ps.size(), scheme, rng);
  ParticleSet<State> out;
  out.time_index = ps.time_index;
  out.states.reserve(ps.size());
  for (auto i : idx) out.states.push_back(ps.states[i]);
  out.log_weights.assign(ps.size(), 0.0);
  out.norm_weights.assign(ps.size(), 1.0 / static_cast<double>(ps.size()));
  if (chosen) *chosen = idx;
  return out;
}

}  // namespace mpf

#pragma once

#include <cmath>
#include <concepts>
#include <optional>

#include "mpf/random.hpp"

namespace mpf {

// State-space model interface (duck-typed). A model defines, for t >= 1:
//   State sample_initial(Rng&)                          x_1 ~ p(x_1)
//   State sample_transition(prev, t, Rng&)              x_t ~ p(x_t | x_{t-1})
//   double transition_logdensity(x, prev, t)            log p(x_t | x_{t-1})
//   double observation_logdensity(y, x, t)              log p(y_t | x_t)
//   Obs sample_observation(x, t, Rng&)                  y_t ~ p(y_t | x_t)
//   State transition_representative(prev, t)            deterministic likely
//                                                       value of the transition
//                                                       (mean or mode)
// Models are immutable after construction and safe to share across threads;
// all sampling goes through the caller's RNG.
template <class M>
concept StateSpaceModel =
    requires(const M& m, const typename M::State& x, const typename M::Obs& y, int t, Rng& rng) {
      { m.sample_initial(rng) } -> std::convertible_to<typename M::State>;
      { m.sample_transition(x, t, rng) } -> std::convertible_to<typename M::State>;
      { m.transition_logdensity(x, x, t) } -> std::convertible_to<double>;
      { m.observation_logdensity(y, x, t) } -> std::convertible_to<double>;
      { m.sample_observation(x, t, rng) } -> std::convertible_to<typename M::Obs>;
      { m.transition_representative(x, t) } -> std::convertible_to<typename M::State>;
    };

// Scalar models whose transition density is Gaussian about the
// representative, p(x_t | x_{t-1}) = N(x_t; representative, stddev^2).
// This is what lets the marginal filters route their mixture sums through
// the fast kernel backends.
template <class M>
concept GaussianTransitionModel =
    StateSpaceModel<M> && std::same_as<typename M::State, double> &&
    requires(const M& m, int t) {
      { m.transition_stddev(t) } -> std::convertible_to<double>;
    };

// Univariate nonlinear growth model:
//   x_t = x_{t-1}/2 + 25 x_{t-1}/(1 + x_{t-1}^2) + cos(1.2 t) + N(0, sigma_x)
//   y_t = x_t^2/20 + N(0, sigma_y)
// A standard bimodal filtering benchmark (the likelihood cannot tell +x
// from -x).
struct UngmModel {
  using State = double;
  using Obs = double;
  static constexpr int state_dim = 1;

  double sigma_x = std::sqrt(10.0);
  double sigma_y = 1.0;
  double initial_mean = 0.0;
  std::optional<double> initial_stddev;  // defaults to sigma_x

  double init_stddev() const { return initial_stddev.value_or(sigma_x); }

  double transition_mean(double prev, int t) const {
    return 0.5 * prev + 25.0 * prev / (1.0 + prev * prev) + std::cos(1.2 * t);
  }
  double observation_mean(double x) const { return x * x / 20.0; }

  double sample_initial(Rng& rng) const { return draw_normal(rng, initial_mean, init_stddev()); }
  double sample_transition(double prev, int t, Rng& rng) const {
    return draw_normal(rng, transition_mean(prev, t), sigma_x);
  }
  double transition_logdensity(double x, double prev, int t) const {
    return gaussian_logpdf(x, transition_mean(prev, t), sigma_x);
  }
  double observation_logdensity(double y, double x, int) const {
    return gaussian_logpdf(y, observation_mean(x), sigma_y);
  }
  double sample_observation(double x, int, Rng& rng) const {
    return draw_normal(rng, observation_mean(x), sigma_y);
  }
  double transition_representative(double prev, int t) const {
    return transition_mean(prev, t);
  }
  double transition_stddev(int) const { return sigma_x; }
};

// Stochastic volatility model:
//   y_t = eps_t * beta * exp(x_t / 2),  eps_t ~ N(0, 1)
//   x_t = phi x_{t-1} + N(0, sigma_eta),  x_1 ~ N(0, sigma_eta^2/(1 - phi^2))
struct StochVolModel {
  using State = double;
  using Obs = double;
  static constexpr int state_dim = 1;

  double phi = 0.9731;
  double sigma_eta = 0.1726;
  double beta = 0.6338;

  double stationary_stddev() const { return sigma_eta / std::sqrt(1.0 - phi * phi); }

  double sample_initial(Rng& rng) const { return draw_normal(rng, 0.0, stationary_stddev()); }
  double sample_transition(double prev, int, Rng& rng) const {
    return draw_normal(rng, phi * prev, sigma_eta);
  }
  double transition_logdensity(double x, double prev, int) const {
    return gaussian_logpdf(x, phi * prev, sigma_eta);
  }
  double observation_logdensity(double y, double x, int) const {
    return gaussian_logpdf(y, 0.0, beta * std::exp(0.5 * x));
  }
  double sample_observation(double x, int, Rng& rng) const {
    return draw_normal(rng, 0.0, beta * std::exp(0.5 * x));
  }
  double transition_representative(double prev, int) const { return phi * prev; }
  double transition_stddev(int) const { return sigma_eta; }
};

static_assert(GaussianTransitionModel<UngmModel>);
static_assert(GaussianTransitionModel<StochVolModel>);

}  // namespace mpf

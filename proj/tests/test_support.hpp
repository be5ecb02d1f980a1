#pragma once

// Small synthetic models used across the filter tests.

#include <cmath>

#include "mpf/model.hpp"
#include "mpf/random.hpp"

namespace mpftest {

// Gaussian random walk with a likelihood that is constant in the state.
struct ConstLikModel {
  using State = double;
  using Obs = double;
  double sigma = 1.0;

  double sample_initial(mpf::Rng& rng) const { return mpf::draw_normal(rng, 0.0, 1.0); }
  double sample_transition(double prev, int, mpf::Rng& rng) const {
    return mpf::draw_normal(rng, prev, sigma);
  }
  double transition_logdensity(double x, double prev, int) const {
    return mpf::gaussian_logpdf(x, prev, sigma);
  }
  double observation_logdensity(double, double, int) const { return -0.5; }
  double sample_observation(double, int, mpf::Rng&) const { return 0.0; }
  double transition_representative(double prev, int) const { return prev; }
  double transition_stddev(int) const { return sigma; }
};

// The state itself is the likelihood value: p(y | x) = x. Lets tests pin
// exact simulation weights.
struct TableLikModel {
  using State = double;
  using Obs = double;

  double sample_initial(mpf::Rng& rng) const { return 0.1 + mpf::draw_uniform(rng); }
  double sample_transition(double prev, int, mpf::Rng& rng) const {
    return mpf::draw_normal(rng, prev, 1.0);
  }
  double transition_logdensity(double x, double prev, int) const {
    return mpf::gaussian_logpdf(x, prev, 1.0);
  }
  double observation_logdensity(double, double x, int) const { return std::log(x); }
  double sample_observation(double, int, mpf::Rng&) const { return 0.0; }
  double transition_representative(double prev, int) const { return prev; }
  double transition_stddev(int) const { return 1.0; }
};

// AR(1) state with log-linear likelihood log p(y|x) = y * x. For this family
// p(y | x_{t-1}) is proportional to p(y | mu) with a k-independent factor,
// so the simulation-weight approximation is exact up to normalization and
// the optimal proposal is the Gaussian below.
struct LogLinearModel {
  using State = double;
  using Obs = double;
  double phi = 0.9;
  double sigma = 0.5;

  double sample_initial(mpf::Rng& rng) const { return mpf::draw_normal(rng, 0.0, 1.0); }
  double sample_transition(double prev, int, mpf::Rng& rng) const {
    return mpf::draw_normal(rng, phi * prev, sigma);
  }
  double transition_logdensity(double x, double prev, int) const {
    return mpf::gaussian_logpdf(x, phi * prev, sigma);
  }
  double observation_logdensity(double y, double x, int) const { return y * x; }
  double sample_observation(double, int, mpf::Rng&) const { return 0.0; }
  double transition_representative(double prev, int) const { return phi * prev; }
  double transition_stddev(int) const { return sigma; }
};

// q(x | y, prev) = p(x | y, prev) for LogLinearModel: N(phi prev + y sigma^2, sigma^2).
struct OptimalLogLinearProposal {
  const LogLinearModel* model;

  double sample(mpf::Rng& rng, double y, double prev, int) const {
    return mpf::draw_normal(rng, model->phi * prev + y * model->sigma * model->sigma,
                            model->sigma);
  }
  double logdensity(double x, double y, double prev, int) const {
    return mpf::gaussian_logpdf(x, model->phi * prev + y * model->sigma * model->sigma,
                                model->sigma);
  }
  double mean(double y, double prev, int) const {
    return model->phi * prev + y * model->sigma * model->sigma;
  }
  double stddev(double, int) const { return model->sigma; }
};

// Laplace transition noise: a model with no gaussian kernel form, so the
// fast backends must refuse it.
struct LaplaceTransModel {
  using State = double;
  using Obs = double;
  double scale = 1.0;

  double sample_initial(mpf::Rng& rng) const { return mpf::draw_normal(rng, 0.0, 1.0); }
  double sample_transition(double prev, int, mpf::Rng& rng) const {
    const double u = mpf::draw_uniform(rng) - 0.5;
    return prev - scale * std::copysign(std::log(1.0 - 2.0 * std::abs(u)), u);
  }
  double transition_logdensity(double x, double prev, int) const {
    return -std::abs(x - prev) / scale - std::log(2.0 * scale);
  }
  double observation_logdensity(double y, double x, int) const {
    return mpf::gaussian_logpdf(y, x, 1.0);
  }
  double sample_observation(double x, int, mpf::Rng& rng) const {
    return mpf::draw_normal(rng, x, 1.0);
  }
  double transition_representative(double prev, int) const { return prev; }
};

// Likelihood identically zero; drives a filter into degeneracy immediately.
struct ZeroLikModel {
  using State = double;
  using Obs = double;

  double sample_initial(mpf::Rng& rng) const { return mpf::draw_normal(rng, 0.0, 1.0); }
  double sample_transition(double prev, int, mpf::Rng& rng) const {
    return mpf::draw_normal(rng, prev, 1.0);
  }
  double transition_logdensity(double x, double prev, int) const {
    return mpf::gaussian_logpdf(x, prev, 1.0);
  }
  double observation_logdensity(double, double, int) const {
    return -std::numeric_limits<double>::infinity();
  }
  double sample_observation(double, int, mpf::Rng&) const { return 0.0; }
  double transition_representative(double prev, int) const { return prev; }
  double transition_stddev(int) const { return 1.0; }
};

static_assert(mpf::StateSpaceModel<ConstLikModel>);
static_assert(mpf::StateSpaceModel<LogLinearModel>);
static_assert(mpf::StateSpaceModel<LaplaceTransModel>);
static_assert(!mpf::GaussianTransitionModel<LaplaceTransModel>);

}  // namespace mpftest

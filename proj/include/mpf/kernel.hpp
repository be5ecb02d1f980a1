#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace mpf {

// Influence kernel K(x, y). Two families:
//  - gaussian: K(x,y) = exp(-sum_d (x_d-y_d)^2 / (2 h_d^2)), one scale per
//    dimension. The engine computes the *unnormalized* exponential sum;
//    density normalization constants are the caller's business.
//  - generic_monotone: K(x,y) = f(|x-y|) for a user function f that is
//    non-increasing in the distance.
struct KernelSpec {
  enum class Family { gaussian, generic_monotone };

  Family family = Family::gaussian;
  std::vector<double> bandwidth;               // gaussian: size == dim
  std::function<double(double)> monotone;      // generic: K as function of distance

  static KernelSpec gaussian1d(double h) {
    KernelSpec k;
    k.family = Family::gaussian;
    k.bandwidth = {h};
    return k;
  }

  static KernelSpec gaussian(std::vector<double> h) {
    KernelSpec k;
    k.family = Family::gaussian;
    k.bandwidth = std::move(h);
    return k;
  }

  static KernelSpec monotone_of_distance(std::function<double(double)> f) {
    KernelSpec k;
    k.family = Family::generic_monotone;
    k.monotone = std::move(f);
    return k;
  }
};

// One weighted kernel-summation problem: q_i = sum_j w_j K(x_j, y_i) for
// every target y_i. Points are row-major, dim doubles per point. epsilon is
// an absolute per-target tolerance relative to sum_j w_j: fast backends
// guarantee |q_hat_i - q_i| <= epsilon * sum_j w_j.
struct KernelSumRequest {
  std::size_t dim = 1;
  std::vector<double> sources;
  std::vector<double> source_weights;
  std::vector<double> targets;
  KernelSpec kernel;
  double epsilon = 1e-6;

  std::size_t num_sources() const { return dim == 0 ? 0 : sources.size() / dim; }
  std::size_t num_targets() const { return dim == 0 ? 0 : targets.size() / dim; }
};

// Work counters for tests and the benchmark harness.
struct KernelSumStats {
  std::uint64_t node_pairs = 0;       // dual-tree node-node comparisons
  std::uint64_t direct_pairs = 0;     // exact source-target kernel evaluations
  std::uint64_t expansion_terms = 0;  // fgt series terms evaluated
};

enum class KernelBackend { naive, dualtree, fgt };

inline void validate_request(const KernelSumRequest& req) {
  if (req.dim == 0) throw std::invalid_argument("kernel sum: dim must be >= 1");
  if (req.sources.empty() || req.sources.size() % req.dim != 0)
    throw std::invalid_argument("kernel sum: sources empty or not a multiple of dim");
  if (req.targets.empty() || req.targets.size() % req.dim != 0)
    throw std::invalid_argument("kernel sum: targets empty or not a multiple of dim");
  if (req.source_weights.size() != req.num_sources())
    throw std::invalid_argument("kernel sum: weight count != source count");
  for (double w : req.source_weights) {
    if (!(w >= 0.0) || !std::isfinite(w))
      throw std::invalid_argument("kernel sum: weights must be finite and >= 0");
  }
  if (!(req.epsilon > 0.0)) throw std::invalid_argument("kernel sum: epsilon must be > 0");
  if (req.kernel.family == KernelSpec::Family::gaussian) {
    if (req.kernel.bandwidth.size() != req.dim)
      throw std::invalid_argument("kernel sum: gaussian bandwidth size != dim");
    for (double h : req.kernel.bandwidth)
      if (!(h > 0.0)) throw std::invalid_argument("kernel sum: bandwidth must be > 0");
  } else if (!req.kernel.monotone) {
    throw std::invalid_argument("kernel sum: generic kernel needs a distance function");
  }
}

}  // namespace mpf

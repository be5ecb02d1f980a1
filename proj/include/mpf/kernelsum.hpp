#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "mpf/errors.hpp"
#include "mpf/fgt.hpp"
#include "mpf/kdtree.hpp"
#include "mpf/kernel.hpp"

namespace mpf {

namespace detail {

struct KahanSum {
  double sum = 0.0, comp = 0.0;
  void add(double x) {
    const double y = x - comp;
    const double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }
};

// Gaussian kernels are evaluated in coordinates scaled by 1/h_d, where they
// reduce to exp(-d^2/2) of the scaled Euclidean distance. Generic kernels
// use raw coordinates.
inline std::vector<double> scale_by_bandwidth(std::span<const double> pts, std::size_t dim,
                                              std::span<const double> h) {
  std::vector<double> out(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) out[i] = pts[i] / h[i % dim];
  return out;
}

struct GaussianOfDist2 {
  double operator()(double d2) const { return std::exp(-0.5 * d2); }
};

struct MonotoneOfDist2 {
  const std::function<double(double)>* f;
  double operator()(double d2) const { return (*f)(std::sqrt(d2)); }
};

template <class Kernel>
std::vector<double> naive_sum_impl(std::span<const double> src, std::span<const double> tgt,
                                   std::span<const double> w, std::size_t dim, Kernel kern) {
  const std::size_t m = src.size() / dim, n = tgt.size() / dim;
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double* y = tgt.data() + i * dim;
    KahanSum acc;
    for (std::size_t j = 0; j < m; ++j) {
      const double* x = src.data() + j * dim;
      double d2 = 0.0;
      for (std::size_t d = 0; d < dim; ++d) {
        const double diff = x[d] - y[d];
        d2 += diff * diff;
      }
      acc.add(w[j] * kern(d2));
    }
    out[i] = acc.sum;
  }
  return out;
}

inline double box_dist2_min(std::span<const double> alo, std::span<const double> ahi,
                            std::span<const double> blo, std::span<const double> bhi) {
  double d2 = 0.0;
  for (std::size_t d = 0; d < alo.size(); ++d) {
    double gap = 0.0;
    if (alo[d] > bhi[d])
      gap = alo[d] - bhi[d];
    else if (blo[d] > ahi[d])
      gap = blo[d] - ahi[d];
    d2 += gap * gap;
  }
  return d2;
}

inline double box_dist2_max(std::span<const double> alo, std::span<const double> ahi,
                            std::span<const double> blo, std::span<const double> bhi) {
  double d2 = 0.0;
  for (std::size_t d = 0; d < alo.size(); ++d) {
    const double far = std::max(ahi[d] - blo[d], bhi[d] - alo[d]);
    d2 += far * far;
  }
  return d2;
}

template <class Kernel>
void dualtree_recurse(const SpatialTree& st, const SpatialTree& tt, std::int32_t s,
                      std::int32_t t, Kernel kern, double eps, std::span<const double> src,
                      std::span<const double> tgt, std::span<const double> w,
                      std::vector<double>& pending, std::vector<double>& result,
                      KernelSumStats* stats) {
  if (stats) stats->node_pairs++;
  const auto& sn = st.nodes()[s];
  const auto& tn = tt.nodes()[t];
  const double kmax = kern(box_dist2_min(st.box_lo(s), st.box_hi(s), tt.box_lo(t), tt.box_hi(t)));
  const double kmin = kern(box_dist2_max(st.box_lo(s), st.box_hi(s), tt.box_lo(t), tt.box_hi(t)));

  // Midpoint approximation: per-target error <= W_s * (kmax - kmin) / 2.
  // Accepting only when the bound width is <= 2*eps keeps the total error
  // under eps * sum(w) because the approximated source nodes partition the
  // sources seen by any one target.
  if (kmax - kmin <= 2.0 * eps) {
    pending[t] += sn.weight_sum * 0.5 * (kmax + kmin);
    return;
  }
  if (sn.is_leaf() && tn.is_leaf()) {
    const std::size_t dim = st.dim();
    for (std::uint32_t ti = tn.begin; ti < tn.end; ++ti) {
      const std::uint32_t yi = tt.indices()[ti];
      const double* y = tgt.data() + yi * dim;
      double acc = 0.0;
      for (std::uint32_t si = sn.begin; si < sn.end; ++si) {
        const std::uint32_t xj = st.indices()[si];
        const double* x = src.data() + xj * dim;
        double d2 = 0.0;
        for (std::size_t d = 0; d < dim; ++d) {
          const double diff = x[d] - y[d];
          d2 += diff * diff;
        }
        acc += w[xj] * kern(d2);
      }
      result[yi] += acc;
    }
    if (stats) stats->direct_pairs += std::uint64_t(sn.count()) * tn.count();
    return;
  }
  // Recurse on the larger node.
  const bool split_source = !sn.is_leaf() && (tn.is_leaf() || sn.count() >= tn.count());
  if (split_source) {
    dualtree_recurse(st, tt, sn.left, t, kern, eps, src, tgt, w, pending, result, stats);
    dualtree_recurse(st, tt, sn.right, t, kern, eps, src, tgt, w, pending, result, stats);
  } else {
    dualtree_recurse(st, tt, s, tn.left, kern, eps, src, tgt, w, pending, result, stats);
    dualtree_recurse(st, tt, s, tn.right, kern, eps, src, tgt, w, pending, result, stats);
  }
}

template <class Kernel>
std::vector<double> dualtree_sum_impl(std::span<const double> src, std::span<const double> tgt,
                                      std::span<const double> w, std::size_t dim, Kernel kern,
                                      double eps, std::size_t leaf_size, KernelSumStats* stats) {
  SpatialTree st = SpatialTree::build(src, dim, leaf_size, w);
  SpatialTree tt = SpatialTree::build(tgt, dim, leaf_size);
  std::vector<double> result(tgt.size() / dim, 0.0);
  std::vector<double> pending(tt.nodes().size(), 0.0);
  dualtree_recurse(st, tt, 0, 0, kern, eps, src, tgt, w, pending, result, stats);
  // Push deferred node contributions down to the targets.
  for (std::size_t t = 0; t < tt.nodes().size(); ++t) {
    const auto& tn = tt.nodes()[t];
    if (!tn.is_leaf()) {
      pending[tn.left] += pending[t];
      pending[tn.right] += pending[t];
    } else if (pending[t] != 0.0) {
      for (std::uint32_t ti = tn.begin; ti < tn.end; ++ti) result[tt.indices()[ti]] += pending[t];
    }
  }
  return result;
}

// Cheap spot check on the user kernel: sample a few distances across the
// data diameter and reject if the function increases.
inline void probe_monotone(const std::function<double(double)>& f, double diameter) {
  double prev = f(0.0);
  for (int k = 1; k <= 8; ++k) {
    const double v = f(diameter * k / 8.0);
    if (v > prev * (1.0 + 1e-12) + 1e-300)
      throw KernelBackendError("dual-tree sum: generic kernel is not non-increasing in distance");
    prev = v;
  }
}

}  // namespace detail

// Direct O(M*N) evaluation with compensated accumulation; the oracle every
// fast backend is tested against.
inline std::vector<double> naive_sum(const KernelSumRequest& req, KernelSumStats* stats = nullptr) {
  validate_request(req);
  if (stats) stats->direct_pairs += std::uint64_t(req.num_sources()) * req.num_targets();
  if (req.kernel.family == KernelSpec::Family::gaussian) {
    const auto src = detail::scale_by_bandwidth(req.sources, req.dim, req.kernel.bandwidth);
    const auto tgt = detail::scale_by_bandwidth(req.targets, req.dim, req.kernel.bandwidth);
    return detail::naive_sum_impl(src, tgt, req.source_weights, req.dim,
                                  detail::GaussianOfDist2{});
  }
  return detail::naive_sum_impl(req.sources, req.targets, req.source_weights, req.dim,
                                detail::MonotoneOfDist2{&req.kernel.monotone});
}

// Dual-tree evaluation: kd-trees on sources and targets, node pairs pruned
// with kernel bounds K(d_min), K(d_max) from the box-box distances.
// Guarantees |q_hat_i - q_i| <= epsilon * sum_j w_j for every target.
inline std::vector<double> dualtree_sum(const KernelSumRequest& req, std::size_t leaf_size = 16,
                                        KernelSumStats* stats = nullptr) {
  validate_request(req);
  const double eps = 0.95 * req.epsilon;  // headroom for accumulation rounding
  if (req.kernel.family == KernelSpec::Family::gaussian) {
    const auto src = detail::scale_by_bandwidth(req.sources, req.dim, req.kernel.bandwidth);
    const auto tgt = detail::scale_by_bandwidth(req.targets, req.dim, req.kernel.bandwidth);
    return detail::dualtree_sum_impl(src, tgt, req.source_weights, req.dim,
                                     detail::GaussianOfDist2{}, eps, leaf_size, stats);
  }
  {
    // Rough data diameter for the monotonicity probe.
    double lo = req.sources[0], hi = req.sources[0];
    for (double v : req.sources) lo = std::min(lo, v), hi = std::max(hi, v);
    for (double v : req.targets) lo = std::min(lo, v), hi = std::max(hi, v);
    detail::probe_monotone(req.kernel.monotone, std::sqrt(req.dim) * (hi - lo));
  }
  return detail::dualtree_sum_impl(req.sources, req.targets, req.source_weights, req.dim,
                                   detail::MonotoneOfDist2{&req.kernel.monotone}, eps, leaf_size,
                                   stats);
}

inline std::vector<double> kernel_sum(const KernelSumRequest& req, KernelBackend backend,
                                      KernelSumStats* stats = nullptr) {
  switch (backend) {
    case KernelBackend::naive:
      return naive_sum(req, stats);
    case KernelBackend::dualtree:
      return dualtree_sum(req, 16, stats);
    case KernelBackend::fgt:
      return fgt_sum(req, {}, stats);
  }
  throw std::invalid_argument("kernel_sum: unknown backend");
}

}  // namespace mpf

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <numeric>
#include <unordered_map>
#include <vector>

#include "mpf/errors.hpp"
#include "mpf/kernel.hpp"

namespace mpf {

// Fast Gauss Transform controls. order == 0 derives the expansion order per
// cluster from the request tolerance via the Hermite truncation bound;
// box_side_scale sets the cluster side length in bandwidth units.
struct FgtOptions {
  int order = 0;
  double box_side_scale = 1.0;
};

namespace fgt_detail {

// In coordinates u = x / (sqrt(2) h_d) the kernel is exp(-|u_s - u_t|^2) and
// the classic Hermite expansion applies:
//   exp(-(t-s)^2) = sum_n (s^n / n!) h_n(t),   h_n(t) = exp(-t^2) H_n(t).
// With Cramer's bound |H_n(t)| <= 1.09 * 2^(n/2) sqrt(n!) exp(t^2/2), the
// tail truncated at order p is bounded by 1.09 * sum_{n>=p} rho^n / sqrt(n!)
// where rho = sqrt(2) * |s|. This holds uniformly in the target t.
inline double hermite_tail_bound(double rho, int p) {
  if (rho <= 0.0) return 0.0;
  double term = std::exp(p * std::log(rho) - 0.5 * std::lgamma(p + 1.0));
  double total = 0.0;
  int n = p;
  for (; n < p + 400 && term > 1e-320; ++n) {
    total += term;
    term *= rho / std::sqrt(n + 1.0);
  }
  const double ratio = rho / std::sqrt(static_cast<double>(n));
  if (ratio < 1.0)
    total += term / (1.0 - ratio);
  else
    return std::numeric_limits<double>::infinity();
  return 1.09 * total;
}

// Error of truncating every factor of the d-dimensional tensor expansion at
// order p, per unit of source weight.
inline double truncation_bound(double rho, int p, std::size_t dim) {
  const double e = hermite_tail_bound(rho, p);
  return static_cast<double>(dim) * e * std::pow(1.0 + e, static_cast<double>(dim) - 1.0);
}

inline int derive_order(double rho, std::size_t dim, double eps_trunc) {
  for (int p = 1; p <= 64; ++p) {
    if (truncation_bound(rho, p, dim) <= eps_trunc) return p;
  }
  throw KernelBackendError("fgt: cluster radius too large for the requested tolerance");
}

struct Box {
  std::array<std::int64_t, 3> cell{};
  std::array<double, 3> center{};
  std::vector<std::uint32_t> src;
  std::vector<double> coeff;  // p^d Hermite coefficients (empty if direct)
  int order = 0;
  bool direct = false;
};

inline std::int64_t pack_cell(const std::array<std::int64_t, 3>& c) {
  constexpr std::int64_t kBias = 1 << 20;
  return (c[0] + kBias) + ((c[1] + kBias) << 21) + ((c[2] + kBias) << 42);
}

}  // namespace fgt_detail

// Fast Gauss Transform: sources are clustered into boxes of side
// box_side_scale * bandwidth; each cluster's field is a truncated Hermite
// expansion about the cluster center, and clusters beyond the cutoff radius
// are dropped against the remaining error budget. Guarantees
// |q_hat_i - q_i| <= epsilon * sum_j w_j per target. Supports dim <= 3.
inline std::vector<double> fgt_sum(const KernelSumRequest& req, const FgtOptions& opt = {},
                                   KernelSumStats* stats = nullptr) {
  validate_request(req);
  if (req.kernel.family != KernelSpec::Family::gaussian)
    throw KernelBackendError("fgt: kernel family must be gaussian");
  if (req.dim > 3) throw KernelBackendError("fgt: dimension too large (supports dim <= 3)");
  if (!(opt.box_side_scale > 0.0)) throw std::invalid_argument("fgt: box_side_scale must be > 0");

  const std::size_t d = req.dim;
  const std::size_t m = req.num_sources();
  const std::size_t n = req.num_targets();
  std::vector<double> out(n, 0.0);

  const double wsum = std::accumulate(req.source_weights.begin(), req.source_weights.end(), 0.0);
  if (wsum == 0.0) return out;

  // u = x / (sqrt(2) h): kernel becomes exp(-|u_s - u_t|^2).
  std::vector<double> su(m * d), tu(n * d);
  for (std::size_t i = 0; i < m * d; ++i)
    su[i] = req.sources[i] / (std::numbers::sqrt2 * req.kernel.bandwidth[i % d]);
  for (std::size_t i = 0; i < n * d; ++i)
    tu[i] = req.targets[i] / (std::numbers::sqrt2 * req.kernel.bandwidth[i % d]);

  const double box_side = opt.box_side_scale / std::numbers::sqrt2;  // scaled units
  const double eps_trunc = 0.45 * req.epsilon;
  const double eps_cut = 0.45 * req.epsilon;
  // Interactions beyond the cutoff have kernel value <= exp(-R^2) <= eps_cut.
  const double cutoff = eps_cut < 1.0 ? std::sqrt(-std::log(eps_cut)) : 0.0;

  // Assign sources to grid cells.
  std::unordered_map<std::int64_t, std::uint32_t> cell_of;
  std::vector<fgt_detail::Box> boxes;
  std::array<std::int64_t, 3> cell{};
  for (std::size_t j = 0; j < m; ++j) {
    for (std::size_t k = 0; k < d; ++k) {
      const double c = std::floor(su[j * d + k] / box_side);
      if (!(std::abs(c) < (1 << 20)))
        throw KernelBackendError("fgt: data range too large relative to bandwidth");
      cell[k] = static_cast<std::int64_t>(c);
    }
    auto [it, fresh] = cell_of.try_emplace(fgt_detail::pack_cell(cell),
                                           static_cast<std::uint32_t>(boxes.size()));
    if (fresh) {
      boxes.emplace_back();
      boxes.back().cell = cell;
    }
    boxes[it->second].src.push_back(static_cast<std::uint32_t>(j));
  }

  // Per box: center on the midrange of contributing sources, pick the
  // expansion order from the observed radius, and precompute coefficients
  //   A_alpha = sum_j w_j prod_d (s_jd^alpha_d / alpha_d!),  s_j = u_j - center.
  for (auto& box : boxes) {
    std::array<double, 3> lo{}, hi{};
    bool any = false;
    for (std::uint32_t j : box.src) {
      if (req.source_weights[j] == 0.0) continue;
      for (std::size_t k = 0; k < d; ++k) {
        const double v = su[j * d + k];
        if (!any) {
          lo[k] = hi[k] = v;
        } else {
          lo[k] = std::min(lo[k], v);
          hi[k] = std::max(hi[k], v);
        }
      }
      any = true;
    }
    if (!any) {  // only zero-weight sources; contributes nothing
      box.direct = true;
      continue;
    }
    double radius = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
      box.center[k] = 0.5 * (lo[k] + hi[k]);
      radius = std::max(radius, 0.5 * (hi[k] - lo[k]));
    }
    box.order = opt.order > 0 ? opt.order
                              : fgt_detail::derive_order(std::numbers::sqrt2 * radius, d, eps_trunc);
    const double expansion_cost = std::pow(static_cast<double>(box.order), static_cast<double>(d));
    if (static_cast<double>(box.src.size()) <= expansion_cost) {
      box.direct = true;  // few sources: exact evaluation is cheaper
      continue;
    }

    const int p = box.order;
    box.coeff.assign(static_cast<std::size_t>(std::pow(p, static_cast<double>(d))), 0.0);
    std::array<std::vector<double>, 3> pw;
    for (std::size_t k = 0; k < d; ++k) pw[k].resize(p);
    for (std::uint32_t j : box.src) {
      const double w = req.source_weights[j];
      if (w == 0.0) continue;
      for (std::size_t k = 0; k < d; ++k) {
        const double s = su[j * d + k] - box.center[k];
        pw[k][0] = 1.0;
        for (int q = 1; q < p; ++q) pw[k][q] = pw[k][q - 1] * s / q;
      }
      if (d == 1) {
        for (int a = 0; a < p; ++a) box.coeff[a] += w * pw[0][a];
      } else if (d == 2) {
        for (int a = 0; a < p; ++a)
          for (int b = 0; b < p; ++b) box.coeff[a * p + b] += w * pw[0][a] * pw[1][b];
      } else {
        for (int a = 0; a < p; ++a)
          for (int b = 0; b < p; ++b)
            for (int c = 0; c < p; ++c)
              box.coeff[(a * p + b) * p + c] += w * pw[0][a] * pw[1][b] * pw[2][c];
      }
    }
  }

  // Evaluate each target against the boxes within the cutoff.
  const std::int64_t reach = static_cast<std::int64_t>(std::ceil(cutoff / box_side)) + 1;
  std::array<std::vector<double>, 3> herm;
  const double cut2 = cutoff * cutoff;
  for (std::size_t i = 0; i < n; ++i) {
    const double* y = tu.data() + i * d;
    std::array<std::int64_t, 3> clo{}, chi{};
    for (std::size_t k = 0; k < d; ++k) {
      const std::int64_t c = static_cast<std::int64_t>(std::floor(y[k] / box_side));
      clo[k] = c - reach;
      chi[k] = c + reach;
    }
    double acc = 0.0;
    std::array<std::int64_t, 3> cc{};
    for (cc[0] = clo[0]; cc[0] <= chi[0]; ++cc[0]) {
      for (cc[1] = (d > 1 ? clo[1] : 0); cc[1] <= (d > 1 ? chi[1] : 0); ++cc[1]) {
        for (cc[2] = (d > 2 ? clo[2] : 0); cc[2] <= (d > 2 ? chi[2] : 0); ++cc[2]) {
          const auto it = cell_of.find(fgt_detail::pack_cell(cc));
          if (it == cell_of.end()) continue;
          const auto& box = boxes[it->second];
          // Nearest possible source in this cell.
          double dmin2 = 0.0;
          for (std::size_t k = 0; k < d; ++k) {
            const double blo = cc[k] * box_side, bhi = (cc[k] + 1) * box_side;
            double gap = 0.0;
            if (y[k] < blo)
              gap = blo - y[k];
            else if (y[k] > bhi)
              gap = y[k] - bhi;
            dmin2 += gap * gap;
          }
          if (dmin2 > cut2) continue;

          if (box.direct) {
            for (std::uint32_t j : box.src) {
              const double w = req.source_weights[j];
              if (w == 0.0) continue;
              double d2 = 0.0;
              for (std::size_t k = 0; k < d; ++k) {
                const double diff = y[k] - su[j * d + k];
                d2 += diff * diff;
              }
              acc += w * std::exp(-d2);
            }
            if (stats) stats->direct_pairs += box.src.size();
          } else {
            const int p = box.order;
            for (std::size_t k = 0; k < d; ++k) {
              const double t = y[k] - box.center[k];
              auto& h = herm[k];
              h.resize(p);
              h[0] = std::exp(-t * t);
              if (p > 1) h[1] = 2.0 * t * h[0];
              for (int q = 2; q < p; ++q) h[q] = 2.0 * t * h[q - 1] - 2.0 * (q - 1) * h[q - 2];
            }
            if (d == 1) {
              for (int a = 0; a < p; ++a) acc += box.coeff[a] * herm[0][a];
            } else if (d == 2) {
              for (int a = 0; a < p; ++a)
                for (int b = 0; b < p; ++b) acc += box.coeff[a * p + b] * herm[0][a] * herm[1][b];
            } else {
              for (int a = 0; a < p; ++a)
                for (int b = 0; b < p; ++b)
                  for (int c = 0; c < p; ++c)
                    acc += box.coeff[(a * p + b) * p + c] * herm[0][a] * herm[1][b] * herm[2][c];
            }
            if (stats)
              stats->expansion_terms +=
                  static_cast<std::uint64_t>(std::pow(p, static_cast<double>(d)));
          }
        }
      }
    }
    out[i] = acc;
  }
  return out;
}

}  // namespace mpf

#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

namespace mpf {

// Median-split kd-tree over a point set. Nodes store tight axis-aligned
// bounding boxes and the cached weight sum of contained points. Splits are
// positional (median index along the widest box dimension), so leaves hold
// at most leaf_size points and depth is O(log M) even for duplicate-heavy
// data.
class SpatialTree {
 public:
  struct Node {
    std::uint32_t begin = 0, end = 0;  // range into indices()
    std::int32_t left = -1, right = -1;
    double weight_sum = 0.0;
    std::uint32_t count() const { return end - begin; }
    bool is_leaf() const { return left < 0; }
  };

  static SpatialTree build(std::span<const double> points, std::size_t dim,
                           std::size_t leaf_size, std::span<const double> weights = {}) {
    if (dim == 0) throw std::invalid_argument("kd-tree: dim must be >= 1");
    if (points.empty() || points.size() % dim != 0)
      throw std::invalid_argument("kd-tree: point array empty or not a multiple of dim");
    if (leaf_size == 0) throw std::invalid_argument("kd-tree: leaf_size must be >= 1");
    const std::size_t n = points.size() / dim;
    if (!weights.empty() && weights.size() != n)
      throw std::invalid_argument("kd-tree: weight count != point count");

    SpatialTree tree;
    tree.dim_ = dim;
    tree.pts_.assign(points.begin(), points.end());
    tree.idx_.resize(n);
    for (std::size_t i = 0; i < n; ++i) tree.idx_[i] = static_cast<std::uint32_t>(i);
    tree.nodes_.reserve(2 * (n / leaf_size + 1));
    tree.build_node(0, static_cast<std::uint32_t>(n), leaf_size, weights);
    return tree;
  }

  std::size_t dim() const { return dim_; }
  const std::vector<Node>& nodes() const { return nodes_; }
  const std::vector<std::uint32_t>& indices() const { return idx_; }
  std::span<const double> box_lo(std::size_t node) const {
    return {box_lo_.data() + node * dim_, dim_};
  }
  std::span<const double> box_hi(std::size_t node) const {
    return {box_hi_.data() + node * dim_, dim_};
  }

 private:
  SpatialTree() = default;

  std::int32_t build_node(std::uint32_t begin, std::uint32_t end, std::size_t leaf_size,
                          std::span<const double> weights) {
    const std::int32_t id = static_cast<std::int32_t>(nodes_.size());
    nodes_.emplace_back();
    nodes_[id].begin = begin;
    nodes_[id].end = end;

    std::vector<double> lo(dim_, std::numeric_limits<double>::infinity());
    std::vector<double> hi(dim_, -std::numeric_limits<double>::infinity());
    double wsum = 0.0;
    for (std::uint32_t k = begin; k < end; ++k) {
      const double* p = pts_.data() + static_cast<std::size_t>(idx_[k]) * dim_;
      for (std::size_t d = 0; d < dim_; ++d) {
        lo[d] = std::min(lo[d], p[d]);
        hi[d] = std::max(hi[d], p[d]);
      }
      wsum += weights.empty() ? 1.0 : weights[idx_[k]];
    }
    box_lo_.insert(box_lo_.end(), lo.begin(), lo.end());
    box_hi_.insert(box_hi_.end(), hi.begin(), hi.end());
    nodes_[id].weight_sum = wsum;

    if (end - begin > leaf_size) {
      std::size_t split_dim = 0;
      double widest = -1.0;
      for (std::size_t d = 0; d < dim_; ++d) {
        if (hi[d] - lo[d] > widest) {
          widest = hi[d] - lo[d];
          split_dim = d;
        }
      }
      const std::uint32_t mid = begin + (end - begin) / 2;
      std::nth_element(idx_.begin() + begin, idx_.begin() + mid, idx_.begin() + end,
                       [&](std::uint32_t a, std::uint32_t b) {
                         return pts_[a * dim_ + split_dim] < pts_[b * dim_ + split_dim];
                       });
      const std::int32_t l = build_node(begin, mid, leaf_size, weights);
      const std::int32_t r = build_node(mid, end, leaf_size, weights);
      nodes_[id].left = l;
      nodes_[id].right = r;
    }
    return id;
  }

  std::size_t dim_ = 1;
  std::vector<double> pts_;
  std::vector<Node> nodes_;
  std::vector<std::uint32_t> idx_;
  std::vector<double> box_lo_, box_hi_;
};

}  // namespace mpf

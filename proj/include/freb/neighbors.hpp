#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace freb {

// ⌈n^{2/3}⌉ computed exactly (smallest k with k³ ≥ n²).
std::size_t ceil_pow_two_thirds(std::size_t n);

// Per-axis affine standardization z = (θ − mean) / scale, fitted on a table of
// points. Axes with zero spread keep scale 1.
struct Standardization {
  std::vector<double> mean;
  std::vector<double> scale;

  static Standardization fit(std::span<const double> points, std::size_t dim);
  void apply(std::span<const double> point, std::span<double> out) const;
};

// Exact k-nearest-neighbor search over a static point set (Euclidean).
//
// Neighbors are the k smallest under the total order (squared distance, row
// index), so results are deterministic even with equidistant points.
class KdTree {
 public:
  KdTree() = default;
  KdTree(std::vector<double> points, std::size_t dim);

  std::size_t size() const noexcept { return dim_ == 0 ? 0 : points_.size() / dim_; }
  std::size_t dim() const noexcept { return dim_; }

  // Row indices of the k nearest points to query, ordered nearest first.
  std::vector<std::size_t> nearest(std::span<const double> query, std::size_t k) const;

 private:
  struct Node {
    std::size_t begin, end;  // range in order_
    std::size_t axis;
    double split;
    int left = -1, right = -1;
  };

  int build(std::size_t begin, std::size_t end);

  std::vector<double> points_;
  std::size_t dim_ = 0;
  std::vector<std::size_t> order_;
  std::vector<Node> nodes_;
};

}  // namespace freb

#include "freb/neighbors.hpp"

#include <algorithm>
#include <cstdint>
#include <cmath>
#include <queue>
#include <utility>

#include "freb/errors.hpp"

namespace freb {

namespace {
constexpr std::size_t kLeafSize = 16;

using Candidate = std::pair<double, std::size_t>;  // (squared distance, row)
}  // namespace

__extension__ typedef unsigned __int128 u128;

std::size_t ceil_pow_two_thirds(std::size_t n) {
  auto k = static_cast<std::uint64_t>(std::cbrt(static_cast<double>(n) * static_cast<double>(n)));
  const auto n2 = static_cast<u128>(n) * n;
  while (k > 0 && static_cast<u128>(k - 1) * (k - 1) * (k - 1) >= n2) --k;
  while (static_cast<u128>(k) * k * k < n2) ++k;
  return static_cast<std::size_t>(k);
}

Standardization Standardization::fit(std::span<const double> points, std::size_t dim) {
  if (dim == 0 || points.empty() || points.size() % dim != 0)
    throw InvalidInput("cannot standardize an empty or ragged point table");
  const std::size_t n = points.size() / dim;
  Standardization s;
  s.mean.assign(dim, 0.0);
  s.scale.assign(dim, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < dim; ++j) s.mean[j] += points[i * dim + j];
  for (double& m : s.mean) m /= static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < dim; ++j) {
      const double d = points[i * dim + j] - s.mean[j];
      s.scale[j] += d * d;
    }
  }
  for (double& v : s.scale) {
    v = n > 1 ? std::sqrt(v / static_cast<double>(n - 1)) : 0.0;
    if (!(v > 0.0)) v = 1.0;
  }
  return s;
}

void Standardization::apply(std::span<const double> point, std::span<double> out) const {
  for (std::size_t j = 0; j < mean.size(); ++j) out[j] = (point[j] - mean[j]) / scale[j];
}

KdTree::KdTree(std::vector<double> points, std::size_t dim) : points_(std::move(points)), dim_(dim) {
  if (dim_ == 0 || points_.empty() || points_.size() % dim_ != 0)
    throw InvalidInput("k-d tree needs a non-empty point table of consistent dimension");
  order_.resize(size());
  for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = i;
  nodes_.reserve(2 * size() / kLeafSize + 1);
  build(0, order_.size());
}

int KdTree::build(std::size_t begin, std::size_t end) {
  const int id = static_cast<int>(nodes_.size());
  nodes_.push_back({begin, end, 0, 0.0});
  if (end - begin <= kLeafSize) return id;

  std::size_t axis = 0;
  double widest = -1.0;
  for (std::size_t j = 0; j < dim_; ++j) {
    double lo = points_[order_[begin] * dim_ + j], hi = lo;
    for (std::size_t i = begin + 1; i < end; ++i) {
      const double v = points_[order_[i] * dim_ + j];
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    if (hi - lo > widest) {
      widest = hi - lo;
      axis = j;
    }
  }
  if (!(widest > 0.0)) return id;  // all points identical: keep as a leaf

  const std::size_t mid = begin + (end - begin) / 2;
  auto less = [&](std::size_t a, std::size_t b) {
    const double va = points_[a * dim_ + axis], vb = points_[b * dim_ + axis];
    return va < vb || (va == vb && a < b);
  };
  std::nth_element(order_.begin() + static_cast<std::ptrdiff_t>(begin),
                   order_.begin() + static_cast<std::ptrdiff_t>(mid),
                   order_.begin() + static_cast<std::ptrdiff_t>(end), less);
  nodes_[static_cast<std::size_t>(id)].axis = axis;
  nodes_[static_cast<std::size_t>(id)].split = points_[order_[mid] * dim_ + axis];
  const int left = build(begin, mid);
  const int right = build(mid, end);
  nodes_[static_cast<std::size_t>(id)].left = left;
  nodes_[static_cast<std::size_t>(id)].right = right;
  return id;
}

std::vector<std::size_t> KdTree::nearest(std::span<const double> query, std::size_t k) const {
  if (query.size() != dim_) throw InvalidInput("query dimension does not match the k-d tree");
  k = std::min(k, size());
  std::priority_queue<Candidate> heap;  // max-heap: worst candidate on top
  if (k == 0) return {};

  auto consider = [&](std::size_t row) {
    double d2 = 0.0;
    for (std::size_t j = 0; j < dim_; ++j) {
      const double d = points_[row * dim_ + j] - query[j];
      d2 += d * d;
    }
    const Candidate c{d2, row};
    if (heap.size() < k) {
      heap.push(c);
    } else if (c < heap.top()) {
      heap.pop();
      heap.push(c);
    }
  };

  // Iterative depth-first descent, nearer child first.
  std::vector<std::pair<int, double>> stack;  // (node, lower bound on squared distance)
  stack.emplace_back(0, 0.0);
  while (!stack.empty()) {
    const auto [id, bound] = stack.back();
    stack.pop_back();
    if (heap.size() == k && bound > heap.top().first) continue;
    const Node& node = nodes_[static_cast<std::size_t>(id)];
    if (node.left < 0) {
      for (std::size_t i = node.begin; i < node.end; ++i) consider(order_[i]);
      continue;
    }
    const double diff = query[node.axis] - node.split;
    const int near = diff < 0.0 ? node.left : node.right;
    const int far = diff < 0.0 ? node.right : node.left;
    stack.emplace_back(far, std::max(bound, diff * diff));
    stack.emplace_back(near, bound);
  }

  std::vector<std::size_t> out(heap.size());
  for (std::size_t i = out.size(); i-- > 0;) {
    out[i] = heap.top().second;
    heap.pop();
  }
  return out;
}

}  // namespace freb

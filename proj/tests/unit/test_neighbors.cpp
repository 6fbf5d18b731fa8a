#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "freb/neighbors.hpp"
#include "freb/random.hpp"

using namespace freb;

TEST(CeilPowTwoThirds, MatchesBruteForce) {
  for (std::size_t n = 1; n <= 3000; ++n) {
    std::size_t k = 0;
    while (k * k * k < n * n) ++k;
    ASSERT_EQ(ceil_pow_two_thirds(n), k) << n;
  }
}

TEST(CeilPowTwoThirds, BenchmarkSizes) {
  EXPECT_EQ(ceil_pow_two_thirds(50000), 1358u);
  EXPECT_EQ(ceil_pow_two_thirds(30000), 966u);
  EXPECT_EQ(ceil_pow_two_thirds(20000), 737u);
  EXPECT_EQ(ceil_pow_two_thirds(1000), 100u);  // exact cube
}

TEST(Standardization, MeanAndSampleDeviation) {
  const std::vector<double> pts{1.0, 10.0, 2.0, 10.0, 3.0, 10.0};
  const auto s = Standardization::fit(pts, 2);
  EXPECT_DOUBLE_EQ(s.mean[0], 2.0);
  EXPECT_DOUBLE_EQ(s.scale[0], 1.0);
  EXPECT_DOUBLE_EQ(s.mean[1], 10.0);
  EXPECT_DOUBLE_EQ(s.scale[1], 1.0);  // zero spread keeps scale 1
  std::vector<double> out(2);
  const std::vector<double> q{4.0, 12.0};
  s.apply(q, out);
  EXPECT_DOUBLE_EQ(out[0], 2.0);
  EXPECT_DOUBLE_EQ(out[1], 2.0);
}

namespace {
std::vector<std::size_t> brute_nearest(const std::vector<double>& pts, std::size_t dim, std::span<const double> q,
                                       std::size_t k) {
  const std::size_t n = pts.size() / dim;
  std::vector<std::pair<double, std::size_t>> all;
  for (std::size_t i = 0; i < n; ++i) {
    double d2 = 0.0;
    for (std::size_t j = 0; j < dim; ++j) d2 += (pts[i * dim + j] - q[j]) * (pts[i * dim + j] - q[j]);
    all.emplace_back(d2, i);
  }
  std::sort(all.begin(), all.end());
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < std::min(k, n); ++i) out.push_back(all[i].second);
  return out;
}
}  // namespace

TEST(KdTree, MatchesBruteForceOnRandomPoints) {
  CounterRng rng(5);
  for (std::size_t dim : {1u, 2u, 3u}) {
    std::vector<double> pts(1500 * dim);
    for (double& v : pts) v = rng.normal();
    const KdTree tree(pts, dim);
    for (int q = 0; q < 50; ++q) {
      std::vector<double> query(dim);
      for (double& v : query) v = 1.5 * rng.normal();
      for (std::size_t k : {1u, 7u, 100u, 1500u}) ASSERT_EQ(tree.nearest(query, k), brute_nearest(pts, dim, query, k));
    }
  }
}

TEST(KdTree, TiesBrokenByRowIndex) {
  // Integer lattice with duplicates: many equidistant neighbors.
  std::vector<double> pts;
  for (int rep = 0; rep < 3; ++rep)
    for (int a = -5; a <= 5; ++a)
      for (int b = -5; b <= 5; ++b) {
        pts.push_back(a);
        pts.push_back(b);
      }
  const KdTree tree(pts, 2);
  for (const auto& q : {std::vector<double>{0.0, 0.0}, {0.5, 0.5}, {-5.0, 2.0}, {7.0, 7.0}})
    for (std::size_t k : {1u, 4u, 13u, 50u}) ASSERT_EQ(tree.nearest(q, k), brute_nearest(pts, 2, q, k));
}

TEST(KdTree, KLargerThanSizeReturnsAll) {
  const std::vector<double> pts{0.0, 1.0, 2.0};
  const KdTree tree(pts, 1);
  const std::vector<double> q{1.9};
  EXPECT_EQ(tree.nearest(q, 10), (std::vector<std::size_t>{2, 1, 0}));
}

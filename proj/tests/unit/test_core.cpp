#include <cmath>
#include <set>

#include <gtest/gtest.h>

#include "drdst/core.hpp"

using namespace drdst;

TEST(Rng, SameSeedSameStream) {
  Rng a(42), b(42);
  EXPECT_EQ(a(), b());
  EXPECT_EQ(a(), b());
}

TEST(Rng, NeighbouringSeedsDiffer) {
  Rng a(42), b(43);
  EXPECT_NE(a(), b());
}

TEST(Rng, SubstreamsAreIndependentOfParentDraws) {
  Rng root(7);
  const auto first = root.substream("gsa")();
  root();
  root();
  EXPECT_EQ(root.substream("gsa")(), first);
  EXPECT_NE(root.substream("gsa")(), root.substream("mobility")());
  EXPECT_NE(root.substream("offline", 0)(), root.substream("offline", 1)());
}

TEST(Rng, UniformAndBelowStayInRange) {
  Rng r(1);
  for (int i = 0; i < 10000; ++i) {
    const double u = r.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    ASSERT_LT(r.below(7), 7u);
  }
  EXPECT_THROW(r.below(0), DomainError);
}

TEST(Rng, ExponentialMean) {
  Rng r(3);
  double sum = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) sum += r.exponential(4.0);
  EXPECT_NEAR(sum / n, 0.25, 0.005);
}

TEST(Rng, NormalMoments) {
  Rng r(5);
  double s = 0.0, s2 = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double x = r.normal();
    s += x;
    s2 += x * x;
  }
  EXPECT_NEAR(s / n, 0.0, 0.01);
  EXPECT_NEAR(s2 / n, 1.0, 0.02);
}

TEST(Rng, ShuffleIsAPermutation) {
  Rng r(9);
  std::vector<int> v(50);
  for (int i = 0; i < 50; ++i) v[static_cast<std::size_t>(i)] = i;
  r.shuffle(v);
  EXPECT_EQ(std::set<int>(v.begin(), v.end()).size(), 50u);
}

TEST(Distance, Basics) {
  EXPECT_DOUBLE_EQ(euclidean_distance({0, 0}, {3, 4}), 5.0);
  EXPECT_DOUBLE_EQ(euclidean_distance({2.5, -1}, {2.5, -1}), 0.0);
  Rng r(11);
  for (int i = 0; i < 100; ++i) {
    const Position a{r.uniform(0, 1e4), r.uniform(0, 1e4)}, b{r.uniform(0, 1e4), r.uniform(0, 1e4)};
    const double dx = a.x - b.x, dy = a.y - b.y;
    EXPECT_NEAR(euclidean_distance(a, b), std::sqrt(dx * dx + dy * dy), 1e-9);
    EXPECT_DOUBLE_EQ(euclidean_distance(a, b), euclidean_distance(b, a));
  }
}

TEST(RsuNode, Clamps) {
  RsuNode n(0, {}, 12.0, {}, 1.7);
  EXPECT_EQ(n.trust(), 10.0);
  EXPECT_EQ(n.stability(), 1.0);
  n.set_trust(-3.0);
  n.set_stability(-0.1);
  EXPECT_EQ(n.trust(), 0.0);
  EXPECT_EQ(n.stability(), 0.0);
}

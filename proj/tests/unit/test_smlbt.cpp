#include <gtest/gtest.h>

#include "drdst/smlbt.hpp"

using namespace drdst;
using namespace drdst::smlbt;

namespace {

LatencyGraph line3() {
  // A=0, B=1, C=2
  return LatencyGraph::from_matrix(3, {0, 1, 3, 1, 0, 1, 3, 1, 0});
}

LatencyGraph random_graph(std::size_t n, Rng& r) {
  std::vector<Position> pos;
  for (std::size_t i = 0; i < n; ++i) pos.push_back({r.uniform(0, 1500), r.uniform(0, 1500)});
  LinkConfig link;
  return LatencyGraph::sample(pos, link, 2e6, r);
}

std::vector<NodeId> iota_ids(std::size_t n) {
  std::vector<NodeId> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = static_cast<NodeId>(i);
  return v;
}

}  // namespace

TEST(LinkLatency, HandValues) {
  EXPECT_NEAR(link_latency(2e6, 10, 1000, 2e8), 0.200005, 1e-12);
  EXPECT_NEAR(link_latency(1e6, 10, 0, 2e8), 0.1, 1e-15);
  EXPECT_THROW(link_latency(1, 0, 1, 1), DomainError);
  EXPECT_THROW(link_latency(1, 1, 1, 0), DomainError);
}

TEST(LatencyGraph, SelfLinksZeroAndSymmetric) {
  Rng r(1);
  const auto g = random_graph(8, r);
  for (std::size_t i = 0; i < 8; ++i) {
    EXPECT_EQ(g(i, i), 0.0);
    EXPECT_EQ(g.latency(i, i, 1e9), 0.0);
    for (std::size_t j = 0; j < 8; ++j) {
      EXPECT_EQ(g(i, j), g(j, i));
      EXPECT_GE(g(i, j), 0.0);
    }
  }
  EXPECT_GT(g.latency(0, 1, 4e6), g.latency(0, 1, 2e6));
}

TEST(BuildTree, SingleMember) {
  const auto g = line3();
  const std::vector<NodeId> m{2};
  const auto t = build_tree(m, g, 8);
  EXPECT_EQ(t.root, 2u);
  EXPECT_EQ(t.max_depth(), 0.0);
  EXPECT_TRUE(t.valid(g, 8));
}

TEST(BuildTree, LineInstance) {
  const auto g = line3();
  const auto ids = iota_ids(3);
  const auto t = build_tree(ids, g, 8);
  EXPECT_EQ(t.root, 1u);
  EXPECT_EQ(t.children[0].size(), 2u);
  EXPECT_DOUBLE_EQ(t.max_depth(), 1.0);
  EXPECT_DOUBLE_EQ(brute_force_tree(ids, g, 8).second, 1.0);
}

TEST(BuildTree, FanoutAndValidity) {
  Rng r(2);
  for (int i = 0; i < 30; ++i) {
    const std::size_t n = 3 + r.below(20);
    const auto g = random_graph(n, r);
    const int fanout = 1 + static_cast<int>(r.below(4));
    const auto t = build_tree(iota_ids(n), g, fanout);
    ASSERT_TRUE(t.valid(g, fanout));
    for (const auto& c : t.children) EXPECT_LE(c.size(), static_cast<std::size_t>(fanout));
  }
}

TEST(BuildTree, HeightCap) {
  Rng r(3);
  const auto g = random_graph(12, r);
  const auto t = build_tree(iota_ids(12), g, 8, {}, 2);
  EXPECT_LE(t.height(), 2);
  EXPECT_TRUE(t.valid(g, 8));
}

TEST(BuildTree, StabilityBreaksRootTies) {
  const auto g = LatencyGraph::from_matrix(2, {0, 1, 1, 0});
  const std::vector<NodeId> ids{0, 1};
  const std::vector<double> stab{0.2, 0.9};
  EXPECT_EQ(build_tree(ids, g, 8, stab).root, 1u);
  EXPECT_EQ(build_tree(ids, g, 8).root, 0u);
}

TEST(BruteForceTree, SmallCases) {
  const auto g2 = LatencyGraph::from_matrix(2, {0, 0.7, 0.7, 0});
  EXPECT_DOUBLE_EQ(brute_force_tree(iota_ids(2), g2, 1).second, 0.7);

  std::vector<double> flat(25, 0.3);
  const auto g5 = LatencyGraph::from_matrix(5, flat);
  EXPECT_DOUBLE_EQ(brute_force_tree(iota_ids(5), g5, 4).second, 0.3);

  Rng r(4);
  const auto g7 = random_graph(7, r);
  EXPECT_THROW(brute_force_tree(iota_ids(7), g7, 8), std::length_error);
}

TEST(BruteForceTree, NeverBeatenByHeuristic) {
  Rng r(5);
  for (int i = 0; i < 60; ++i) {
    const std::size_t n = 2 + r.below(5);
    const auto g = random_graph(n, r);
    const int fanout = 1 + static_cast<int>(r.below(3));
    const auto ids = iota_ids(n);
    const auto [opt, val] = brute_force_tree(ids, g, fanout);
    EXPECT_TRUE(opt.valid(g, fanout));
    EXPECT_NEAR(opt.max_depth(), val, 1e-12);
    EXPECT_GE(build_tree(ids, g, fanout).max_depth(), val - 1e-12);
  }
}

TEST(BruteForceTree, InflationDoesNotLowerOptimum) {
  Rng r(6);
  for (int i = 0; i < 30; ++i) {
    const std::size_t n = 3 + r.below(4);
    std::vector<double> m(n * n);
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = a + 1; b < n; ++b) m[a * n + b] = m[b * n + a] = r.uniform(0.01, 1);
    const auto ids = iota_ids(n);
    const double base = brute_force_tree(ids, LatencyGraph::from_matrix(n, m), 2).second;
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = 0; b < n; ++b)
        if (a != b) m[a * n + b] += 0.1;
    EXPECT_GE(brute_force_tree(ids, LatencyGraph::from_matrix(n, m), 2).second, base);
  }
}

TEST(BroadcastLatency, PathSums) {
  const auto g = line3();
  const auto t = build_tree(iota_ids(3), g, 8);  // star at B
  EXPECT_DOUBLE_EQ(broadcast_latency(t, 0), 2.0);
  EXPECT_DOUBLE_EQ(broadcast_latency(t, 1), t.max_depth());
  EXPECT_THROW(broadcast_latency(t, 9), std::invalid_argument);
  const std::vector<NodeId> one{0};
  EXPECT_DOUBLE_EQ(broadcast_latency(build_tree(one, g, 8), 0), 0.0);

  Rng r(7);
  const auto gr = random_graph(10, r);
  const auto tr = build_tree(iota_ids(10), gr, 3);
  EXPECT_DOUBLE_EQ(broadcast_latency(tr, tr.root), tr.max_depth());
}

TEST(NetworkBound, MaxOverShards) {
  const auto a = LatencyGraph::from_matrix(4, {0, 0.3, 9, 9, 0.3, 0, 9, 9, 9, 9, 0, 0.5, 9, 9, 0.5, 0});
  std::vector<BroadcastTree> trees{build_tree(std::vector<NodeId>{0, 1}, a, 8),
                                   build_tree(std::vector<NodeId>{2, 3}, a, 8)};
  EXPECT_DOUBLE_EQ(network_broadcast_bound(trees), 0.5);
}

TEST(NetworkBound, BeatsRandomTrees) {
  Rng r(8);
  const auto g = random_graph(10, r);
  const auto ids = iota_ids(10);
  const double built = build_tree(ids, g, 8).max_depth();
  for (int s = 0; s < 100; ++s) {
    // random recursive tree: each node attaches to a random earlier node
    auto order = ids;
    r.shuffle(order);
    std::vector<double> depth(10, 0.0);
    double worst = 0.0;
    for (std::size_t k = 1; k < order.size(); ++k) {
      const std::size_t p = r.below(k);
      depth[k] = depth[p] + g(order[p], order[k]);
      worst = std::max(worst, depth[k]);
    }
    EXPECT_LE(built, worst + 1e-12);
  }
}

TEST(CrossLinks, CountsAndNearestFirst) {
  Rng r(9);
  const auto g = random_graph(30, r);
  auto make = [&](std::size_t q) {
    std::vector<BroadcastTree> trees;
    for (std::size_t s = 0; s < q; ++s) {
      std::vector<NodeId> m;
      for (std::size_t i = s; i < 30; i += q) m.push_back(static_cast<NodeId>(i));
      trees.push_back(build_tree(m, g, 8));
    }
    return trees;
  };
  auto two = make(2);
  cross_shard_links(two, g, 8);
  ASSERT_EQ(two[0].cross_links.size(), 1u);
  EXPECT_EQ(two[0].cross_links[0].second, two[1].root);

  auto three = make(3);
  cross_shard_links(three, g, 8);
  for (const auto& t : three) EXPECT_EQ(t.cross_links.size(), 2u);

  auto ten = make(10);
  cross_shard_links(ten, g, 8);
  for (const auto& t : ten) {
    ASSERT_EQ(t.cross_links.size(), 8u);
    std::vector<double> lat;
    for (auto [a, b] : t.cross_links) lat.push_back(g(a, b));
    EXPECT_TRUE(std::ranges::is_sorted(lat));
    double linked_max = lat.back(), unlinked_min = 1e18;
    for (const auto& o : ten)
      if (o.root != t.root && std::ranges::none_of(t.cross_links, [&](auto l) { return l.second == o.root; }))
        unlinked_min = std::min(unlinked_min, g(t.root, o.root));
    EXPECT_LE(linked_max, unlinked_min);
    EXPECT_TRUE(t.valid(g, 8));
  }
}

TEST(RemoveMember, ReattachesOrphans) {
  Rng r(10);
  for (int i = 0; i < 20; ++i) {
    const auto g = random_graph(12, r);
    const auto t = build_tree(iota_ids(12), g, 2);
    const NodeId gone = t.members[1 + r.below(11)];
    const auto t2 = remove_member(t, gone, g, 2);
    EXPECT_EQ(t2.size(), 11u);
    EXPECT_FALSE(t2.index_of(gone));
    EXPECT_TRUE(t2.valid(g, 2));
    const auto t3 = remove_member(t, t.root, g, 2);
    EXPECT_NE(t3.root, t.root);
    EXPECT_TRUE(t3.valid(g, 2));
  }
}

#include <cmath>

#include <gtest/gtest.h>

#include "drdst/gossip.hpp"
#include "drdst/mobility.hpp"
#include "drdst/sim.hpp"

using namespace drdst;
using namespace drdst::mobility;

namespace {

std::vector<Position> grid_rsus(const Area& a, int per_side) {
  std::vector<Position> out;
  const double step = a.side_m / per_side;
  for (int i = 0; i < per_side; ++i)
    for (int j = 0; j < per_side; ++j) out.push_back({(i + 0.5) * step, (j + 0.5) * step});
  return out;
}

std::size_t count_handoffs(double speed_kmh, std::uint64_t seed) {
  const Area area = Area::from_km2(100);
  const auto rsus = grid_rsus(area, 10);
  Rng r(seed);
  auto vs = spawn_vehicles(50, speed_kmh, area, r);
  std::size_t n = 0;
  for (int s = 0; s < 120; ++s) n += move_vehicles(vs, 0.5, area, rsus, {}, r).size();
  return n;
}

}  // namespace

TEST(Mobility, StaysInAreaAtConstantSpeed) {
  const Area area = Area::from_km2(4);
  Rng r(1);
  auto vs = spawn_vehicles(30, 80, area, r);
  for (int s = 0; s < 500; ++s) {
    std::vector<Position> before;
    for (const auto& v : vs) before.push_back(v.position);
    for (auto& v : vs) advance(v, 0.5, area, r);
    for (std::size_t i = 0; i < vs.size(); ++i) {
      ASSERT_TRUE(area.contains(vs[i].position));
      // straight-line displacement never exceeds the path length
      ASSERT_LE(euclidean_distance(before[i], vs[i].position), 80 / 3.6 * 0.5 + 1e-9);
      ASSERT_NEAR(std::hypot(vs[i].velocity.x, vs[i].velocity.y), 80 / 3.6, 1e-9);
    }
  }
}

TEST(Mobility, SpeedZeroNeverHandsOff) { EXPECT_EQ(count_handoffs(0, 1), 0u); }

TEST(Mobility, FasterVehiclesHandOffMore) {
  int ok = 0;
  for (std::uint64_t seed = 1; seed <= 50; ++seed) ok += count_handoffs(80, seed) >= count_handoffs(20, seed);
  EXPECT_GE(ok, 48);
}

TEST(Mobility, NearestRsuTieGoesToLowerId) {
  const std::vector<Position> rsus{{0, 0}, {10, 0}, {20, 0}};
  EXPECT_EQ(nearest_rsu({5, 0}, rsus), 0u);
  EXPECT_EQ(nearest_rsu({15, 3}, rsus), 1u);
  const std::vector<char> online{0, 1, 1};
  EXPECT_EQ(nearest_rsu({1, 0}, rsus, online), 1u);
}

TEST(Mobility, Reflect) {
  EXPECT_DOUBLE_EQ(reflect(12, 10), 8);
  EXPECT_DOUBLE_EQ(reflect(-3, 10), 3);
  EXPECT_DOUBLE_EQ(reflect(7, 10), 7);
}

TEST(Traffic, ZeroRate) {
  TrafficSource src(0, 10, Rng(1));
  EXPECT_TRUE(src.generate(0, 100).empty());
}

TEST(Traffic, PoissonMoments) {
  const int seeds = 400;
  double s = 0, s2 = 0;
  for (int i = 0; i < seeds; ++i) {
    TrafficSource src(3000, 100, Rng(static_cast<std::uint64_t>(i)));
    const auto n = static_cast<double>(src.generate(0, 1).size());
    s += n;
    s2 += n * n;
  }
  const double mean = s / seeds, var = s2 / seeds - mean * mean;
  EXPECT_NEAR(mean, 3000, 3 * std::sqrt(3000.0 / seeds) + 1);
  EXPECT_NEAR(var / 3000, 1.0, 0.25);
}

TEST(Traffic, WindowsFormOneProcess) {
  TrafficSource a(50, 10, Rng(3)), b(50, 10, Rng(3));
  auto whole = a.generate(0, 10);
  std::vector<TrafficSource::Arrival> parts;
  for (int k = 0; k < 40; ++k) {
    auto p = b.generate(k * 0.25, 0.25);
    parts.insert(parts.end(), p.begin(), p.end());
  }
  ASSERT_EQ(whole.size(), parts.size());
  for (std::size_t i = 0; i < whole.size(); ++i) {
    EXPECT_EQ(whole[i].time, parts[i].time);
    EXPECT_EQ(whole[i].vehicle, parts[i].vehicle);
  }
}

TEST(Faults, ByzantineMean) {
  double total = 0;
  const int seeds = 200;
  for (int i = 0; i < seeds; ++i) {
    std::vector<RsuNode> nodes(100);
    sim::inject_faults(nodes, 0.15, 0.0, 0, Rng(static_cast<std::uint64_t>(i)));
    total += static_cast<double>(std::ranges::count_if(nodes, [](const RsuNode& n) { return n.is_byzantine; }));
    ASSERT_TRUE(std::ranges::none_of(nodes, [](const RsuNode& n) { return n.is_offline; }));
  }
  EXPECT_NEAR(total / seeds, 15.0, 1.0);
}

TEST(Faults, ByzantineIsStickyOfflineRedrawn) {
  std::vector<RsuNode> nodes(200);
  const Rng root(5);
  sim::inject_faults(nodes, 0.1, 0.3, 0, root);
  std::vector<char> byz, off;
  for (const auto& n : nodes) {
    byz.push_back(n.is_byzantine);
    off.push_back(n.is_offline);
  }
  sim::inject_faults(nodes, 0.1, 0.3, 1, root);
  std::vector<char> byz1, off1;
  for (const auto& n : nodes) {
    byz1.push_back(n.is_byzantine);
    off1.push_back(n.is_offline);
  }
  EXPECT_EQ(byz, byz1);
  EXPECT_NE(off, off1);

  std::vector<RsuNode> clean(50);
  sim::inject_faults(clean, 0, 0, 0, root);
  EXPECT_TRUE(std::ranges::none_of(clean, [](const RsuNode& n) { return n.is_byzantine || n.is_offline; }));
}

TEST(Gossip, Degenerate) {
  Rng r(1);
  auto hop = [](std::size_t, std::size_t) { return 0.01; };
  const auto one = gossip::disseminate(1, 0, 2, 32, hop, r);
  EXPECT_EQ(one.rounds, 0);
  EXPECT_EQ(one.total_sends, 0u);
  EXPECT_THROW(gossip::disseminate(4, 0, 0, 32, hop, r), DomainError);
}

TEST(Gossip, LogarithmicRounds) {
  auto hop = [](std::size_t a, std::size_t b) { return 0.001 * static_cast<double>(1 + (a + b) % 5); };
  int within = 0;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    Rng r(seed);
    const auto s = gossip::disseminate(16, seed % 16, 2, 32, hop, r);
    within += s.complete() && s.rounds <= 3 * 4;  // 3 log2(n)
  }
  EXPECT_GE(within, 990);
}

TEST(Gossip, ArrivalsFollowSenders) {
  Rng r(2);
  auto hop = [](std::size_t a, std::size_t b) { return 0.01 + 0.001 * static_cast<double>(a + b); };
  const auto s = gossip::disseminate(20, 3, 3, 32, hop, r);
  ASSERT_TRUE(s.complete());
  std::uint64_t recv = 0;
  for (std::size_t i = 0; i < 20; ++i) {
    recv += s.received[i];
    if (i == 3) continue;
    ASSERT_GE(s.informed_by[i], 0);
    EXPECT_GT(s.arrival[i], s.arrival[static_cast<std::size_t>(s.informed_by[i])]);
  }
  EXPECT_EQ(recv, s.total_sends);
}

#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "drdst/core.hpp"

namespace drdst::mobility {

inline constexpr NodeId kNoRsu = std::numeric_limits<NodeId>::max();

struct Vehicle {
  std::uint32_t id = 0;
  Position position;
  Position velocity;  // m/s
  Position waypoint;
  double speed_mps = 0.0;
  NodeId current_rsu = kNoRsu;
  NodeId anchor_rsu = kNoRsu;  // RSU that took this vehicle's previous tx
  ShardId last_tx_shard = 0;
  bool has_anchor = false;
};

struct Handoff {
  std::uint32_t vehicle;
  NodeId from;
  NodeId to;
};

// Nearest online RSU; on equal distance the lower id wins.
inline NodeId nearest_rsu(Position p, std::span<const Position> rsus, std::span<const char> online = {}) {
  NodeId best = kNoRsu;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < rsus.size(); ++i) {
    if (!online.empty() && !online[i]) continue;
    const double d = euclidean_distance(p, rsus[i]);
    if (d < best_d) {
      best_d = d;
      best = static_cast<NodeId>(i);
    }
  }
  return best;
}

inline void aim(Vehicle& v) {
  const double dx = v.waypoint.x - v.position.x;
  const double dy = v.waypoint.y - v.position.y;
  const double d = std::hypot(dx, dy);
  v.velocity = d > 0.0 ? Position{v.speed_mps * dx / d, v.speed_mps * dy / d} : Position{};
}

inline Position random_point(const Area& area, Rng& rng) {
  return {rng.uniform(0.0, area.side_m), rng.uniform(0.0, area.side_m)};
}

inline std::vector<Vehicle> spawn_vehicles(int count, double speed_kmh, const Area& area, Rng& rng) {
  std::vector<Vehicle> out(static_cast<std::size_t>(count));
  for (std::size_t i = 0; i < out.size(); ++i) {
    auto& v = out[i];
    v.id = static_cast<std::uint32_t>(i);
    v.position = random_point(area, rng);
    v.waypoint = random_point(area, rng);
    v.speed_mps = speed_kmh / 3.6;
    aim(v);
  }
  return out;
}

// Reflect a coordinate back into [0, side].
inline double reflect(double x, double side) {
  if (side <= 0.0) return 0.0;
  const double period = 2.0 * side;
  x = std::fmod(x, period);
  if (x < 0.0) x += period;
  return x <= side ? x : period - x;
}

// Random waypoint at constant speed. Waypoints lie inside the area so the
// reflection only guards against rounding.
inline void advance(Vehicle& v, double dt, const Area& area, Rng& rng) {
  if (v.speed_mps <= 0.0) return;
  double remaining = v.speed_mps * dt;
  for (int guard = 0; remaining > 0.0 && guard < 64; ++guard) {
    const double to_wp = euclidean_distance(v.position, v.waypoint);
    if (to_wp > remaining) {
      v.position.x += v.velocity.x / v.speed_mps * remaining;
      v.position.y += v.velocity.y / v.speed_mps * remaining;
      remaining = 0.0;
    } else {
      v.position = v.waypoint;
      remaining -= to_wp;
      v.waypoint = random_point(area, rng);
      aim(v);
    }
  }
  v.position = {reflect(v.position.x, area.side_m), reflect(v.position.y, area.side_m)};
}

// Moves every vehicle by dt and re-attaches it to the nearest online RSU.
inline std::vector<Handoff> move_vehicles(std::vector<Vehicle>& vehicles, double dt, const Area& area,
                                          std::span<const Position> rsus, std::span<const char> online, Rng& rng) {
  if (!(dt > 0.0)) throw DomainError("move_vehicles: dt must be > 0");
  std::vector<Handoff> out;
  for (auto& v : vehicles) {
    advance(v, dt, area, rng);
    const NodeId n = nearest_rsu(v.position, rsus, online);
    if (v.current_rsu != kNoRsu && n != v.current_rsu) out.push_back({v.id, v.current_rsu, n});
    v.current_rsu = n;
  }
  return out;
}

// Poisson arrivals: exponential gaps carried across calls so consecutive
// windows form one process.
class TrafficSource {
 public:
  struct Arrival {
    double time;
    std::uint32_t vehicle;
  };

  TrafficSource(double rate_tps, std::uint32_t vehicles, Rng rng)
      : rate_(rate_tps), vehicles_(vehicles), rng_(std::move(rng)) {
    if (rate_ < 0.0) throw DomainError("TrafficSource: rate must be >= 0");
    if (rate_ > 0.0) next_ = rng_.exponential(rate_);
  }

  // Arrivals in [from, from + dt).
  std::vector<Arrival> generate(double from, double dt) {
    std::vector<Arrival> out;
    if (rate_ <= 0.0 || vehicles_ == 0) return out;
    const double end = from + dt;
    while (next_ < end) {
      if (next_ >= from) out.push_back({next_, static_cast<std::uint32_t>(rng_.below(vehicles_))});
      next_ += rng_.exponential(rate_);
    }
    return out;
  }

 private:
  double rate_;
  std::uint32_t vehicles_;
  Rng rng_;
  double next_ = std::numeric_limits<double>::infinity();
};

}  // namespace drdst::mobility

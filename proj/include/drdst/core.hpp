#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace drdst {

using NodeId = std::uint32_t;
using ShardId = std::uint32_t;

inline constexpr double kTrustMin = 0.0;
inline constexpr double kTrustMax = 10.0;

// Raised when an input violates a documented precondition (log of a
// nonpositive capacity, zero link rate, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Raised for invalid configuration; `field()` names the offending key.
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(std::string field, const std::string& what)
      : std::invalid_argument(field + ": " + what), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

struct Position {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Position&, const Position&) = default;
};

inline double euclidean_distance(Position a, Position b) noexcept {
  return std::hypot(a.x - b.x, a.y - b.y);
}

// Square research area [0, side] x [0, side] in meters.
struct Area {
  double side_m = 10'000.0;

  static Area from_km2(double km2) { return Area{std::sqrt(km2) * 1000.0}; }

  bool contains(Position p) const noexcept {
    return p.x >= 0.0 && p.y >= 0.0 && p.x <= side_m && p.y <= side_m;
  }
};

//------------------------------------------------------------------------------
// Seeded randomness
//
// The engine is std::mt19937_64, whose output sequence is fixed by the
// standard. The std:: distributions are implementation-defined, so the draws
// below are written out by hand to keep streams identical across toolchains.
//------------------------------------------------------------------------------

inline constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline constexpr std::uint64_t fnv1a(std::string_view s) noexcept {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ULL;
  }
  return h;
}

class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed = 0) : seed_(seed), engine_(splitmix64(seed)) {}

  static constexpr result_type min() { return std::mt19937_64::min(); }
  static constexpr result_type max() { return std::mt19937_64::max(); }
  result_type operator()() { return engine_(); }

  std::uint64_t seed() const noexcept { return seed_; }

  // Independent stream keyed by name; draws on the child never advance the
  // parent, so subsystems do not perturb each other.
  Rng substream(std::string_view name) const {
    return Rng(splitmix64(seed_ ^ splitmix64(fnv1a(name))));
  }
  Rng substream(std::string_view name, std::uint64_t index) const {
    return Rng(splitmix64(seed_ ^ splitmix64(fnv1a(name) + splitmix64(index + 1))));
  }

  // [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Unbiased integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    if (n == 0) throw DomainError("Rng::below: empty range");
    const std::uint64_t limit = max() - max() % n;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

  bool bernoulli(double p) { return uniform() < p; }

  double exponential(double rate) { return -std::log1p(-uniform()) / rate; }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * std::numbers::pi * u2);
    has_spare_ = true;
    return r * std::cos(2.0 * std::numbers::pi * u2);
  }

  double lognormal(double mu, double sigma) { return std::exp(mu + sigma * normal()); }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

//------------------------------------------------------------------------------
// Node model
//------------------------------------------------------------------------------

struct StabilityIndicators {
  double online_time = 0.0;       // seconds of continuous uptime
  double compute_capacity = 1.0;  // abstract units, > 0
  double failure_prob = 0.0;      // [0, 1]
};

struct ScoringParams {
  double alpha = 0.01;
  double beta = 1.0;
  std::array<double, 3> weights{0.4, 0.35, 0.25};  // online, compute, failure
  double t_zero = 0.0;
  double gamma = 5.0;

  void validate() const {
    double sum = 0.0;
    for (double w : weights) {
      if (!(w > 0.0)) throw ConfigError("scoring.weights", "each weight must be > 0");
      sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("scoring.weights", "weights must sum to 1");
    if (alpha < 0.0) throw ConfigError("scoring.alpha", "must be >= 0");
    if (beta < 0.0) throw ConfigError("scoring.beta", "must be >= 0");
    if (!(gamma > 0.0)) throw ConfigError("scoring.gamma", "must be > 0");
  }
};

class RsuNode {
 public:
  RsuNode() = default;
  RsuNode(NodeId id, Position pos, double trust, StabilityIndicators ind = {}, double stability = 0.0)
      : id_(id), position_(pos), indicators_(ind) {
    set_trust(trust);
    set_stability(stability);
  }

  NodeId id() const noexcept { return id_; }
  Position position() const noexcept { return position_; }
  double trust() const noexcept { return trust_; }
  double stability() const noexcept { return stability_; }
  const StabilityIndicators& indicators() const noexcept { return indicators_; }
  StabilityIndicators& indicators() noexcept { return indicators_; }

  void set_trust(double t) noexcept { trust_ = std::clamp(t, kTrustMin, kTrustMax); }
  void set_stability(double s) noexcept { stability_ = std::clamp(s, 0.0, 1.0); }

  bool is_byzantine = false;
  bool is_offline = false;

 private:
  NodeId id_ = 0;
  Position position_{};
  double trust_ = 0.0;
  StabilityIndicators indicators_{};
  double stability_ = 0.0;
};

}  // namespace drdst

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <span>

#include "drdst/core.hpp"

namespace drdst::scoring {

enum class Role : int { root = 0, father = 1, child = 2 };

struct EpochNodeStats {
  double ok_txs = 0.0;
  double failed_txs = 0.0;
  std::array<double, 3> role_times{0.0, 0.0, 0.0};     // actual, indexed by Role
  std::array<double, 3> role_required{1.0, 1.0, 1.0};  // required, > 0
};

struct PopulationComputeStats {
  double log_min = 0.0;
  double log_max = 0.0;

  static PopulationComputeStats from(std::span<const double> capacities) {
    if (capacities.empty()) throw DomainError("empty capacity population");
    PopulationComputeStats s{std::numeric_limits<double>::infinity(),
                             -std::numeric_limits<double>::infinity()};
    for (double c : capacities) {
      if (!(c > 0.0)) throw DomainError("compute capacity must be > 0");
      s.log_min = std::min(s.log_min, std::log(c));
      s.log_max = std::max(s.log_max, std::log(c));
    }
    return s;
  }
};

// Penalty time for one role: nothing when on time, the full time otherwise.
inline double theta(double actual, double required) noexcept {
  return actual <= required ? 0.0 : actual;
}

inline double trust_delta(const EpochNodeStats& stats, const ScoringParams& params) {
  double penalty = 0.0;
  for (std::size_t o = 0; o < 3; ++o) penalty += theta(stats.role_times[o], stats.role_required[o]) / stats.role_required[o];
  return params.alpha * (stats.ok_txs - stats.failed_txs) - params.beta * penalty;
}

inline double apply_trust(double current, double delta) noexcept {
  return std::clamp(current + delta, kTrustMin, kTrustMax);
}

inline double f_online(double t_online, double t_zero) noexcept {
  return 1.0 / (1.0 + std::exp(-(t_online - t_zero)));
}

inline double f_compute(double capacity, const PopulationComputeStats& pop) {
  if (!(capacity > 0.0)) throw DomainError("f_compute: capacity must be > 0");
  if (pop.log_max <= pop.log_min) return 1.0;
  const double v = (std::log(capacity) - pop.log_min) / (pop.log_max - pop.log_min);
  return std::clamp(v, 0.0, 1.0);
}

inline double f_failure(double eta, double gamma) noexcept { return std::exp(-eta * gamma); }

inline double stability_score(const StabilityIndicators& ind, const ScoringParams& params,
                              const PopulationComputeStats& pop) {
  const auto& w = params.weights;
  const double s = w[0] * f_online(ind.online_time, params.t_zero) +
                   w[1] * f_compute(ind.compute_capacity, pop) +
                   w[2] * f_failure(ind.failure_prob, params.gamma);
  return std::clamp(s, 0.0, 1.0);
}

}  // namespace drdst::scoring

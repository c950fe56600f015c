#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "drdst/config.hpp"
#include "drdst/core.hpp"

namespace drdst::sharding {

// An assignment left with an empty shard; repair() must run first.
class StructureError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

struct ShardAssignment {
  std::vector<ShardId> genes;  // genes[i] = shard of node i
  std::uint32_t shard_count = 0;

  std::size_t size() const noexcept { return genes.size(); }

  std::vector<std::size_t> shard_sizes() const {
    std::vector<std::size_t> sizes(shard_count, 0);
    for (ShardId g : genes) ++sizes.at(g);
    return sizes;
  }

  std::vector<std::vector<NodeId>> members() const {
    std::vector<std::vector<NodeId>> m(shard_count);
    for (std::size_t i = 0; i < genes.size(); ++i) m.at(genes[i]).push_back(static_cast<NodeId>(i));
    return m;
  }

  bool valid() const {
    if (shard_count == 0) return false;
    for (ShardId g : genes)
      if (g >= shard_count) return false;
    const auto sizes = shard_sizes();
    return std::ranges::none_of(sizes, [](std::size_t s) { return s == 0; });
  }

  friend bool operator==(const ShardAssignment&, const ShardAssignment&) = default;
};

struct ShardMetrics {
  double count_gap = 0.0;
  double trust_gap = 0.0;
  double stability_gap = 0.0;
  double max_malicious_ratio = 0.0;
  std::vector<double> shard_trust;
  std::vector<double> shard_stability;
  std::vector<std::size_t> shard_sizes;
};

struct GsaParams {
  int population_size = 50;
  int generations = 100;
  double mutation_factor = 0.5;
  double crossover_prob = 0.9;
  double s_max = 1.0;

  static GsaParams from(const GsaConfig& g, double s_max) {
    return {g.population_size, g.generations, g.mutation_factor, g.crossover_prob, s_max};
  }

  void validate() const {
    if (population_size < 4) throw ConfigError("gsa.population_size", "must be >= 4");
    if (generations < 1) throw ConfigError("gsa.generations", "must be >= 1");
    if (!(s_max > 0.0)) throw ConfigError("gsa.s_max", "must be > 0");
  }
};

struct SearchResult {
  ShardAssignment best;
  double best_fitness = 0.0;
  std::vector<double> history;  // best-so-far after each generation
};

inline constexpr double kPenalty = 1000.0;

//------------------------------------------------------------------------------
// Shard quality
//------------------------------------------------------------------------------

// Per-shard means and max-min gaps. A node is counted malicious when
// `is_malicious(node)` holds.
template <typename MaliciousPred>
ShardMetrics shard_metrics(const ShardAssignment& assign, std::span<const RsuNode> nodes,
                           MaliciousPred&& is_malicious) {
  if (assign.size() != nodes.size()) throw StructureError("assignment length differs from node count");
  if (assign.shard_count < 2) throw StructureError("need at least two shards");
  const std::size_t q = assign.shard_count;
  ShardMetrics m;
  m.shard_trust.assign(q, 0.0);
  m.shard_stability.assign(q, 0.0);
  m.shard_sizes.assign(q, 0);
  std::vector<std::size_t> malicious(q, 0);
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const ShardId s = assign.genes[i];
    if (s >= q) throw StructureError("shard index out of range");
    m.shard_trust[s] += nodes[i].trust();
    m.shard_stability[s] += nodes[i].stability();
    ++m.shard_sizes[s];
    if (is_malicious(nodes[i])) ++malicious[s];
  }
  for (std::size_t s = 0; s < q; ++s) {
    if (m.shard_sizes[s] == 0) throw StructureError("empty shard " + std::to_string(s));
    const double n = static_cast<double>(m.shard_sizes[s]);
    m.shard_trust[s] /= n;
    m.shard_stability[s] /= n;
    m.max_malicious_ratio = std::max(m.max_malicious_ratio, static_cast<double>(malicious[s]) / n);
  }
  auto gap = [](const auto& v) {
    auto [lo, hi] = std::ranges::minmax_element(v);
    return static_cast<double>(*hi) - static_cast<double>(*lo);
  };
  m.count_gap = gap(m.shard_sizes);
  m.trust_gap = gap(m.shard_trust);
  m.stability_gap = gap(m.shard_stability);
  return m;
}

inline ShardMetrics shard_metrics(const ShardAssignment& assign, std::span<const RsuNode> nodes,
                                  double cutoff) {
  return shard_metrics(assign, nodes, [cutoff](const RsuNode& n) { return n.trust() < cutoff; });
}

inline double fitness(const ShardMetrics& m, const Thresholds& th, std::size_t node_count) {
  const double count_gap = th.normalized_fitness ? m.count_gap / static_cast<double>(node_count) : m.count_gap;
  const bool breach = m.trust_gap > th.lambda || m.count_gap > th.mu || m.max_malicious_ratio > 1.0 / 3.0 ||
                      m.stability_gap > th.stability_gap;
  return m.trust_gap + count_gap + m.stability_gap + m.max_malicious_ratio + (breach ? kPenalty : 0.0);
}

// Lower is better.
inline double fitness(const ShardAssignment& assign, std::span<const RsuNode> nodes, const Thresholds& th) {
  return fitness(shard_metrics(assign, nodes, th.malicious_trust_cutoff), th, nodes.size());
}

//------------------------------------------------------------------------------
// Operators
//------------------------------------------------------------------------------

// Any source with `double uniform()` in [0, 1).
template <typename R>
concept UniformSource = requires(R r) {
  { r.uniform() } -> std::convertible_to<double>;
};

inline double stability_factor(double sa, double sb, double s_max) {
  return 1.0 - (sa + sb) / (2.0 * s_max);
}

// Takes pb's gene with probability MF * (1 - mean stability / s_max), else pa's.
// With `weighted == false` the plain MF is used (GA baseline).
template <UniformSource R>
ShardAssignment mutate(const ShardAssignment& pa, const ShardAssignment& pb, const GsaParams& params,
                       std::span<const double> stab, R& rng, bool weighted = true) {
  if (pa.size() != pb.size() || pa.size() != stab.size()) throw StructureError("genome length mismatch");
  ShardAssignment m = pa;
  for (std::size_t j = 0; j < pa.size(); ++j) {
    const double p = weighted ? params.mutation_factor * stability_factor(stab[j], stab[j], params.s_max)
                              : params.mutation_factor;
    if (rng.uniform() < p) m.genes[j] = pb.genes[j];
  }
  return m;
}

// Takes m's gene with probability CP * (1 - mean stability / s_max), else pc's.
template <UniformSource R>
ShardAssignment crossover(const ShardAssignment& m, const ShardAssignment& pc, const GsaParams& params,
                          std::span<const double> stab, R& rng, bool weighted = true) {
  if (m.size() != pc.size() || m.size() != stab.size()) throw StructureError("genome length mismatch");
  ShardAssignment t = pc;
  for (std::size_t j = 0; j < m.size(); ++j) {
    const double p = weighted ? params.crossover_prob * stability_factor(stab[j], stab[j], params.s_max)
                              : params.crossover_prob;
    if (rng.uniform() < p) t.genes[j] = m.genes[j];
  }
  return t;
}

// Every empty shard takes the most stable node of the currently largest shard.
inline void repair(ShardAssignment& a, std::span<const double> stab) {
  if (a.size() < a.shard_count) throw ConfigError("shard_count", "more shards than nodes");
  auto sizes = a.shard_sizes();
  for (std::size_t empty = 0; empty < sizes.size(); ++empty) {
    if (sizes[empty] != 0) continue;
    const auto largest = static_cast<ShardId>(std::ranges::max_element(sizes) - sizes.begin());
    std::size_t pick = a.size();
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (a.genes[i] != largest) continue;
      if (pick == a.size() || stab[i] > stab[pick]) pick = i;
    }
    a.genes[pick] = static_cast<ShardId>(empty);
    --sizes[largest];
    ++sizes[empty];
  }
}

inline ShardAssignment random_assignment(std::size_t p, std::uint32_t q, std::span<const double> stab, Rng& rng) {
  ShardAssignment a{std::vector<ShardId>(p), q};
  for (auto& g : a.genes) g = static_cast<ShardId>(rng.below(q));
  repair(a, stab);
  return a;
}

//------------------------------------------------------------------------------
// Search
//------------------------------------------------------------------------------

namespace detail {

inline std::array<std::size_t, 3> pick_three(std::size_t n, std::size_t exclude, Rng& rng) {
  std::array<std::size_t, 3> out{};
  std::size_t k = 0;
  while (k < 3) {
    const std::size_t c = rng.below(n);
    if (c == exclude || std::find(out.begin(), out.begin() + k, c) != out.begin() + k) continue;
    out[k++] = c;
  }
  return out;
}

inline SearchResult evolve(std::span<const RsuNode> nodes, std::uint32_t q, const GsaParams& params,
                           const Thresholds& th, Rng& rng, bool weighted,
                           const std::optional<ShardAssignment>& warm_start) {
  params.validate();
  if (nodes.size() < q) throw ConfigError("shard_count", "more shards than nodes");
  const std::size_t n = static_cast<std::size_t>(params.population_size);

  std::vector<double> stab(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) stab[i] = nodes[i].stability();

  Rng init = rng.substream("init");
  std::vector<ShardAssignment> pop;
  std::vector<double> fit;
  pop.reserve(n);
  for (std::size_t u = 0; u < n; ++u) {
    if (u == 0 && warm_start && warm_start->size() == nodes.size() && warm_start->shard_count == q) {
      ShardAssignment w = *warm_start;
      repair(w, stab);
      pop.push_back(std::move(w));
    } else {
      pop.push_back(random_assignment(nodes.size(), q, stab, init));
    }
    fit.push_back(fitness(pop.back(), nodes, th));
  }

  SearchResult res;
  auto best_it = std::ranges::min_element(fit);
  res.best = pop[static_cast<std::size_t>(best_it - fit.begin())];
  res.best_fitness = *best_it;
  res.history.reserve(static_cast<std::size_t>(params.generations));

  std::vector<ShardAssignment> next = pop;
  std::vector<double> next_fit = fit;
  for (int g = 0; g < params.generations; ++g) {
    // Trials read the current generation only, so slots are independent.
    for (std::size_t u = 0; u < n; ++u) {
      Rng slot = rng.substream("slot", static_cast<std::uint64_t>(g) * n + u);
      const auto [a, b, c] = pick_three(n, u, slot);
      ShardAssignment trial =
          crossover(mutate(pop[a], pop[b], params, stab, slot, weighted), pop[c], params, stab, slot, weighted);
      repair(trial, stab);
      const double f = fitness(trial, nodes, th);
      if (f < fit[u]) {
        next[u] = std::move(trial);
        next_fit[u] = f;
      } else {
        next[u] = pop[u];
        next_fit[u] = fit[u];
      }
    }
    pop.swap(next);
    fit.swap(next_fit);
    for (std::size_t u = 0; u < n; ++u) {
      if (fit[u] < res.best_fitness) {
        res.best_fitness = fit[u];
        res.best = pop[u];
      }
    }
    res.history.push_back(res.best_fitness);
  }
  return res;
}

}  // namespace detail

// Genetic sharding search with stability-weighted mutation and crossover.
inline SearchResult gsa_run(std::span<const RsuNode> nodes, std::uint32_t q, const GsaParams& params,
                            const Thresholds& th, Rng& rng,
                            const std::optional<ShardAssignment>& warm_start = std::nullopt) {
  return detail::evolve(nodes, q, params, th, rng, true, warm_start);
}

// Same loop with unweighted MF/CP.
inline SearchResult ga_baseline_run(std::span<const RsuNode> nodes, std::uint32_t q, const GsaParams& params,
                                    const Thresholds& th, Rng& rng) {
  return detail::evolve(nodes, q, params, th, rng, false, std::nullopt);
}

inline constexpr double kBruteForceLimit = 1e6;

// Exhaustive minimum over assignments without empty shards; ties go to the
// lexicographically smallest genome.
inline std::pair<ShardAssignment, double> brute_force_optimal(std::span<const RsuNode> nodes, std::uint32_t q,
                                                              const Thresholds& th) {
  const std::size_t p = nodes.size();
  if (q < 2 || p < q) throw ConfigError("shard_count", "need 2 <= q <= p");
  if (std::pow(static_cast<double>(q), static_cast<double>(p)) > kBruteForceLimit)
    throw std::length_error("brute_force_optimal: instance too large");
  ShardAssignment cur{std::vector<ShardId>(p, 0), q};
  std::optional<ShardAssignment> best;
  double best_fit = 0.0;
  while (true) {
    if (cur.valid()) {
      const double f = fitness(cur, nodes, th);
      if (!best || f < best_fit) {
        best = cur;
        best_fit = f;
      }
    }
    // Odometer increment, last gene fastest: visits genomes in lexicographic order.
    std::size_t i = p;
    while (i > 0) {
      --i;
      if (++cur.genes[i] < q) break;
      cur.genes[i] = 0;
      if (i == 0) return {*best, best_fit};
    }
  }
}

}  // namespace drdst::sharding

#pragma once

#include <cstdint>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "drdst/core.hpp"

namespace drdst {

enum class Ablation { none, no_dag, no_smlbt, no_sharding };
enum class Placement { uniform, grid };
enum class ByzantinePolicy { vote_no, silent, equivocate, delay_relay };
enum class CrossLinkTarget { root, random_member };

struct Thresholds {
  double mu = 2.0;                      // acceptable node-count gap
  double lambda = 1.0;                  // acceptable trust gap
  double stability_gap = 0.15;
  double malicious_trust_cutoff = 2.0;  // trust below this counts as malicious in fitness
  bool normalized_fitness = false;      // divide count gap by node count
};

struct GsaConfig {
  int population_size = 50;
  int generations = 100;
  double mutation_factor = 0.5;
  double crossover_prob = 0.9;
  bool warm_start = true;
  int bench_runs = 100;  // repetitions for shard-bench
};

struct LinkConfig {
  double bandwidth_min_mbps = 10.0;
  double bandwidth_max_mbps = 30.0;
  double propagation_speed_mps = 2.0e8;
  double event_header_bits = 2048.0;
  double tx_bits = 2048.0;
};

struct NodeConfig {
  double initial_trust_min = 0.0;
  double initial_trust_max = 10.0;
  double compute_log_mu = 0.0;     // log-normal capacity: exp(mu + sigma * N(0,1))
  double compute_log_sigma = 0.5;
  double validation_tps_per_unit = 250.0;
  double event_overhead_s = 2.0e-4;  // fixed validation cost per received event
  double receive_overhead_s = 5.0e-5;  // per received copy, duplicates included
  double default_role_time_s = 0.5;
};

struct SimConfig {
  double area_km2 = 100.0;
  int rsu_count = 100;
  int vehicle_count = 1000;
  double vehicle_speed_kmh = 60.0;
  double request_rate_tps = 3000.0;
  int shard_count = 8;
  double byzantine_rate = 0.05;
  double offline_rate = 0.02;
  int fanout = 8;
  int max_txs_per_event = 1024;
  double epoch_seconds = 10.0;
  std::uint64_t rng_seed = 1;

  double duration_seconds = 60.0;     // submission window
  double drain_cap_seconds = 900.0;   // extra time allowed to decide pending txs
  double event_interval_s = 0.05;
  double event_timeout_s = 5.0;
  double admission_lag_s = 1.0;
  double mobility_step_s = 0.5;
  int gossip_round_cap = 32;
  int max_tree_height = 0;  // 0 = unbounded

  Placement placement = Placement::uniform;
  ByzantinePolicy byzantine_policy = ByzantinePolicy::vote_no;
  CrossLinkTarget cross_link_target = CrossLinkTarget::root;
  Ablation ablation = Ablation::none;

  Thresholds thresholds;
  GsaConfig gsa;
  LinkConfig link;
  NodeConfig node;
  ScoringParams scoring;

  void validate() const;
};

//------------------------------------------------------------------------------
// enum <-> string
//------------------------------------------------------------------------------

inline std::string_view to_string(Ablation a) {
  switch (a) {
    case Ablation::none: return "none";
    case Ablation::no_dag: return "no_dag";
    case Ablation::no_smlbt: return "no_smlbt";
    case Ablation::no_sharding: return "no_sharding";
  }
  return "none";
}
inline std::string_view to_string(Placement p) { return p == Placement::grid ? "grid" : "uniform"; }
inline std::string_view to_string(CrossLinkTarget t) {
  return t == CrossLinkTarget::root ? "root" : "random_member";
}
inline std::string_view to_string(ByzantinePolicy p) {
  switch (p) {
    case ByzantinePolicy::vote_no: return "vote_no";
    case ByzantinePolicy::silent: return "silent";
    case ByzantinePolicy::equivocate: return "equivocate";
    case ByzantinePolicy::delay_relay: return "delay_relay";
  }
  return "vote_no";
}

namespace detail {

template <typename E, std::size_t N>
E parse_enum(const std::string& field, const std::string& s, const std::array<E, N>& all) {
  for (E e : all)
    if (to_string(e) == s) return e;
  throw ConfigError(field, "unknown value '" + s + "'");
}

// Reads keys from a JSON object and rejects any key it was not asked about.
class ObjectReader {
 public:
  ObjectReader(const nlohmann::json& j, std::string prefix) : j_(j), prefix_(std::move(prefix)) {
    if (!j_.is_object()) throw ConfigError(prefix_.empty() ? "<root>" : prefix_, "expected an object");
  }

  template <typename T>
  void get(std::string_view key, T& out) {
    seen_.emplace(key);
    auto it = j_.find(std::string(key));
    if (it == j_.end()) return;
    try {
      if constexpr (std::is_same_v<T, bool>) {
        if (!it->is_boolean()) throw ConfigError(path(key), "expected a boolean");
      } else if constexpr (std::is_integral_v<T>) {
        if (!it->is_number_integer()) throw ConfigError(path(key), "expected an integer");
      } else if constexpr (std::is_floating_point_v<T>) {
        if (!it->is_number()) throw ConfigError(path(key), "expected a number");
      }
      out = it->template get<T>();
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(path(key), e.what());
    }
  }

  template <typename E, std::size_t N>
  void get_enum(std::string_view key, E& out, const std::array<E, N>& all) {
    seen_.emplace(key);
    auto it = j_.find(std::string(key));
    if (it == j_.end()) return;
    if (!it->is_string()) throw ConfigError(path(key), "expected a string");
    out = parse_enum(path(key), it->template get<std::string>(), all);
  }

  const nlohmann::json* child(std::string_view key) {
    seen_.emplace(key);
    auto it = j_.find(std::string(key));
    return it == j_.end() ? nullptr : &*it;
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.contains(it.key())) throw ConfigError(path(it.key()), "unknown key");
  }

  std::string path(std::string_view key) const {
    return prefix_.empty() ? std::string(key) : prefix_ + "." + std::string(key);
  }

 private:
  const nlohmann::json& j_;
  std::string prefix_;
  std::set<std::string, std::less<>> seen_;
};

inline constexpr std::array kAblations{Ablation::none, Ablation::no_dag, Ablation::no_smlbt,
                                       Ablation::no_sharding};
inline constexpr std::array kPlacements{Placement::uniform, Placement::grid};
inline constexpr std::array kPolicies{ByzantinePolicy::vote_no, ByzantinePolicy::silent,
                                      ByzantinePolicy::equivocate, ByzantinePolicy::delay_relay};
inline constexpr std::array kCrossTargets{CrossLinkTarget::root, CrossLinkTarget::random_member};

}  // namespace detail

inline Ablation parse_ablation(const std::string& s) {
  return detail::parse_enum("ablation", s, detail::kAblations);
}

//------------------------------------------------------------------------------
// JSON
//------------------------------------------------------------------------------

inline nlohmann::json to_json(const SimConfig& c) {
  using nlohmann::json;
  json j;
  j["area_km2"] = c.area_km2;
  j["rsu_count"] = c.rsu_count;
  j["vehicle_count"] = c.vehicle_count;
  j["vehicle_speed_kmh"] = c.vehicle_speed_kmh;
  j["request_rate_tps"] = c.request_rate_tps;
  j["shard_count"] = c.shard_count;
  j["byzantine_rate"] = c.byzantine_rate;
  j["offline_rate"] = c.offline_rate;
  j["fanout"] = c.fanout;
  j["max_txs_per_event"] = c.max_txs_per_event;
  j["epoch_seconds"] = c.epoch_seconds;
  j["rng_seed"] = c.rng_seed;
  j["duration_seconds"] = c.duration_seconds;
  j["drain_cap_seconds"] = c.drain_cap_seconds;
  j["event_interval_s"] = c.event_interval_s;
  j["event_timeout_s"] = c.event_timeout_s;
  j["admission_lag_s"] = c.admission_lag_s;
  j["mobility_step_s"] = c.mobility_step_s;
  j["gossip_round_cap"] = c.gossip_round_cap;
  j["max_tree_height"] = c.max_tree_height;
  j["placement"] = std::string(to_string(c.placement));
  j["byzantine_policy"] = std::string(to_string(c.byzantine_policy));
  j["cross_link_target"] = std::string(to_string(c.cross_link_target));
  j["ablation"] = std::string(to_string(c.ablation));
  j["thresholds"] = {{"mu", c.thresholds.mu},
                     {"lambda", c.thresholds.lambda},
                     {"stability_gap", c.thresholds.stability_gap},
                     {"malicious_trust_cutoff", c.thresholds.malicious_trust_cutoff},
                     {"normalized_fitness", c.thresholds.normalized_fitness}};
  j["gsa"] = {{"population_size", c.gsa.population_size},
              {"generations", c.gsa.generations},
              {"mutation_factor", c.gsa.mutation_factor},
              {"crossover_prob", c.gsa.crossover_prob},
              {"warm_start", c.gsa.warm_start},
              {"bench_runs", c.gsa.bench_runs}};
  j["link"] = {{"bandwidth_min_mbps", c.link.bandwidth_min_mbps},
               {"bandwidth_max_mbps", c.link.bandwidth_max_mbps},
               {"propagation_speed_mps", c.link.propagation_speed_mps},
               {"event_header_bits", c.link.event_header_bits},
               {"tx_bits", c.link.tx_bits}};
  j["node"] = {{"initial_trust_min", c.node.initial_trust_min},
               {"initial_trust_max", c.node.initial_trust_max},
               {"compute_log_mu", c.node.compute_log_mu},
               {"compute_log_sigma", c.node.compute_log_sigma},
               {"validation_tps_per_unit", c.node.validation_tps_per_unit},
               {"event_overhead_s", c.node.event_overhead_s},
               {"receive_overhead_s", c.node.receive_overhead_s},
               {"default_role_time_s", c.node.default_role_time_s}};
  j["scoring"] = {{"alpha", c.scoring.alpha},
                  {"beta", c.scoring.beta},
                  {"weights", c.scoring.weights},
                  {"gamma", c.scoring.gamma}};
  return j;
}

inline SimConfig config_from_json(const nlohmann::json& j) {
  SimConfig c;
  detail::ObjectReader r(j, "");
  r.get("area_km2", c.area_km2);
  r.get("rsu_count", c.rsu_count);
  r.get("vehicle_count", c.vehicle_count);
  r.get("vehicle_speed_kmh", c.vehicle_speed_kmh);
  r.get("request_rate_tps", c.request_rate_tps);
  r.get("shard_count", c.shard_count);
  r.get("byzantine_rate", c.byzantine_rate);
  r.get("offline_rate", c.offline_rate);
  r.get("fanout", c.fanout);
  r.get("max_txs_per_event", c.max_txs_per_event);
  r.get("epoch_seconds", c.epoch_seconds);
  r.get("rng_seed", c.rng_seed);
  r.get("duration_seconds", c.duration_seconds);
  r.get("drain_cap_seconds", c.drain_cap_seconds);
  r.get("event_interval_s", c.event_interval_s);
  r.get("event_timeout_s", c.event_timeout_s);
  r.get("admission_lag_s", c.admission_lag_s);
  r.get("mobility_step_s", c.mobility_step_s);
  r.get("gossip_round_cap", c.gossip_round_cap);
  r.get("max_tree_height", c.max_tree_height);
  r.get_enum("placement", c.placement, detail::kPlacements);
  r.get_enum("byzantine_policy", c.byzantine_policy, detail::kPolicies);
  r.get_enum("cross_link_target", c.cross_link_target, detail::kCrossTargets);
  r.get_enum("ablation", c.ablation, detail::kAblations);

  if (auto* t = r.child("thresholds")) {
    detail::ObjectReader s(*t, "thresholds");
    s.get("mu", c.thresholds.mu);
    s.get("lambda", c.thresholds.lambda);
    s.get("stability_gap", c.thresholds.stability_gap);
    s.get("malicious_trust_cutoff", c.thresholds.malicious_trust_cutoff);
    s.get("normalized_fitness", c.thresholds.normalized_fitness);
    s.finish();
  }
  if (auto* g = r.child("gsa")) {
    detail::ObjectReader s(*g, "gsa");
    s.get("population_size", c.gsa.population_size);
    s.get("generations", c.gsa.generations);
    s.get("mutation_factor", c.gsa.mutation_factor);
    s.get("crossover_prob", c.gsa.crossover_prob);
    s.get("warm_start", c.gsa.warm_start);
    s.get("bench_runs", c.gsa.bench_runs);
    s.finish();
  }
  if (auto* l = r.child("link")) {
    detail::ObjectReader s(*l, "link");
    s.get("bandwidth_min_mbps", c.link.bandwidth_min_mbps);
    s.get("bandwidth_max_mbps", c.link.bandwidth_max_mbps);
    s.get("propagation_speed_mps", c.link.propagation_speed_mps);
    s.get("event_header_bits", c.link.event_header_bits);
    s.get("tx_bits", c.link.tx_bits);
    s.finish();
  }
  if (auto* n = r.child("node")) {
    detail::ObjectReader s(*n, "node");
    s.get("initial_trust_min", c.node.initial_trust_min);
    s.get("initial_trust_max", c.node.initial_trust_max);
    s.get("compute_log_mu", c.node.compute_log_mu);
    s.get("compute_log_sigma", c.node.compute_log_sigma);
    s.get("validation_tps_per_unit", c.node.validation_tps_per_unit);
    s.get("event_overhead_s", c.node.event_overhead_s);
    s.get("receive_overhead_s", c.node.receive_overhead_s);
    s.get("default_role_time_s", c.node.default_role_time_s);
    s.finish();
  }
  if (auto* sc = r.child("scoring")) {
    detail::ObjectReader s(*sc, "scoring");
    s.get("alpha", c.scoring.alpha);
    s.get("beta", c.scoring.beta);
    s.get("weights", c.scoring.weights);
    s.get("gamma", c.scoring.gamma);
    s.finish();
  }
  r.finish();
  c.validate();
  return c;
}

inline SimConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("<file>", "cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("<file>", e.what());
  }
  return config_from_json(j);
}

namespace detail {

inline void require(bool ok, const char* field, const char* what) {
  if (!ok) throw ConfigError(field, what);
}

inline void require_rate(double v, const char* field) {
  require(v >= 0.0 && v <= 1.0, field, "must lie in [0, 1]");
}

}  // namespace detail

inline void SimConfig::validate() const {
  using detail::require;
  using detail::require_rate;
  require(area_km2 > 0.0, "area_km2", "must be > 0");
  require(shard_count >= 2, "shard_count", "must be >= 2");
  require(rsu_count >= 3 * shard_count, "rsu_count", "must be >= 3 * shard_count");
  require(vehicle_count >= 0, "vehicle_count", "must be >= 0");
  require(vehicle_speed_kmh >= 0.0, "vehicle_speed_kmh", "must be >= 0");
  require(request_rate_tps >= 0.0, "request_rate_tps", "must be >= 0");
  require_rate(byzantine_rate, "byzantine_rate");
  require_rate(offline_rate, "offline_rate");
  require(fanout >= 1, "fanout", "must be >= 1");
  require(max_txs_per_event >= 1, "max_txs_per_event", "must be >= 1");
  require(epoch_seconds > 0.0, "epoch_seconds", "must be > 0");
  require(duration_seconds > 0.0, "duration_seconds", "must be > 0");
  require(drain_cap_seconds >= 0.0, "drain_cap_seconds", "must be >= 0");
  require(event_interval_s > 0.0, "event_interval_s", "must be > 0");
  require(event_timeout_s > 0.0, "event_timeout_s", "must be > 0");
  require(admission_lag_s > 0.0, "admission_lag_s", "must be > 0");
  require(mobility_step_s > 0.0, "mobility_step_s", "must be > 0");
  require(gossip_round_cap >= 1, "gossip_round_cap", "must be >= 1");
  require(max_tree_height >= 0, "max_tree_height", "must be >= 0");

  require(thresholds.mu >= 0.0, "thresholds.mu", "must be >= 0");
  require(thresholds.lambda >= 0.0, "thresholds.lambda", "must be >= 0");
  require(thresholds.stability_gap >= 0.0, "thresholds.stability_gap", "must be >= 0");
  require(thresholds.malicious_trust_cutoff >= kTrustMin && thresholds.malicious_trust_cutoff <= kTrustMax,
          "thresholds.malicious_trust_cutoff", "must lie in [0, 10]");

  require(gsa.population_size >= 4, "gsa.population_size", "must be >= 4");
  require(gsa.generations >= 1, "gsa.generations", "must be >= 1");
  require(gsa.mutation_factor > 0.0 && gsa.mutation_factor <= 1.0, "gsa.mutation_factor",
          "must lie in (0, 1]");
  require(gsa.crossover_prob > 0.0 && gsa.crossover_prob <= 1.0, "gsa.crossover_prob",
          "must lie in (0, 1]");
  require(gsa.bench_runs >= 1, "gsa.bench_runs", "must be >= 1");

  require(link.bandwidth_min_mbps > 0.0, "link.bandwidth_min_mbps", "must be > 0");
  require(link.bandwidth_max_mbps >= link.bandwidth_min_mbps, "link.bandwidth_max_mbps",
          "range must be nonempty");
  require(link.propagation_speed_mps > 0.0, "link.propagation_speed_mps", "must be > 0");
  require(link.event_header_bits >= 0.0, "link.event_header_bits", "must be >= 0");
  require(link.tx_bits >= 0.0, "link.tx_bits", "must be >= 0");

  require(node.initial_trust_min >= kTrustMin && node.initial_trust_max <= kTrustMax &&
              node.initial_trust_min <= node.initial_trust_max,
          "node.initial_trust_min", "range must be nonempty within [0, 10]");
  require(node.compute_log_sigma >= 0.0, "node.compute_log_sigma", "must be >= 0");
  require(node.validation_tps_per_unit > 0.0, "node.validation_tps_per_unit", "must be > 0");
  require(node.event_overhead_s >= 0.0, "node.event_overhead_s", "must be >= 0");
  require(node.receive_overhead_s >= 0.0, "node.receive_overhead_s", "must be >= 0");
  require(node.default_role_time_s > 0.0, "node.default_role_time_s", "must be > 0");

  scoring.validate();
}

}  // namespace drdst

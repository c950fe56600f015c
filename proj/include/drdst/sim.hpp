#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <memory>
#include <optional>
#include <ostream>
#include <queue>
#include <span>
#include <vector>

#include "drdst/config.hpp"
#include "drdst/core.hpp"
#include "drdst/gossip.hpp"
#include "drdst/hashgraph.hpp"
#include "drdst/metrics.hpp"
#include "drdst/mobility.hpp"
#include "drdst/scoring.hpp"
#include "drdst/sharding.hpp"
#include "drdst/smlbt.hpp"

namespace drdst::sim {

using hashgraph::TxId;
using metrics::TxStatus;

// Extra hold per forwarded hop for the delay_relay adversary.
inline constexpr double kRelayDelayS = 0.5;
// Share of the quorum member's validation rate offered as new payload.
inline constexpr double kAdmissionUtilization = 0.8;

struct RunOptions {
  bool record_tx_log = true;
  bool record_byte_log = true;
  std::ostream* tree_log = nullptr;  // edge rows per epoch
  std::ostream* dag_log = nullptr;   // one row per event
};

struct RunResult {
  metrics::MetricsRecord metrics;
  std::vector<metrics::EpochRecord> epochs;
  std::vector<metrics::TxLogRow> tx_log;
  std::vector<metrics::ByteLogRow> byte_log;
  std::uint64_t handoffs = 0;
  std::uint64_t events_created = 0;
};

// Byzantine flags are drawn once (epoch 0) and stick; offline flags are
// redrawn every epoch.
inline void inject_faults(std::span<RsuNode> nodes, double byzantine_rate, double offline_rate, int epoch,
                          const Rng& root) {
  if (epoch == 0) {
    Rng r = root.substream("byzantine");
    for (auto& n : nodes) n.is_byzantine = r.bernoulli(byzantine_rate);
  }
  Rng r = root.substream("offline", static_cast<std::uint64_t>(epoch));
  for (auto& n : nodes) n.is_offline = r.bernoulli(offline_rate);
}

inline std::vector<Position> place_rsus(int count, const Area& area, Placement placement, Rng& rng) {
  std::vector<Position> out(static_cast<std::size_t>(count));
  if (placement == Placement::grid) {
    const int side = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(count))));
    const double cell = area.side_m / side;
    for (int i = 0; i < count; ++i)
      out[static_cast<std::size_t>(i)] = {cell * (i % side + 0.5), cell * (i / side + 0.5)};
  } else {
    for (auto& p : out) p = mobility::random_point(area, rng);
  }
  return out;
}

// RSUs as they stand at time zero: placed, trusted and provisioned, with
// stability still unscored.
inline std::vector<RsuNode> make_rsus(const SimConfig& cfg, const Rng& root) {
  Rng place_rng = root.substream("placement");
  const auto pos = place_rsus(cfg.rsu_count, Area::from_km2(cfg.area_km2), cfg.placement, place_rng);
  Rng trust_rng = root.substream("trust");
  Rng cap_rng = root.substream("capacity");
  std::vector<RsuNode> nodes;
  nodes.reserve(pos.size());
  for (std::size_t i = 0; i < pos.size(); ++i) {
    StabilityIndicators ind;
    ind.compute_capacity = cap_rng.lognormal(cfg.node.compute_log_mu, cfg.node.compute_log_sigma);
    nodes.emplace_back(static_cast<NodeId>(i), pos[i],
                       trust_rng.uniform(cfg.node.initial_trust_min, cfg.node.initial_trust_max), ind, 0.0);
  }
  return nodes;
}

// T_0 is the population's mean uptime.
inline void score_stability(std::span<RsuNode> nodes, ScoringParams params) {
  if (nodes.empty()) return;
  std::vector<double> caps;
  double t0 = 0.0;
  for (const auto& n : nodes) {
    caps.push_back(n.indicators().compute_capacity);
    t0 += n.indicators().online_time;
  }
  const auto pop = scoring::PopulationComputeStats::from(caps);
  params.t_zero = t0 / static_cast<double>(nodes.size());
  for (auto& n : nodes) n.set_stability(scoring::stability_score(n.indicators(), params, pop));
}

class Simulator {
 public:
  explicit Simulator(SimConfig cfg, RunOptions opt = {}) : cfg_(std::move(cfg)), opt_(opt), root_(cfg_.rng_seed) {
    cfg_.validate();
  }

  RunResult run() {
    setup();
    loop();
    return finish();
  }

 private:
  //----------------------------------------------------------------------------
  // State
  //----------------------------------------------------------------------------

  struct TxState {
    hashgraph::Transaction tx;
    TxStatus status = TxStatus::pending;
    double t_con = 0.0;
    double t_decided = 0.0;
  };

  struct Arrival {
    double time;
    std::uint64_t seq;
    std::uint32_t inst;
    std::uint32_t ev;
    double cost;
  };
  struct ArrivalLater {
    bool operator()(const Arrival& a, const Arrival& b) const {
      return a.time != b.time ? a.time > b.time : a.seq > b.seq;
    }
  };

  struct InService {
    double done;
    double arrival;
    std::uint32_t inst;
    std::uint32_t ev;
  };

  struct NodeState {
    double capacity = 1.0;
    double busy = 0.0;
    std::priority_queue<Arrival, std::vector<Arrival>, ArrivalLater> arrivals;
    std::deque<InService> in_service;
    std::deque<TxId> buffer;
    std::vector<std::uint32_t> instances;
    std::uint64_t gseq = 0;
    // per-epoch counters
    double ok = 0.0;
    double failed = 0.0;
    double sojourn_sum = 0.0;
    std::uint64_t sojourn_n = 0;
    std::uint64_t bytes = 0;
    int role = -1;
    // stability bookkeeping
    int offline_epochs = 0;
    int epochs_seen = 0;
  };

  struct EvInfo {
    NodeId creator = 0;
    double created = 0.0;
    std::uint32_t ntx = 0;  // txs to validate, carried ones included
    std::vector<TxId> own;
    std::vector<TxId> carried;
    bool decided = true;
    bool anchor = false;
    bool fork = false;  // equivocating twin, never extends the chain
    double ready_at = 0.0;
    std::uint64_t gseq = 0;
    double bits = 0.0;
  };

  struct Instance {
    std::uint32_t id = 0;
    int epoch = 0;
    ShardId shard = 0;
    bool current = true;
    bool leader_mode = false;
    std::vector<NodeId> members;
    std::vector<int> local;  // node id -> member index, -1 if absent
    std::optional<smlbt::BroadcastTree> tree;
    std::vector<std::vector<int>> adj;  // tree adjacency by member index
    NodeId anchor = 0;                  // cross-shard endpoint
    std::unique_ptr<hashgraph::DagView> view;
    std::vector<EvInfo> ev;
    std::vector<std::int32_t> processed;  // [j * u + c]
    std::vector<double> last_arrival;     // [j * u + c], keeps per-link FIFO
    std::vector<std::int64_t> last_proc;   // [j * u + c] latest processed event of c
    std::vector<std::int32_t> referenced;  // [j * u + c] processed count when last picked
    std::vector<std::uint32_t> rr;         // round-robin cursor over creators
    std::vector<char> fresh;
    std::vector<char> forked;
    std::vector<std::deque<std::uint32_t>> own_pending;
    double rate = 0.0;  // admitted txs per second, shard-wide
    double tokens = 0.0;
    double token_time = 0.0;
    std::deque<std::uint32_t> pending;
    std::size_t undecided = 0;
    std::deque<std::uint32_t> ready_anchors;
    // leader mode
    std::size_t leader_turn = 0;
    std::deque<TxId> carried_pool;

    std::size_t u() const { return members.size(); }
  };

  struct Forward {
    ShardId shard;
    std::optional<hashgraph::Event> event;
    std::uint64_t gseq = 0;
    std::vector<TxId> txs;
  };

  enum Kind : std::uint8_t { kEpoch = 0, kMobility = 1, kTick = 2, kCross = 3, kLeader = 4 };
  struct Item {
    double t;
    std::uint8_t kind;
    std::uint64_t seq;
    std::uint32_t a;
  };
  struct ItemLater {
    bool operator()(const Item& x, const Item& y) const {
      if (x.t != y.t) return x.t > y.t;
      if (x.kind != y.kind) return x.kind > y.kind;
      return x.seq > y.seq;
    }
  };

  SimConfig cfg_;
  RunOptions opt_;
  Rng root_;
  Area area_;
  std::size_t p_ = 0;
  std::vector<RsuNode> nodes_;
  std::vector<Position> pos_;
  std::vector<NodeState> ns_;
  std::vector<char> online_;
  smlbt::LatencyGraph graph_;
  std::vector<mobility::Vehicle> vehicles_;
  std::optional<mobility::TrafficSource> traffic_;
  Rng mobility_rng_;
  Rng gossip_rng_;
  std::vector<TxState> txs_;
  std::uint64_t undecided_txs_ = 0;

  std::vector<std::unique_ptr<Instance>> inst_;
  std::vector<std::optional<std::uint32_t>> current_;  // per shard
  std::vector<std::vector<double>> route_latency_;     // per shard pair, header-sized
  std::vector<std::vector<int>> route_next_;
  std::vector<Forward> forwards_;

  sharding::ShardAssignment assign_;
  std::optional<sharding::ShardAssignment> prev_assign_;
  std::array<double, 3> role_required_{};

  std::priority_queue<Item, std::vector<Item>, ItemLater> queue_;
  std::uint64_t item_seq_ = 0;
  std::uint64_t arrival_seq_ = 0;
  double now_ = 0.0;
  double end_time_ = 0.0;
  double next_epoch_ = 0.0;
  int epoch_ = -1;
  bool window_done_ = false;

  RunResult out_;
  metrics::EpochRecord* epoch_rec_ = nullptr;

  //----------------------------------------------------------------------------
  // Setup
  //----------------------------------------------------------------------------

  void setup() {
    area_ = Area::from_km2(cfg_.area_km2);
    p_ = static_cast<std::size_t>(cfg_.rsu_count);
    end_time_ = cfg_.duration_seconds + cfg_.drain_cap_seconds;
    nodes_ = make_rsus(cfg_, root_);
    ns_.resize(p_);
    for (std::size_t i = 0; i < p_; ++i) {
      pos_.push_back(nodes_[i].position());
      ns_[i].capacity = nodes_[i].indicators().compute_capacity;
    }
    Rng link_rng = root_.substream("links");
    graph_ = smlbt::LatencyGraph::sample(pos_, cfg_.link, cfg_.link.event_header_bits, link_rng);
    Rng veh_rng = root_.substream("vehicles");
    vehicles_ = mobility::spawn_vehicles(cfg_.vehicle_count, cfg_.vehicle_speed_kmh, area_, veh_rng);
    mobility_rng_ = root_.substream("mobility");
    gossip_rng_ = root_.substream("gossip");
    traffic_.emplace(cfg_.request_rate_tps, static_cast<std::uint32_t>(vehicles_.size()), root_.substream("traffic"));
    online_.assign(p_, 1);
    role_required_.fill(cfg_.node.default_role_time_s);
    current_.assign(static_cast<std::size_t>(cfg_.shard_count), std::nullopt);
    txs_.reserve(static_cast<std::size_t>(cfg_.request_rate_tps * cfg_.duration_seconds * 1.1) + 16);

    if (opt_.dag_log) *opt_.dag_log << "hash,creator,self_parent,other_parent,epoch,shard,committed_at\n";
    if (opt_.tree_log) *opt_.tree_log << "epoch,shard,parent,child,edge_latency_s,is_cross_shard\n";

    push(0.0, kEpoch, 0);
    push(0.0, kMobility, 0);
    for (std::size_t i = 0; i < p_; ++i)
      push(cfg_.event_interval_s * static_cast<double>(i) / static_cast<double>(p_), kTick, static_cast<std::uint32_t>(i));
  }

  void push(double t, std::uint8_t kind, std::uint32_t a) { queue_.push({t, kind, item_seq_++, a}); }

  //----------------------------------------------------------------------------
  // Main loop
  //----------------------------------------------------------------------------

  void loop() {
    while (!queue_.empty()) {
      const Item it = queue_.top();
      if (it.t > end_time_) break;
      queue_.pop();
      now_ = it.t;
      switch (it.kind) {
        case kEpoch: on_epoch(); break;
        case kMobility: on_mobility(); break;
        case kTick: on_tick(it.a); break;
        case kCross: on_cross(it.a); break;
        case kLeader: on_leader(it.a); break;
        default: break;
      }
      if (window_done_ && undecided_txs_ == 0) break;
    }
  }

  //----------------------------------------------------------------------------
  // Epochs
  //----------------------------------------------------------------------------

  void on_epoch() {
    if (epoch_ >= 0) close_epoch();
    ++epoch_;
    out_.epochs.emplace_back();
    epoch_rec_ = &out_.epochs.back();
    epoch_rec_->epoch = epoch_;
    epoch_rec_->start_s = now_;

    inject_faults(nodes_, cfg_.byzantine_rate, cfg_.offline_rate, epoch_, root_);
    std::vector<NodeId> dropped;
    for (std::size_t i = 0; i < p_; ++i) {
      const bool was_online = online_[i] != 0;
      online_[i] = nodes_[i].is_offline ? 0 : 1;
      auto& ind = nodes_[i].indicators();
      ++ns_[i].epochs_seen;
      if (!online_[i]) ++ns_[i].offline_epochs;
      ind.failure_prob = static_cast<double>(ns_[i].offline_epochs) / static_cast<double>(ns_[i].epochs_seen);
      if (!online_[i]) {
        ind.online_time = 0.0;
        if (was_online) dropped.push_back(static_cast<NodeId>(i));
      }
    }
    for (NodeId id : dropped) take_offline(id);
    for (auto& v : vehicles_) v.current_rsu = mobility::nearest_rsu(v.position, pos_, online_);

    rescore();
    reshard();
    build_instances();

    int online = 0, byz = 0;
    double trust = 0.0;
    for (std::size_t i = 0; i < p_; ++i) {
      online += online_[i];
      byz += nodes_[i].is_byzantine;
      trust += nodes_[i].trust();
    }
    epoch_rec_->online = online;
    epoch_rec_->byzantine = byz;
    epoch_rec_->mean_trust = trust / static_cast<double>(p_);

    next_epoch_ = now_ + cfg_.epoch_seconds;
    if (next_epoch_ <= end_time_) push(next_epoch_, kEpoch, 0);
  }

  // Trust from last epoch's outcomes, then the uptime clock.
  void close_epoch() {
    std::array<double, 3> role_sum{}, role_n{};
    for (std::size_t i = 0; i < p_; ++i) {
      auto& n = ns_[i];
      scoring::EpochNodeStats st;
      st.ok_txs = n.ok;
      st.failed_txs = n.failed;
      st.role_required = role_required_;
      if (n.role >= 0 && n.sojourn_n > 0) {
        const double mean = n.sojourn_sum / static_cast<double>(n.sojourn_n);
        st.role_times[static_cast<std::size_t>(n.role)] = mean;
        role_sum[static_cast<std::size_t>(n.role)] += mean;
        role_n[static_cast<std::size_t>(n.role)] += 1.0;
      }
      nodes_[i].set_trust(scoring::apply_trust(nodes_[i].trust(), scoring::trust_delta(st, cfg_.scoring)));
      if (online_[i]) nodes_[i].indicators().online_time += cfg_.epoch_seconds;
      flush_bytes(i);
      n.ok = n.failed = n.sojourn_sum = 0.0;
      n.sojourn_n = 0;
      n.role = -1;
    }
    for (std::size_t r = 0; r < 3; ++r)
      if (role_n[r] > 0.0 && role_sum[r] > 0.0) role_required_[r] = role_sum[r] / role_n[r];
  }

  void flush_bytes(std::size_t i) {
    out_.byte_log.push_back({epoch_, static_cast<NodeId>(i), ns_[i].bytes});
    ns_[i].bytes = 0;
  }

  // Queued client txs are resubmitted to the nearest online RSU; work in
  // progress is lost.
  void take_offline(NodeId id) {
    auto& n = ns_[id];
    const NodeId to = mobility::nearest_rsu(pos_[id], pos_, online_);
    if (to == mobility::kNoRsu) {
      for (TxId t : n.buffer) fail_tx(t, now_);
    } else {
      auto& b = ns_[to].buffer;
      std::deque<TxId> merged;
      std::ranges::merge(b, n.buffer, std::back_inserter(merged), {},
                         [&](TxId t) { return txs_[t].tx.submit_time; }, [&](TxId t) { return txs_[t].tx.submit_time; });
      b = std::move(merged);
    }
    n.buffer.clear();
    n.arrivals = {};
    n.in_service.clear();
    n.busy = now_;
  }

  void rescore() { score_stability(nodes_, cfg_.scoring); }

  void reshard() {
    const auto q = static_cast<std::uint32_t>(cfg_.shard_count);
    std::vector<double> stab(p_);
    double s_max = 0.0;
    for (std::size_t i = 0; i < p_; ++i) {
      stab[i] = nodes_[i].stability();
      s_max = std::max(s_max, stab[i]);
    }
    if (cfg_.ablation == Ablation::no_sharding) {
      Rng r = root_.substream("random_shard", static_cast<std::uint64_t>(epoch_));
      assign_ = sharding::random_assignment(p_, q, stab, r);
    } else {
      Rng r = root_.substream("gsa", static_cast<std::uint64_t>(epoch_));
      const auto params = sharding::GsaParams::from(cfg_.gsa, s_max > 0.0 ? s_max : 1.0);
      std::optional<sharding::ShardAssignment> warm;
      if (cfg_.gsa.warm_start) warm = prev_assign_;
      assign_ = sharding::gsa_run(nodes_, q, params, cfg_.thresholds, r, warm).best;
    }
    prev_assign_ = assign_;
    const auto m = sharding::shard_metrics(assign_, nodes_, cfg_.thresholds.malicious_trust_cutoff);
    epoch_rec_->fitness = sharding::fitness(m, cfg_.thresholds, p_);
    epoch_rec_->trust_gap = m.trust_gap;
    epoch_rec_->count_gap = m.count_gap;
    epoch_rec_->stability_gap = m.stability_gap;
    epoch_rec_->max_malicious_ratio = m.max_malicious_ratio;
  }

  hashgraph::VoteBehavior behavior_of(NodeId id) const {
    if (!nodes_[id].is_byzantine) return hashgraph::VoteBehavior::honest;
    switch (cfg_.byzantine_policy) {
      case ByzantinePolicy::vote_no:
      case ByzantinePolicy::silent: return hashgraph::VoteBehavior::no_all;
      case ByzantinePolicy::equivocate: return hashgraph::VoteBehavior::yes_all;
      case ByzantinePolicy::delay_relay: return hashgraph::VoteBehavior::honest;
    }
    return hashgraph::VoteBehavior::honest;
  }

  bool is(NodeId id, ByzantinePolicy p) const { return nodes_[id].is_byzantine && cfg_.byzantine_policy == p; }

  bool drops_client_txs(NodeId id) const {
    return nodes_[id].is_byzantine &&
           (cfg_.byzantine_policy == ByzantinePolicy::vote_no || cfg_.byzantine_policy == ByzantinePolicy::silent);
  }

  // Capacity of the slowest member of the fastest quorum, after setting
  // aside the members expected to be faulty: commits cannot outpace it.
  double quorum_capacity(const std::vector<NodeId>& members) const {
    std::vector<double> c;
    for (NodeId id : members) c.push_back(ns_[id].capacity);
    std::ranges::sort(c, std::greater<>());
    const double faulty = std::ceil(static_cast<double>(c.size()) * (cfg_.byzantine_rate + cfg_.offline_rate));
    const std::size_t k = (2 * c.size()) / 3 + 1 + static_cast<std::size_t>(faulty);
    return c[std::min(k, c.size()) - 1];
  }

  void build_instances() {
    for (auto& in : inst_)
      if (in) in->current = false;
    const auto q = static_cast<std::size_t>(cfg_.shard_count);
    auto members = assign_.members();
    std::vector<double> stab(p_);
    for (std::size_t i = 0; i < p_; ++i) stab[i] = nodes_[i].stability();

    std::vector<smlbt::BroadcastTree> trees;
    std::vector<std::size_t> tree_shard;
    current_.assign(q, std::nullopt);
    for (std::size_t s = 0; s < q; ++s) {
      std::vector<NodeId> live;
      for (NodeId id : members[s])
        if (online_[id]) live.push_back(id);
      if (live.empty()) continue;
      auto in = std::make_unique<Instance>();
      in->id = static_cast<std::uint32_t>(inst_.size());
      in->epoch = epoch_;
      in->shard = static_cast<ShardId>(s);
      in->leader_mode = cfg_.ablation == Ablation::no_dag;
      in->local.assign(p_, -1);
      if (cfg_.ablation != Ablation::no_smlbt) {
        in->tree = smlbt::build_tree(live, graph_, cfg_.fanout, stab, cfg_.max_tree_height);
        in->members = in->tree->members;  // BFS order, root first
        in->anchor = in->tree->root;
        trees.push_back(*in->tree);
        tree_shard.push_back(s);
      } else {
        in->members = live;
        in->anchor = *std::ranges::max_element(live, [&](NodeId a, NodeId b) {
          return stab[a] != stab[b] ? stab[a] < stab[b] : a > b;
        });
      }
      const std::size_t u = in->members.size();
      for (std::size_t k = 0; k < u; ++k) in->local[in->members[k]] = static_cast<int>(k);
      in->rate = kAdmissionUtilization * quorum_capacity(in->members) * cfg_.node.validation_tps_per_unit;
      in->token_time = now_;
      if (in->tree) {
        in->adj.assign(u, {});
        for (std::size_t k = 1; k < u; ++k) {
          const int par = in->tree->parent[k];
          in->adj[k].push_back(par);
          in->adj[static_cast<std::size_t>(par)].push_back(static_cast<int>(k));
        }
        for (std::size_t k = 0; k < u; ++k)
          ns_[in->members[k]].role = k == 0 ? 0 : (in->tree->children[k].empty() ? 2 : 1);
        epoch_rec_->max_tree_height = std::max(epoch_rec_->max_tree_height, in->tree->height());
        epoch_rec_->max_tree_latency_s = std::max(epoch_rec_->max_tree_latency_s, in->tree->max_depth());
      } else {
        for (NodeId id : in->members) ns_[id].role = id == in->anchor ? 0 : 2;
      }
      if (!in->leader_mode) {
        in->view = std::make_unique<hashgraph::DagView>(in->members, epoch_);
        for (NodeId id : in->members) in->view->set_behavior(id, behavior_of(id));
        Instance* raw = in.get();
        in->view->set_vote_limit([raw](NodeId voter, NodeId creator) {
          const auto u = raw->u();
          return raw->processed[static_cast<std::size_t>(raw->local[voter]) * u +
                                static_cast<std::size_t>(raw->local[creator])] - 1;
        });
        in->processed.assign(u * u, 0);
        in->last_arrival.assign(u * u, 0.0);
        in->last_proc.assign(u * u, -1);
        in->referenced.assign(u * u, 0);
        in->rr.assign(u, 0);
        in->fresh.assign(u, 0);
        in->forked.assign(u, 0);
        in->own_pending.assign(u, {});
      }
      for (NodeId id : in->members) ns_[id].instances.push_back(in->id);
      current_[s] = in->id;
      if (in->leader_mode) push(now_, kLeader, in->id);
      inst_.push_back(std::move(in));
    }

    if (!trees.empty()) {
      Rng r = root_.substream("cross_links", static_cast<std::uint64_t>(epoch_));
      smlbt::cross_shard_links(trees, graph_, cfg_.fanout, cfg_.cross_link_target, &r);
      for (std::size_t k = 0; k < trees.size(); ++k) {
        auto& in = *inst_[*current_[tree_shard[k]]];
        in.tree->cross_links = trees[k].cross_links;
        if (opt_.tree_log) smlbt::write_tree_csv_rows(*opt_.tree_log, epoch_, tree_shard[k], *in.tree, graph_);
      }
    }
    build_routes(trees, tree_shard);
  }

  // Shortest paths between shard endpoints over the cross-link overlay; a
  // full mesh when there are no trees.
  void build_routes(const std::vector<smlbt::BroadcastTree>& trees, const std::vector<std::size_t>& tree_shard) {
    const auto q = static_cast<std::size_t>(cfg_.shard_count);
    const double inf = std::numeric_limits<double>::infinity();
    route_latency_.assign(q, std::vector<double>(q, inf));
    route_next_.assign(q, std::vector<int>(q, -1));
    auto endpoint = [&](std::size_t s) { return inst_[*current_[s]]->anchor; };
    for (std::size_t s = 0; s < q; ++s) {
      if (!current_[s]) continue;
      route_latency_[s][s] = 0.0;
      route_next_[s][s] = static_cast<int>(s);
    }
    auto link = [&](std::size_t a, std::size_t b) {
      const double l = graph_(endpoint(a), endpoint(b));
      if (l < route_latency_[a][b]) {
        route_latency_[a][b] = route_latency_[b][a] = l;
        route_next_[a][b] = static_cast<int>(b);
        route_next_[b][a] = static_cast<int>(a);
      }
    };
    if (trees.empty()) {
      for (std::size_t a = 0; a < q; ++a)
        for (std::size_t b = a + 1; b < q; ++b)
          if (current_[a] && current_[b]) link(a, b);
    } else {
      std::vector<int> shard_of(p_, -1);
      for (std::size_t k = 0; k < trees.size(); ++k)
        for (NodeId id : trees[k].members) shard_of[id] = static_cast<int>(tree_shard[k]);
      for (std::size_t k = 0; k < trees.size(); ++k)
        for (auto [a, b] : trees[k].cross_links)
          if (shard_of[b] >= 0) link(tree_shard[k], static_cast<std::size_t>(shard_of[b]));
    }
    for (std::size_t k = 0; k < q; ++k)
      for (std::size_t i = 0; i < q; ++i)
        for (std::size_t j = 0; j < q; ++j)
          if (route_latency_[i][k] + route_latency_[k][j] < route_latency_[i][j]) {
            route_latency_[i][j] = route_latency_[i][k] + route_latency_[k][j];
            route_next_[i][j] = route_next_[i][k];
          }
  }

  //----------------------------------------------------------------------------
  // Vehicles and client transactions
  //----------------------------------------------------------------------------

  void on_mobility() {
    const double step_end = std::min(now_ + cfg_.mobility_step_s, std::max(next_epoch_, now_));
    const double dt = step_end - now_;
    if (!window_done_ && dt > 0.0) {
      out_.handoffs += mobility::move_vehicles(vehicles_, dt, area_, pos_, online_, mobility_rng_).size();
      const double gen_end = std::min(step_end, cfg_.duration_seconds);
      if (gen_end > now_)
        for (const auto& a : traffic_->generate(now_, gen_end - now_)) submit(a.time, a.vehicle);
      if (step_end >= cfg_.duration_seconds) window_done_ = true;
    }
    sweep_timeouts();
    const double next = dt > 0.0 ? step_end : now_ + cfg_.mobility_step_s;
    if (next <= end_time_) push(next, kMobility, 0);
  }

  void submit(double t, std::uint32_t vehicle) {
    auto& v = vehicles_[vehicle];
    const NodeId rsu = v.current_rsu;
    TxState st;
    st.tx.id = txs_.size();
    st.tx.vehicle = vehicle;
    st.tx.submit_time = t;
    ++undecided_txs_;
    if (rsu == mobility::kNoRsu) {
      txs_.push_back(st);
      fail_tx(st.tx.id, t);
      return;
    }
    const ShardId shard = assign_.genes[rsu];
    st.tx.origin_rsu = rsu;
    st.tx.origin_shard = shard;
    st.tx.peer_shard = shard;
    if (v.has_anchor && assign_.genes[v.anchor_rsu] != shard) {
      st.tx.kind = hashgraph::TxKind::cross_shard;
      st.tx.peer_shard = assign_.genes[v.anchor_rsu];
    }
    v.anchor_rsu = rsu;
    v.last_tx_shard = shard;
    v.has_anchor = true;
    txs_.push_back(st);
    if (drops_client_txs(rsu)) {
      fail_tx(st.tx.id, t);
      ns_[rsu].failed += 1.0;
      return;
    }
    ns_[rsu].buffer.push_back(st.tx.id);
  }

  void commit_tx(TxId id, double t) {
    auto& s = txs_[id];
    if (s.status != TxStatus::pending) return;
    s.status = TxStatus::committed;
    s.t_con = t;
    s.t_decided = t;
    --undecided_txs_;
    ++epoch_rec_->committed;
    if (s.tx.kind == hashgraph::TxKind::cross_shard) ++epoch_rec_->cross_shard_committed;
  }

  void fail_tx(TxId id, double t) {
    auto& s = txs_[id];
    if (s.status != TxStatus::pending) return;
    s.status = TxStatus::failed;
    s.t_decided = t;
    --undecided_txs_;
    ++epoch_rec_->failed;
  }

  //----------------------------------------------------------------------------
  // Node CPU: arrivals are validated FIFO on one server per node
  //----------------------------------------------------------------------------

  double validation_cost(NodeId k, std::uint32_t ntx, std::uint32_t copies) const {
    return cfg_.node.event_overhead_s + cfg_.node.receive_overhead_s * copies +
           static_cast<double>(ntx) / (ns_[k].capacity * cfg_.node.validation_tps_per_unit);
  }

  void advance(NodeId j) {
    auto& n = ns_[j];
    while (!n.arrivals.empty() && n.arrivals.top().time <= now_) {
      const Arrival a = n.arrivals.top();
      n.arrivals.pop();
      n.busy = std::max(n.busy, a.time) + a.cost;
      n.in_service.push_back({n.busy, a.time, a.inst, a.ev});
    }
    while (!n.in_service.empty() && n.in_service.front().done <= now_) {
      const InService s = n.in_service.front();
      n.in_service.pop_front();
      complete(j, s);
    }
  }

  void complete(NodeId j, const InService& s) {
    auto& n = ns_[j];
    n.sojourn_sum += s.done - s.arrival;
    ++n.sojourn_n;
    Instance* in = instance(s.inst);
    if (!in || in->local[j] < 0) return;
    const auto& info = in->ev[s.ev];
    const auto lj = static_cast<std::size_t>(in->local[j]);
    const int lc = in->local[info.creator];
    if (lc < 0 || info.fork || info.anchor) return;
    ++in->processed[lj * in->u() + static_cast<std::size_t>(lc)];
    in->last_proc[lj * in->u() + static_cast<std::size_t>(lc)] = s.ev;
    in->fresh[lj] = 1;
  }

  Instance* instance(std::uint32_t id) { return id < inst_.size() ? inst_[id].get() : nullptr; }

  //----------------------------------------------------------------------------
  // Event creation (DAG mode)
  //----------------------------------------------------------------------------

  void on_tick(NodeId j) {
    const double next = now_ + cfg_.event_interval_s;
    if (next <= end_time_) push(next, kTick, j);
    if (!online_[j]) return;
    advance(j);
    auto& list = ns_[j].instances;
    std::erase_if(list, [&](std::uint32_t id) { return instance(id) == nullptr; });
    const auto ids = list;
    for (std::uint32_t id : ids)
      if (Instance* in = instance(id); in && !in->leader_mode) member_tick(*in, j);
  }

  // Closed while the creator's oldest undecided payload is older than the
  // admission lag.
  bool gate_open(Instance& in, std::size_t lj) {
    auto& q = in.own_pending[lj];
    while (!q.empty() && in.ev[q.front()].decided) q.pop_front();
    return q.empty() || in.ev[q.front()].created + cfg_.admission_lag_s > now_;
  }

  std::size_t take_tokens(Instance& in) {
    const double burst = std::max(1.0, in.rate * cfg_.admission_lag_s);
    in.tokens = std::min(burst, in.tokens + (now_ - in.token_time) * in.rate);
    in.token_time = now_;
    return static_cast<std::size_t>(in.tokens);
  }

  // Next creator, round-robin, with processed events not yet referenced.
  std::optional<std::size_t> pick_other(Instance& in, std::size_t lj) {
    const std::size_t u = in.u();
    for (std::size_t step = 1; step <= u; ++step) {
      const std::size_t c = (in.rr[lj] + step) % u;
      const std::size_t at = lj * u + c;
      if (c == lj || in.processed[at] <= in.referenced[at] || in.last_proc[at] < 0) continue;
      in.rr[lj] = static_cast<std::uint32_t>(c);
      in.referenced[at] = in.processed[at];
      return static_cast<std::size_t>(in.last_proc[at]);
    }
    return std::nullopt;
  }

  void member_tick(Instance& in, NodeId j) {
    if (is(j, ByzantinePolicy::silent)) return;
    const int lji = in.local[j];
    if (lji < 0) return;
    const auto lj = static_cast<std::size_t>(lji);
    auto& node = ns_[j];

    std::vector<hashgraph::Transaction> payload;
    std::vector<TxId> payload_ids;
    if (in.current && gate_open(in, lj)) {
      const auto cap = std::min(static_cast<std::size_t>(cfg_.max_txs_per_event), take_tokens(in));
      while (!node.buffer.empty() && payload.size() < cap && txs_[node.buffer.front()].tx.submit_time <= now_) {
        const TxId id = node.buffer.front();
        node.buffer.pop_front();
        if (txs_[id].status != TxStatus::pending) continue;
        payload.push_back(txs_[id].tx);
        payload_ids.push_back(id);
      }
      in.tokens -= static_cast<double>(payload.size());
    }
    std::optional<std::uint32_t> anchor;
    while (j == in.anchor && !anchor && !in.ready_anchors.empty() && in.ev[in.ready_anchors.front()].ready_at <= now_) {
      if (!in.ev[in.ready_anchors.front()].decided) anchor = in.ready_anchors.front();
      in.ready_anchors.pop_front();
    }
    const bool heartbeat = in.undecided > 0 && in.fresh[lj];
    if (payload.empty() && !anchor && !heartbeat) return;

    std::optional<hashgraph::Hash> other;
    if (anchor) other = in.view->event_at(*anchor).hash;
    else if (auto op = pick_other(in, lj)) other = in.view->event_at(*op).hash;

    auto created = hashgraph::create_event(*in.view, j, other, std::move(payload), now_,
                                           static_cast<std::size_t>(cfg_.max_txs_per_event));
    std::vector<std::uint32_t> fresh_idx;
    for (auto& e : created) {
      const auto idx = static_cast<std::uint32_t>(in.view->index(e.hash));
      register_event(in, idx, j, e);
      fresh_idx.push_back(idx);
    }
    // the first event carries the client txs and the anchor
    auto& first = in.ev[fresh_idx.front()];
    first.own = std::move(payload_ids);
    if (anchor) {
      auto& a = in.ev[*anchor];
      first.carried = a.carried;
      a.decided = true;
      --in.undecided;
    }
    first.ntx = static_cast<std::uint32_t>(first.own.size() + first.carried.size());
    first.bits = event_bits(first.ntx);
    if (!first.own.empty() || !first.carried.empty()) {
      first.decided = false;
      ++in.undecided;
      in.pending.push_back(fresh_idx.front());
      in.own_pending[lj].push_back(fresh_idx.front());
    }

    if (is(j, ByzantinePolicy::equivocate) && !in.forked[lj]) {
      in.forked[lj] = 1;
      auto twin = hashgraph::make_event(j, created.front().self_parent, created.front().other_parent,
                                        now_ + 1e-6, {});
      in.view->insert_event(twin);
      const auto idx = static_cast<std::uint32_t>(in.view->index(twin.hash));
      register_event(in, idx, j, twin);
      in.ev[idx].fork = true;
      fresh_idx.push_back(idx);
    }

    for (std::uint32_t idx : fresh_idx) {
      const auto& info = in.ev[idx];
      node.busy = std::max(node.busy, now_) + validation_cost(j, info.ntx, 0);
      if (!info.fork) ++in.processed[lj * in.u() + lj];
      disseminate(in, idx, j);
    }
    in.fresh[lj] = 0;
    handle_commits(in, in.view->commit_pass(now_));
  }

  double event_bits(std::uint32_t ntx) const {
    return cfg_.link.event_header_bits + cfg_.link.tx_bits * static_cast<double>(ntx);
  }

  void register_event(Instance& in, std::uint32_t idx, NodeId creator, const hashgraph::Event& e) {
    if (idx != in.ev.size()) throw std::logic_error("event index out of step");
    EvInfo info;
    info.creator = creator;
    info.created = now_;
    info.gseq = ns_[creator].gseq++;
    info.ntx = static_cast<std::uint32_t>(e.txs.size());
    info.bits = event_bits(info.ntx);
    in.ev.push_back(std::move(info));
    ++out_.events_created;
  }

  void add_bytes(NodeId from, double bits) { ns_[from].bytes += static_cast<std::uint64_t>(std::ceil(bits / 8.0)); }

  void disseminate(Instance& in, std::uint32_t idx, NodeId from) {
    const auto u = in.u();
    if (u <= 1) return;
    const auto& info = in.ev[idx];
    const double bits = info.bits;
    const auto src = static_cast<std::size_t>(in.local[from]);
    std::vector<double> at(u, -1.0);
    std::vector<std::uint32_t> copies(u, 1);
    if (in.tree) {
      at[src] = 0.0;
      std::vector<std::size_t> bfs{src};
      for (std::size_t h = 0; h < bfs.size(); ++h) {
        const std::size_t a = bfs[h];
        const NodeId na = in.members[a];
        const double hold = (a != src && is(na, ByzantinePolicy::delay_relay)) ? kRelayDelayS : 0.0;
        for (int b : in.adj[a]) {
          const auto bb = static_cast<std::size_t>(b);
          if (at[bb] >= 0.0) continue;
          at[bb] = at[a] + hold + graph_.latency(na, in.members[bb], bits);
          add_bytes(na, bits);
          bfs.push_back(bb);
        }
      }
    } else {
      auto hop = [&](std::size_t a, std::size_t b) {
        const double hold = (a != src && is(in.members[a], ByzantinePolicy::delay_relay)) ? kRelayDelayS : 0.0;
        return hold + graph_.latency(in.members[a], in.members[b], bits);
      };
      const auto sch = gossip::disseminate(u, src, cfg_.fanout, cfg_.gossip_round_cap, hop, gossip_rng_);
      at = sch.arrival;
      for (std::size_t k = 0; k < u; ++k) {
        copies[k] = std::max<std::uint32_t>(sch.received[k], 1);
        for (std::uint32_t s = 0; s < sch.sends[k]; ++s) add_bytes(in.members[k], bits);
      }
    }
    for (std::size_t k = 0; k < u; ++k) {
      if (k == src || at[k] < 0.0) continue;
      const NodeId nk = in.members[k];
      double& last = in.last_arrival[k * u + src];
      const double t = std::max(now_ + at[k], last);
      last = t;
      ns_[nk].arrivals.push({t, arrival_seq_++, in.id, idx, validation_cost(nk, info.ntx, copies[k])});
    }
  }

  void handle_commits(Instance& in, const std::vector<hashgraph::Hash>& hashes) {
    for (const auto& h : hashes) {
      const auto idx = static_cast<std::uint32_t>(in.view->index(h));
      auto& info = in.ev[idx];
      if (info.decided) continue;
      if (now_ > info.created + cfg_.event_timeout_s) {
        fail_event(in, idx, info.created + cfg_.event_timeout_s);
        continue;
      }
      info.decided = true;
      --in.undecided;
      ns_[info.creator].ok += static_cast<double>(info.own.size() + info.carried.size());
      std::vector<TxId> cross;
      for (TxId t : info.own) {
        if (txs_[t].tx.kind == hashgraph::TxKind::cross_shard && txs_[t].tx.peer_shard != in.shard)
          cross.push_back(t);
        else
          commit_tx(t, now_);
      }
      for (TxId t : info.carried) commit_tx(t, now_);
      if (!cross.empty()) forward(in, in.view->event_at(idx), info.gseq, cross);
    }
  }

  void fail_event(Instance& in, std::uint32_t idx, double t) {
    auto& info = in.ev[idx];
    if (info.decided) return;
    info.decided = true;
    --in.undecided;
    for (TxId x : info.own) fail_tx(x, t);
    for (TxId x : info.carried) fail_tx(x, t);
    ns_[info.creator].failed += static_cast<double>(info.own.size() + info.carried.size());
  }

  void sweep_timeouts() {
    for (auto& p : inst_) {
      if (!p) continue;
      auto& in = *p;
      while (!in.pending.empty()) {
        auto& info = in.ev[in.pending.front()];
        if (info.decided) {
          in.pending.pop_front();
        } else if (info.created + cfg_.event_timeout_s <= now_) {
          fail_event(in, in.pending.front(), info.created + cfg_.event_timeout_s);
          in.pending.pop_front();
        } else {
          break;
        }
      }
      if (!in.current && in.undecided == 0 && in.carried_pool.empty()) retire(p);
    }
  }

  void retire(std::unique_ptr<Instance>& p) {
    if (opt_.dag_log && p->view) dump_dag(*p);
    p.reset();
  }

  void dump_dag(const Instance& in) {
    auto& os = *opt_.dag_log;
    for (std::size_t i = 0; i < in.view->size(); ++i) {
      const auto& e = in.view->event_at(i);
      os << e.hash.hex() << ',' << e.creator << ',' << (e.self_parent ? e.self_parent->hex() : "") << ','
         << (e.other_parent ? e.other_parent->hex() : "") << ',' << in.epoch << ',' << in.shard << ',';
      if (in.view->is_committed(e.hash)) os << metrics::fmt(in.view->commit_time(e.hash));
      os << '\n';
    }
  }

  //----------------------------------------------------------------------------
  // Cross-shard forwarding
  //----------------------------------------------------------------------------

  // Ships the event header plus the relevant txs from this shard's endpoint
  // to each peer shard's endpoint along the overlay.
  void forward(Instance& in, const std::optional<hashgraph::Event>& ev, std::uint64_t gseq,
               const std::vector<TxId>& cross) {
    std::vector<std::vector<TxId>> by_peer(static_cast<std::size_t>(cfg_.shard_count));
    for (TxId t : cross) by_peer[txs_[t].tx.peer_shard].push_back(t);
    for (std::size_t s = 0; s < by_peer.size(); ++s) {
      if (by_peer[s].empty()) continue;
      const double bits = event_bits(static_cast<std::uint32_t>(by_peer[s].size()));
      double delay = 0.0;
      if (current_[in.shard] && current_[s] && route_next_[in.shard][s] >= 0) {
        std::size_t at = in.shard;
        NodeId from = in.anchor;
        while (at != s) {
          const auto nx = static_cast<std::size_t>(route_next_[at][s]);
          const NodeId to = inst_[*current_[nx]]->anchor;
          delay += graph_.latency(from, to, bits);
          add_bytes(from, bits);
          from = to;
          at = nx;
        }
      } else if (current_[s]) {
        const NodeId to = inst_[*current_[s]]->anchor;
        delay = graph_.latency(in.anchor, to, bits);
        add_bytes(in.anchor, bits);
      } else {
        for (TxId t : by_peer[s]) fail_tx(t, now_);
        continue;
      }
      forwards_.push_back({static_cast<ShardId>(s), ev, gseq, std::move(by_peer[s])});
      push(now_ + delay, kCross, static_cast<std::uint32_t>(forwards_.size() - 1));
    }
  }

  void on_cross(std::uint32_t fi) {
    auto& f = forwards_[fi];
    if (!current_[f.shard]) {
      for (TxId t : f.txs) fail_tx(t, now_);
      return;
    }
    Instance& in = *inst_[*current_[f.shard]];
    if (in.leader_mode) {
      for (TxId t : f.txs) in.carried_pool.push_back(t);
      f.txs.clear();
      return;
    }
    const auto r = in.view->import_foreign(*f.event, static_cast<std::int32_t>(f.gseq));
    const auto idx = static_cast<std::uint32_t>(in.view->index(f.event->hash));
    if (r != hashgraph::InsertResult::duplicate) {
      if (idx != in.ev.size()) throw std::logic_error("anchor index out of step");
      EvInfo info;
      info.creator = f.event->creator;
      info.created = now_;
      info.anchor = true;
      in.ev.push_back(std::move(info));
    }
    auto& info = in.ev[idx];
    info.carried.insert(info.carried.end(), f.txs.begin(), f.txs.end());
    info.ntx = static_cast<std::uint32_t>(info.carried.size());
    f.txs.clear();
    f.event.reset();
    // a still-pending anchor picks the new txs up when it is included
    if (!info.decided) return;
    info.decided = false;
    ++in.undecided;
    info.created = now_;
    in.pending.push_back(idx);
    // cross-shard traffic is validated ahead of the anchor's event queue
    const NodeId a = in.anchor;
    auto& n = ns_[a];
    const double cost = validation_cost(a, info.ntx, 1);
    n.busy = std::max(n.busy, now_) + cost;
    info.ready_at = now_ + cost;
    in.ready_anchors.push_back(idx);
  }

  //----------------------------------------------------------------------------
  // Leader mode (no DAG): one proposal in flight per shard
  //----------------------------------------------------------------------------

  // Carried txs first, then the earliest submissions across member buffers.
  // Each buffer is in submit order, so this is a k-way merge of prefixes.
  std::vector<TxId> take_pool(Instance& in, std::size_t cap) {
    std::vector<TxId> out;
    while (!in.carried_pool.empty() && out.size() < cap) {
      out.push_back(in.carried_pool.front());
      in.carried_pool.pop_front();
    }
    if (!in.current) return out;
    while (out.size() < cap) {
      std::deque<TxId>* best = nullptr;
      double best_t = now_;
      for (NodeId id : in.members) {
        auto& b = ns_[id].buffer;
        while (!b.empty() && txs_[b.front()].status != TxStatus::pending) b.pop_front();
        if (!b.empty() && txs_[b.front()].tx.submit_time <= best_t) {
          best_t = txs_[b.front()].tx.submit_time;
          best = &b;
        }
      }
      if (!best) break;
      out.push_back(best->front());
      best->pop_front();
    }
    return out;
  }

  void on_leader(std::uint32_t id) {
    Instance* inp = instance(id);
    if (!inp) return;
    Instance& in = *inp;
    if (!in.current && in.carried_pool.empty()) {
      inp = nullptr;
      retire(inst_[id]);
      return;
    }
    const std::size_t u = in.u();
    std::size_t li = in.leader_turn % u;
    for (std::size_t tries = 0; tries < u && is(in.members[li], ByzantinePolicy::silent); ++tries)
      li = (li + 1) % u;
    in.leader_turn = li + 1;
    const NodeId leader = in.members[li];

    const auto batch_cap = std::clamp<std::size_t>(
        static_cast<std::size_t>(in.rate * cfg_.admission_lag_s), 1,
        static_cast<std::size_t>(cfg_.max_txs_per_event));
    const std::size_t n_carried = std::min(in.carried_pool.size(), batch_cap);
    auto batch = take_pool(in, batch_cap);
    if (batch.empty()) {
      push(now_ + cfg_.event_interval_s, kLeader, id);
      return;
    }
    const auto ntx = static_cast<std::uint32_t>(batch.size());
    const double bits = event_bits(ntx);
    const double header = cfg_.link.event_header_bits;

    auto& L = ns_[leader];
    const double proposed = std::max(now_, L.busy) + validation_cost(leader, ntx, 0);
    L.busy = proposed;

    // proposal down/up the tree from the leader, votes back along the same path
    std::vector<double> at(u, -1.0), back(u, 0.0);
    std::vector<int> pred(u, -1);
    at[li] = 0.0;
    std::vector<std::size_t> bfs{li};
    for (std::size_t h = 0; h < bfs.size(); ++h) {
      const std::size_t a = bfs[h];
      const NodeId na = in.members[a];
      const double hold = (a != li && is(na, ByzantinePolicy::delay_relay)) ? kRelayDelayS : 0.0;
      std::vector<int> next;
      if (in.tree) next = in.adj[a];
      else if (a == li)
        for (std::size_t k = 0; k < u; ++k) next.push_back(static_cast<int>(k));
      for (int b : next) {
        const auto bb = static_cast<std::size_t>(b);
        if (at[bb] >= 0.0) continue;
        at[bb] = at[a] + hold + graph_.latency(na, in.members[bb], bits);
        back[bb] = back[a] + graph_.latency(in.members[bb], na, header);
        pred[bb] = static_cast<int>(a);
        add_bytes(na, bits);
        bfs.push_back(bb);
      }
    }
    std::vector<double> yes;
    if (behavior_of(leader) != hashgraph::VoteBehavior::no_all) yes.push_back(proposed);
    for (std::size_t k = 0; k < u; ++k) {
      if (k == li || at[k] < 0.0) continue;
      const NodeId nk = in.members[k];
      auto& n = ns_[nk];
      const double arrive = proposed + at[k];
      const double done = std::max(arrive, n.busy) + validation_cost(nk, ntx, 1);
      n.busy = done;
      n.sojourn_sum += done - arrive;
      ++n.sojourn_n;
      for (int w = static_cast<int>(k); pred[static_cast<std::size_t>(w)] >= 0; w = pred[static_cast<std::size_t>(w)])
        add_bytes(in.members[static_cast<std::size_t>(w)], header);
      if (behavior_of(nk) != hashgraph::VoteBehavior::no_all) yes.push_back(done + back[k]);
    }
    const std::size_t need = (2 * u) / 3 + 1;
    std::ranges::sort(yes);
    const double deadline = now_ + cfg_.event_timeout_s;
    double resolved;
    if (yes.size() >= need && yes[need - 1] <= deadline) {
      resolved = yes[need - 1];
      L.ok += static_cast<double>(ntx);
      std::vector<TxId> cross;
      for (std::size_t i = 0; i < batch.size(); ++i) {
        const TxId t = batch[i];
        if (i >= n_carried && txs_[t].tx.kind == hashgraph::TxKind::cross_shard && txs_[t].tx.peer_shard != in.shard)
          cross.push_back(t);
        else
          commit_tx(t, resolved);
      }
      if (!cross.empty()) {
        const double saved = now_;
        now_ = resolved;
        forward(in, std::nullopt, 0, cross);
        now_ = saved;
      }
    } else {
      resolved = deadline;
      for (TxId t : batch) fail_tx(t, deadline);
      L.failed += static_cast<double>(ntx);
    }
    push(std::max(resolved, now_ + 1e-9), kLeader, id);
  }

  //----------------------------------------------------------------------------
  // Results
  //----------------------------------------------------------------------------

  RunResult finish() {
    for (std::size_t i = 0; i < p_; ++i) flush_bytes(i);
    if (opt_.dag_log)
      for (auto& p : inst_)
        if (p && p->view) dump_dag(*p);
    std::vector<metrics::TxLogRow> rows;
    rows.reserve(txs_.size());
    for (const auto& s : txs_) {
      metrics::TxLogRow r;
      r.id = s.tx.id;
      r.vehicle = s.tx.vehicle;
      r.origin_rsu = s.tx.origin_rsu;
      r.origin_shard = s.tx.origin_shard;
      r.kind = s.tx.kind;
      r.t_sub = s.tx.submit_time;
      r.status = s.status;
      if (s.status == TxStatus::committed) r.t_con = s.t_con;
      if (s.status != TxStatus::pending) r.t_decided = s.t_decided;
      rows.push_back(r);
    }
    out_.metrics = metrics::compute_metrics(rows, out_.byte_log, cfg_.duration_seconds, cfg_.rsu_count,
                                            cfg_.shard_count);
    if (opt_.record_tx_log) out_.tx_log = std::move(rows);
    if (!opt_.record_byte_log) out_.byte_log.clear();
    return std::move(out_);
  }
};

inline RunResult run(const SimConfig& cfg, const RunOptions& opt = {}) { return Simulator(cfg, opt).run(); }

}  // namespace drdst::sim

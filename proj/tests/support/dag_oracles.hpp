#pragma once

// Brute-force references for DAG queries, shared by unit and acceptance tests.

#include <map>
#include <optional>
#include <set>
#include <vector>

#include "drdst/hashgraph.hpp"

namespace drdst::testing {

inline hashgraph::Transaction tx(hashgraph::TxId id, std::optional<std::uint64_t> key = std::nullopt) {
  hashgraph::Transaction t;
  t.id = id;
  t.conflict_key = key;
  return t;
}

struct RandomDag {
  std::vector<hashgraph::Event> events;  // parents before children
  std::set<NodeId> forked;
};

// Up to `n` events over `u` creators. With `forks`, some events reuse an
// older self-parent.
inline RandomDag random_dag(std::size_t n, NodeId u, bool forks, Rng& r) {
  using hashgraph::Hash;
  RandomDag d;
  std::map<NodeId, std::vector<std::size_t>> chain;
  for (std::size_t i = 0; i < n; ++i) {
    const NodeId c = static_cast<NodeId>(r.below(u));
    auto& ch = chain[c];
    std::optional<Hash> sp;
    if (!ch.empty()) {
      std::size_t pick = ch.back();
      if (forks && ch.size() >= 2 && r.bernoulli(0.15)) {
        pick = ch[ch.size() - 2];
        d.forked.insert(c);
      }
      sp = d.events[pick].hash;
    }
    std::optional<Hash> op;
    if (i > 0 && r.bernoulli(0.8)) op = d.events[r.below(i)].hash;
    d.events.push_back(hashgraph::make_event(c, sp, op, static_cast<double>(i), {tx(i)}));
    ch.push_back(i);
  }
  return d;
}

// reach[x][y]: y is x or an ancestor of x, by DFS over parent edges.
inline std::vector<std::vector<char>> reachability(const std::vector<hashgraph::Event>& evs) {
  std::map<hashgraph::Hash, std::size_t> idx;
  for (std::size_t i = 0; i < evs.size(); ++i) idx[evs[i].hash] = i;
  std::vector<std::vector<char>> r(evs.size(), std::vector<char>(evs.size(), 0));
  for (std::size_t x = 0; x < evs.size(); ++x) {
    std::vector<std::size_t> stack{x};
    while (!stack.empty()) {
      const std::size_t v = stack.back();
      stack.pop_back();
      if (r[x][v]) continue;
      r[x][v] = 1;
      for (const auto* p : {&evs[v].self_parent, &evs[v].other_parent})
        if (*p) stack.push_back(idx.at(**p));
    }
  }
  return r;
}

// Strong seeing by enumerating every intermediary event.
inline bool strongly_sees_oracle(const RandomDag& d, const std::vector<std::vector<char>>& reach, std::size_t x,
                                 std::size_t y, NodeId u) {
  if (d.forked.contains(d.events[y].creator)) return false;
  std::set<NodeId> via;
  for (std::size_t z = 0; z < d.events.size(); ++z)
    if (reach[x][z] && reach[z][y] && !d.forked.contains(d.events[z].creator)) via.insert(d.events[z].creator);
  return 3 * via.size() > 2 * static_cast<std::size_t>(u);
}

inline hashgraph::DagView view_of(NodeId u, const std::vector<hashgraph::Event>& evs) {
  std::vector<NodeId> m;
  for (NodeId i = 0; i < u; ++i) m.push_back(i);
  hashgraph::DagView v(m);
  for (const auto& e : evs) v.insert_event(e);
  return v;
}

// Mismatches between the view and the oracles over every ordered pair.
inline std::size_t oracle_mismatches(const RandomDag& d, NodeId u) {
  const auto v = view_of(u, d.events);
  const auto reach = reachability(d.events);
  std::size_t bad = v.size() != d.events.size() || !v.topologically_sortable();
  for (std::size_t x = 0; x < d.events.size(); ++x)
    for (std::size_t y = 0; y < d.events.size(); ++y) {
      const bool sees = reach[x][y] && !d.forked.contains(d.events[y].creator);
      bad += v.sees(d.events[x].hash, d.events[y].hash) != sees;
      bad += v.strongly_sees(d.events[x].hash, d.events[y].hash) != strongly_sees_oracle(d, reach, x, y, u);
    }
  return bad;
}

// Every member keeps its own view and receives the others' events in a
// random order. Returns each member's global order after full delivery.
inline std::vector<std::vector<hashgraph::Transaction>> converge_members(std::uint64_t seed, std::size_t u = 4,
                                                                        int steps = 120) {
  using namespace hashgraph;
  Rng r(seed);
  std::vector<NodeId> m;
  for (std::size_t i = 0; i < u; ++i) m.push_back(static_cast<NodeId>(i));
  std::vector<DagView> views;
  for (std::size_t i = 0; i < u; ++i) views.emplace_back(m);
  std::vector<std::vector<Event>> inbox(u);
  TxId next = 0;
  double now = 0;
  for (int step = 0; step < steps; ++step) {
    const std::size_t c = r.below(u);
    auto& in = inbox[c];
    r.shuffle(in);
    const std::size_t take = r.below(in.size() + 1);
    for (std::size_t k = 0; k < take; ++k) views[c].insert_event(in[k]);
    in.erase(in.begin(), in.begin() + static_cast<std::ptrdiff_t>(take));
    const NodeId peer = m[r.below(u)];
    std::vector<Transaction> txs;
    if (step < steps / 2) txs.push_back(tx(next++));
    const auto out =
        create_event(views[c], m[c], peer == m[c] ? std::nullopt : views[c].latest(peer), std::move(txs), now);
    for (std::size_t o = 0; o < u; ++o)
      if (o != c) inbox[o].insert(inbox[o].end(), out.begin(), out.end());
    now += 0.01;
    views[c].commit_pass(now);
  }
  std::vector<std::vector<Transaction>> orders;
  for (std::size_t c = 0; c < u; ++c) {
    for (const auto& e : inbox[c]) views[c].insert_event(e);
    views[c].commit_pass(now);
    orders.push_back(global_order(views[c].ledger()));
  }
  return orders;
}

}  // namespace drdst::testing

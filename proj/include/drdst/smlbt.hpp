#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "drdst/config.hpp"
#include "drdst/core.hpp"

namespace drdst::smlbt {

// Transmission plus propagation time for one hop, in seconds.
inline double link_latency(double bits, double rate_mbps, double dist_m, double v_mps) {
  if (!(rate_mbps > 0.0)) throw DomainError("link_latency: rate must be > 0");
  if (!(v_mps > 0.0)) throw DomainError("link_latency: propagation speed must be > 0");
  if (dist_m < 0.0) throw DomainError("link_latency: negative distance");
  return bits / (rate_mbps * 1.0e6) + dist_m / v_mps;
}

// Pairwise latencies over all RSUs. Also keeps rates and distances so that
// latency can be evaluated for any packet size.
class LatencyGraph {
 public:
  LatencyGraph() = default;

  static LatencyGraph from_matrix(std::size_t n, std::vector<double> latency) {
    if (latency.size() != n * n) throw std::invalid_argument("latency matrix must be n*n");
    LatencyGraph g;
    g.n_ = n;
    g.latency_ = std::move(latency);
    for (std::size_t i = 0; i < n; ++i) {
      g.latency_[i * n + i] = 0.0;
      for (std::size_t j = 0; j < n; ++j)
        if (!(g.latency_[i * n + j] >= 0.0) || !std::isfinite(g.latency_[i * n + j]))
          throw DomainError("latency entries must be finite and >= 0");
    }
    return g;
  }

  // `rates_mbps` is n*n (symmetric by convention); latencies use `ref_bits`.
  static LatencyGraph from_links(std::span<const Position> pos, std::vector<double> rates_mbps, double ref_bits,
                                 double v_mps) {
    const std::size_t n = pos.size();
    if (rates_mbps.size() != n * n) throw std::invalid_argument("rate matrix must be n*n");
    LatencyGraph g;
    g.n_ = n;
    g.v_ = v_mps;
    g.rate_ = std::move(rates_mbps);
    g.dist_.resize(n * n);
    g.latency_.resize(n * n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        g.dist_[i * n + j] = euclidean_distance(pos[i], pos[j]);
        g.latency_[i * n + j] = i == j ? 0.0 : link_latency(ref_bits, g.rate_[i * n + j], g.dist_[i * n + j], v_mps);
      }
    return g;
  }

  // Rates drawn uniformly from [lo, hi] Mb/s, one per unordered pair.
  static LatencyGraph sample(std::span<const Position> pos, const LinkConfig& link, double ref_bits, Rng& rng) {
    const std::size_t n = pos.size();
    std::vector<double> rates(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j)
        rates[i * n + j] = rates[j * n + i] = rng.uniform(link.bandwidth_min_mbps, link.bandwidth_max_mbps);
    for (std::size_t i = 0; i < n; ++i) rates[i * n + i] = link.bandwidth_max_mbps;
    return from_links(pos, std::move(rates), ref_bits, link.propagation_speed_mps);
  }

  std::size_t size() const noexcept { return n_; }
  double operator()(std::size_t m, std::size_t k) const noexcept { return latency_[m * n_ + k]; }

  // Latency for a packet of `bits`; falls back to the reference matrix when
  // the graph was built from raw latencies.
  double latency(std::size_t m, std::size_t k, double bits) const {
    if (m == k) return 0.0;
    if (rate_.empty()) return (*this)(m, k);
    return link_latency(bits, rate_[m * n_ + k], dist_[m * n_ + k], v_);
  }

 private:
  std::size_t n_ = 0;
  double v_ = 0.0;
  std::vector<double> latency_, rate_, dist_;
};

struct BroadcastTree {
  NodeId root = 0;
  std::vector<NodeId> members;            // members[0] == root
  std::vector<int> parent;                // index into members, -1 for root
  std::vector<std::vector<int>> children; // indices into members
  std::vector<double> depth;              // cumulative latency from root
  std::vector<double> edge;               // latency of the edge to the parent
  std::vector<std::pair<NodeId, NodeId>> cross_links;  // this shard -> other shard

  std::size_t size() const noexcept { return members.size(); }

  std::optional<std::size_t> index_of(NodeId id) const {
    auto it = std::ranges::find(members, id);
    if (it == members.end()) return std::nullopt;
    return static_cast<std::size_t>(it - members.begin());
  }

  double max_depth() const {
    return depth.empty() ? 0.0 : *std::ranges::max_element(depth);
  }

  int height() const {
    int h = 0;
    for (std::size_t i = 0; i < size(); ++i) {
      int d = 0;
      for (int p = parent[i]; p >= 0; p = parent[static_cast<std::size_t>(p)]) ++d;
      h = std::max(h, d);
    }
    return h;
  }

  // Spanning, acyclic, fan-out bounded, depths consistent with edges.
  bool valid(const LatencyGraph& g, int fanout, double tol = 1e-12) const {
    const std::size_t n = size();
    if (n == 0 || members[0] != root || parent.size() != n || children.size() != n || depth.size() != n)
      return false;
    if (parent[0] != -1) return false;
    std::size_t edges = 0;
    for (std::size_t i = 1; i < n; ++i) {
      if (parent[i] < 0 || static_cast<std::size_t>(parent[i]) >= n) return false;
      ++edges;
      // acyclic: walking up reaches the root in < n steps
      std::size_t steps = 0;
      for (int p = parent[i]; p != -1; p = parent[static_cast<std::size_t>(p)])
        if (++steps > n) return false;
      const auto pi = static_cast<std::size_t>(parent[i]);
      const double expect = depth[pi] + g(members[pi], members[i]);
      if (std::abs(depth[i] - expect) > tol * std::max(1.0, expect)) return false;
    }
    if (edges != n - 1 || depth[0] != 0.0) return false;
    for (std::size_t i = 0; i < n; ++i) {
      if (children[i].size() > static_cast<std::size_t>(fanout)) return false;
      for (int c : children[i])
        if (parent[static_cast<std::size_t>(c)] != static_cast<int>(i)) return false;
    }
    return true;
  }

  // Tree edges as an undirected adjacency list over member indices.
  std::vector<std::vector<int>> adjacency() const {
    std::vector<std::vector<int>> adj(size());
    for (std::size_t i = 1; i < size(); ++i) {
      adj[i].push_back(parent[i]);
      adj[static_cast<std::size_t>(parent[i])].push_back(static_cast<int>(i));
    }
    return adj;
  }
};

namespace detail {

inline BroadcastTree make_tree(std::span<const NodeId> members, std::size_t root_idx,
                               std::span<const int> parent_by_member, const LatencyGraph& g) {
  // Reorder so the root comes first, keeping relative order of the rest.
  const std::size_t n = members.size();
  std::vector<std::size_t> order{root_idx};
  for (std::size_t i = 0; i < n; ++i)
    if (i != root_idx) order.push_back(i);
  std::vector<int> pos(n);
  for (std::size_t k = 0; k < n; ++k) pos[order[k]] = static_cast<int>(k);

  BroadcastTree t;
  t.root = members[root_idx];
  t.members.resize(n);
  t.parent.assign(n, -1);
  t.children.assign(n, {});
  t.depth.assign(n, 0.0);
  t.edge.assign(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    t.members[k] = members[order[k]];
    const int p = parent_by_member[order[k]];
    if (p >= 0) {
      t.parent[k] = pos[static_cast<std::size_t>(p)];
      t.children[static_cast<std::size_t>(t.parent[k])].push_back(static_cast<int>(k));
    }
  }
  // depths in BFS order from the root
  std::vector<int> queue{0};
  for (std::size_t h = 0; h < queue.size(); ++h) {
    const auto u = static_cast<std::size_t>(queue[h]);
    for (int c : t.children[u]) {
      const auto cu = static_cast<std::size_t>(c);
      t.edge[cu] = g(t.members[u], t.members[cu]);
      t.depth[cu] = t.depth[u] + t.edge[cu];
      queue.push_back(c);
    }
  }
  return t;
}

// Greedy growth from one root. Returns parent indices (into `members`) or
// nothing when the height cap makes the shard unreachable.
inline std::optional<std::vector<int>> grow(std::span<const NodeId> members, std::size_t root, const LatencyGraph& g,
                                            int fanout, int max_height, double& max_latency) {
  const std::size_t n = members.size();
  std::vector<int> parent(n, -1), hops(n, 0), kids(n, 0);
  std::vector<double> depth(n, 0.0);
  std::vector<char> in(n, 0);
  in[root] = 1;
  max_latency = 0.0;
  for (std::size_t added = 1; added < n; ++added) {
    std::size_t best_v = n, best_u = n;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t v = 0; v < n; ++v) {
      if (in[v]) continue;
      for (std::size_t u = 0; u < n; ++u) {
        if (!in[u] || kids[u] >= fanout) continue;
        if (max_height > 0 && hops[u] + 1 > max_height) continue;
        const double d = depth[u] + g(members[u], members[v]);
        const bool better = d < best || (d == best && (members[v] < members[best_v] ||
                                                       (members[v] == members[best_v] && members[u] < members[best_u])));
        if (better) {
          best = d;
          best_v = v;
          best_u = u;
        }
      }
    }
    if (best_v == n) return std::nullopt;
    in[best_v] = 1;
    parent[best_v] = static_cast<int>(best_u);
    depth[best_v] = best;
    hops[best_v] = hops[best_u] + 1;
    ++kids[best_u];
    max_latency = std::max(max_latency, best);
  }
  return parent;
}

}  // namespace detail

// Greedy minimum-max-latency tree. Every member is tried as root; the tree
// with the smallest max root-to-node latency wins, ties by higher stability
// (when given) then lower id. A height cap that cannot be met is dropped.
inline BroadcastTree build_tree(std::span<const NodeId> members, const LatencyGraph& g, int fanout,
                                std::span<const double> stability = {}, int max_height = 0) {
  if (members.empty()) throw std::invalid_argument("build_tree: no members");
  if (fanout < 1) throw std::invalid_argument("build_tree: fanout must be >= 1");
  const std::size_t n = members.size();
  std::optional<std::vector<int>> best;
  std::size_t best_root = 0;
  double best_val = std::numeric_limits<double>::infinity();
  auto stab = [&](std::size_t i) { return stability.empty() ? 0.0 : stability[members[i]]; };
  for (int pass = 0; pass < 2 && !best; ++pass) {
    const int cap = pass == 0 ? max_height : 0;
    for (std::size_t r = 0; r < n; ++r) {
      double val = 0.0;
      auto parent = detail::grow(members, r, g, fanout, cap, val);
      if (!parent) continue;
      bool take = !best || val < best_val;
      if (best && val == best_val) {
        if (stab(r) != stab(best_root)) take = stab(r) > stab(best_root);
        else take = members[r] < members[best_root];
      }
      if (take) {
        best = std::move(parent);
        best_val = val;
        best_root = r;
      }
    }
  }
  return detail::make_tree(members, best_root, *best, g);
}

// Exact optimum by enumerating every labeled spanning tree (Pruefer codes)
// under every root. Refuses more than six members.
inline std::pair<BroadcastTree, double> brute_force_tree(std::span<const NodeId> members, const LatencyGraph& g,
                                                         int fanout) {
  const std::size_t n = members.size();
  if (n == 0) throw std::invalid_argument("brute_force_tree: no members");
  if (n > 6) throw std::length_error("brute_force_tree: more than 6 members");
  if (n == 1) {
    std::vector<int> parent{-1};
    return {detail::make_tree(members, 0, parent, g), 0.0};
  }
  std::vector<std::pair<int, int>> best_edges;
  std::size_t best_root = 0;
  double best_val = std::numeric_limits<double>::infinity();

  auto evaluate = [&](const std::vector<std::pair<int, int>>& edges) {
    std::vector<std::vector<int>> adj(n);
    for (auto [a, b] : edges) {
      adj[static_cast<std::size_t>(a)].push_back(b);
      adj[static_cast<std::size_t>(b)].push_back(a);
    }
    for (std::size_t r = 0; r < n; ++r) {
      bool ok = adj[r].size() <= static_cast<std::size_t>(fanout);
      for (std::size_t v = 0; v < n && ok; ++v)
        if (v != r && adj[v].size() - 1 > static_cast<std::size_t>(fanout)) ok = false;
      if (!ok) continue;
      // DFS for depths
      std::vector<double> depth(n, -1.0);
      std::vector<int> stack{static_cast<int>(r)};
      depth[r] = 0.0;
      double worst = 0.0;
      while (!stack.empty()) {
        const auto u = static_cast<std::size_t>(stack.back());
        stack.pop_back();
        for (int w : adj[u]) {
          const auto wu = static_cast<std::size_t>(w);
          if (depth[wu] >= 0.0) continue;
          depth[wu] = depth[u] + g(members[u], members[wu]);
          worst = std::max(worst, depth[wu]);
          stack.push_back(w);
        }
      }
      if (worst < best_val) {
        best_val = worst;
        best_edges = edges;
        best_root = r;
      }
    }
  };

  if (n == 2) {
    evaluate({{0, 1}});
  } else {
    std::vector<int> code(n - 2, 0);
    while (true) {
      // decode
      std::vector<int> degree(n, 1);
      for (int c : code) ++degree[static_cast<std::size_t>(c)];
      std::vector<std::pair<int, int>> edges;
      std::vector<int> deg = degree;
      for (int c : code) {
        for (std::size_t leaf = 0; leaf < n; ++leaf) {
          if (deg[leaf] == 1) {
            edges.emplace_back(static_cast<int>(leaf), c);
            --deg[leaf];
            --deg[static_cast<std::size_t>(c)];
            break;
          }
        }
      }
      int u = -1, w = -1;
      for (std::size_t k = 0; k < n; ++k)
        if (deg[k] == 1) (u < 0 ? u : w) = static_cast<int>(k);
      edges.emplace_back(u, w);
      evaluate(edges);

      std::size_t i = code.size();
      bool done = true;
      while (i > 0) {
        --i;
        if (++code[i] < static_cast<int>(n)) {
          done = false;
          break;
        }
        code[i] = 0;
      }
      if (done) break;
    }
  }
  if (best_edges.empty()) throw std::runtime_error("brute_force_tree: no tree satisfies the fan-out cap");

  // orient edges away from the root
  std::vector<std::vector<int>> adj(n);
  for (auto [a, b] : best_edges) {
    adj[static_cast<std::size_t>(a)].push_back(b);
    adj[static_cast<std::size_t>(b)].push_back(a);
  }
  std::vector<int> parent(n, -2);
  parent[best_root] = -1;
  std::vector<int> stack{static_cast<int>(best_root)};
  while (!stack.empty()) {
    const auto u = static_cast<std::size_t>(stack.back());
    stack.pop_back();
    for (int w : adj[u])
      if (parent[static_cast<std::size_t>(w)] == -2) {
        parent[static_cast<std::size_t>(w)] = static_cast<int>(u);
        stack.push_back(w);
      }
  }
  return {detail::make_tree(members, best_root, parent, g), best_val};
}

// Time for an event initiated at `initiator` to reach every member when it
// travels both up and down tree edges; `hop(a, b)` gives the per-hop latency.
template <typename HopLatency>
std::vector<double> arrival_offsets(const BroadcastTree& tree, std::size_t initiator, HopLatency&& hop) {
  const std::size_t n = tree.size();
  std::vector<double> at(n, -1.0);
  at[initiator] = 0.0;
  std::vector<std::size_t> queue{initiator};
  auto visit = [&](std::size_t from, std::size_t to) {
    if (at[to] >= 0.0) return;
    at[to] = at[from] + hop(tree.members[from], tree.members[to]);
    queue.push_back(to);
  };
  for (std::size_t h = 0; h < queue.size(); ++h) {
    const std::size_t u = queue[h];
    if (tree.parent[u] >= 0) visit(u, static_cast<std::size_t>(tree.parent[u]));
    for (int c : tree.children[u]) visit(u, static_cast<std::size_t>(c));
  }
  return at;
}

inline double broadcast_latency(const BroadcastTree& tree, NodeId initiator) {
  const auto idx = tree.index_of(initiator);
  if (!idx) throw std::invalid_argument("broadcast_latency: initiator not in tree");
  // edge latencies are stored per child
  auto hop = [&](NodeId a, NodeId b) {
    const std::size_t ia = *tree.index_of(a), ib = *tree.index_of(b);
    return tree.parent[ia] == static_cast<int>(ib) ? tree.edge[ia] : tree.edge[ib];
  };
  const auto at = arrival_offsets(tree, *idx, hop);
  return *std::ranges::max_element(at);
}

inline double network_broadcast_bound(std::span<const BroadcastTree> trees) {
  double worst = 0.0;
  for (const auto& t : trees) worst = std::max(worst, t.max_depth());
  return worst;
}

// Each root links to the `fanout` nearest other shards (by latency to the
// chosen target), capped at q - 1.
inline void cross_shard_links(std::span<BroadcastTree> trees, const LatencyGraph& g, int fanout,
                              CrossLinkTarget target = CrossLinkTarget::root, Rng* rng = nullptr) {
  const std::size_t q = trees.size();
  std::vector<NodeId> endpoint(q);
  for (std::size_t s = 0; s < q; ++s) {
    if (target == CrossLinkTarget::random_member && rng && !trees[s].members.empty())
      endpoint[s] = trees[s].members[rng->below(trees[s].members.size())];
    else
      endpoint[s] = trees[s].root;
  }
  for (std::size_t s = 0; s < q; ++s) {
    trees[s].cross_links.clear();
    std::vector<std::size_t> others;
    for (std::size_t o = 0; o < q; ++o)
      if (o != s) others.push_back(o);
    const NodeId from = trees[s].root;
    std::ranges::stable_sort(others, [&](std::size_t a, std::size_t b) {
      return g(from, endpoint[a]) < g(from, endpoint[b]);
    });
    const std::size_t k = std::min<std::size_t>(others.size(), static_cast<std::size_t>(std::max(fanout, 0)));
    for (std::size_t i = 0; i < k; ++i) trees[s].cross_links.emplace_back(from, endpoint[others[i]]);
  }
}

// Drops `gone` from the tree. Orphaned subtrees reattach greedily to the
// remaining node with spare fan-out that gives the smallest depth; losing the
// root rebuilds the tree.
inline BroadcastTree remove_member(const BroadcastTree& tree, NodeId gone, const LatencyGraph& g, int fanout,
                                   std::span<const double> stability = {}) {
  const auto idx = tree.index_of(gone);
  if (!idx) return tree;
  std::vector<NodeId> rest;
  for (NodeId m : tree.members)
    if (m != gone) rest.push_back(m);
  if (rest.empty()) throw std::invalid_argument("remove_member: tree would be empty");
  if (*idx == 0) return build_tree(rest, g, fanout, stability);

  const std::size_t n = tree.size();
  std::vector<int> parent = tree.parent;
  std::vector<int> kids(n, 0);
  for (std::size_t i = 0; i < n; ++i) kids[i] = static_cast<int>(tree.children[i].size());
  --kids[static_cast<std::size_t>(parent[*idx])];
  std::vector<char> attached(n, 1);
  attached[*idx] = 0;
  // mark the removed node's subtrees as detached
  std::vector<int> orphans(tree.children[*idx].begin(), tree.children[*idx].end());
  std::vector<int> stack = orphans;
  while (!stack.empty()) {
    const auto u = static_cast<std::size_t>(stack.back());
    stack.pop_back();
    attached[u] = 0;
    for (int c : tree.children[u]) stack.push_back(c);
  }
  // depth recomputation helper on the partial tree
  auto depth_of = [&](std::size_t v) {
    double d = 0.0;
    for (std::size_t u = v; parent[u] >= 0; u = static_cast<std::size_t>(parent[u]))
      d += g(tree.members[static_cast<std::size_t>(parent[u])], tree.members[u]);
    return d;
  };
  std::ranges::sort(orphans, [&](int a, int b) { return tree.members[static_cast<std::size_t>(a)] < tree.members[static_cast<std::size_t>(b)]; });
  for (int o : orphans) {
    const auto ou = static_cast<std::size_t>(o);
    std::size_t best = n;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t u = 0; u < n; ++u) {
      if (!attached[u] || kids[u] >= fanout) continue;
      const double d = depth_of(u) + g(tree.members[u], tree.members[ou]);
      if (d < best_d) {
        best_d = d;
        best = u;
      }
    }
    if (best == n) return build_tree(rest, g, fanout, stability);
    parent[ou] = static_cast<int>(best);
    ++kids[best];
    std::vector<int> sub{o};
    while (!sub.empty()) {
      const auto u = static_cast<std::size_t>(sub.back());
      sub.pop_back();
      attached[u] = 1;
      for (int c : tree.children[u]) sub.push_back(c);
    }
  }
  // rebuild in member-id space without the removed node
  std::vector<int> remap(n, -1);
  for (std::size_t i = 0, k = 0; i < n; ++i)
    if (i != *idx) remap[i] = static_cast<int>(k++);
  std::vector<int> new_parent(rest.size(), -1);
  for (std::size_t i = 0; i < n; ++i) {
    if (i == *idx) continue;
    new_parent[static_cast<std::size_t>(remap[i])] = parent[i] < 0 ? -1 : remap[static_cast<std::size_t>(parent[i])];
  }
  BroadcastTree out = detail::make_tree(rest, 0, new_parent, g);
  out.cross_links = tree.cross_links;
  return out;
}

// Edge list rows: epoch, shard, parent, child, edge_latency_s, is_cross_shard.
inline void write_tree_csv_rows(std::ostream& os, int epoch, std::size_t shard, const BroadcastTree& t,
                                const LatencyGraph& g) {
  for (std::size_t i = 1; i < t.size(); ++i)
    os << epoch << ',' << shard << ',' << t.members[static_cast<std::size_t>(t.parent[i])] << ',' << t.members[i]
       << ',' << t.edge[i] << ",0\n";
  for (auto [a, b] : t.cross_links) os << epoch << ',' << shard << ',' << a << ',' << b << ',' << g(a, b) << ",1\n";
}

}  // namespace drdst::smlbt

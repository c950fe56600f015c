#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <openssl/evp.h>

#include "drdst/core.hpp"

namespace drdst::hashgraph {

using TxId = std::uint64_t;

struct Hash {
  std::array<std::uint8_t, 32> bytes{};

  std::string hex() const {
    static constexpr char kDigits[] = "0123456789abcdef";
    std::string s(64, '0');
    for (std::size_t i = 0; i < 32; ++i) {
      s[2 * i] = kDigits[bytes[i] >> 4];
      s[2 * i + 1] = kDigits[bytes[i] & 0xF];
    }
    return s;
  }

  friend auto operator<=>(const Hash&, const Hash&) = default;
};

struct HashHasher {
  std::size_t operator()(const Hash& h) const noexcept {
    std::uint64_t v;
    std::memcpy(&v, h.bytes.data(), sizeof v);
    return static_cast<std::size_t>(v);
  }
};

enum class TxKind : std::uint8_t { normal = 0, cross_shard = 1 };

struct Transaction {
  TxId id = 0;
  std::uint32_t vehicle = 0;
  NodeId origin_rsu = 0;
  ShardId origin_shard = 0;
  ShardId peer_shard = 0;  // the other involved shard for cross-shard txs
  double submit_time = 0.0;
  TxKind kind = TxKind::normal;
  std::optional<std::uint64_t> conflict_key;

  bool conflicts_with(const Transaction& o) const {
    return conflict_key && o.conflict_key && *conflict_key == *o.conflict_key && id != o.id;
  }

  friend bool operator==(const Transaction&, const Transaction&) = default;
};

struct Event {
  Hash hash;
  NodeId creator = 0;
  std::optional<Hash> self_parent;
  std::optional<Hash> other_parent;
  double timestamp = 0.0;
  std::vector<Transaction> txs;
  bool signature_valid = true;
};

//------------------------------------------------------------------------------
// Digest
//------------------------------------------------------------------------------

namespace detail {

class ByteWriter {
 public:
  template <typename T>
    requires std::is_integral_v<T>
  void put(T v) {
    using U = std::make_unsigned_t<T>;
    auto u = static_cast<U>(v);
    for (std::size_t i = 0; i < sizeof(T); ++i) buf_.push_back(static_cast<std::uint8_t>(u >> (8 * i)));
  }
  void put(double d) { put(std::bit_cast<std::uint64_t>(d)); }
  void put(const std::optional<Hash>& h) {
    put<std::uint8_t>(h ? 1 : 0);
    if (h) buf_.insert(buf_.end(), h->bytes.begin(), h->bytes.end());
  }
  std::span<const std::uint8_t> data() const { return buf_; }

 private:
  std::vector<std::uint8_t> buf_;
};

}  // namespace detail

inline Hash sha256(std::span<const std::uint8_t> data) {
  Hash h;
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), h.bytes.data(), &len, EVP_sha256(), nullptr) != 1 || len != 32)
    throw std::runtime_error("sha256 failed");
  return h;
}

inline Hash digest(NodeId creator, const std::optional<Hash>& self_parent, const std::optional<Hash>& other_parent,
                   double timestamp, std::span<const Transaction> txs) {
  detail::ByteWriter w;
  w.put(creator);
  w.put(self_parent);
  w.put(other_parent);
  w.put(timestamp);
  w.put(static_cast<std::uint64_t>(txs.size()));
  for (const auto& tx : txs) {
    w.put(tx.id);
    w.put(tx.vehicle);
    w.put(tx.origin_rsu);
    w.put(tx.origin_shard);
    w.put(tx.peer_shard);
    w.put(tx.submit_time);
    w.put(static_cast<std::uint8_t>(tx.kind));
    w.put<std::uint8_t>(tx.conflict_key ? 1 : 0);
    w.put(tx.conflict_key.value_or(0));
  }
  return sha256(w.data());
}

inline Hash digest(const Event& e) {
  return digest(e.creator, e.self_parent, e.other_parent, e.timestamp, e.txs);
}

inline Event make_event(NodeId creator, std::optional<Hash> self_parent, std::optional<Hash> other_parent,
                        double timestamp, std::vector<Transaction> txs, bool signature_valid = true) {
  Event e{Hash{}, creator, self_parent, other_parent, timestamp, std::move(txs), signature_valid};
  e.hash = digest(e);
  return e;
}

//------------------------------------------------------------------------------
// DagView
//------------------------------------------------------------------------------

enum class InsertResult { accepted, duplicate, fork_detected, missing_parent };

// How a member's validation vote is produced.
enum class VoteBehavior {
  honest,   // YES iff signature valid and no conflicting tx committed or already endorsed
  yes_all,  // adversary endorsing everything, including conflicts
  no_all,   // adversary withholding every YES
};

struct CommittedEvent {
  Hash hash;
  int epoch = 0;
  double median_timestamp = 0.0;
  double commit_time = 0.0;
  std::vector<Transaction> txs;
};

// One shard's local picture of the DAG. Ancestry is answered with per-event
// vector clocks (latest sequence number seen per creator), which is exact
// for every creator that has not forked; forked creators are excluded from
// seeing anyway.
class DagView {
 public:
  static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

  explicit DagView(std::vector<NodeId> members, int epoch = 0) : epoch_(epoch) {
    if (members.empty()) throw std::invalid_argument("DagView: no members");
    members_ = std::move(members);
    for (NodeId m : members_) {
      if (slot_of_.contains(m)) throw std::invalid_argument("DagView: duplicate member");
      add_slot(m);
    }
    behavior_.assign(members_.size(), VoteBehavior::honest);
    voted_upto_.assign(members_.size(), {});
    endorsed_keys_.resize(members_.size());
  }

  std::size_t u() const noexcept { return members_.size(); }
  std::size_t f() const noexcept { return (members_.size() - 1) / 3; }
  std::span<const NodeId> members() const noexcept { return members_; }
  int epoch() const noexcept { return epoch_; }
  std::size_t size() const noexcept { return records_.size(); }
  std::size_t pending() const noexcept { return pending_count_; }

  bool is_member(NodeId id) const {
    auto it = slot_of_.find(id);
    return it != slot_of_.end() && it->second < members_.size();
  }
  bool contains(const Hash& h) const { return index_.contains(h); }
  bool is_equivocating(NodeId id) const {
    auto it = slot_of_.find(id);
    return it != slot_of_.end() && equivocating_[it->second];
  }

  const Event& event(const Hash& h) const { return records_.at(index_of(h)).event; }
  const Event& event_at(std::size_t i) const { return records_.at(i).event; }
  bool is_committed(const Hash& h) const { return records_.at(index_of(h)).committed; }
  double commit_time(const Hash& h) const { return records_.at(index_of(h)).commit_time; }
  bool is_foreign(const Hash& h) const { return records_.at(index_of(h)).foreign; }

  std::optional<Hash> latest(NodeId creator) const {
    auto it = slot_of_.find(creator);
    if (it == slot_of_.end() || latest_[it->second] == npos) return std::nullopt;
    return records_[latest_[it->second]].event.hash;
  }

  void set_behavior(NodeId member, VoteBehavior b) { behavior_.at(member_slot(member)) = b; }

  // Upper bound on the sequence numbers of `creator`'s events that `voter`
  // may vote on (e.g. what it has validated so far). Default: no bound.
  void set_vote_limit(std::function<std::int32_t(NodeId voter, NodeId creator)> fn) { vote_limit_ = std::move(fn); }

  // Insert with parent checks; events with unknown parents wait in a buffer
  // and are retried once the parent arrives.
  InsertResult insert_event(const Event& e) {
    if (index_.contains(e.hash) || pending_hashes_.contains(e.hash)) return InsertResult::duplicate;
    for (const auto* p : {&e.self_parent, &e.other_parent}) {
      if (*p && !index_.contains(**p)) {
        pending_[**p].push_back(e);
        pending_hashes_.insert(e.hash);
        ++pending_count_;
        return InsertResult::missing_parent;
      }
    }
    const InsertResult r = place(e, false, -1);
    drain_pending(e.hash);
    return r;
  }

  // A committed event from another shard, accepted on its origin's proof.
  // `origin_seq` is its position in its creator's chain.
  InsertResult import_foreign(const Event& e, std::int32_t origin_seq) {
    if (index_.contains(e.hash)) return InsertResult::duplicate;
    const InsertResult r = place(e, true, origin_seq);
    drain_pending(e.hash);
    return r;
  }

  std::int32_t seq_of(const Hash& h) const { return records_.at(index_of(h)).seq; }

  // Position of an event in insertion order.
  std::size_t index(const Hash& h) const { return index_of(h); }

  // y is an ancestor of x (or x itself) and y's creator has not forked.
  bool sees(const Hash& x, const Hash& y) const { return sees_idx(index_of(x), index_of(y)); }

  // More than 2u/3 distinct member creators have an event that x sees and
  // that sees y.
  bool strongly_sees(const Hash& x, const Hash& y) const {
    const std::size_t xi = index_of(x), yi = index_of(y);
    const auto& yr = records_[yi];
    if (equivocating_[yr.slot]) return false;
    std::size_t count = 0;
    for (std::uint32_t d = 0; d < members_.size(); ++d) {
      if (equivocating_[d]) continue;
      const std::size_t z = seen_latest(xi, d);
      if (z != npos && anc(z, yr.slot) >= yr.seq) ++count;
    }
    return 3 * count > 2 * members_.size();
  }

  // Evaluate the votes carried by every member event inserted since the last
  // pass and commit what crossed the threshold, in insertion order.
  std::vector<Hash> commit_pass(double now) {
    std::vector<std::size_t> touched;
    for (std::size_t xi : eval_queue_) evaluate_votes(xi, touched);
    eval_queue_.clear();
    std::ranges::sort(touched);
    touched.erase(std::unique(touched.begin(), touched.end()), touched.end());
    std::vector<Hash> out;
    for (std::size_t yi : touched) {
      auto& r = records_[yi];
      if (r.committed || 3 * r.yes <= 2 * members_.size()) continue;
      commit(yi, now);
      out.push_back(r.event.hash);
    }
    return out;
  }

  // Committed events in commit order.
  std::vector<Hash> committed() const {
    std::vector<Hash> out;
    out.reserve(commit_order_.size());
    for (std::size_t i : commit_order_) out.push_back(records_[i].event.hash);
    return out;
  }

  std::size_t committed_count() const noexcept { return commit_order_.size(); }

  // Median over members of the timestamp of each member's earliest event
  // that sees `h` (lower median).
  std::optional<double> median_timestamp(const Hash& h) const {
    const std::size_t yi = index_of(h);
    const auto& yr = records_[yi];
    std::vector<double> ts;
    for (std::uint32_t m = 0; m < members_.size(); ++m) {
      if (equivocating_[m]) continue;
      const auto& chain = chains_[m];
      auto it = std::partition_point(chain.begin(), chain.end(),
                                     [&](std::size_t e) { return anc(e, yr.slot) < yr.seq; });
      if (it != chain.end()) ts.push_back(records_[*it].event.timestamp);
    }
    if (ts.empty()) return std::nullopt;
    std::ranges::sort(ts);
    return ts[(ts.size() - 1) / 2];
  }

  std::vector<CommittedEvent> ledger() const {
    std::vector<CommittedEvent> out;
    out.reserve(commit_order_.size());
    for (std::size_t i : commit_order_) {
      const auto& r = records_[i];
      out.push_back({r.event.hash, r.commit_epoch, median_timestamp(r.event.hash).value_or(r.event.timestamp),
                     r.commit_time, r.event.txs});
    }
    return out;
  }

  // Kahn's algorithm over parent edges; false if a cycle exists.
  bool topologically_sortable() const {
    std::vector<int> indeg(records_.size(), 0);
    std::vector<std::vector<std::size_t>> kids(records_.size());
    for (std::size_t i = 0; i < records_.size(); ++i)
      for (const auto* p : {&records_[i].event.self_parent, &records_[i].event.other_parent})
        if (*p) {
          auto it = index_.find(**p);
          if (it == index_.end()) continue;
          kids[it->second].push_back(i);
          ++indeg[i];
        }
    std::vector<std::size_t> q;
    for (std::size_t i = 0; i < indeg.size(); ++i)
      if (indeg[i] == 0) q.push_back(i);
    std::size_t seen = 0;
    while (!q.empty()) {
      const std::size_t v = q.back();
      q.pop_back();
      ++seen;
      for (std::size_t k : kids[v])
        if (--indeg[k] == 0) q.push_back(k);
    }
    return seen == records_.size();
  }

  std::vector<Hash> hashes() const {
    std::vector<Hash> out;
    for (const auto& r : records_) out.push_back(r.event.hash);
    return out;
  }

 private:
  struct Record {
    Event event;
    std::uint32_t slot = 0;
    std::int32_t seq = 0;
    std::vector<std::int32_t> anc;
    bool foreign = false;
    bool committed = false;
    double commit_time = 0.0;
    int commit_epoch = 0;
    std::uint32_t yes = 0;
    std::vector<std::uint32_t> voters;
  };

  std::size_t index_of(const Hash& h) const {
    auto it = index_.find(h);
    if (it == index_.end()) throw std::out_of_range("DagView: unknown event " + h.hex().substr(0, 12));
    return it->second;
  }

  std::uint32_t member_slot(NodeId id) const {
    auto it = slot_of_.find(id);
    if (it == slot_of_.end() || it->second >= members_.size()) throw std::invalid_argument("not a member");
    return it->second;
  }

  std::uint32_t add_slot(NodeId id, bool foreign = false) {
    const auto s = static_cast<std::uint32_t>(slot_node_.size());
    (foreign ? foreign_slot_of_ : slot_of_).emplace(id, s);
    slot_node_.push_back(id);
    latest_.push_back(npos);
    chains_.emplace_back();
    equivocating_.push_back(0);
    return s;
  }

  std::int32_t anc(std::size_t e, std::uint32_t slot) const {
    const auto& a = records_[e].anc;
    return slot < a.size() ? a[slot] : -1;
  }

  bool sees_idx(std::size_t xi, std::size_t yi) const {
    const auto& yr = records_[yi];
    if (equivocating_[yr.slot]) return false;
    if (xi == yi) return true;
    return anc(xi, yr.slot) >= yr.seq && chain_event(yr.slot, yr.seq) == yi;
  }

  std::size_t chain_event(std::uint32_t slot, std::int32_t seq) const {
    if (seq < 0) return npos;
    const auto& chain = chains_[slot];
    if (slot < members_.size()) return static_cast<std::size_t>(seq) < chain.size() ? chain[static_cast<std::size_t>(seq)] : npos;
    // foreign chains are sparse: binary search by seq
    auto it = std::ranges::lower_bound(chain, seq, {}, [&](std::size_t e) { return records_[e].seq; });
    return it != chain.end() && records_[*it].seq == seq ? *it : npos;
  }

  // Latest event of member slot d that x sees.
  std::size_t seen_latest(std::size_t xi, std::uint32_t d) const { return chain_event(d, anc(xi, d)); }

  InsertResult place(const Event& e, bool foreign, std::int32_t origin_seq) {
    // Imported events live in their own slots so a creator that is also a
    // local member keeps a dense local chain.
    std::uint32_t slot;
    if (foreign) {
      auto fit = foreign_slot_of_.find(e.creator);
      slot = fit == foreign_slot_of_.end() ? add_slot(e.creator, true) : fit->second;
    } else {
      auto sit = slot_of_.find(e.creator);
      slot = sit == slot_of_.end() ? add_slot(e.creator) : sit->second;
    }
    const bool member = slot < members_.size();
    Record r;
    r.event = e;
    r.slot = slot;
    r.foreign = foreign;
    std::size_t sp = npos, op = npos;
    if (!foreign) {
      if (e.self_parent) sp = index_.at(*e.self_parent);
      if (e.other_parent) op = index_.at(*e.other_parent);
      if (sp != npos && records_[sp].slot != slot) throw std::invalid_argument("self_parent by another creator");
      r.seq = sp == npos ? 0 : records_[sp].seq + 1;
    } else {
      r.seq = origin_seq;
    }
    const std::size_t width = slot_node_.size();
    r.anc.assign(width, -1);
    for (std::size_t p : {sp, op}) {
      if (p == npos) continue;
      const auto& pa = records_[p].anc;
      for (std::size_t k = 0; k < pa.size(); ++k) r.anc[k] = std::max(r.anc[k], pa[k]);
    }
    r.anc[slot] = std::max(r.anc[slot], r.seq);

    const std::size_t idx = records_.size();
    InsertResult result = InsertResult::accepted;
    if (!foreign) {
      const std::uint64_t key = (static_cast<std::uint64_t>(slot) << 32) | static_cast<std::uint64_t>(sp + 1);
      auto [it, fresh] = by_self_parent_.emplace(key, idx);
      if (!fresh) result = InsertResult::fork_detected;
    }
    index_.emplace(e.hash, idx);
    records_.push_back(std::move(r));

    auto& chain = chains_[slot];
    if (foreign) {
      auto pos = std::ranges::upper_bound(chain, records_[idx].seq, {}, [&](std::size_t k) { return records_[k].seq; });
      chain.insert(pos, idx);
    } else if (static_cast<std::size_t>(records_[idx].seq) == chain.size()) {
      chain.push_back(idx);
    }
    if (latest_[slot] == npos || records_[latest_[slot]].seq < records_[idx].seq) latest_[slot] = idx;

    if (result == InsertResult::fork_detected) mark_equivocating(slot);
    if (member && !foreign) eval_queue_.push_back(idx);
    return result;
  }

  void drain_pending(const Hash& arrived) {
    std::vector<Hash> ready{arrived};
    while (!ready.empty()) {
      const Hash h = ready.back();
      ready.pop_back();
      auto it = pending_.find(h);
      if (it == pending_.end()) continue;
      auto waiting = std::move(it->second);
      pending_.erase(it);
      for (auto& e : waiting) {
        pending_hashes_.erase(e.hash);
        --pending_count_;
        if (index_.contains(e.hash)) continue;
        bool blocked = false;
        for (const auto* p : {&e.self_parent, &e.other_parent})
          if (*p && !index_.contains(**p)) {
            pending_[**p].push_back(e);
            pending_hashes_.insert(e.hash);
            ++pending_count_;
            blocked = true;
            break;
          }
        if (blocked) continue;
        place(e, false, -1);
        ready.push_back(e.hash);
      }
    }
  }

  void mark_equivocating(std::uint32_t slot) {
    if (equivocating_[slot]) return;
    equivocating_[slot] = 1;
    if (slot >= members_.size()) return;
    for (auto& r : records_) {
      if (r.committed) continue;
      auto it = std::ranges::find(r.voters, slot);
      if (it != r.voters.end()) {
        r.voters.erase(it);
        --r.yes;
      }
    }
  }

  bool vote_yes(std::uint32_t voter, const Event& y) {
    switch (behavior_[voter]) {
      case VoteBehavior::yes_all: return true;
      case VoteBehavior::no_all: return false;
      case VoteBehavior::honest: break;
    }
    if (!y.signature_valid) return false;
    auto& endorsed = endorsed_keys_[voter];
    for (const auto& tx : y.txs) {
      if (!tx.conflict_key) continue;
      auto c = committed_keys_.find(*tx.conflict_key);
      if (c != committed_keys_.end() && c->second != tx.id) return false;
      auto e = endorsed.find(*tx.conflict_key);
      if (e != endorsed.end() && e->second != tx.id) return false;
    }
    for (const auto& tx : y.txs)
      if (tx.conflict_key) endorsed.emplace(*tx.conflict_key, tx.id);
    return true;
  }

  // For each member creator c, the strongly-seen events of c form a prefix of
  // c's chain; its end is the k-th largest "latest c-event seen" among the
  // intermediaries x sees, with k the smallest count above 2u/3.
  void evaluate_votes(std::size_t xi, std::vector<std::size_t>& touched) {
    const std::uint32_t voter = records_[xi].slot;
    if (equivocating_[voter]) return;
    const std::size_t u = members_.size();
    const std::size_t k = (2 * u) / 3 + 1;
    auto& upto = voted_upto_[voter];
    if (upto.size() < u) upto.resize(u, -1);

    std::vector<std::size_t> inter;
    inter.reserve(u);
    for (std::uint32_t d = 0; d < u; ++d) {
      if (equivocating_[d]) continue;
      const std::size_t z = seen_latest(xi, d);
      if (z != npos) inter.push_back(z);
    }
    if (inter.size() < k) return;
    std::vector<std::int32_t> w(inter.size());
    for (std::uint32_t c = 0; c < u; ++c) {
      if (equivocating_[c]) continue;
      for (std::size_t i = 0; i < inter.size(); ++i) w[i] = anc(inter[i], c);
      std::nth_element(w.begin(), w.begin() + static_cast<std::ptrdiff_t>(k - 1), w.end(), std::greater<>());
      std::int32_t reach = w[k - 1];
      if (vote_limit_) reach = std::min(reach, vote_limit_(slot_node_[voter], slot_node_[c]));
      for (std::int32_t s = upto[c] + 1; s <= reach; ++s) {
        const std::size_t yi = chain_event(c, s);
        if (yi == npos) break;
        auto& yr = records_[yi];
        upto[c] = s;
        if (yr.committed) continue;
        if (!vote_yes(voter, yr.event)) continue;
        yr.voters.push_back(voter);
        ++yr.yes;
        touched.push_back(yi);
      }
    }
  }

  void commit(std::size_t yi, double now) {
    auto& r = records_[yi];
    r.committed = true;
    r.commit_time = now;
    r.commit_epoch = epoch_;
    r.voters.clear();
    r.voters.shrink_to_fit();
    commit_order_.push_back(yi);
    for (const auto& tx : r.event.txs)
      if (tx.conflict_key) committed_keys_.emplace(*tx.conflict_key, tx.id);
  }

  int epoch_ = 0;
  std::vector<NodeId> members_;
  std::unordered_map<NodeId, std::uint32_t> slot_of_;
  std::unordered_map<NodeId, std::uint32_t> foreign_slot_of_;
  std::vector<NodeId> slot_node_;
  std::vector<std::size_t> latest_;
  std::vector<std::vector<std::size_t>> chains_;
  std::vector<char> equivocating_;
  std::vector<VoteBehavior> behavior_;
  std::vector<std::vector<std::int32_t>> voted_upto_;
  std::vector<std::unordered_map<std::uint64_t, TxId>> endorsed_keys_;
  std::unordered_map<std::uint64_t, TxId> committed_keys_;
  std::function<std::int32_t(NodeId, NodeId)> vote_limit_;

  std::vector<Record> records_;
  std::unordered_map<Hash, std::size_t, HashHasher> index_;
  std::unordered_map<std::uint64_t, std::size_t> by_self_parent_;
  std::unordered_map<Hash, std::vector<Event>, HashHasher> pending_;
  std::unordered_set<Hash, HashHasher> pending_hashes_;
  std::size_t pending_count_ = 0;
  std::vector<std::size_t> eval_queue_;
  std::vector<std::size_t> commit_order_;
};

// Chains txs onto the creator's latest event, one event per
// `max_txs` batch, and inserts each into the view.
inline std::vector<Event> create_event(DagView& view, NodeId creator, const std::optional<Hash>& other_parent,
                                       std::vector<Transaction> txs, double now, std::size_t max_txs = 1024,
                                       bool signature_valid = true) {
  if (!view.is_member(creator)) throw std::invalid_argument("create_event: creator is not a member");
  if (max_txs == 0) throw std::invalid_argument("create_event: max_txs must be > 0");
  std::vector<Event> out;
  std::size_t pos = 0;
  do {
    const std::size_t n = std::min(max_txs, txs.size() - pos);
    std::vector<Transaction> batch(txs.begin() + static_cast<std::ptrdiff_t>(pos),
                                   txs.begin() + static_cast<std::ptrdiff_t>(pos + n));
    pos += n;
    Event e = make_event(creator, view.latest(creator), out.empty() ? other_parent : std::nullopt, now,
                         std::move(batch), signature_valid);
    view.insert_event(e);
    out.push_back(std::move(e));
  } while (pos < txs.size());
  return out;
}

// Deterministic total order over committed events: (epoch, median
// timestamp, hash). A tx listed by several events is emitted once, at its
// first position.
inline std::vector<Transaction> global_order(std::span<const CommittedEvent> ledger) {
  std::vector<const CommittedEvent*> evs;
  std::unordered_map<Hash, std::size_t, HashHasher> first;
  auto key_less = [](const CommittedEvent* a, const CommittedEvent* b) {
    if (a->epoch != b->epoch) return a->epoch < b->epoch;
    if (a->median_timestamp != b->median_timestamp) return a->median_timestamp < b->median_timestamp;
    return a->hash < b->hash;
  };
  for (const auto& e : ledger) {
    auto [it, fresh] = first.emplace(e.hash, evs.size());
    if (fresh) evs.push_back(&e);
    else if (key_less(&e, evs[it->second])) evs[it->second] = &e;
  }
  std::ranges::sort(evs, key_less);
  std::vector<Transaction> out;
  std::unordered_set<TxId> seen;
  for (const auto* e : evs)
    for (const auto& tx : e->txs)
      if (seen.insert(tx.id).second) out.push_back(tx);
  return out;
}

//------------------------------------------------------------------------------
// View-split check
//------------------------------------------------------------------------------

struct AdversarySchedules {
  int byzantine_per_shard = -1;      // -1: use f
  bool honest_double_vote = false;   // break the honest rule to exercise the checker
  std::uint64_t max_schedules = 1'000'000;
};

struct ViewSplitReport {
  bool safe = true;
  std::uint64_t schedules = 0;
  std::uint64_t violating = 0;
  int threshold = 0;         // |U| must exceed this
  int max_support = 0;       // best |U| any tx reached
  int min_intersection = 0;  // over schedules where both exceeded (if any)
};

// Each honest member either endorses one of two conflicting cross-shard txs
// or neither (delivery order / withholding chosen by the adversary); each
// Byzantine member endorses any subset. Enumerates every combination and
// reports whether both txs can ever gain more than 2qf + q supporters.
inline ViewSplitReport view_split_check(int q, int u, int f, const AdversarySchedules& adv = {}) {
  if (q < 1 || u < 1 || f < 0) throw std::invalid_argument("view_split_check: bad instance");
  if (u < 3 * f + 1) throw std::invalid_argument("view_split_check: requires u >= 3f + 1");
  const int byz = adv.byzantine_per_shard < 0 ? f : adv.byzantine_per_shard;
  if (byz > u) throw std::invalid_argument("view_split_check: more Byzantine than members");
  const int honest = q * (u - byz);
  const int bad = q * byz;
  const int honest_choices = adv.honest_double_vote ? 4 : 3;
  const double space = std::pow(static_cast<double>(honest_choices), honest) * std::pow(4.0, bad);
  if (space > static_cast<double>(adv.max_schedules)) throw std::length_error("view_split_check: schedule space too large");

  ViewSplitReport rep;
  rep.threshold = 2 * q * f + q;
  rep.min_intersection = q * u;
  const int total = honest + bad;
  std::vector<int> choice(static_cast<std::size_t>(total), 0);
  // choice: bit0 = endorses Tx1, bit1 = endorses Tx2. Honest digits range over
  // {0,1,2} (never both) unless double voting is enabled.
  while (true) {
    ++rep.schedules;
    int s1 = 0, s2 = 0, both = 0;
    for (int c : choice) {
      s1 += c & 1;
      s2 += (c >> 1) & 1;
      both += c == 3;
    }
    rep.max_support = std::max({rep.max_support, s1, s2});
    if (s1 > rep.threshold && s2 > rep.threshold) {
      rep.safe = false;
      ++rep.violating;
      rep.min_intersection = std::min(rep.min_intersection, both);
    }
    int i = 0;
    for (; i < total; ++i) {
      const int limit = i < honest ? honest_choices : 4;
      if (++choice[static_cast<std::size_t>(i)] < limit) break;
      choice[static_cast<std::size_t>(i)] = 0;
    }
    if (i == total) break;
  }
  if (rep.safe) rep.min_intersection = 0;
  return rep;
}

}  // namespace drdst::hashgraph

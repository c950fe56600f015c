#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "drdst/core.hpp"
#include "drdst/hashgraph.hpp"

namespace drdst::metrics {

inline constexpr int kSchemaVersion = 1;
inline constexpr double kBytesPerMb = 1.0e6;

enum class TxStatus : std::uint8_t { pending, committed, failed };

inline std::string_view to_string(TxStatus s) {
  switch (s) {
    case TxStatus::committed: return "committed";
    case TxStatus::failed: return "failed";
    case TxStatus::pending: return "pending";
  }
  return "pending";
}

struct TxLogRow {
  hashgraph::TxId id = 0;
  std::uint32_t vehicle = 0;
  NodeId origin_rsu = 0;
  ShardId origin_shard = 0;
  hashgraph::TxKind kind = hashgraph::TxKind::normal;
  double t_sub = 0.0;
  std::optional<double> t_con;
  TxStatus status = TxStatus::pending;
  std::optional<double> t_decided;  // commit or failure time
};

struct ByteLogRow {
  int epoch = 0;
  NodeId node = 0;
  std::uint64_t bytes_sent = 0;
};

struct MetricsRecord {
  std::optional<double> mean_latency_s;
  double throughput_tps = 0.0;
  double success_rate = 0.0;
  double node_traffic_mb = 0.0;
  double cross_shard_throughput_tps = 0.0;
  std::uint64_t submitted = 0;
  std::uint64_t committed = 0;
  std::uint64_t failed = 0;
  std::uint64_t pending = 0;
  std::uint64_t cross_shard_submitted = 0;
  std::uint64_t cross_shard_committed = 0;
  double duration_s = 0.0;  // t
  std::uint64_t total_bytes = 0;
  int rsu_count = 0;
  int shard_count = 0;

  friend bool operator==(const MetricsRecord&, const MetricsRecord&) = default;
};

struct EpochRecord {
  int epoch = 0;
  double start_s = 0.0;
  int online = 0;
  int byzantine = 0;
  double fitness = 0.0;
  double trust_gap = 0.0;
  double count_gap = 0.0;
  double stability_gap = 0.0;
  double max_malicious_ratio = 0.0;
  int max_tree_height = 0;
  double max_tree_latency_s = 0.0;
  double mean_trust = 0.0;
  std::uint64_t committed = 0;
  std::uint64_t failed = 0;
  std::uint64_t cross_shard_committed = 0;
};

// t is the time of the last decision, never shorter than the submission
// window.
inline MetricsRecord compute_metrics(std::span<const TxLogRow> txs, std::span<const ByteLogRow> bytes,
                                     double window_s, int rsu_count, int shard_count) {
  if (rsu_count <= 0) throw DomainError("compute_metrics: rsu_count must be > 0");
  MetricsRecord m;
  m.rsu_count = rsu_count;
  m.shard_count = shard_count;
  double latency_sum = 0.0;
  double t = window_s;
  for (const auto& r : txs) {
    ++m.submitted;
    const bool cross = r.kind == hashgraph::TxKind::cross_shard;
    if (cross) ++m.cross_shard_submitted;
    switch (r.status) {
      case TxStatus::committed:
        ++m.committed;
        if (cross) ++m.cross_shard_committed;
        latency_sum += *r.t_con - r.t_sub;
        break;
      case TxStatus::failed: ++m.failed; break;
      case TxStatus::pending: ++m.pending; break;
    }
    if (r.t_decided) t = std::max(t, *r.t_decided);
  }
  for (const auto& b : bytes) m.total_bytes += b.bytes_sent;
  m.duration_s = t;
  if (m.committed > 0) m.mean_latency_s = latency_sum / static_cast<double>(m.committed);
  if (t > 0.0) {
    m.throughput_tps = static_cast<double>(m.committed) / t;
    m.cross_shard_throughput_tps = static_cast<double>(m.cross_shard_committed) / t;
  }
  m.success_rate = m.submitted > 0 ? static_cast<double>(m.committed) / static_cast<double>(m.submitted) : 0.0;
  m.node_traffic_mb = static_cast<double>(m.total_bytes) / static_cast<double>(rsu_count) / kBytesPerMb;
  return m;
}

//------------------------------------------------------------------------------
// CSV
//------------------------------------------------------------------------------

// Shortest text that parses back to the same double.
inline std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}
inline std::string fmt(std::optional<double> v) { return v ? fmt(*v) : std::string(); }
template <typename T>
  requires std::is_integral_v<T>
std::string fmt(T v) {
  return std::to_string(v);
}

// RFC 4180 quoting.
inline std::string quote(std::string_view s) {
  if (s.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

inline std::vector<std::string> parse_csv_line(std::string_view line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(std::move(cur));
  return out;
}

inline const std::vector<std::string>& metrics_columns() {
  static const std::vector<std::string> cols{
      "schema_version", "mean_latency_s", "throughput_tps", "success_rate", "node_traffic_mb",
      "cross_shard_throughput_tps", "submitted", "committed", "failed", "pending", "cross_shard_submitted",
      "cross_shard_committed", "duration_s", "total_bytes", "rsu_count", "shard_count"};
  return cols;
}

inline std::vector<std::string> metrics_values(const MetricsRecord& m) {
  return {fmt(kSchemaVersion),
          fmt(m.mean_latency_s),
          fmt(m.throughput_tps),
          fmt(m.success_rate),
          fmt(m.node_traffic_mb),
          fmt(m.cross_shard_throughput_tps),
          fmt(m.submitted),
          fmt(m.committed),
          fmt(m.failed),
          fmt(m.pending),
          fmt(m.cross_shard_submitted),
          fmt(m.cross_shard_committed),
          fmt(m.duration_s),
          fmt(m.total_bytes),
          fmt(m.rsu_count),
          fmt(m.shard_count)};
}

inline void write_row(std::ostream& os, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) os << ',';
    os << quote(fields[i]);
  }
  os << '\n';
}

inline void write_metrics_csv(std::ostream& os, const MetricsRecord& m) {
  write_row(os, metrics_columns());
  write_row(os, metrics_values(m));
}

inline void write_epochs_csv(std::ostream& os, std::span<const EpochRecord> epochs) {
  write_row(os, {"epoch", "start_s", "online", "byzantine", "fitness", "trust_gap", "count_gap", "stability_gap",
                 "max_malicious_ratio", "max_tree_height", "max_tree_latency_s", "mean_trust", "committed",
                 "failed", "cross_shard_committed"});
  for (const auto& e : epochs)
    write_row(os, {fmt(e.epoch), fmt(e.start_s), fmt(e.online), fmt(e.byzantine), fmt(e.fitness), fmt(e.trust_gap),
                   fmt(e.count_gap), fmt(e.stability_gap), fmt(e.max_malicious_ratio), fmt(e.max_tree_height),
                   fmt(e.max_tree_latency_s), fmt(e.mean_trust), fmt(e.committed), fmt(e.failed),
                   fmt(e.cross_shard_committed)});
}

inline std::string_view kind_name(hashgraph::TxKind k) {
  return k == hashgraph::TxKind::cross_shard ? "cross_shard" : "normal";
}

inline void write_tx_log(std::ostream& os, std::span<const TxLogRow> rows) {
  write_row(os, {"tx_id", "vehicle", "origin_rsu", "origin_shard", "kind", "t_sub", "t_con", "status", "t_decided"});
  for (const auto& r : rows)
    write_row(os, {fmt(r.id), fmt(r.vehicle), fmt(r.origin_rsu), fmt(r.origin_shard), std::string(kind_name(r.kind)),
                   fmt(r.t_sub), fmt(r.t_con), std::string(to_string(r.status)), fmt(r.t_decided)});
}

inline void write_byte_log(std::ostream& os, std::span<const ByteLogRow> rows) {
  write_row(os, {"epoch", "node", "bytes_sent"});
  for (const auto& r : rows) write_row(os, {fmt(r.epoch), fmt(r.node), fmt(r.bytes_sent)});
}

}  // namespace drdst::metrics

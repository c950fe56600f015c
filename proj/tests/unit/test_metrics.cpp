#include <sstream>

#include <gtest/gtest.h>

#include "drdst/metrics.hpp"

using namespace drdst;
using namespace drdst::metrics;

namespace {

TxLogRow committed(double sub, double con, hashgraph::TxKind k = hashgraph::TxKind::normal) {
  TxLogRow r;
  r.t_sub = sub;
  r.t_con = con;
  r.t_decided = con;
  r.status = TxStatus::committed;
  r.kind = k;
  return r;
}

}  // namespace

TEST(Metrics, LatencyMean) {
  const std::vector<TxLogRow> rows{committed(0, 2), committed(1, 3)};
  const auto m = compute_metrics(rows, {}, 3, 1, 2);
  ASSERT_TRUE(m.mean_latency_s);
  EXPECT_DOUBLE_EQ(*m.mean_latency_s, 2.0);
}

TEST(Metrics, ThroughputAndSuccess) {
  std::vector<TxLogRow> rows;
  for (int i = 0; i < 3000; ++i) rows.push_back(committed(i * 0.001, 5.0));
  EXPECT_DOUBLE_EQ(compute_metrics(rows, {}, 10, 1, 2).throughput_tps, 300.0);

  std::vector<TxLogRow> mix;
  for (int i = 0; i < 90; ++i) mix.push_back(committed(0, 1));
  for (int i = 0; i < 10; ++i) {
    TxLogRow f;
    f.status = TxStatus::failed;
    f.t_decided = 2;
    mix.push_back(f);
  }
  const std::vector<ByteLogRow> bytes{{0, 0, 10'000'000}, {0, 1, 20'000'000}, {0, 2, 30'000'000}};
  const auto m = compute_metrics(mix, bytes, 10, 3, 2);
  EXPECT_DOUBLE_EQ(m.success_rate, 0.9);
  EXPECT_DOUBLE_EQ(m.node_traffic_mb, 20.0);
  EXPECT_EQ(m.committed + m.failed + m.pending, m.submitted);
}

TEST(Metrics, DurationIsLastDecision) {
  const std::vector<TxLogRow> rows{committed(0, 14), committed(1, 3, hashgraph::TxKind::cross_shard)};
  const auto m = compute_metrics(rows, {}, 10, 1, 2);
  EXPECT_DOUBLE_EQ(m.duration_s, 14.0);
  EXPECT_DOUBLE_EQ(m.cross_shard_throughput_tps, 1.0 / 14.0);
  EXPECT_EQ(m.cross_shard_committed, 1u);
}

TEST(Metrics, NoCommitsMeansNoLatency) {
  TxLogRow p;
  const auto m = compute_metrics(std::vector{p}, {}, 5, 1, 2);
  EXPECT_FALSE(m.mean_latency_s);
  EXPECT_EQ(m.pending, 1u);
  EXPECT_THROW(compute_metrics({}, {}, 5, 0, 2), DomainError);
}

TEST(Csv, ShortestRoundTrip) {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, 123456.789, -2.5, 0.0}) EXPECT_EQ(std::stod(fmt(v)), v);
  EXPECT_EQ(fmt(std::optional<double>{}), "");
  EXPECT_EQ(fmt(42), "42");
}

TEST(Csv, QuotingRoundTrip) {
  const std::vector<std::string> fields{"plain", "with,comma", "with \"quote\"", "", "line\nbreak"};
  std::ostringstream os;
  write_row(os, fields);
  std::string line = os.str();
  line.pop_back();
  EXPECT_EQ(parse_csv_line(line), fields);
}

TEST(Csv, MetricsHeaderAndValuesAlign) {
  MetricsRecord m;
  m.mean_latency_s = 1.5;
  m.rsu_count = 3;
  std::ostringstream os;
  write_metrics_csv(os, m);
  std::istringstream in(os.str());
  std::string h, v;
  std::getline(in, h);
  std::getline(in, v);
  const auto hv = parse_csv_line(h), vv = parse_csv_line(v);
  ASSERT_EQ(hv.size(), vv.size());
  EXPECT_EQ(hv.front(), "schema_version");
  EXPECT_EQ(vv[1], "1.5");
}

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "drdst/cli.hpp"

using namespace drdst;
namespace fs = std::filesystem;

namespace {

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("drdst_cli_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
                                        "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string write(const std::string& name, const std::string& text) {
    const auto p = dir_ / name;
    std::ofstream(p) << text;
    return p.string();
  }
  static std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }
  int cli(const std::string& args) {
    const std::string cmd = std::string(DRDST_CLI_PATH) + " " + args + " >" + (dir_ / "stdout").string() + " 2>" +
                            (dir_ / "stderr").string();
    const int rc = std::system(cmd.c_str());
    return WEXITSTATUS(rc);
  }

  fs::path dir_;
};

const char* kSmall = R"({"area_km2": 25, "rsu_count": 20, "shard_count": 2, "vehicle_count": 100,
  "request_rate_tps": 100, "duration_seconds": 5, "gsa": {"generations": 10, "population_size": 10}})";

}  // namespace

TEST_F(CliTest, RunWritesCsvAndIsDeterministic) {
  const auto cfg = write("c.json", kSmall);
  const auto a = (dir_ / "a.csv").string(), b = (dir_ / "b.csv").string();
  ASSERT_EQ(cli("run --config " + cfg + " --seed 3 --out " + a), 0);
  ASSERT_EQ(cli("run --config " + cfg + " --seed 3 --out " + b), 0);
  EXPECT_TRUE(slurp(dir_ / "stdout").empty());
  EXPECT_EQ(slurp(a), slurp(b));
  EXPECT_EQ(slurp(a + ".epochs.csv"), slurp(b + ".epochs.csv"));
  EXPECT_EQ(slurp(a).rfind("schema_version,", 0), 0u);
}

TEST_F(CliTest, RunSummaryAndJson) {
  const auto cfg = write("c.json", kSmall);
  const auto out = (dir_ / "m.json").string();
  ASSERT_EQ(cli("run --config " + cfg + " --out " + out + " --format json --summary --tx-log " +
                (dir_ / "tx.csv").string() + " --byte-log " + (dir_ / "b.csv").string()),
            0);
  EXPECT_NE(slurp(dir_ / "stdout").find("throughput"), std::string::npos);
  const auto j = nlohmann::json::parse(slurp(out));
  EXPECT_EQ(j["metrics"]["rsu_count"], 20);
  EXPECT_GT(j["epochs"].size(), 0u);
  EXPECT_EQ(slurp(dir_ / "tx.csv").rfind("tx_id,vehicle,origin_rsu,origin_shard,kind,t_sub,t_con", 0), 0u);
  EXPECT_EQ(slurp(dir_ / "b.csv").rfind("epoch,node,bytes_sent", 0), 0u);
}

TEST_F(CliTest, ConfigErrorsExitTwo) {
  const auto bad = write("bad.json", R"({"shard_count": 1})");
  EXPECT_EQ(cli("run --config " + bad + " --out " + (dir_ / "x.csv").string()), 2);
  EXPECT_NE(slurp(dir_ / "stderr").find("shard_count"), std::string::npos);
  EXPECT_FALSE(fs::exists(dir_ / "x.csv"));

  const auto unknown = write("u.json", R"({"shards": 4})");
  EXPECT_EQ(cli("run --config " + unknown + " --out " + (dir_ / "x.csv").string()), 2);
  EXPECT_NE(slurp(dir_ / "stderr").find("shards"), std::string::npos);

  EXPECT_EQ(cli("run --config " + (dir_ / "missing.json").string() + " --out x.csv"), 2);
  EXPECT_EQ(cli("run --out x.csv"), 2);
  EXPECT_EQ(cli("frobnicate"), 2);
}

TEST_F(CliTest, RuntimeErrorsExitThree) {
  const auto cfg = write("c.json", kSmall);
  EXPECT_EQ(cli("run --config " + cfg + " --out " + (dir_ / "no/such/dir/m.csv").string()), 3);
}

TEST_F(CliTest, SweepGridOrder) {
  write("base.json", kSmall);
  const auto spec = write("s.json", R"({"base_config": "base.json",
    "axes": {"shard_count": [2, 3], "ablation": ["none", "no_dag"]}, "seeds": [5, 6]})");
  ASSERT_EQ(cli("sweep --spec " + spec + " --out " + (dir_ / "out").string() + " --jobs 2"), 0);
  std::istringstream in(slurp(dir_ / "out" / "sweep.csv"));
  std::string line;
  std::getline(in, line);
  const auto header = metrics::parse_csv_line(line);
  ASSERT_GE(header.size(), 5u);
  EXPECT_EQ(std::vector<std::string>(header.begin(), header.begin() + 5),
            (std::vector<std::string>{"run_id", "seed", "shard_count", "ablation", "status"}));
  std::vector<std::string> keys;
  while (std::getline(in, line)) {
    const auto f = metrics::parse_csv_line(line);
    keys.push_back(f[2] + "/" + f[3] + "/" + f[1]);
    EXPECT_EQ(f[4], "ok");
  }
  EXPECT_EQ(keys, (std::vector<std::string>{"2/none/5", "2/none/6", "2/no_dag/5", "2/no_dag/6", "3/none/5",
                                            "3/none/6", "3/no_dag/5", "3/no_dag/6"}));
}

TEST_F(CliTest, SweepPartialFailureExitsOne) {
  // 20 RSUs cannot host 30 shards; only that cell fails
  const auto bad = write("b.json", std::string(R"({"base": )") + kSmall + R"(, "axes": {"shard_count": [2, 30]}})");
  EXPECT_EQ(cli("sweep --spec " + bad + " --out " + (dir_ / "bad").string()), 1);
  std::istringstream in(slurp(dir_ / "bad" / "sweep.csv"));
  std::string line;
  std::getline(in, line);
  std::getline(in, line);
  EXPECT_EQ(metrics::parse_csv_line(line)[3], "ok");
  std::getline(in, line);
  const auto failed = metrics::parse_csv_line(line);
  EXPECT_EQ(failed[3], "failed");
  EXPECT_NE(failed.back().find("shard_count"), std::string::npos);
  const auto unknown = write("k.json", R"({"axes": {}, "sedes": [1]})");
  EXPECT_EQ(cli("sweep --spec " + unknown + " --out " + (dir_ / "k").string()), 2);
}

TEST(Sweep, GridArithmetic) {
  nlohmann::ordered_json j;
  j["axes"]["shard_count"] = {4, 6, 8, 10, 12};
  j["seeds"] = {1, 2, 3};
  const auto s = cli::parse_sweep(j);
  EXPECT_EQ(cli::sweep_grid(s).size(), 15u);

  nlohmann::ordered_json empty;
  empty["base"] = {{"rsu_count", 30}};
  const auto e = cli::parse_sweep(empty);
  const auto g = cli::sweep_grid(e);
  ASSERT_EQ(g.size(), 1u);
  EXPECT_EQ(cli::point_config(e, g[0]).rsu_count, 30);

  nlohmann::ordered_json ab;
  ab["axes"]["ablation"] = {"none", "no_dag", "no_smlbt", "no_sharding"};
  ab["axes"]["shard_count"] = {4, 8};
  const auto a = cli::parse_sweep(ab);
  const auto ga = cli::sweep_grid(a);
  ASSERT_EQ(ga.size(), 8u);
  EXPECT_EQ(cli::point_config(a, ga[2]).ablation, Ablation::no_dag);
  EXPECT_EQ(cli::point_config(a, ga[3]).shard_count, 8);
}

TEST(Sweep, DottedAxesAndCap) {
  nlohmann::ordered_json j;
  j["axes"]["gsa.generations"] = {5, 7};
  j["seeds"] = {1};
  const auto s = cli::parse_sweep(j);
  EXPECT_EQ(cli::point_config(s, cli::sweep_grid(s)[1]).gsa.generations, 7);

  nlohmann::ordered_json big;
  big["axes"]["rsu_count"] = nlohmann::json::array();
  for (int i = 0; i < 101; ++i) big["axes"]["rsu_count"].push_back(100 + i);
  big["seeds"] = nlohmann::json::array();
  for (int i = 0; i < 100; ++i) big["seeds"].push_back(i);
  EXPECT_THROW(cli::parse_sweep(big), ConfigError);
  big["max_runs"] = 20000;
  EXPECT_NO_THROW(cli::parse_sweep(big));
}

TEST_F(CliTest, ShardBenchRowsAndOrdering) {
  const auto cfg = write("b.json", R"({"rsu_count": 50, "shard_count": 4,
    "gsa": {"generations": 12, "population_size": 10, "bench_runs": 5}})");
  const auto out = (dir_ / "bench.csv").string();
  ASSERT_EQ(cli("shard-bench --config " + cfg + " --out " + out), 0);
  const std::string text = slurp(out);
  EXPECT_EQ(std::ranges::count(text, '\n'), 1 + 2 * 5 * 12);
  EXPECT_EQ(text.rfind("generation,algorithm,run_id,best_fitness\n", 0), 0u);
  const auto out2 = (dir_ / "bench2.csv").string();
  ASSERT_EQ(cli("shard-bench --config " + cfg + " --out " + out2), 0);
  EXPECT_EQ(slurp(out2), text);
}

#pragma once

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "drdst/config.hpp"
#include "drdst/metrics.hpp"
#include "drdst/sharding.hpp"
#include "drdst/sim.hpp"

namespace drdst::cli {

enum ExitCode : int { kOk = 0, kPartialFailure = 1, kConfigError = 2, kRuntimeError = 3 };

//------------------------------------------------------------------------------
// Logging (stderr, level from DRDST_LOG)
//------------------------------------------------------------------------------

enum class LogLevel { off = 0, error = 1, warn = 2, info = 3, debug = 4 };

inline LogLevel log_level() {
  static const LogLevel level = [] {
    const char* env = std::getenv("DRDST_LOG");
    const std::string_view v = env ? env : "warn";
    if (v == "off") return LogLevel::off;
    if (v == "error") return LogLevel::error;
    if (v == "info") return LogLevel::info;
    if (v == "debug") return LogLevel::debug;
    return LogLevel::warn;
  }();
  return level;
}

inline void log(LogLevel level, std::string_view msg) {
  static std::mutex mu;
  if (level > log_level() || level == LogLevel::off) return;
  static constexpr std::string_view names[] = {"", "error", "warn", "info", "debug"};
  std::lock_guard lock(mu);
  std::cerr << "drdst: " << names[static_cast<int>(level)] << ": " << msg << '\n';
}

//------------------------------------------------------------------------------
// run
//------------------------------------------------------------------------------

struct RunArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string format = "csv";
  bool summary = false;
  std::string tx_log;
  std::string byte_log;
  std::string tree_log;
  std::string dag_log;
};

inline std::ofstream open_out(const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path);
  return os;
}

inline nlohmann::ordered_json metrics_json(const metrics::MetricsRecord& m) {
  nlohmann::ordered_json j;
  const auto cols = metrics::metrics_columns();
  const auto vals = metrics::metrics_values(m);
  for (std::size_t i = 0; i < cols.size(); ++i) {
    if (vals[i].empty()) {
      j[cols[i]] = nullptr;
    } else {
      j[cols[i]] = nlohmann::json::parse(vals[i]);
    }
  }
  return j;
}

inline void print_summary(std::ostream& os, const SimConfig& cfg, const metrics::MetricsRecord& m) {
  os << "rsus " << cfg.rsu_count << ", shards " << cfg.shard_count << ", seed " << cfg.rng_seed << ", ablation "
     << to_string(cfg.ablation) << '\n';
  os << "  mean latency      " << (m.mean_latency_s ? metrics::fmt(*m.mean_latency_s) + " s" : "n/a") << '\n';
  os << "  throughput        " << metrics::fmt(m.throughput_tps) << " tps\n";
  os << "  success rate      " << metrics::fmt(m.success_rate) << '\n';
  os << "  node traffic      " << metrics::fmt(m.node_traffic_mb) << " MB\n";
  os << "  cross-shard tput  " << metrics::fmt(m.cross_shard_throughput_tps) << " tps\n";
  os << "  committed/submitted " << m.committed << '/' << m.submitted << " over " << metrics::fmt(m.duration_s)
     << " s\n";
}

inline int cmd_run(const RunArgs& a, std::ostream& summary_out = std::cout) {
  SimConfig cfg;
  try {
    cfg = load_config(a.config);
    if (a.seed) cfg.rng_seed = *a.seed;
    cfg.validate();
    if (a.format != "csv" && a.format != "json") throw ConfigError("--format", "expected csv or json");
  } catch (const ConfigError& e) {
    log(LogLevel::error, e.what());
    return kConfigError;
  }
  try {
    std::ofstream tree_os, dag_os;
    sim::RunOptions opt;
    opt.record_tx_log = !a.tx_log.empty();
    opt.record_byte_log = true;
    if (!a.tree_log.empty()) {
      tree_os = open_out(a.tree_log);
      opt.tree_log = &tree_os;
    }
    if (!a.dag_log.empty()) {
      dag_os = open_out(a.dag_log);
      opt.dag_log = &dag_os;
    }
    log(LogLevel::info, "run seed " + std::to_string(cfg.rng_seed));
    const auto res = sim::run(cfg, opt);

    if (a.format == "csv") {
      auto os = open_out(a.out);
      metrics::write_metrics_csv(os, res.metrics);
      auto es = open_out(a.out + ".epochs.csv");
      metrics::write_epochs_csv(es, res.epochs);
    } else {
      nlohmann::ordered_json j;
      j["metrics"] = metrics_json(res.metrics);
      std::ostringstream es;
      metrics::write_epochs_csv(es, res.epochs);
      auto& arr = j["epochs"] = nlohmann::ordered_json::array();
      std::istringstream in(es.str());
      std::string line;
      std::getline(in, line);
      const auto header = metrics::parse_csv_line(line);
      while (std::getline(in, line)) {
        const auto vals = metrics::parse_csv_line(line);
        nlohmann::ordered_json row;
        for (std::size_t i = 0; i < header.size(); ++i) row[header[i]] = nlohmann::json::parse(vals[i]);
        arr.push_back(std::move(row));
      }
      auto os = open_out(a.out);
      os << j.dump(2) << '\n';
    }
    if (!a.tx_log.empty()) {
      auto os = open_out(a.tx_log);
      metrics::write_tx_log(os, res.tx_log);
    }
    if (!a.byte_log.empty()) {
      auto os = open_out(a.byte_log);
      metrics::write_byte_log(os, res.byte_log);
    }
    if (a.summary) print_summary(summary_out, cfg, res.metrics);
  } catch (const ConfigError& e) {
    log(LogLevel::error, e.what());
    return kConfigError;
  } catch (const std::exception& e) {
    log(LogLevel::error, e.what());
    return kRuntimeError;
  }
  return kOk;
}

//------------------------------------------------------------------------------
// sweep
//------------------------------------------------------------------------------

inline constexpr std::size_t kDefaultMaxRuns = 10'000;

struct SweepSpec {
  nlohmann::json base = nlohmann::json::object();
  std::vector<std::pair<std::string, std::vector<nlohmann::json>>> axes;  // definition order
  std::vector<std::uint64_t> seeds;
  std::size_t max_runs = kDefaultMaxRuns;

  std::size_t grid_size() const {
    std::size_t n = 1;
    for (const auto& [name, vals] : axes) n *= vals.size();
    return n;
  }
  std::size_t run_count() const { return grid_size() * seeds.size(); }
};

struct SweepPoint {
  std::size_t run_id;
  std::uint64_t seed;
  std::vector<nlohmann::json> values;  // one per axis
};

// Sets a possibly dotted key ("gsa.generations") inside a config object.
inline void set_path(nlohmann::json& j, std::string_view path, const nlohmann::json& v) {
  nlohmann::json* cur = &j;
  while (true) {
    const auto dot = path.find('.');
    const std::string key(path.substr(0, dot));
    if (dot == std::string_view::npos) {
      (*cur)[key] = v;
      return;
    }
    if (!cur->contains(key)) (*cur)[key] = nlohmann::json::object();
    cur = &(*cur)[key];
    path = path.substr(dot + 1);
  }
}

// {"base": {...} | "base_config": "file.json", "axes": {name: [values]},
//  "seeds": [...], "max_runs": N}. Relative paths resolve against the spec.
inline SweepSpec parse_sweep(const nlohmann::ordered_json& j, const std::filesystem::path& dir = {}) {
  if (!j.is_object()) throw ConfigError("<sweep>", "expected an object");
  SweepSpec s;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& k = it.key();
    if (k == "base") {
      if (!it->is_object()) throw ConfigError("base", "expected an object");
      s.base = nlohmann::json::parse(it->dump());
    } else if (k == "base_config") {
      if (!it->is_string()) throw ConfigError("base_config", "expected a path");
      std::filesystem::path p = it->get<std::string>();
      if (p.is_relative()) p = dir / p;
      std::ifstream in(p);
      if (!in) throw ConfigError("base_config", "cannot open " + p.string());
      try {
        in >> s.base;
      } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("base_config", e.what());
      }
    } else if (k == "axes") {
      if (!it->is_object()) throw ConfigError("axes", "expected an object of lists");
      for (auto a = it->begin(); a != it->end(); ++a) {
        if (!a->is_array() || a->empty()) throw ConfigError("axes." + a.key(), "expected a non-empty list");
        std::vector<nlohmann::json> vals;
        for (const auto& v : *a) vals.push_back(nlohmann::json::parse(v.dump()));
        s.axes.emplace_back(a.key(), std::move(vals));
      }
    } else if (k == "seeds") {
      if (!it->is_array() || it->empty()) throw ConfigError("seeds", "expected a non-empty list");
      for (const auto& v : *it) {
        if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
          throw ConfigError("seeds", "expected non-negative integers");
        s.seeds.push_back(v.get<std::uint64_t>());
      }
    } else if (k == "max_runs") {
      if (!it->is_number_integer() || it->get<std::int64_t>() < 1) throw ConfigError("max_runs", "must be >= 1");
      s.max_runs = it->get<std::size_t>();
    } else {
      throw ConfigError(k, "unknown key");
    }
  }
  if (s.seeds.empty()) {
    std::uint64_t seed = 1;
    if (auto it = s.base.find("rng_seed"); it != s.base.end() && it->is_number_unsigned()) seed = it->get<std::uint64_t>();
    s.seeds.push_back(seed);
  }
  if (s.run_count() > s.max_runs)
    throw ConfigError("max_runs", std::to_string(s.run_count()) + " runs exceed the cap of " +
                                      std::to_string(s.max_runs));
  return s;
}

// Lexicographic over axes in definition order, then seed.
inline std::vector<SweepPoint> sweep_grid(const SweepSpec& s) {
  std::vector<SweepPoint> out;
  const std::size_t g = s.grid_size();
  out.reserve(g * s.seeds.size());
  for (std::size_t cell = 0; cell < g; ++cell) {
    std::vector<nlohmann::json> vals(s.axes.size());
    std::size_t rest = cell;
    for (std::size_t a = s.axes.size(); a-- > 0;) {
      const auto& list = s.axes[a].second;
      vals[a] = list[rest % list.size()];
      rest /= list.size();
    }
    for (std::uint64_t seed : s.seeds) out.push_back({out.size(), seed, vals});
  }
  return out;
}

inline SimConfig point_config(const SweepSpec& s, const SweepPoint& p) {
  nlohmann::json j = s.base;
  for (std::size_t a = 0; a < s.axes.size(); ++a) set_path(j, s.axes[a].first, p.values[a]);
  j["rng_seed"] = p.seed;
  return config_from_json(j);
}

inline std::string axis_text(const nlohmann::json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); }

struct SweepRow {
  bool ok = false;
  std::string error;
  metrics::MetricsRecord metrics;
};

inline void write_sweep_csv(std::ostream& os, const SweepSpec& s, const std::vector<SweepPoint>& grid,
                            const std::vector<SweepRow>& rows) {
  std::vector<std::string> header{"run_id", "seed"};
  for (const auto& [name, vals] : s.axes) header.push_back(name);
  header.push_back("status");
  for (const auto& c : metrics::metrics_columns()) header.push_back(c);
  header.push_back("error");
  metrics::write_row(os, header);
  const std::size_t n_metrics = metrics::metrics_columns().size();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    std::vector<std::string> f{metrics::fmt(grid[i].run_id), metrics::fmt(grid[i].seed)};
    for (const auto& v : grid[i].values) f.push_back(axis_text(v));
    f.push_back(rows[i].ok ? "ok" : "failed");
    if (rows[i].ok) {
      for (auto& v : metrics::metrics_values(rows[i].metrics)) f.push_back(std::move(v));
    } else {
      f.insert(f.end(), n_metrics, std::string());
    }
    f.push_back(rows[i].error);
    metrics::write_row(os, f);
  }
}

inline std::vector<SweepRow> run_grid(const SweepSpec& s, const std::vector<SweepPoint>& grid, unsigned jobs) {
  std::vector<SweepRow> rows(grid.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < grid.size(); i = next++) {
      try {
        const auto cfg = point_config(s, grid[i]);
        sim::RunOptions opt;
        opt.record_tx_log = false;
        opt.record_byte_log = false;
        rows[i].metrics = sim::run(cfg, opt).metrics;
        rows[i].ok = true;
        log(LogLevel::info, "run " + std::to_string(i) + " done");
      } catch (const std::exception& e) {
        rows[i].error = e.what();
        log(LogLevel::warn, "run " + std::to_string(i) + " failed: " + e.what());
      }
    }
  };
  jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(std::max<std::size_t>(grid.size(), 1))));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < jobs; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return rows;
}

inline int cmd_sweep(const std::string& spec_path, const std::string& out_dir, unsigned jobs) {
  SweepSpec spec;
  std::vector<SweepPoint> grid;
  try {
    std::ifstream in(spec_path);
    if (!in) throw ConfigError("--spec", "cannot open " + spec_path);
    nlohmann::ordered_json j;
    try {
      in >> j;
    } catch (const nlohmann::json::parse_error& e) {
      throw ConfigError("--spec", e.what());
    }
    spec = parse_sweep(j, std::filesystem::path(spec_path).parent_path());
    grid = sweep_grid(spec);
  } catch (const ConfigError& e) {
    log(LogLevel::error, e.what());
    return kConfigError;
  }
  try {
    std::filesystem::create_directories(out_dir);
    const auto rows = run_grid(spec, grid, jobs);
    auto os = open_out((std::filesystem::path(out_dir) / "sweep.csv").string());
    write_sweep_csv(os, spec, grid, rows);
    const bool all_ok = std::ranges::all_of(rows, [](const SweepRow& r) { return r.ok; });
    return all_ok ? kOk : kPartialFailure;
  } catch (const std::exception& e) {
    log(LogLevel::error, e.what());
    return kRuntimeError;
  }
}

//------------------------------------------------------------------------------
// shard-bench
//------------------------------------------------------------------------------

struct BenchTrace {
  std::string algorithm;
  std::size_t run_id;
  std::vector<double> history;
};

// GSA and the plain GA on the same initial population of RSUs, one seeded
// stream per run shared by both.
inline std::vector<BenchTrace> shard_bench(const SimConfig& cfg) {
  const Rng root(cfg.rng_seed);
  auto nodes = sim::make_rsus(cfg, root);
  sim::score_stability(nodes, cfg.scoring);
  double s_max = 0.0;
  for (const auto& n : nodes) s_max = std::max(s_max, n.stability());
  const auto params = sharding::GsaParams::from(cfg.gsa, s_max > 0.0 ? s_max : 1.0);
  const auto q = static_cast<std::uint32_t>(cfg.shard_count);
  std::vector<BenchTrace> out;
  for (int r = 0; r < cfg.gsa.bench_runs; ++r) {
    const Rng run_rng = root.substream("bench", static_cast<std::uint64_t>(r));
    Rng a = run_rng, b = run_rng;
    out.push_back({"gsa", static_cast<std::size_t>(r), sharding::gsa_run(nodes, q, params, cfg.thresholds, a).history});
    out.push_back({"ga", static_cast<std::size_t>(r), sharding::ga_baseline_run(nodes, q, params, cfg.thresholds, b).history});
  }
  return out;
}

inline void write_bench_csv(std::ostream& os, const std::vector<BenchTrace>& traces) {
  metrics::write_row(os, {"generation", "algorithm", "run_id", "best_fitness"});
  for (const auto& t : traces)
    for (std::size_t g = 0; g < t.history.size(); ++g)
      metrics::write_row(os, {metrics::fmt(g + 1), t.algorithm, metrics::fmt(t.run_id), metrics::fmt(t.history[g])});
}

inline int cmd_shard_bench(const std::string& config_path, const std::string& out) {
  SimConfig cfg;
  try {
    cfg = load_config(config_path);
  } catch (const ConfigError& e) {
    log(LogLevel::error, e.what());
    return kConfigError;
  }
  try {
    const auto traces = shard_bench(cfg);
    auto os = open_out(out);
    write_bench_csv(os, traces);
  } catch (const std::exception& e) {
    log(LogLevel::error, e.what());
    return kRuntimeError;
  }
  return kOk;
}

}  // namespace drdst::cli

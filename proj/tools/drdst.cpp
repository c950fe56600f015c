#include <iostream>
#include <thread>

#include <CLI11.hpp>

#include "drdst/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"drdst: sharded RSU ledger simulator"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "drdst 1.0.0");

  drdst::cli::RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "Simulate one configuration");
  run_cmd->add_option("--config", run.config, "JSON config file")->required();
  run_cmd->add_option("--seed", run.seed, "Override rng_seed");
  run_cmd->add_option("--out", run.out, "Metrics output path")->required();
  run_cmd->add_option("--format", run.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  run_cmd->add_flag("--summary", run.summary, "Print a short summary to stdout");
  run_cmd->add_option("--tx-log", run.tx_log, "Per-transaction CSV");
  run_cmd->add_option("--byte-log", run.byte_log, "Per-node byte CSV");
  run_cmd->add_option("--tree-log", run.tree_log, "Broadcast tree edges per epoch");
  run_cmd->add_option("--dag-log", run.dag_log, "DAG events with parents");

  std::string spec, sweep_out;
  unsigned jobs = 1;
  auto* sweep_cmd = app.add_subcommand("sweep", "Run a parameter grid");
  sweep_cmd->add_option("--spec", spec, "Sweep spec JSON")->required();
  sweep_cmd->add_option("--out", sweep_out, "Output directory")->required();
  sweep_cmd->add_option("--jobs", jobs, "Parallel runs")->check(CLI::PositiveNumber);

  std::string bench_config, bench_out;
  auto* bench_cmd = app.add_subcommand("shard-bench", "GSA against the plain GA");
  bench_cmd->add_option("--config", bench_config, "JSON config file")->required();
  bench_cmd->add_option("--out", bench_out, "Convergence CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : drdst::cli::kConfigError;
  }

  if (*run_cmd) return drdst::cli::cmd_run(run);
  if (*sweep_cmd) return drdst::cli::cmd_sweep(spec, sweep_out, jobs);
  if (*bench_cmd) return drdst::cli::cmd_shard_bench(bench_config, bench_out);
  return drdst::cli::kConfigError;
}

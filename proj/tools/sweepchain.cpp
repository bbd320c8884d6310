// Command-line front end: workload generation, dual-engine runs, sync
// experiments and oracle verification. See README for the file formats.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "sweep/harness.hpp"

namespace fs = std::filesystem;
using namespace sweep;

namespace {

struct CommonOpts {
  uint64_t seed = 1;
  uint64_t epoch_len = 100;
  uint64_t bloom_bits = 1 << 14;  // desk-scale default; the protocol default is 2^20
  uint32_t bloom_hashes = 4;
  std::string pivot_policy = "last-checkpoint";
  std::string out_dir = "out";
};

void add_common(CLI::App* cmd, CommonOpts& c) {
  cmd->add_option("--seed", c.seed, "workload rng seed");
  cmd->add_option("--epoch-len", c.epoch_len, "blocks per epoch");
  cmd->add_option("--bloom-bits", c.bloom_bits, "checkpoint bloom size in bits");
  cmd->add_option("--bloom-hashes", c.bloom_hashes, "checkpoint bloom hash count");
  cmd->add_option("--pivot-policy", c.pivot_policy, "last-checkpoint | head-minus-64");
  cmd->add_option("--out-dir", c.out_dir, "directory for generated artifacts");
  cmd->set_config("--config", "", "key=value config file; flags override it");
}

EpochConfig config_from(const CommonOpts& c) {
  EpochConfig cfg;
  cfg.epoch_length = c.epoch_len;
  cfg.bloom_bits = c.bloom_bits;
  cfg.bloom_hashes = c.bloom_hashes;
  return cfg;
}

PivotPolicy pivot_from(const CommonOpts& c) {
  auto p = pivot_policy_from_name(c.pivot_policy);
  if (!p) throw CLI::ValidationError("--pivot-policy", "unknown policy " + c.pivot_policy);
  return *p;
}

Trace load_trace(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open trace " + path);
  return read_trace_jsonl(in);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"account-sweeping chain simulator"};
  app.require_subcommand(1);

  CommonOpts c;

  // gen
  auto* gen = app.add_subcommand("gen", "generate a workload trace");
  WorkloadSpec spec;
  std::string model = "gap-bands";
  add_common(gen, c);
  gen->add_option("--accounts", spec.accounts, "workload account count");
  gen->add_option("--blocks", spec.blocks, "trace length in blocks");
  gen->add_option("--txs-per-block", spec.txs_per_block, "transfer intents per block");
  gen->add_option("--model", model, "fixed-ratio | gap-bands");
  gen->add_option("--active-ratio", spec.active_ratio, "active fraction (fixed-ratio model)");
  gen->add_option("--miners", spec.miners, "rotating miner pool size");
  gen->add_flag("--zero-value", spec.zero_value, "all transfers carry value 0");

  // run
  auto* run = app.add_subcommand("run", "replay a trace on both engines and emit reports");
  std::string trace_path = "out/trace.jsonl";
  bool with_sync = false;
  add_common(run, c);
  run->add_option("--trace", trace_path, "trace file from gen");
  run->add_flag("--sync-metrics", with_sync, "also measure sync sizes at every checkpoint");

  // sync
  auto* sync = app.add_subcommand("sync", "sync a fresh client from a replayed engine");
  std::string sync_mode = "compact", sync_engine = "sweep";
  add_common(sync, c);
  sync->add_option("--trace", trace_path, "trace file from gen");
  sync->add_option("--mode", sync_mode, "full-archive | fast | compact");
  sync->add_option("--engine", sync_engine, "sweep | vanilla");

  // verify
  auto* verify = app.add_subcommand("verify", "replay a trace and check the flat-ledger oracle");
  add_common(verify, c);
  verify->add_option("--trace", trace_path, "trace file from gen");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      spec.seed = c.seed;
      spec.epoch_length = c.epoch_len;
      auto m = activity_model_from_name(model);
      if (!m) throw std::runtime_error("unknown activity model " + model);
      spec.model = *m;
      Trace trace = generate_workload(spec);
      fs::create_directories(c.out_dir);
      fs::path path = fs::path(c.out_dir) / "trace.jsonl";
      std::ofstream out(path, std::ios::binary);
      write_trace_jsonl(trace, out);
      std::cout << "wrote " << path.string() << " (" << trace.blocks.size() << " blocks)\n";
      return 0;
    }

    if (run->parsed() || verify->parsed()) {
      Trace trace = load_trace(trace_path);
      RunOptions opts;
      opts.sync_metrics = with_sync && run->parsed();
      opts.pivot_policy = pivot_from(c);
      RunResult result = run_dual(trace, config_from(c), opts);
      if (run->parsed()) {
        emit_report(trace, result, c.out_dir);
        std::cout << "reports in " << c.out_dir << "\n";
      }
      if (!result.ok()) {
        std::cerr << "oracle divergence at checkpoint " << result.divergence->checkpoint
                  << ", account " << result.divergence->account_index << ": "
                  << result.divergence->detail << "\n";
        return 1;
      }
      std::cout << "oracle ok: " << result.total_normal_txs << " transfers, "
                << result.total_restore_txs << " restores\n";
      return 0;
    }

    if (sync->parsed()) {
      auto mode = sync_mode_from_name(sync_mode);
      if (!mode) throw std::runtime_error("unknown sync mode " + sync_mode);
      if (sync_engine != "sweep" && sync_engine != "vanilla")
        throw std::runtime_error("unknown engine " + sync_engine);

      Trace trace = load_trace(trace_path);
      RunOptions ropts;
      ropts.oracle_checks = false;
      RunResult result = run_dual(trace, config_from(c), ropts);
      if (!result.ok()) throw std::runtime_error("engine replay diverged; cannot sync");

      const Chain& host_chain = sync_engine == "sweep" ? *result.sweep : *result.vanilla;
      SyncHost host(host_chain);
      SyncOptions sopts;
      sopts.mode = *mode;
      sopts.pivot_policy = pivot_from(c);
      auto [report, chain] = run_sync(host, host_chain.config(),
                                      genesis_alloc_for(trace.spec), sopts);
      std::string json = report.to_json();
      fs::create_directories(c.out_dir);
      std::ofstream out(fs::path(c.out_dir) / "sync_report.json", std::ios::binary);
      out << json << "\n";
      std::cout << json << "\n";
      return report.verified ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

#pragma once

#include "sweep/restore.hpp"
#include "sweep/sync.hpp"
#include "sweep/workload.hpp"

namespace sweep {

struct RunOptions {
  bool oracle_checks = true;   // verify both engines against the flat ledger at every checkpoint
  bool sync_metrics = false;   // run all sync modes against both engines at every checkpoint
  PivotPolicy pivot_policy = PivotPolicy::LastCheckpoint;
};

struct RestoreStat {
  uint64_t block = 0;
  uint64_t last_active_checkpoint = 0;
  uint64_t proof_count = 0;
  uint64_t bundle_bytes = 0;
};

struct SyncSizeRow {
  uint64_t checkpoint = 0;
  bool sweep_engine = false;
  SyncMode mode = SyncMode::Fast;
  uint64_t pivot = 0;
  uint64_t wire_bytes = 0;
  uint64_t storage_bytes = 0;
};

struct MetricsRow {
  uint64_t checkpoint = 0;
  uint64_t active_accounts = 0;  // addresses written during the sealed epoch
  uint64_t total_accounts = 0;
  uint64_t sweep_trie_bytes = 0;    // checkpoint trie
  uint64_t vanilla_trie_bytes = 0;  // full current trie at the same height
  uint64_t restore_txs = 0;         // this epoch
  uint64_t normal_txs = 0;
};

struct Divergence {
  uint64_t checkpoint = 0;
  uint64_t account_index = 0;
  std::string detail;
};

struct RunResult {
  std::unique_ptr<Chain> sweep;
  std::unique_ptr<Chain> vanilla;
  std::vector<MetricsRow> rows;
  std::vector<RestoreStat> restore_stats;
  std::vector<SyncSizeRow> sync_sizes;
  std::vector<u128> final_ledger;  // flat-ledger oracle, by account index
  uint64_t total_normal_txs = 0;
  uint64_t total_restore_txs = 0;
  double run_seconds = 0;
  std::optional<Divergence> divergence;  // first oracle mismatch, if any

  bool ok() const { return !divergence; }
};

/// Replays the trace on both engines (sweeping and vanilla), auto-inserting
/// miner-paid restore transactions whenever a trace sender's live balance in
/// the sweeping engine falls short of the flat ledger. Checks both engines
/// against the ledger at every checkpoint.
RunResult run_dual(const Trace& trace, EpochConfig cfg, const RunOptions& opts = {});

/// Writes active_ratio.csv, restore_stats.csv, sync_sizes.csv and
/// metrics.json under `out_dir`. Column orders are fixed; see README.
void emit_report(const Trace& trace, const RunResult& result, const std::string& out_dir);

}  // namespace sweep

#include <doctest.h>

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "helpers.hpp"
#include "sweep/harness.hpp"

using namespace sweep;
using namespace sweep::test;

namespace {

namespace fs = std::filesystem;

WorkloadSpec small_spec() {
  WorkloadSpec spec;
  spec.accounts = 80;
  spec.blocks = 120;
  spec.txs_per_block = 8;
  spec.miners = 3;
  spec.epoch_length = 20;
  spec.seed = 42;
  return spec;
}

std::string serialize(const Trace& trace) {
  std::stringstream buf;
  write_trace_jsonl(trace, buf);
  return buf.str();
}

EpochConfig desk_cfg() {
  EpochConfig cfg;
  cfg.bloom_bits = 1 << 12;
  return cfg;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  REQUIRE(f);
  std::stringstream buf;
  buf << f.rdbuf();
  return buf.str();
}

}  // namespace

TEST_CASE("trace generation is deterministic in the seed") {
  WorkloadSpec spec = small_spec();
  CHECK(serialize(generate_workload(spec)) == serialize(generate_workload(spec)));
  WorkloadSpec other = spec;
  other.seed = 43;
  CHECK(serialize(generate_workload(other)) != serialize(generate_workload(spec)));
}

TEST_CASE("trace JSONL round-trips exactly") {
  Trace trace = generate_workload(small_spec());
  std::stringstream buf(serialize(trace));
  Trace back = read_trace_jsonl(buf);
  CHECK(serialize(back) == serialize(trace));
  CHECK(back.spec.epoch_length == trace.spec.epoch_length);

  std::stringstream empty;
  CHECK_THROWS_AS(read_trace_jsonl(empty), std::runtime_error);
}

TEST_CASE("infeasible or degenerate specs are rejected up front") {
  WorkloadSpec spec = small_spec();
  spec.txs_per_block = static_cast<uint32_t>(spec.accounts * 1024 + 1);
  CHECK_THROWS_AS(generate_workload(spec), std::invalid_argument);

  spec = small_spec();
  spec.accounts = 0;
  CHECK_THROWS_AS(generate_workload(spec), std::invalid_argument);

  spec = small_spec();
  spec.model = ActivityModel::FixedRatio;
  spec.active_ratio = 0.0;
  CHECK_THROWS_AS(generate_workload(spec), std::invalid_argument);
}

TEST_CASE("every trace block obeys the planner's structural invariants") {
  Trace trace = generate_workload(small_spec());
  uint64_t total = 0;
  for (const TraceBlock& tb : trace.blocks) {
    CHECK(tb.miner >= trace.spec.accounts);
    CHECK(tb.txs.size() <= trace.spec.txs_per_block);
    std::set<uint32_t> senders, recipients;
    for (const TraceTx& tx : tb.txs) {
      CHECK(tx.from != tx.to);
      CHECK(tx.fee == kTransferFee);
      CHECK(senders.insert(tx.from).second);
      CHECK(recipients.insert(tx.to).second);
      CHECK(!senders.count(tx.to));
      CHECK(!recipients.count(tx.from));
      ++total;
    }
  }
  CHECK(total > trace.spec.blocks);  // the workload is not trivially empty
}

TEST_CASE("fixed-ratio activity lands on the requested ratio") {
  WorkloadSpec spec = small_spec();
  spec.model = ActivityModel::FixedRatio;
  spec.accounts = 300;
  spec.blocks = 150;
  spec.txs_per_block = 15;
  spec.epoch_length = 50;
  spec.active_ratio = 0.1;
  Trace trace = generate_workload(spec);
  for (double ratio : measured_activity(trace)) {
    CHECK(ratio >= 0.05);
    CHECK(ratio <= 0.15);
  }
}

TEST_CASE("gap-bands activity declines after the first epoch") {
  WorkloadSpec spec = small_spec();
  spec.accounts = 400;
  spec.blocks = 300;
  spec.txs_per_block = 12;
  spec.epoch_length = 50;
  std::vector<double> ratios = measured_activity(generate_workload(spec));
  REQUIRE(ratios.size() == 6);
  CHECK(ratios.front() > ratios.back());
  CHECK(ratios.back() < 0.75 * ratios.front());
}

TEST_CASE("dual-engine run stays on the ledger and needs restores") {
  Trace trace = generate_workload(small_spec());
  RunResult result = run_dual(trace, desk_cfg());
  REQUIRE(result.ok());
  CHECK(result.rows.size() == 6);
  CHECK(result.total_normal_txs > 0);
  // The one-shot cohort goes dormant and gets swept, so somebody must be
  // restored eventually.
  CHECK(result.total_restore_txs > 0);
  CHECK(result.restore_stats.size() == result.total_restore_txs);

  // The vanilla engine agrees with the flat ledger at the end, account by
  // account (the sweeping engine was oracle-checked at every checkpoint).
  for (uint64_t i = 0; i < trace.spec.total_indices(); ++i) {
    auto flat = result.vanilla->resolve(account_address(i));
    CHECK((flat ? flat->balance : 0) == result.final_ledger[i]);
  }

  // The sweeping engine's working set is a fraction of the vanilla trie.
  const MetricsRow& last = result.rows.back();
  CHECK(last.sweep_trie_bytes < last.vanilla_trie_bytes);
  CHECK(last.active_accounts < trace.spec.accounts);
}

TEST_CASE("zero-value compatibility mode runs clean") {
  WorkloadSpec spec = small_spec();
  spec.zero_value = true;
  spec.blocks = 60;
  Trace trace = generate_workload(spec);
  for (const TraceBlock& tb : trace.blocks)
    for (const TraceTx& tx : tb.txs) CHECK(tx.value == 0);
  RunResult result = run_dual(trace, desk_cfg());
  CHECK(result.ok());
}

TEST_CASE("single-account degenerate spec still runs") {
  WorkloadSpec spec = small_spec();
  spec.accounts = 1;
  spec.txs_per_block = 1;
  spec.blocks = 45;
  spec.miners = 1;
  spec.epoch_length = 15;
  Trace trace = generate_workload(spec);
  RunResult result = run_dual(trace, desk_cfg());
  CHECK(result.ok());
}

TEST_CASE("sync metrics cover every mode on both engines at each checkpoint") {
  WorkloadSpec spec = small_spec();
  spec.blocks = 40;
  spec.accounts = 40;
  Trace trace = generate_workload(spec);
  RunOptions opts;
  opts.sync_metrics = true;
  RunResult result = run_dual(trace, desk_cfg(), opts);
  REQUIRE(result.ok());
  REQUIRE(result.sync_sizes.size() == 2 * 2 * 3);  // 2 checkpoints x 2 engines x 3 modes
  for (const SyncSizeRow& row : result.sync_sizes) {
    CHECK(row.storage_bytes > 0);
    CHECK(row.wire_bytes > 0);
    if (row.mode != SyncMode::FullArchive)
      CHECK(row.pivot == row.checkpoint * spec.epoch_length);
  }
}

TEST_CASE("reports are byte-identical across reruns") {
  Trace trace = generate_workload(small_spec());
  fs::path base = fs::temp_directory_path() / "sweep-report-test";
  fs::remove_all(base);
  RunOptions opts;
  opts.sync_metrics = true;

  for (const char* dir : {"a", "b"}) {
    RunResult result = run_dual(trace, desk_cfg(), opts);
    REQUIRE(result.ok());
    emit_report(trace, result, (base / dir).string());
  }
  for (const char* name : {"active_ratio.csv", "restore_stats.csv", "sync_sizes.csv"}) {
    CAPTURE(name);
    CHECK(slurp(base / "a" / name) == slurp(base / "b" / name));
  }
  auto ja = nlohmann::json::parse(slurp(base / "a" / "metrics.json"));
  auto jb = nlohmann::json::parse(slurp(base / "b" / "metrics.json"));
  ja.erase("run_seconds");  // wall-clock time is the one nondeterministic field
  jb.erase("run_seconds");
  CHECK(ja == jb);
  CHECK(ja.at("ok").get<bool>());
  fs::remove_all(base);
}

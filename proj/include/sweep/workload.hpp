#pragma once

#include <iosfwd>

#include "sweep/chain.hpp"

namespace sweep {

enum class ActivityModel {
  FixedRatio,  // a fixed subset of accounts carries all traffic
  GapBands,    // per-account inter-transaction gaps drawn from banded classes
};

const char* activity_model_name(ActivityModel m);
std::optional<ActivityModel> activity_model_from_name(std::string_view s);

struct WorkloadSpec {
  uint64_t accounts = 2000;
  uint64_t blocks = 500;
  uint32_t txs_per_block = 20;
  ActivityModel model = ActivityModel::GapBands;
  double active_ratio = 0.1;  // FixedRatio only
  uint64_t seed = 1;
  uint32_t miners = 5;        // rotating miner pool, indexed after the accounts
  bool zero_value = false;    // compatibility mode: every transfer carries value 0
  uint64_t epoch_length = 100;  // the gap bands scale with this

  uint64_t total_indices() const { return accounts + miners; }
};

/// Transfer intent; nonces are engine state and assigned at run time.
struct TraceTx {
  uint32_t from = 0;
  uint32_t to = 0;
  u128 value = 0;
  u128 fee = 0;
};

struct TraceBlock {
  uint32_t miner = 0;
  std::vector<TraceTx> txs;
};

struct Trace {
  WorkloadSpec spec;
  std::vector<TraceBlock> blocks;  // blocks[i] drives chain block i+1
};

/// Deterministic address table: index -> first 20 bytes of hash256("acct-i").
Address account_address(uint64_t index);

/// Genesis funding: every account and miner starts with a faucet balance.
std::vector<std::pair<Address, u128>> genesis_alloc_for(const WorkloadSpec& spec);

inline constexpr u128 kFaucetBalance = u128{100} * 1'000'000'000;  // 100 units
inline constexpr u128 kTransferFee = 1'000'000;                    // 0.001 unit
inline constexpr u128 kRestoreFee = 1'000'000;

/// Deterministic trace generation; every emitted intent is valid against the
/// flat ledger (sufficient sender balance), so engines never drop a trace tx.
/// Throws std::invalid_argument on an infeasible spec.
Trace generate_workload(const WorkloadSpec& spec);

void write_trace_jsonl(const Trace& trace, std::ostream& out);
Trace read_trace_jsonl(std::istream& in);

/// Fraction of accounts touched (sender or recipient) per epoch, measured on
/// the trace alone.
std::vector<double> measured_activity(const Trace& trace);

}  // namespace sweep

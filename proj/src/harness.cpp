#include "sweep/harness.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>

namespace sweep {

namespace {

struct HarnessDivergence {
  uint64_t checkpoint;
  uint64_t account_index;
  std::string detail;
};

ByteView addr_view(const Address& a) { return ByteView(a.data(), a.size()); }

// Account resolution as block `b` will see it. At an epoch-start block the
// engine resets the working trie and demotes it to the resolver fallback, so
// only the current working trie contents stay reachable.
std::optional<Account> read_for_block(const Chain& chain, const Address& a, uint64_t b) {
  uint64_t eps = chain.config().epoch_length;
  if (chain.config().sweep_enabled && (b - 1) % eps == 0) {
    auto raw = chain.trie().get(chain.state_root(), addr_view(a));
    if (!raw) return std::nullopt;
    return Account::decode(*raw);
  }
  return chain.resolve(a);
}

// Checkpoint list as visible during block `b`'s execution: when `b` begins an
// epoch the engine snapshots the pending checkpoint first, so the planner
// appends the same snapshot synthetically.
std::vector<Checkpoint> checkpoints_for_block(const Chain& chain, uint64_t b) {
  std::vector<Checkpoint> span(chain.checkpoints().begin(), chain.checkpoints().end());
  uint64_t eps = chain.config().epoch_length;
  if (chain.config().sweep_enabled && (b - 1) % eps == 0) {
    Checkpoint cp;
    cp.index = (b - 1) / eps;
    cp.block_number = b - 1;
    cp.state_root = chain.state_root();
    cp.bloom = chain.epoch_bloom();
    span.push_back(std::move(cp));
  }
  return span;
}

// Plans one engine's transaction list for a block: trace transfers with
// engine-correct nonces, preceded by miner-paid restore transactions for
// senders whose live balance in the sweeping engine is short of the ledger.
class BlockPlanner {
 public:
  BlockPlanner(Chain& chain, const std::vector<u128>& ledger, uint64_t block, uint32_t miner_idx,
               std::vector<RestoreStat>* stats)
      : chain_(chain), ledger_(ledger), b_(block), miner_idx_(miner_idx), stats_(stats) {}

  std::vector<Transaction> plan(const TraceBlock& tb) {
    for (const TraceTx& intent : tb.txs) {
      Account sender = sender_state(intent.from);
      if (sender.balance != ledger_[intent.from])
        throw HarnessDivergence{(b_ - 1) / chain_.config().epoch_length, intent.from,
                                "engine balance diverges from ledger at block " +
                                    std::to_string(b_)};

      Transaction tx;
      tx.from = account_address(intent.from);
      tx.to = account_address(intent.to);
      tx.value = intent.value;
      tx.fee = intent.fee;
      tx.nonce = sender.nonce;
      txs_.push_back(std::move(tx));

      sender.nonce += 1;
      sender.balance -= intent.value + intent.fee;
      if (intent.from == intent.to) sender.balance += intent.value;
      predicted_[intent.from] = sender;
    }
    return std::move(txs_);
  }

 private:
  Account sender_state(uint32_t idx) {
    if (auto it = predicted_.find(idx); it != predicted_.end()) return it->second;
    Address addr = account_address(idx);
    auto current = read_for_block(chain_, addr, b_);
    bool needs_restore =
        chain_.config().sweep_enabled && (!current || current->balance != ledger_[idx]);
    if (!needs_restore) {
      if (!current)
        throw HarnessDivergence{(b_ - 1) / chain_.config().epoch_length, idx,
                                "sender unresolvable at block " + std::to_string(b_)};
      return *current;
    }
    return restore_sender(addr);
  }

  Account restore_sender(const Address& addr) {
    std::vector<Checkpoint> span = checkpoints_for_block(chain_, b_);
    RestoreBundle bundle = build_restore(chain_.trie(), span, addr);
    RestoreOutcome outcome = verify_restore(span, bundle);
    if (!outcome)
      throw std::logic_error(std::string("harness-built restore bundle rejected: ") +
                             restore_error_name(outcome.error));

    // Mirror apply_restore's working-incarnation handling. At an epoch-start
    // block the execution trie starts empty, so there is nothing to fold.
    std::optional<Account> working;
    if ((b_ - 1) % chain_.config().epoch_length != 0) {
      if (auto raw = chain_.trie().get(chain_.state_root(), addr_view(addr)))
        working = Account::decode(*raw);
    }
    Account merged = fold_contributions(std::move(outcome.contributions), working,
                                        span.size() - 1);

    Account miner = miner_state();
    Transaction rtx;
    rtx.from = account_address(miner_idx_);
    rtx.to = kRestoreAddress;
    rtx.fee = kRestoreFee;
    rtx.nonce = miner.nonce;
    rtx.payload = bundle.to_json_bytes();
    if (stats_)
      stats_->push_back(
          {b_, bundle.last_active_checkpoint, bundle.proof_count(), rtx.payload.size()});
    txs_.push_back(std::move(rtx));
    miner.nonce += 1;
    predicted_[miner_idx_] = miner;
    return merged;
  }

  Account miner_state() {
    if (auto it = predicted_.find(miner_idx_); it != predicted_.end()) return it->second;
    auto current = read_for_block(chain_, account_address(miner_idx_), b_);
    if (!current) throw std::logic_error("miner unresolvable; miner pool rotation too slow");
    return *current;
  }

  Chain& chain_;
  const std::vector<u128>& ledger_;
  uint64_t b_;
  uint32_t miner_idx_;
  std::vector<RestoreStat>* stats_;
  std::map<uint32_t, Account> predicted_;
  std::vector<Transaction> txs_;
};

void oracle_check(const Chain& sweep, const Chain& vanilla, const std::vector<u128>& ledger,
                  uint64_t checkpoint, uint64_t block) {
  std::vector<Checkpoint> span = checkpoints_for_block(sweep, block + 1);
  for (uint64_t i = 0; i < ledger.size(); ++i) {
    Address addr = account_address(i);
    auto eff = effective_account(sweep.trie(), span, addr);
    u128 got = eff ? eff->balance : 0;
    if (got != ledger[i])
      throw HarnessDivergence{checkpoint, i,
                              "sweeping engine effective balance " + u128_to_string(got) +
                                  " != ledger " + u128_to_string(ledger[i])};
    auto flat = vanilla.resolve(addr);
    u128 vgot = flat ? flat->balance : 0;
    if (vgot != ledger[i])
      throw HarnessDivergence{checkpoint, i,
                              "vanilla engine balance " + u128_to_string(vgot) +
                                  " != ledger " + u128_to_string(ledger[i])};
  }
}

void sync_metrics(const Chain& engine, bool is_sweep, uint64_t checkpoint, PivotPolicy policy,
                  const std::vector<std::pair<Address, u128>>& alloc,
                  std::vector<SyncSizeRow>& out) {
  SyncHost host(engine);
  for (SyncMode mode : {SyncMode::Compact, SyncMode::Fast, SyncMode::FullArchive}) {
    SyncOptions opts;
    opts.mode = mode;
    opts.pivot_policy = policy;
    auto [report, chain] = run_sync(host, engine.config(), alloc, opts);
    if (!report.verified)
      throw std::logic_error("sync against honest host aborted: " + report.abort_reason);
    out.push_back({checkpoint, is_sweep, mode, report.pivot, report.wire_bytes,
                   report.client_storage.total()});
  }
}

}  // namespace

RunResult run_dual(const Trace& trace, EpochConfig cfg, const RunOptions& opts) {
  using clock = std::chrono::steady_clock;
  auto t0 = clock::now();

  cfg.epoch_length = trace.spec.epoch_length;
  EpochConfig sweep_cfg = cfg, vanilla_cfg = cfg;
  sweep_cfg.sweep_enabled = true;
  vanilla_cfg.sweep_enabled = false;

  auto alloc = genesis_alloc_for(trace.spec);
  RunResult result;
  result.sweep = std::make_unique<Chain>(sweep_cfg, alloc);
  result.vanilla = std::make_unique<Chain>(vanilla_cfg, alloc);
  result.final_ledger.assign(trace.spec.total_indices(), kFaucetBalance);
  std::vector<u128>& ledger = result.final_ledger;

  uint64_t eps = trace.spec.epoch_length;
  uint64_t epoch_normal = 0, epoch_restores = 0;

  try {
    for (uint64_t b = 1; b <= trace.blocks.size(); ++b) {
      const TraceBlock& tb = trace.blocks[b - 1];
      Address miner = account_address(tb.miner);

      std::vector<Transaction> sweep_txs =
          BlockPlanner(*result.sweep, ledger, b, tb.miner, &result.restore_stats).plan(tb);
      uint64_t restores = sweep_txs.size() - tb.txs.size();
      Block sb = result.sweep->produce_block(std::move(sweep_txs), miner);
      if (sb.txs.size() != tb.txs.size() + restores)
        throw HarnessDivergence{(b - 1) / eps, 0,
                                "sweeping engine dropped a transaction at block " +
                                    std::to_string(b)};

      std::vector<Transaction> vanilla_txs =
          BlockPlanner(*result.vanilla, ledger, b, tb.miner, nullptr).plan(tb);
      Block vb = result.vanilla->produce_block(std::move(vanilla_txs), miner);
      if (vb.txs.size() != tb.txs.size())
        throw HarnessDivergence{(b - 1) / eps, 0,
                                "vanilla engine dropped a transaction at block " +
                                    std::to_string(b)};

      for (const TraceTx& tx : tb.txs) {
        ledger[tx.from] -= tx.value + tx.fee;
        ledger[tx.to] += tx.value;
        ledger[tb.miner] += tx.fee;
      }
      ledger[tb.miner] += cfg.block_reward;
      epoch_normal += tb.txs.size();
      epoch_restores += restores;
      result.total_normal_txs += tb.txs.size();
      result.total_restore_txs += restores;

      if (b % eps == 0) {
        uint64_t c = b / eps;
        if (opts.oracle_checks) oracle_check(*result.sweep, *result.vanilla, ledger, c, b);

        MetricsRow row;
        row.checkpoint = c;
        row.active_accounts = result.sweep->epoch_active().size();
        row.total_accounts = trace.spec.total_indices();
        row.sweep_trie_bytes = result.sweep->trie().reachable_bytes(result.sweep->state_root());
        row.vanilla_trie_bytes =
            result.vanilla->trie().reachable_bytes(result.vanilla->state_root());
        row.restore_txs = epoch_restores;
        row.normal_txs = epoch_normal;
        result.rows.push_back(row);
        epoch_normal = epoch_restores = 0;

        if (opts.sync_metrics) {
          sync_metrics(*result.sweep, true, c, opts.pivot_policy, alloc, result.sync_sizes);
          sync_metrics(*result.vanilla, false, c, opts.pivot_policy, alloc, result.sync_sizes);
        }
      }
    }
  } catch (const HarnessDivergence& d) {
    result.divergence = Divergence{d.checkpoint, d.account_index, d.detail};
  }

  result.run_seconds = std::chrono::duration<double>(clock::now() - t0).count();
  return result;
}

void emit_report(const Trace& trace, const RunResult& result, const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  auto open = [&](const char* name) {
    std::ofstream f(fs::path(out_dir) / name, std::ios::binary);
    if (!f) throw std::runtime_error(std::string("cannot open report file ") + name);
    return f;
  };
  char buf[32];

  {
    auto f = open("active_ratio.csv");
    f << "checkpoint,active_accounts,total_accounts,active_ratio,sweep_trie_bytes,"
         "vanilla_trie_bytes,restore_txs,normal_txs\n";
    for (const MetricsRow& r : result.rows) {
      std::snprintf(buf, sizeof buf, "%.4f",
                    static_cast<double>(r.active_accounts) / r.total_accounts);
      f << r.checkpoint << ',' << r.active_accounts << ',' << r.total_accounts << ',' << buf
        << ',' << r.sweep_trie_bytes << ',' << r.vanilla_trie_bytes << ',' << r.restore_txs
        << ',' << r.normal_txs << '\n';
    }
  }
  {
    auto f = open("restore_stats.csv");
    f << "block,last_active_checkpoint,proof_count,bundle_bytes\n";
    for (const RestoreStat& r : result.restore_stats)
      f << r.block << ',' << r.last_active_checkpoint << ',' << r.proof_count << ','
        << r.bundle_bytes << '\n';
  }
  {
    auto f = open("sync_sizes.csv");
    f << "checkpoint,engine,mode,pivot,wire_bytes,storage_bytes\n";
    for (const SyncSizeRow& r : result.sync_sizes)
      f << r.checkpoint << ',' << (r.sweep_engine ? "sweep" : "vanilla") << ','
        << sync_mode_name(r.mode) << ',' << r.pivot << ',' << r.wire_bytes << ','
        << r.storage_bytes << '\n';
  }
  {
    nlohmann::json j;
    j["seed"] = trace.spec.seed;
    j["accounts"] = trace.spec.accounts;
    j["blocks"] = trace.spec.blocks;
    j["model"] = activity_model_name(trace.spec.model);
    j["total_normal_txs"] = result.total_normal_txs;
    j["total_restore_txs"] = result.total_restore_txs;
    j["sweep_state_root"] = result.sweep ? to_hex(result.sweep->state_root()) : "";
    j["vanilla_state_root"] = result.vanilla ? to_hex(result.vanilla->state_root()) : "";
    j["ok"] = result.ok();
    if (result.divergence) {
      j["divergence"] = {{"checkpoint", result.divergence->checkpoint},
                         {"account_index", result.divergence->account_index},
                         {"detail", result.divergence->detail}};
    }
    j["run_seconds"] = result.run_seconds;  // informational; excluded from determinism checks
    auto f = open("metrics.json");
    f << j.dump(2) << '\n';
  }
}

}  // namespace sweep

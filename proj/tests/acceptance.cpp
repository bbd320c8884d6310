// End-to-end acceptance suite. Each criterion prints exactly one PASS/FAIL
// line; the exit code is the number of failed criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "sweep/harness.hpp"

using namespace sweep;

namespace {

namespace fs = std::filesystem;
using clock_type = std::chrono::steady_clock;

int failures = 0;

void report(int criterion, const char* name, bool ok, const std::string& detail) {
  std::printf("%s %d %s: %s\n", ok ? "PASS" : "FAIL", criterion, name, detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

EpochConfig desk_cfg() {
  EpochConfig cfg;
  cfg.bloom_bits = 1 << 14;  // desk-scale default (the protocol default is 2^20)
  return cfg;
}

WorkloadSpec desk_spec(uint64_t seed) {
  WorkloadSpec spec;  // 2000 accounts, 500 blocks, 20 txs/block, epsilon 100
  spec.seed = seed;
  return spec;
}

Transaction make_transfer(uint64_t from, uint64_t to, u128 value, u128 fee, uint64_t nonce) {
  Transaction tx;
  tx.from = account_address(from);
  tx.to = account_address(to);
  tx.value = value;
  tx.fee = fee;
  tx.nonce = nonce;
  return tx;
}

std::string trace_bytes(const Trace& trace) {
  std::stringstream buf;
  write_trace_jsonl(trace, buf);
  return buf.str();
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream buf;
  buf << f.rdbuf();
  return buf.str();
}

// ---------------------------------------------------------------------------
// 1. Oracle equivalence: >=20 seeds at desk scale, zero divergences, <5 min.

void criterion_oracle_equivalence() {
  auto t0 = clock_type::now();
  const int seeds = 20;
  int clean = 0;
  std::string first_divergence;
  for (uint64_t seed = 1; seed <= seeds; ++seed) {
    Trace trace = generate_workload(desk_spec(seed));
    RunResult result = run_dual(trace, desk_cfg());
    if (result.ok()) {
      ++clean;
    } else if (first_divergence.empty()) {
      first_divergence = "seed " + std::to_string(seed) + ": " + result.divergence->detail;
    }
  }
  double elapsed = std::chrono::duration<double>(clock_type::now() - t0).count();
  bool ok = clean == seeds && elapsed < 300.0;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%d/%d seeds divergence-free in %.1fs (budget 300s)%s%s",
                clean, seeds, elapsed, first_divergence.empty() ? "" : "; first: ",
                first_divergence.c_str());
  report(1, "oracle-equivalence", ok, buf);
}

// ---------------------------------------------------------------------------
// 2. Sweep reduction: 10% fixed activity over 5 epochs keeps every checkpoint
//    trie at <=25% of the vanilla engine's full trie at the same height.

void criterion_sweep_reduction() {
  WorkloadSpec spec = desk_spec(7);
  spec.model = ActivityModel::FixedRatio;
  spec.active_ratio = 0.1;
  Trace trace = generate_workload(spec);
  RunResult result = run_dual(trace, desk_cfg());

  bool ok = result.ok() && !result.rows.empty();
  double worst = 0;
  for (const MetricsRow& row : result.rows) {
    double ratio = static_cast<double>(row.sweep_trie_bytes) / row.vanilla_trie_bytes;
    worst = std::max(worst, ratio);
    if (ratio > 0.25) ok = false;
  }
  char buf[128];
  std::snprintf(buf, sizeof buf, "worst checkpoint trie ratio %.3f over %zu checkpoints (limit 0.25)",
                worst, result.rows.size());
  report(2, "sweep-reduction", ok, buf);
}

// ---------------------------------------------------------------------------
// 3. Compact-sync ratio on the banded desk workload: sweeping compact client
//    storage < 0.7x vanilla compact, and compact < fast < full-archive for
//    both engines.

void criterion_compact_sync() {
  Trace trace = generate_workload(desk_spec(1));
  RunResult result = run_dual(trace, desk_cfg());
  bool ok = result.ok();

  uint64_t storage[2][3] = {};
  for (int engine = 0; engine < 2 && ok; ++engine) {
    const Chain& chain = engine == 0 ? *result.sweep : *result.vanilla;
    SyncHost host(chain);
    SyncMode modes[] = {SyncMode::Compact, SyncMode::Fast, SyncMode::FullArchive};
    for (int m = 0; m < 3; ++m) {
      SyncOptions opts;
      opts.mode = modes[m];
      auto [rep, client] = run_sync(host, chain.config(), chain.genesis_alloc(), opts);
      if (!rep.verified || rep.final_root != chain.state_root()) {
        ok = false;
        break;
      }
      storage[engine][m] = rep.client_storage.total();
    }
  }
  double ratio = 0;
  if (ok) {
    ratio = static_cast<double>(storage[0][0]) / storage[1][0];
    for (int engine = 0; engine < 2; ++engine)
      if (!(storage[engine][0] < storage[engine][1] && storage[engine][1] < storage[engine][2]))
        ok = false;
    if (ratio >= 0.7) ok = false;
  }
  char buf[192];
  std::snprintf(buf, sizeof buf,
                "compact storage ratio %.3f (limit 0.70); sweep c/f/a %llu/%llu/%llu, "
                "vanilla %llu/%llu/%llu",
                ratio, (unsigned long long)storage[0][0], (unsigned long long)storage[0][1],
                (unsigned long long)storage[0][2], (unsigned long long)storage[1][0],
                (unsigned long long)storage[1][1], (unsigned long long)storage[1][2]);
  report(3, "compact-sync-ratio", ok, buf);
}

// ---------------------------------------------------------------------------
// 4. Replay rejection: 100 pre-sweep transactions replayed against respawned
//    or restored incarnations must all be rejected.

void criterion_replay_rejection() {
  EpochConfig cfg;
  cfg.epoch_length = 5;
  cfg.bloom_bits = 1 << 14;
  std::vector<std::pair<Address, u128>> alloc;
  for (uint64_t i = 0; i < 202; ++i) alloc.emplace_back(account_address(i), kFaucetBalance);
  Chain chain(cfg, alloc);

  // Epoch 1: accounts 0..99 each send once (blocks 1..5, 20 per block).
  std::vector<Transaction> originals;
  for (uint64_t b = 1; b <= 5; ++b) {
    std::vector<Transaction> pending;
    for (uint64_t i = (b - 1) * 20; i < b * 20; ++i) {
      pending.push_back(make_transfer(i, 200, 10, 1, 0));
      originals.push_back(pending.back());
    }
    if (chain.produce_block(std::move(pending), account_address(201)).txs.size() != 20) {
      report(4, "replay-rejection", false, "setup block dropped a transaction");
      return;
    }
  }
  // Epoch 2: idle traffic only; the hundred go dormant and are swept.
  uint64_t keeper_nonce = 0;
  for (uint64_t b = 6; b <= 11; ++b)
    chain.produce_block({make_transfer(200, 201, 1, 1, keeper_nonce++)}, account_address(201));

  // Revive 0..49 via restore bundles, respawn 50..99 as transfer recipients.
  for (uint64_t base = 0; base < 100; base += 25) {
    std::vector<Transaction> pending;
    for (uint64_t i = base; i < base + 25; ++i) {
      Transaction tx;
      tx.from = account_address(200);
      tx.fee = 1;
      tx.nonce = keeper_nonce++;
      if (i < 50) {
        tx.to = kRestoreAddress;
        tx.payload =
            build_restore(chain, account_address(i), chain.checkpoints().size() - 1)
                .to_json_bytes();
      } else {
        tx.to = account_address(i);
        tx.value = 5;
      }
      pending.push_back(std::move(tx));
    }
    if (chain.produce_block(std::move(pending), account_address(201)).txs.size() != 25) {
      report(4, "replay-rejection", false, "a revival transaction was dropped");
      return;
    }
  }

  int rejected = 0;
  for (const Transaction& tx : originals)
    if (chain.validate(tx) != TxError::None) ++rejected;
  char buf[96];
  std::snprintf(buf, sizeof buf, "%d/100 replayed pre-sweep transactions rejected", rejected);
  report(4, "replay-rejection", rejected == 100, buf);
}

// ---------------------------------------------------------------------------
// 5. Proof soundness fuzzing: 10^4 tamperings -> 0 false accepts; 10^3 honest
//    proofs -> 0 false rejects.

void criterion_proof_fuzzing() {
  KvStore db;
  Trie trie(db);
  Hash256 root = Trie::kEmptyRoot;
  const uint64_t present = 600, absent_base = 10000;
  auto key_of = [](uint64_t i) {
    std::string s = "fuzz-key-" + std::to_string(i);
    return Bytes(s.begin(), s.end());
  };
  for (uint64_t i = 0; i < present; ++i) root = trie.put(root, key_of(i), key_of(i * 7));

  std::mt19937_64 rng(99);
  int false_rejects = 0;
  for (int i = 0; i < 1000; ++i) {
    if (i % 2 == 0) {
      uint64_t k = rng() % present;
      MembershipProof p = trie.prove_membership(root, key_of(k));
      MembershipResult r = verify_membership(root, key_of(k), p);
      if (!r || r.value != key_of(k * 7)) ++false_rejects;
    } else {
      uint64_t k = absent_base + rng() % present;
      VoidProof p = trie.prove_void(root, key_of(k));
      if (verify_void(root, key_of(k), p) != ProofError::None) ++false_rejects;
    }
  }

  int false_accepts = 0;
  for (int i = 0; i < 10000; ++i) {
    bool membership = rng() % 2 == 0;
    uint64_t k = membership ? rng() % present : absent_base + rng() % present;
    std::vector<Bytes> nodes = membership
                                   ? trie.prove_membership(root, key_of(k)).nodes
                                   : trie.prove_void(root, key_of(k)).nodes;
    Bytes target_key = key_of(k);
    switch (rng() % 4) {
      case 0: {  // bit flip somewhere in the proof
        if (nodes.empty()) continue;  // nothing to tamper; skip, don't verify
        Bytes& n = nodes[rng() % nodes.size()];
        if (n.empty()) continue;
        n[rng() % n.size()] ^= static_cast<uint8_t>(1 << (rng() % 8));
        break;
      }
      case 1: {  // drop a node
        if (nodes.empty()) continue;
        nodes.erase(nodes.begin() + rng() % nodes.size());
        break;
      }
      case 2: {  // path swap: claim the proof speaks for a different key.
        // The swapped-in key is always a *present* one, so an accepted
        // membership proof would bind it to the wrong value and an accepted
        // void proof would deny a key that exists — both genuinely false.
        uint64_t other;
        do {
          other = rng() % present;
        } while (key_of(other) == target_key);
        target_key = key_of(other);
        break;
      }
      default: {  // cross-purpose: membership evidence offered as void, etc.
        if (membership) {
          if (verify_void(root, target_key, VoidProof{nodes}) == ProofError::None)
            ++false_accepts;
        } else {
          MembershipResult r = verify_membership(root, target_key, MembershipProof{nodes});
          if (r) ++false_accepts;
        }
        continue;
      }
    }
    if (membership) {
      MembershipResult r = verify_membership(root, target_key, MembershipProof{nodes});
      if (r) ++false_accepts;
    } else {
      if (verify_void(root, target_key, VoidProof{nodes}) == ProofError::None) ++false_accepts;
    }
  }
  char buf[96];
  std::snprintf(buf, sizeof buf, "%d/10000 false accepts, %d/1000 false rejects", false_accepts,
                false_rejects);
  report(5, "proof-soundness", false_accepts == 0 && false_rejects == 0, buf);
}

// ---------------------------------------------------------------------------
// 6. Restore-bundle scaling: bundle size grows linearly with proof count
//    (positive slope, R^2 > 0.9). A deliberately tiny bloom plus long, varied
//    dormancy produces a wide spread of proof counts.

void criterion_bundle_scaling() {
  KvStore db;
  Trie trie(db);
  const uint64_t targets = 48, epochs = 24;

  std::vector<Checkpoint> checkpoints;
  auto seal = [&](const std::vector<std::pair<Address, Account>>& accounts) {
    StateView state(trie, Trie::kEmptyRoot);
    Checkpoint cp;
    cp.index = checkpoints.size();
    cp.block_number = cp.index * 100;
    cp.bloom = BloomFilter(64, 2);  // saturated on purpose: frequent false positives
    for (const auto& [a, acct] : accounts) {
      state.write(a, acct);
      cp.bloom.insert(a);
    }
    cp.state_root = state.root();
    checkpoints.push_back(std::move(cp));
  };

  // Checkpoint 0 holds every target; later checkpoints hold filler traffic.
  std::vector<std::pair<Address, Account>> genesis_epoch;
  for (uint64_t i = 0; i < targets; ++i) {
    Account a;
    a.nonce = 1;
    a.balance = 1000 + i;
    genesis_epoch.emplace_back(account_address(i), a);
  }
  seal(genesis_epoch);
  for (uint64_t e = 1; e <= epochs; ++e) {
    std::vector<std::pair<Address, Account>> filler;
    for (uint64_t i = 0; i < 60; ++i) {
      Account a;
      a.balance = e;
      filler.emplace_back(account_address(100000 + e * 1000 + i), a);
    }
    seal(filler);
  }

  // Target i is restored after i/2 + 1 epochs of dormancy: longer dormancy
  // crosses more (often falsely positive) blooms and needs more void proofs.
  std::vector<double> xs, ys;
  for (uint64_t i = 0; i < targets; ++i) {
    size_t span_len = 2 + i / 2;
    std::span<const Checkpoint> span(checkpoints.data(), span_len);
    RestoreBundle bundle = build_restore(trie, span, account_address(i));
    if (verify_restore(span, bundle).error != RestoreError::None) {
      report(6, "bundle-scaling", false, "a controlled-experiment bundle failed verification");
      return;
    }
    xs.push_back(static_cast<double>(bundle.proof_count()));
    ys.push_back(static_cast<double>(bundle.to_json_bytes().size()));
  }

  double n = static_cast<double>(xs.size()), sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
  }
  double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  double intercept = (sy - slope * sx) / n;
  double ss_res = 0, ss_tot = 0;
  for (size_t i = 0; i < xs.size(); ++i) {
    double pred = slope * xs[i] + intercept;
    ss_res += (ys[i] - pred) * (ys[i] - pred);
    ss_tot += (ys[i] - sy / n) * (ys[i] - sy / n);
  }
  double r2 = 1.0 - ss_res / ss_tot;
  double min_x = *std::min_element(xs.begin(), xs.end());
  double max_x = *std::max_element(xs.begin(), xs.end());

  bool ok = slope > 0 && r2 > 0.9 && max_x > min_x + 3;
  char buf[128];
  std::snprintf(buf, sizeof buf,
                "size = %.1f*proofs + %.1f bytes, R^2 %.4f over proof counts %.0f..%.0f", slope,
                intercept, r2, min_x, max_x);
  report(6, "bundle-scaling", ok, buf);
}

// ---------------------------------------------------------------------------
// 7. Bloom correctness: no false negatives over any checkpoint's write set,
//    and the measured false-positive rate tracks (1-e^(-kn/m))^k within 30%.

void criterion_bloom_correctness() {
  // False negatives: every account present in a checkpoint trie must be
  // bloom-positive there. Uses a real dual run's sweeping engine.
  WorkloadSpec spec = desk_spec(3);
  spec.accounts = 500;
  spec.blocks = 300;
  Trace trace = generate_workload(spec);
  RunResult result = run_dual(trace, desk_cfg());
  uint64_t false_negatives = 0, members = 0;
  if (result.ok()) {
    for (const Checkpoint& cp : result.sweep->checkpoints()) {
      for (uint64_t i = 0; i < spec.total_indices(); ++i) {
        Address a = account_address(i);
        if (!result.sweep->trie().get(cp.state_root, ByteView(a.data(), a.size()))) continue;
        ++members;
        if (!cp.bloom.maybe_contains(a)) ++false_negatives;
      }
    }
  }

  // False-positive rate at parameters large enough to measure stably.
  const uint64_t m = 1 << 12, n = 1000, probes = 200000;
  const uint32_t k = 4;
  BloomFilter bf(m, k);
  for (uint64_t i = 0; i < n; ++i) bf.insert(account_address(i));
  uint64_t fp = 0;
  for (uint64_t i = n; i < n + probes; ++i)
    if (bf.maybe_contains(account_address(i))) ++fp;
  double measured = static_cast<double>(fp) / probes;
  double expected = BloomFilter::expected_fp_rate(n, m, k);
  double rel_err = std::abs(measured - expected) / expected;

  bool ok = result.ok() && false_negatives == 0 && members > 0 && rel_err < 0.30;
  char buf[160];
  std::snprintf(buf, sizeof buf,
                "%llu/%llu member lookups false-negative; fp measured %.4f vs analytic %.4f "
                "(rel err %.2f, limit 0.30)",
                (unsigned long long)false_negatives, (unsigned long long)members, measured,
                expected, rel_err);
  report(7, "bloom-correctness", ok, buf);
}

// ---------------------------------------------------------------------------
// 8. Determinism: identical seeds give byte-identical traces, roots, and CSVs
//    across consecutive runs.

void criterion_determinism() {
  WorkloadSpec spec = desk_spec(11);
  Trace t1 = generate_workload(spec);
  Trace t2 = generate_workload(spec);
  bool traces_equal = trace_bytes(t1) == trace_bytes(t2);

  fs::path base = fs::temp_directory_path() / "sweep-acceptance-determinism";
  fs::remove_all(base);
  std::array<Hash256, 2> sweep_roots{}, vanilla_roots{};
  bool runs_ok = true;
  for (int run = 0; run < 2; ++run) {
    RunResult result = run_dual(t1, desk_cfg());
    runs_ok = runs_ok && result.ok();
    sweep_roots[run] = result.sweep->state_root();
    vanilla_roots[run] = result.vanilla->state_root();
    emit_report(t1, result, (base / std::to_string(run)).string());
  }
  bool roots_equal = sweep_roots[0] == sweep_roots[1] && vanilla_roots[0] == vanilla_roots[1];
  bool csvs_equal = true;
  for (const char* name : {"active_ratio.csv", "restore_stats.csv", "sync_sizes.csv"})
    if (slurp(base / "0" / name) != slurp(base / "1" / name)) csvs_equal = false;
  fs::remove_all(base);

  bool ok = traces_equal && runs_ok && roots_equal && csvs_equal;
  std::string detail = std::string("traces ") + (traces_equal ? "identical" : "DIFFER") +
                       ", roots " + (roots_equal ? "identical" : "DIFFER") + ", CSVs " +
                       (csvs_equal ? "identical" : "DIFFER");
  report(8, "determinism", ok, detail);
}

}  // namespace

int main() {
  criterion_oracle_equivalence();
  criterion_sweep_reduction();
  criterion_compact_sync();
  criterion_replay_rejection();
  criterion_proof_fuzzing();
  criterion_bundle_scaling();
  criterion_bloom_correctness();
  criterion_determinism();
  return failures;
}

#include "sweep/restore.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>

namespace sweep {

using nlohmann::json;

const char* restore_error_name(RestoreError e) {
  switch (e) {
    case RestoreError::None: return "ok";
    case RestoreError::BadBundle: return "bad-bundle";
    case RestoreError::UnknownCheckpoint: return "unknown-checkpoint";
    case RestoreError::MembershipFailed: return "membership-failed";
    case RestoreError::PawnProofFailed: return "pawn-proof-failed";
    case RestoreError::VoidProofFailed: return "void-proof-failed";
    case RestoreError::UnexpectedProof: return "unexpected-proof";
    case RestoreError::IncompleteCoverage: return "incomplete-coverage";
    case RestoreError::StaleCheckpoint: return "stale-checkpoint";
    case RestoreError::NoHistory: return "no-history";
  }
  return "unknown";
}

Bytes RestoreBundle::to_json_bytes() const {
  json j;
  j["target"] = address_hex(target);
  j["k"] = last_active_checkpoint;
  j["membership"] = to_hex(encode_proof_nodes(membership.nodes));
  json voids = json::object();
  for (const auto& [idx, proof] : void_proofs)
    voids[std::to_string(idx)] = to_hex(encode_proof_nodes(proof.nodes));
  j["void_proofs"] = std::move(voids);
  json pawns = json::array();
  for (const auto& [idx, proof] : pawn_proofs)
    pawns.push_back({idx, to_hex(encode_proof_nodes(proof.nodes))});
  j["pawn_proofs"] = std::move(pawns);
  std::string s = j.dump();
  return Bytes(s.begin(), s.end());
}

std::optional<RestoreBundle> RestoreBundle::from_json_bytes(ByteView data) {
  try {
    json j = json::parse(data.begin(), data.end());
    RestoreBundle b;
    b.target = address_from_hex(j.at("target").get<std::string>());
    b.last_active_checkpoint = j.at("k").get<uint64_t>();
    b.membership.nodes = decode_proof_nodes(from_hex(j.at("membership").get<std::string>()));
    for (const auto& [key, value] : j.at("void_proofs").items()) {
      VoidProof p;
      p.nodes = decode_proof_nodes(from_hex(value.get<std::string>()));
      b.void_proofs.emplace(std::stoull(key), std::move(p));
    }
    for (const json& entry : j.at("pawn_proofs")) {
      MembershipProof p;
      p.nodes = decode_proof_nodes(from_hex(entry.at(1).get<std::string>()));
      b.pawn_proofs.emplace_back(entry.at(0).get<uint64_t>(), std::move(p));
    }
    return b;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

Account merge_accounts(const Account& a, const Account& b) {
  Account out;
  if (a.balance > ~static_cast<u128>(0) - b.balance) throw std::overflow_error("balance overflow in merge");
  if (a.nonce > UINT64_MAX - b.nonce) throw std::overflow_error("nonce overflow in merge");
  out.balance = a.balance + b.balance;
  out.nonce = a.nonce + b.nonce;
  out.restored = true;
  return out;
}

namespace {

ByteView addr_view(const Address& a) { return ByteView(a.data(), a.size()); }

// Collapses a sorted set of presence checkpoints into maximal runs of
// consecutive indices; each run's last state is one incarnation's
// contribution (earlier states of a run are carried forward by the resolver
// and already folded into the run's last state).
std::vector<std::pair<uint64_t, Account>> run_contributions(
    const std::map<uint64_t, Account>& present) {
  std::vector<std::pair<uint64_t, Account>> out;
  std::optional<uint64_t> prev;
  for (const auto& [idx, acct] : present) {
    if (prev && idx == *prev + 1) {
      out.back() = {idx, acct};  // same incarnation continues
    } else {
      out.emplace_back(idx, acct);
    }
    prev = idx;
  }
  return out;
}

}  // namespace

RestoreOutcome verify_restore(std::span<const Checkpoint> checkpoints,
                              const RestoreBundle& bundle) {
  if (checkpoints.empty()) return {RestoreError::UnknownCheckpoint, {}};
  uint64_t latest = checkpoints.size() - 1;
  uint64_t k = bundle.last_active_checkpoint;
  if (k > latest) return {RestoreError::UnknownCheckpoint, {}};

  auto checkpoint_at = [&](uint64_t idx) -> const Checkpoint& {
    const Checkpoint& cp = checkpoints[idx];
    if (cp.index != idx) throw std::logic_error("checkpoint list not positionally indexed");
    return cp;
  };

  MembershipResult mem =
      verify_membership(checkpoint_at(k).state_root, addr_view(bundle.target), bundle.membership);
  if (!mem) return {RestoreError::MembershipFailed, {}};
  auto base = Account::decode(mem.value);
  if (!base) return {RestoreError::MembershipFailed, {}};

  std::map<uint64_t, Account> present;
  present.emplace(k, *base);

  uint64_t prev_idx = k;
  for (const auto& [idx, proof] : bundle.pawn_proofs) {
    if (idx <= prev_idx || idx > latest) return {RestoreError::BadBundle, {}};
    prev_idx = idx;
    const Checkpoint& cp = checkpoint_at(idx);
    if (!cp.bloom.maybe_contains(bundle.target)) return {RestoreError::UnexpectedProof, {}};
    MembershipResult pawn = verify_membership(cp.state_root, addr_view(bundle.target), proof);
    if (!pawn) return {RestoreError::PawnProofFailed, {}};
    auto acct = Account::decode(pawn.value);
    if (!acct) return {RestoreError::PawnProofFailed, {}};
    // A restored incarnation after k already folds in the state claimed at
    // k: the claimed last-active checkpoint is stale.
    if (acct->restored) return {RestoreError::StaleCheckpoint, {}};
    present.emplace(idx, *acct);
  }

  for (uint64_t j = k + 1; j <= latest; ++j) {
    const Checkpoint& cp = checkpoint_at(j);
    bool positive = cp.bloom.maybe_contains(bundle.target);
    auto void_it = bundle.void_proofs.find(j);
    if (!positive) {
      // Negative answers are definitive; nothing may be supplied.
      if (void_it != bundle.void_proofs.end()) return {RestoreError::UnexpectedProof, {}};
      continue;
    }
    if (present.count(j)) {
      if (void_it != bundle.void_proofs.end()) return {RestoreError::BadBundle, {}};
      continue;
    }
    if (void_it == bundle.void_proofs.end()) return {RestoreError::IncompleteCoverage, {}};
    if (verify_void(cp.state_root, addr_view(bundle.target), void_it->second) != ProofError::None)
      return {RestoreError::VoidProofFailed, {}};
  }
  // Any void proof outside (k, latest] is malformed.
  for (const auto& [idx, proof] : bundle.void_proofs)
    if (idx <= k || idx > latest) return {RestoreError::BadBundle, {}};

  RestoreOutcome outcome;
  outcome.contributions = run_contributions(present);
  return outcome;
}

RestoreBundle build_restore(const Trie& trie, std::span<const Checkpoint> checkpoints,
                            const Address& target) {
  if (checkpoints.empty()) throw RestoreBuildError("no checkpoints yet");
  uint64_t as_of_checkpoint = checkpoints.size() - 1;
  std::map<uint64_t, Account> present;
  for (uint64_t j = 0; j <= as_of_checkpoint; ++j) {
    auto raw = trie.get(checkpoints[j].state_root, addr_view(target));
    if (!raw) continue;
    auto acct = Account::decode(*raw);
    if (!acct) throw TrieError("corrupt account encoding");
    present.emplace(j, *acct);
  }
  if (present.empty()) throw RestoreBuildError("target has no history");

  // Partition presence into incarnation runs, then pick the run whose end
  // state was produced by the latest restore (it folds in everything before
  // it); with no restore in history, the first run is the original account.
  auto runs = run_contributions(present);
  size_t base_run = 0;
  for (size_t i = 0; i < runs.size(); ++i)
    if (runs[i].second.restored) base_run = i;
  uint64_t k = runs[base_run].first;

  RestoreBundle bundle;
  bundle.target = target;
  bundle.last_active_checkpoint = k;
  bundle.membership = trie.prove_membership(checkpoints[k].state_root, addr_view(target));
  for (uint64_t j = k + 1; j <= as_of_checkpoint; ++j) {
    if (present.count(j)) {
      bundle.pawn_proofs.emplace_back(
          j, trie.prove_membership(checkpoints[j].state_root, addr_view(target)));
    } else if (checkpoints[j].bloom.maybe_contains(target)) {
      VoidProof p = trie.prove_void(checkpoints[j].state_root, addr_view(target));
      bundle.void_proofs.emplace(j, std::move(p));
    }
  }
  return bundle;
}

RestoreBundle build_restore(const Chain& archive, const Address& target,
                            uint64_t as_of_checkpoint) {
  const auto& checkpoints = archive.checkpoints();
  if (as_of_checkpoint >= checkpoints.size())
    throw RestoreBuildError("checkpoint not yet produced");
  return build_restore(archive.trie(),
                       std::span<const Checkpoint>(checkpoints.data(), as_of_checkpoint + 1),
                       target);
}

Account fold_contributions(std::vector<std::pair<uint64_t, Account>> contributions,
                           const std::optional<Account>& working, uint64_t latest) {
  if (working) {
    std::erase_if(contributions, [&](const auto& c) { return c.first == latest; });
    contributions.emplace_back(latest + 1, *working);
  }
  Account merged;
  merged.restored = true;
  for (const auto& [idx, acct] : contributions) merged = merge_accounts(merged, acct);
  return merged;
}

TxError apply_restore(StateView& state, const Transaction& tx, const Address& miner,
                      std::span<const Checkpoint> checkpoints, uint64_t block_number,
                      const EpochConfig& cfg, const Trie& trie) {
  TxError err = validate_transaction(state, tx);
  if (err != TxError::None) return err;

  auto bundle = RestoreBundle::from_json_bytes(tx.payload);
  if (!bundle) return TxError::BadRestore;
  RestoreOutcome outcome = verify_restore(checkpoints, *bundle);
  if (!outcome) return TxError::BadRestore;

  // Sender pays like any transfer; the value rides along to the target.
  Account sender = *state.lookup(tx.from);
  sender.balance -= tx.value + tx.fee;
  sender.nonce += 1;
  state.write(tx.from, sender);

  uint64_t latest = checkpoints.size() - 1;
  std::optional<Account> working;
  if (auto raw_working = trie.get(state.root(), addr_view(bundle->target))) {
    working = Account::decode(*raw_working);
    if (!working) throw TrieError("corrupt account encoding");
  }
  Account merged = fold_contributions(std::move(outcome.contributions), working, latest);
  merged.balance += tx.value;
  state.write(bundle->target, merged);

  auto miner_acct = state.lookup(miner);
  if (miner_acct) {
    miner_acct->balance += tx.fee;
    state.write(miner, *miner_acct);
  } else {
    state.write(miner, respawn(block_number, tx.fee, cfg.max_txs_per_acct_per_block));
  }
  return TxError::None;
}

std::optional<Account> effective_account(const Trie& trie,
                                         std::span<const Checkpoint> checkpoints,
                                         const Address& addr) {
  if (checkpoints.empty()) return std::nullopt;
  uint64_t as_of_checkpoint = checkpoints.size() - 1;
  std::map<uint64_t, Account> present;
  for (uint64_t j = 0; j <= as_of_checkpoint; ++j) {
    auto raw = trie.get(checkpoints[j].state_root, addr_view(addr));
    if (!raw) continue;
    auto acct = Account::decode(*raw);
    if (!acct) throw TrieError("corrupt account encoding");
    present.emplace(j, *acct);
  }
  if (present.empty()) return std::nullopt;

  // Incarnations before the latest restore are already folded into it.
  auto runs = run_contributions(present);
  size_t base_run = 0;
  for (size_t i = 0; i < runs.size(); ++i)
    if (runs[i].second.restored) base_run = i;
  Account merged = runs[base_run].second;
  for (size_t i = base_run + 1; i < runs.size(); ++i)
    merged = merge_accounts(merged, runs[i].second);
  return merged;
}

std::optional<Account> effective_account(const Chain& archive, const Address& addr,
                                         uint64_t as_of_checkpoint) {
  const auto& checkpoints = archive.checkpoints();
  if (as_of_checkpoint >= checkpoints.size()) return std::nullopt;
  return effective_account(
      archive.trie(), std::span<const Checkpoint>(checkpoints.data(), as_of_checkpoint + 1),
      addr);
}

}  // namespace sweep

#pragma once

#include <map>

#include "sweep/chain.hpp"

namespace sweep {

/// Everything a verifier needs to reactivate a dormant account:
///   - a membership proof of its state at the last active checkpoint k,
///   - for every later checkpoint whose bloom answers positive, either a
///     void proof (false positive) or a membership proof of a pawn
///     incarnation (the address was respawned by an incoming transfer),
///   - nothing at all for bloom-negative checkpoints.
struct RestoreBundle {
  Address target{};
  uint64_t last_active_checkpoint = 0;
  MembershipProof membership;
  std::map<uint64_t, VoidProof> void_proofs;
  std::vector<std::pair<uint64_t, MembershipProof>> pawn_proofs;

  size_t proof_count() const { return 1 + void_proofs.size() + pawn_proofs.size(); }

  Bytes to_json_bytes() const;
  static std::optional<RestoreBundle> from_json_bytes(ByteView data);
};

enum class RestoreError {
  None,
  BadBundle,            // unparseable or malformed indices
  UnknownCheckpoint,    // claimed k beyond the latest checkpoint
  MembershipFailed,
  PawnProofFailed,
  VoidProofFailed,
  UnexpectedProof,      // proof supplied for a bloom-negative checkpoint
  IncompleteCoverage,   // bloom-positive checkpoint left unexplained
  StaleCheckpoint,      // later restored incarnation exists; claimed k is old
  NoHistory,
};

const char* restore_error_name(RestoreError e);

struct RestoreOutcome {
  RestoreError error = RestoreError::None;
  /// Per-incarnation contributions: the state at the last checkpoint of each
  /// maximal run of consecutive presence, keyed by that checkpoint index.
  std::vector<std::pair<uint64_t, Account>> contributions;
  explicit operator bool() const { return error == RestoreError::None; }
};

/// Sums balances and nonces and marks the result restored.
/// Throws std::overflow_error instead of ever wrapping.
Account merge_accounts(const Account& a, const Account& b);

/// Stateless bundle verification against checkpoint roots and blooms only
/// (no trie access): usable by freshly synced nodes. `checkpoints` must be
/// positionally indexed (checkpoints[i].index == i).
RestoreOutcome verify_restore(std::span<const Checkpoint> checkpoints,
                              const RestoreBundle& bundle);

/// Builds a verifying bundle from full history; archive-node side.
/// Throws RestoreBuildError when the target never existed.
struct RestoreBuildError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
RestoreBundle build_restore(const Trie& trie, std::span<const Checkpoint> checkpoints,
                            const Address& target);
RestoreBundle build_restore(const Chain& archive, const Address& target,
                            uint64_t as_of_checkpoint);

/// Folds verified contributions into the final restored state. A `working`
/// incarnation (live in the working trie) supersedes its contribution at the
/// latest checkpoint — the resolver carried that state forward — and joins as
/// a fresh pawn otherwise.
Account fold_contributions(std::vector<std::pair<uint64_t, Account>> contributions,
                           const std::optional<Account>& working, uint64_t latest);

/// Applies a restore transaction inside block execution: the (live) sender
/// pays fee + value, the bundle is verified, any incarnation live in the
/// working trie replaces its checkpoint-n contribution, and the merged state
/// (plus the transferred value) is written to the target with the restored
/// flag set.
TxError apply_restore(StateView& state, const Transaction& tx, const Address& miner,
                      std::span<const Checkpoint> checkpoints, uint64_t block_number,
                      const EpochConfig& cfg, const Trie& trie);

/// The balance/nonce a fully informed observer attributes to `addr` as of
/// checkpoint `n`: the checkpoint state if present, otherwise the merge of
/// the last swept state and all pawn incarnations since. Test oracle and
/// build_restore share this scan.
std::optional<Account> effective_account(const Trie& trie,
                                         std::span<const Checkpoint> checkpoints,
                                         const Address& addr);
std::optional<Account> effective_account(const Chain& archive, const Address& addr,
                                         uint64_t as_of_checkpoint);

}  // namespace sweep

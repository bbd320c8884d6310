#pragma once

#include <functional>

#include "sweep/account.hpp"
#include "sweep/trie.hpp"

namespace sweep {

enum class TxError {
  None,
  UnknownSender,
  InsufficientBalance,
  NonceMismatch,
  ZeroFee,
  BadRestore,
};

const char* tx_error_name(TxError e);

/// Initial account for an address first seen (or seen again after a sweep)
/// at block k: nonce = k * C, where C caps per-account transactions per
/// block, so no previously attainable nonce can ever match again.
Account respawn(uint64_t block_number, u128 value, uint64_t max_txs_per_acct_per_block);

/// A mutable view of account state during block execution. Lookups consult
/// the working trie first and fall back to an optional older root (the
/// cached last checkpoint when sweeping); writes always go to the working
/// trie and advance its root.
class StateView {
 public:
  StateView(Trie& trie, Hash256 root, std::optional<Hash256> fallback_root = std::nullopt)
      : trie_(&trie), root_(root), fallback_root_(fallback_root) {}

  std::optional<Account> lookup(const Address& addr) const;
  void write(const Address& addr, const Account& account);

  const Hash256& root() const { return root_; }
  void reset_root(Hash256 root) { root_ = root; }
  const std::optional<Hash256>& fallback_root() const { return fallback_root_; }
  void set_fallback(std::optional<Hash256> root) { fallback_root_ = root; }

  /// Invoked with the address of every write; the chain hooks this to track
  /// epoch activity for checkpoint blooms.
  std::function<void(const Address&)> on_write;

 private:
  Trie* trie_;
  Hash256 root_;
  std::optional<Hash256> fallback_root_;
};

TxError validate_transaction(const StateView& state, const Transaction& tx);

/// Applies a validated value transfer: sender pays value + fee and bumps its
/// nonce, the recipient is credited (respawned if absent), and the miner is
/// credited the fee immediately. Restore transactions are handled by the
/// chain, not here.
TxError apply_transaction(StateView& state, const Transaction& tx, const Address& miner,
                          uint64_t block_number, uint64_t max_txs_per_acct_per_block);

void apply_block_reward(StateView& state, const Address& miner, u128 reward,
                        uint64_t block_number, uint64_t max_txs_per_acct_per_block);

}  // namespace sweep

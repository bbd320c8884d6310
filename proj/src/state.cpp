#include "sweep/state.hpp"

namespace sweep {

const char* tx_error_name(TxError e) {
  switch (e) {
    case TxError::None: return "ok";
    case TxError::UnknownSender: return "unknown-sender";
    case TxError::InsufficientBalance: return "insufficient-balance";
    case TxError::NonceMismatch: return "nonce-mismatch";
    case TxError::ZeroFee: return "zero-fee";
    case TxError::BadRestore: return "bad-restore";
  }
  return "unknown";
}

Account respawn(uint64_t block_number, u128 value, uint64_t max_txs_per_acct_per_block) {
  Account a;
  a.nonce = block_number * max_txs_per_acct_per_block;
  a.balance = value;
  a.restored = false;
  return a;
}

std::optional<Account> StateView::lookup(const Address& addr) const {
  auto raw = trie_->get(root_, ByteView(addr.data(), addr.size()));
  if (!raw && fallback_root_) raw = trie_->get(*fallback_root_, ByteView(addr.data(), addr.size()));
  if (!raw) return std::nullopt;
  auto account = Account::decode(*raw);
  if (!account) throw TrieError("corrupt account encoding");
  return account;
}

void StateView::write(const Address& addr, const Account& account) {
  root_ = trie_->put(root_, ByteView(addr.data(), addr.size()), account.encode());
  if (on_write) on_write(addr);
}

TxError validate_transaction(const StateView& state, const Transaction& tx) {
  if (tx.fee == 0) return TxError::ZeroFee;
  auto sender = state.lookup(tx.from);
  if (!sender) return TxError::UnknownSender;
  if (sender->nonce != tx.nonce) return TxError::NonceMismatch;
  if (sender->balance < tx.value + tx.fee) return TxError::InsufficientBalance;
  return TxError::None;
}

TxError apply_transaction(StateView& state, const Transaction& tx, const Address& miner,
                          uint64_t block_number, uint64_t max_txs_per_acct_per_block) {
  TxError err = validate_transaction(state, tx);
  if (err != TxError::None) return err;

  Account sender = *state.lookup(tx.from);
  sender.balance -= tx.value + tx.fee;
  sender.nonce += 1;
  state.write(tx.from, sender);

  auto recipient = state.lookup(tx.to);
  if (recipient) {
    recipient->balance += tx.value;
    state.write(tx.to, *recipient);
  } else {
    state.write(tx.to, respawn(block_number, tx.value, max_txs_per_acct_per_block));
  }

  auto miner_acct = state.lookup(miner);
  if (miner_acct) {
    miner_acct->balance += tx.fee;
    state.write(miner, *miner_acct);
  } else {
    state.write(miner, respawn(block_number, tx.fee, max_txs_per_acct_per_block));
  }
  return TxError::None;
}

void apply_block_reward(StateView& state, const Address& miner, u128 reward,
                        uint64_t block_number, uint64_t max_txs_per_acct_per_block) {
  auto miner_acct = state.lookup(miner);
  if (miner_acct) {
    miner_acct->balance += reward;
    state.write(miner, *miner_acct);
  } else {
    state.write(miner, respawn(block_number, reward, max_txs_per_acct_per_block));
  }
}

}  // namespace sweep

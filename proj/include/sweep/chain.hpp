#pragma once

#include <memory>
#include <set>

#include "sweep/bloom.hpp"
#include "sweep/state.hpp"

namespace sweep {

struct EpochConfig {
  uint64_t epoch_length = 100;
  uint64_t max_txs_per_acct_per_block = 1024;  // C in the respawn nonce rule
  u128 block_reward = 2'000'000'000;           // base units carry 10^9 granularity
  uint64_t bloom_bits = uint64_t{1} << 20;
  uint32_t bloom_hashes = 4;
  bool sweep_enabled = true;
};

struct Header {
  uint64_t number = 0;
  Hash256 prev_hash{};
  Hash256 tx_root{};
  Hash256 state_root{};
  Hash256 bloom_digest{};  // meaningful at checkpoint heights, zero elsewhere
  Address miner{};

  Bytes encode() const;
  static Header decode(ByteView data);
  Hash256 hash() const { return hash256(encode()); }

  bool operator==(const Header&) const = default;
};

struct Block {
  Header header;
  std::vector<Transaction> txs;
};

Bytes encode_body(const std::vector<Transaction>& txs);
std::vector<Transaction> decode_body(ByteView data);
Hash256 compute_tx_root(const std::vector<Transaction>& txs);
Bytes tx_index_record(const Hash256& tx_hash, uint64_t block_number, uint32_t index);
Bytes receipt_record(const std::vector<Transaction>& txs);

/// Inserts every address a block's execution writes (sender, recipient or
/// restore target, miner) into `bloom`, deduplicated through `seen`. This is
/// derivable from the block alone, which lets a syncing client rebuild the
/// in-progress epoch bloom from verified bodies.
void bloom_insert_block_activity(BloomFilter& bloom, std::set<Address>& seen,
                                 const Header& header, const std::vector<Transaction>& txs);

/// Snapshot taken at the last block of an epoch: the state trie then holds
/// exactly the accounts touched during that epoch, and the bloom answers
/// (probabilistic) membership for them.
struct Checkpoint {
  uint64_t index = 0;
  uint64_t block_number = 0;
  Hash256 state_root{};
  BloomFilter bloom;
};

enum class BlockReject {
  None,
  BadNumber,
  PrevHashMismatch,
  TxRootMismatch,
  InvalidTx,
  StateRootMismatch,
  BloomMismatch,
};

const char* block_reject_name(BlockReject r);

/// One chain instance: block production and verification over a private
/// content-addressed store. With sweeping enabled each epoch starts from an
/// empty state trie and account resolution falls back to the cached last
/// checkpoint; with it disabled this is the vanilla single-trie baseline.
class Chain {
 public:
  explicit Chain(EpochConfig cfg,
                 const std::vector<std::pair<Address, u128>>& genesis_alloc = {});

  // The trie references the member store, so instances are pinned.
  Chain(const Chain&) = delete;
  Chain& operator=(const Chain&) = delete;

  /// Builds a replica positioned just after `headers.back()` for pivot-based
  /// sync: the caller then loads the pivot state trie (and, when sweeping,
  /// the last checkpoint trie) into `db()` before replaying.
  static std::unique_ptr<Chain> prime_replica(EpochConfig cfg, std::vector<Header> headers,
                                              std::vector<Checkpoint> checkpoints,
                                              Hash256 state_root, BloomFilter epoch_bloom);

  /// Applies the valid subset of `pending` (invalid ones are excluded) plus
  /// the block reward and appends the new block.
  Block produce_block(std::vector<Transaction> pending, const Address& miner);

  /// Re-executes a foreign block against local state; any mismatch leaves
  /// the chain unchanged and names the reason.
  BlockReject verify_and_append(const Block& block);

  /// Account resolution: working trie first, then the cached last checkpoint
  /// (sweeping only). Never consults older history.
  std::optional<Account> resolve(const Address& addr) const;
  TxError validate(const Transaction& tx) const;

  uint64_t head_number() const { return headers_.back().number; }
  const Header& header(uint64_t number) const { return headers_.at(number); }
  const std::vector<Header>& headers() const { return headers_; }
  const std::vector<Checkpoint>& checkpoints() const { return checkpoints_; }
  const Checkpoint* last_checkpoint() const {
    return last_checkpoint_ ? &*last_checkpoint_ : nullptr;
  }
  Hash256 state_root() const { return state_root_; }
  const BloomFilter& epoch_bloom() const { return epoch_bloom_; }
  const std::set<Address>& epoch_active() const { return epoch_active_; }
  const EpochConfig& config() const { return cfg_; }
  const std::vector<std::pair<Address, u128>>& genesis_alloc() const { return genesis_alloc_; }

  KvStore& db() { return db_; }
  const KvStore& db() const { return db_; }
  Trie& trie() { return trie_; }
  const Trie& trie() const { return trie_; }

  std::vector<Transaction> body(uint64_t number) const;
  Bytes body_bytes(uint64_t number) const;
  Bytes receipt_bytes(uint64_t number) const;

  bool is_checkpoint_height(uint64_t number) const {
    return number % cfg_.epoch_length == 0;
  }

 private:
  struct PrimeTag {};
  Chain(EpochConfig cfg, PrimeTag);

  void maybe_begin_epoch(uint64_t next_number);
  StateView make_view();
  TxError execute_tx(StateView& view, const Transaction& tx, const Address& miner,
                     uint64_t number);
  void persist_block(const Header& header, const std::vector<Transaction>& txs);

  EpochConfig cfg_;
  KvStore db_;
  Trie trie_{db_};
  std::vector<Header> headers_;
  std::vector<Checkpoint> checkpoints_;
  std::optional<Checkpoint> last_checkpoint_;
  Hash256 state_root_ = Trie::kEmptyRoot;
  BloomFilter epoch_bloom_;
  std::set<Address> epoch_active_;
  std::vector<std::pair<Hash256, Hash256>> block_records_;  // (body key, receipt key)
  std::vector<std::pair<Address, u128>> genesis_alloc_;
};

/// Chain export/import: JSON-lines, one block per line.
void export_chain_jsonl(const Chain& chain, std::ostream& out);
std::vector<Block> import_chain_jsonl(std::istream& in);

}  // namespace sweep

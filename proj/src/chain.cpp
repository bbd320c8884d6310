#include "sweep/chain.hpp"

#include <nlohmann/json.hpp>

#include <istream>
#include <ostream>

#include "sweep/restore.hpp"

namespace sweep {

using nlohmann::json;

const char* block_reject_name(BlockReject r) {
  switch (r) {
    case BlockReject::None: return "ok";
    case BlockReject::BadNumber: return "bad-number";
    case BlockReject::PrevHashMismatch: return "prev-hash-mismatch";
    case BlockReject::TxRootMismatch: return "tx-root-mismatch";
    case BlockReject::InvalidTx: return "invalid-tx";
    case BlockReject::StateRootMismatch: return "state-root-mismatch";
    case BlockReject::BloomMismatch: return "bloom-mismatch";
  }
  return "unknown";
}

Bytes Header::encode() const {
  Bytes out;
  put_u64(out, number);
  out.insert(out.end(), prev_hash.begin(), prev_hash.end());
  out.insert(out.end(), tx_root.begin(), tx_root.end());
  out.insert(out.end(), state_root.begin(), state_root.end());
  out.insert(out.end(), bloom_digest.begin(), bloom_digest.end());
  out.insert(out.end(), miner.begin(), miner.end());
  return out;
}

Header Header::decode(ByteView data) {
  ByteReader r(data);
  Header h;
  h.number = r.u64();
  h.prev_hash = r.take_array<32>();
  h.tx_root = r.take_array<32>();
  h.state_root = r.take_array<32>();
  h.bloom_digest = r.take_array<32>();
  h.miner = r.take_array<20>();
  if (!r.eof()) throw DecodeError("trailing bytes after header");
  return h;
}

Bytes encode_body(const std::vector<Transaction>& txs) {
  Bytes out;
  put_u32(out, static_cast<uint32_t>(txs.size()));
  for (const Transaction& tx : txs) {
    Bytes e = tx.encode();
    put_u32(out, static_cast<uint32_t>(e.size()));
    out.insert(out.end(), e.begin(), e.end());
  }
  return out;
}

std::vector<Transaction> decode_body(ByteView data) {
  ByteReader r(data);
  uint32_t count = r.u32();
  std::vector<Transaction> txs;
  txs.reserve(count);
  for (uint32_t i = 0; i < count; ++i) {
    uint32_t len = r.u32();
    txs.push_back(Transaction::decode(r.take(len)));
  }
  if (!r.eof()) throw DecodeError("trailing bytes after body");
  return txs;
}

Hash256 compute_tx_root(const std::vector<Transaction>& txs) {
  KvStore scratch;
  Trie t(scratch);
  Hash256 root = Trie::kEmptyRoot;
  for (size_t i = 0; i < txs.size(); ++i) {
    Bytes key;
    put_u64(key, i);
    root = t.put(root, key, txs[i].encode());
  }
  return root;
}

Bytes tx_index_record(const Hash256& tx_hash, uint64_t block_number, uint32_t index) {
  Bytes record;
  record.insert(record.end(), tx_hash.begin(), tx_hash.end());
  put_u64(record, block_number);
  put_u32(record, index);
  return record;
}

Bytes receipt_record(const std::vector<Transaction>& txs) {
  Bytes receipts;
  for (const Transaction& tx : txs) {
    Hash256 txh = tx.hash();
    receipts.insert(receipts.end(), txh.begin(), txh.end());
    receipts.push_back(1);  // status: applied
  }
  return receipts;
}

void bloom_insert_block_activity(BloomFilter& bloom, std::set<Address>& seen,
                                 const Header& header, const std::vector<Transaction>& txs) {
  auto touch = [&](const Address& a) {
    if (seen.insert(a).second) bloom.insert(a);
  };
  for (const Transaction& tx : txs) {
    touch(tx.from);
    if (tx.is_restore()) {
      // The write goes to the bundle target, not the reserved address.
      auto j = nlohmann::json::parse(tx.payload.begin(), tx.payload.end());
      touch(address_from_hex(j.at("target").get<std::string>()));
    } else {
      touch(tx.to);
    }
  }
  touch(header.miner);
}


Chain::Chain(EpochConfig cfg, PrimeTag)
    : cfg_(cfg), epoch_bloom_(cfg.bloom_bits, cfg.bloom_hashes) {}

Chain::Chain(EpochConfig cfg, const std::vector<std::pair<Address, u128>>& genesis_alloc)
    : cfg_(cfg), epoch_bloom_(cfg.bloom_bits, cfg.bloom_hashes), genesis_alloc_(genesis_alloc) {
  StateView view = make_view();
  for (const auto& [addr, balance] : genesis_alloc) {
    Account a;
    a.balance = balance;
    view.write(addr, a);
  }
  state_root_ = view.root();

  Header genesis;
  genesis.number = 0;
  genesis.tx_root = Trie::kEmptyRoot;
  genesis.state_root = state_root_;
  if (cfg_.sweep_enabled) genesis.bloom_digest = epoch_bloom_.digest();
  persist_block(genesis, {});
  headers_.push_back(genesis);
}

std::unique_ptr<Chain> Chain::prime_replica(EpochConfig cfg, std::vector<Header> headers,
                                            std::vector<Checkpoint> checkpoints,
                                            Hash256 state_root, BloomFilter epoch_bloom) {
  if (headers.empty()) throw std::invalid_argument("replica needs at least the genesis header");
  std::unique_ptr<Chain> chain(new Chain(cfg, PrimeTag{}));
  chain->headers_ = std::move(headers);
  chain->checkpoints_ = std::move(checkpoints);
  if (cfg.sweep_enabled && !chain->checkpoints_.empty())
    chain->last_checkpoint_ = chain->checkpoints_.back();
  chain->state_root_ = state_root;
  chain->epoch_bloom_ = std::move(epoch_bloom);
  chain->block_records_.resize(chain->headers_.size());
  return chain;
}

StateView Chain::make_view() {
  std::optional<Hash256> fallback;
  if (cfg_.sweep_enabled && last_checkpoint_) fallback = last_checkpoint_->state_root;
  StateView view(trie_, state_root_, fallback);
  view.on_write = [this](const Address& addr) {
    if (epoch_active_.insert(addr).second && cfg_.sweep_enabled) epoch_bloom_.insert(addr);
  };
  return view;
}

void Chain::maybe_begin_epoch(uint64_t next_number) {
  uint64_t prev = next_number - 1;
  if (prev % cfg_.epoch_length != 0) return;
  // Previous block closed an epoch: snapshot it, then (when sweeping) start
  // from an empty trie with the snapshot as the resolver fallback.
  Checkpoint cp;
  cp.index = prev / cfg_.epoch_length;
  cp.block_number = prev;
  cp.state_root = state_root_;
  cp.bloom = epoch_bloom_;
  checkpoints_.push_back(cp);
  if (cfg_.sweep_enabled) {
    last_checkpoint_ = cp;
    state_root_ = Trie::kEmptyRoot;
  }
  epoch_bloom_.clear();
  epoch_active_.clear();
}

TxError Chain::execute_tx(StateView& view, const Transaction& tx, const Address& miner,
                          uint64_t number) {
  if (tx.is_restore()) {
    if (!cfg_.sweep_enabled) return TxError::BadRestore;
    return apply_restore(view, tx, miner, checkpoints_, number, cfg_, trie_);
  }
  return apply_transaction(view, tx, miner, number, cfg_.max_txs_per_acct_per_block);
}

void Chain::persist_block(const Header& header, const std::vector<Transaction>& txs) {
  db_.put(DataCategory::Headers, header.encode());
  Hash256 body_key = db_.put(DataCategory::Bodies, encode_body(txs));
  Hash256 receipt_key = db_.put(DataCategory::Receipts, receipt_record(txs));

  for (size_t i = 0; i < txs.size(); ++i) {
    db_.put(DataCategory::TxIndex,
            tx_index_record(txs[i].hash(), header.number, static_cast<uint32_t>(i)));
  }

  if (cfg_.sweep_enabled && is_checkpoint_height(header.number))
    db_.put(DataCategory::Headers, epoch_bloom_.serialize());

  block_records_.emplace_back(body_key, receipt_key);
}

Block Chain::produce_block(std::vector<Transaction> pending, const Address& miner) {
  uint64_t number = head_number() + 1;
  maybe_begin_epoch(number);

  StateView view = make_view();
  std::vector<Transaction> applied;
  applied.reserve(pending.size());
  for (Transaction& tx : pending) {
    if (execute_tx(view, tx, miner, number) == TxError::None) applied.push_back(std::move(tx));
  }
  apply_block_reward(view, miner, cfg_.block_reward, number, cfg_.max_txs_per_acct_per_block);
  state_root_ = view.root();

  Header h;
  h.number = number;
  h.prev_hash = headers_.back().hash();
  h.tx_root = compute_tx_root(applied);
  h.state_root = state_root_;
  h.miner = miner;
  if (cfg_.sweep_enabled && is_checkpoint_height(number)) h.bloom_digest = epoch_bloom_.digest();

  persist_block(h, applied);
  headers_.push_back(h);
  return Block{h, std::move(applied)};
}

BlockReject Chain::verify_and_append(const Block& block) {
  const Header& h = block.header;
  if (h.number != head_number() + 1) return BlockReject::BadNumber;
  if (h.prev_hash != headers_.back().hash()) return BlockReject::PrevHashMismatch;
  if (h.tx_root != compute_tx_root(block.txs)) return BlockReject::TxRootMismatch;

  // Epoch bookkeeping and execution mutate the chain; keep a snapshot so a
  // rejected block leaves no visible trace (orphan trie nodes in the store
  // aside).
  struct Snapshot {
    Hash256 state_root;
    BloomFilter bloom;
    std::set<Address> active;
    std::optional<Checkpoint> last_cp;
    size_t checkpoint_count;
  } snap{state_root_, epoch_bloom_, epoch_active_, last_checkpoint_, checkpoints_.size()};
  auto rollback = [&] {
    state_root_ = snap.state_root;
    epoch_bloom_ = std::move(snap.bloom);
    epoch_active_ = std::move(snap.active);
    last_checkpoint_ = std::move(snap.last_cp);
    checkpoints_.resize(snap.checkpoint_count);
  };

  maybe_begin_epoch(h.number);
  StateView view = make_view();
  for (const Transaction& tx : block.txs) {
    if (execute_tx(view, tx, h.miner, h.number) != TxError::None) {
      rollback();
      return BlockReject::InvalidTx;
    }
  }
  apply_block_reward(view, h.miner, cfg_.block_reward, h.number, cfg_.max_txs_per_acct_per_block);

  if (view.root() != h.state_root) {
    rollback();
    return BlockReject::StateRootMismatch;
  }
  Hash256 expected_digest{};
  if (cfg_.sweep_enabled && is_checkpoint_height(h.number)) expected_digest = epoch_bloom_.digest();
  if (h.bloom_digest != expected_digest) {
    rollback();
    return BlockReject::BloomMismatch;
  }

  state_root_ = view.root();
  persist_block(h, block.txs);
  headers_.push_back(h);
  return BlockReject::None;
}

std::optional<Account> Chain::resolve(const Address& addr) const {
  std::optional<Hash256> fallback;
  if (cfg_.sweep_enabled && last_checkpoint_) fallback = last_checkpoint_->state_root;
  return StateView(const_cast<Trie&>(trie_), state_root_, fallback).lookup(addr);
}

TxError Chain::validate(const Transaction& tx) const {
  std::optional<Hash256> fallback;
  if (cfg_.sweep_enabled && last_checkpoint_) fallback = last_checkpoint_->state_root;
  StateView view(const_cast<Trie&>(trie_), state_root_, fallback);
  return validate_transaction(view, tx);
}

Bytes Chain::body_bytes(uint64_t number) const {
  auto raw = db_.get(block_records_.at(number).first);
  if (!raw) throw std::runtime_error("missing body record");
  return *raw;
}

std::vector<Transaction> Chain::body(uint64_t number) const {
  return decode_body(body_bytes(number));
}

Bytes Chain::receipt_bytes(uint64_t number) const {
  auto raw = db_.get(block_records_.at(number).second);
  if (!raw) throw std::runtime_error("missing receipt record");
  return *raw;
}

namespace {

json tx_to_json(const Transaction& tx) {
  json j;
  j["from"] = address_hex(tx.from);
  j["to"] = address_hex(tx.to);
  j["value"] = u128_to_string(tx.value);
  j["fee"] = u128_to_string(tx.fee);
  j["nonce"] = tx.nonce;
  if (!tx.payload.empty()) j["payload"] = to_hex(tx.payload);
  return j;
}

Transaction tx_from_json(const json& j) {
  Transaction tx;
  tx.from = address_from_hex(j.at("from").get<std::string>());
  tx.to = address_from_hex(j.at("to").get<std::string>());
  tx.value = u128_from_string(j.at("value").get<std::string>());
  tx.fee = u128_from_string(j.at("fee").get<std::string>());
  tx.nonce = j.at("nonce").get<uint64_t>();
  if (j.contains("payload")) tx.payload = from_hex(j.at("payload").get<std::string>());
  return tx;
}

}  // namespace

void export_chain_jsonl(const Chain& chain, std::ostream& out) {
  for (uint64_t n = 0; n <= chain.head_number(); ++n) {
    const Header& h = chain.header(n);
    json j;
    j["number"] = h.number;
    j["prev_hash"] = to_hex(h.prev_hash);
    j["tx_root"] = to_hex(h.tx_root);
    j["state_root"] = to_hex(h.state_root);
    j["bloom_digest"] = to_hex(h.bloom_digest);
    j["miner"] = address_hex(h.miner);
    json txs = json::array();
    for (const Transaction& tx : chain.body(n)) txs.push_back(tx_to_json(tx));
    j["txs"] = std::move(txs);
    out << j.dump() << "\n";
  }
}

std::vector<Block> import_chain_jsonl(std::istream& in) {
  std::vector<Block> blocks;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j = json::parse(line);
    Block b;
    b.header.number = j.at("number").get<uint64_t>();
    b.header.prev_hash = array_from_hex<32>(j.at("prev_hash").get<std::string>());
    b.header.tx_root = array_from_hex<32>(j.at("tx_root").get<std::string>());
    b.header.state_root = array_from_hex<32>(j.at("state_root").get<std::string>());
    b.header.bloom_digest = array_from_hex<32>(j.at("bloom_digest").get<std::string>());
    b.header.miner = address_from_hex(j.at("miner").get<std::string>());
    for (const json& t : j.at("txs")) b.txs.push_back(tx_from_json(t));
    blocks.push_back(std::move(b));
  }
  return blocks;
}

}  // namespace sweep

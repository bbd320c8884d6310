#include "sweep/sync.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <unordered_set>

namespace sweep {

namespace {

// Wire frame tags. Every request starts with one tag byte; responses are
// tag-specific payloads.
constexpr uint8_t kFrameStatus = 0;     // -> u64 head, 32B genesis hash
constexpr uint8_t kFrameHeaders = 1;    // u64 from, u64 to -> count + len-prefixed headers
constexpr uint8_t kFrameBodies = 2;     // u64 from, u64 to -> count + len-prefixed bodies
constexpr uint8_t kFrameReceipts = 3;   // u64 from, u64 to -> count + len-prefixed records
constexpr uint8_t kFrameTrieNodes = 4;  // u32 count, 32B keys -> count + (found, len, bytes)
constexpr uint8_t kFrameBloom = 5;      // u64 index -> found, len, serialized bloom

void append_sized(Bytes& out, const Bytes& data) {
  put_u32(out, static_cast<uint32_t>(data.size()));
  out.insert(out.end(), data.begin(), data.end());
}

}  // namespace

const char* sync_mode_name(SyncMode m) {
  switch (m) {
    case SyncMode::FullArchive: return "full-archive";
    case SyncMode::Fast: return "fast";
    case SyncMode::Compact: return "compact";
  }
  return "unknown";
}

const char* pivot_policy_name(PivotPolicy p) {
  switch (p) {
    case PivotPolicy::LastCheckpoint: return "last-checkpoint";
    case PivotPolicy::HeadMinus64: return "head-minus-64";
  }
  return "unknown";
}

std::optional<SyncMode> sync_mode_from_name(std::string_view s) {
  if (s == "full-archive") return SyncMode::FullArchive;
  if (s == "fast") return SyncMode::Fast;
  if (s == "compact") return SyncMode::Compact;
  return std::nullopt;
}

std::optional<PivotPolicy> pivot_policy_from_name(std::string_view s) {
  if (s == "last-checkpoint") return PivotPolicy::LastCheckpoint;
  if (s == "head-minus-64") return PivotPolicy::HeadMinus64;
  return std::nullopt;
}

uint64_t select_pivot(uint64_t head, uint64_t epoch_length, PivotPolicy policy) {
  switch (policy) {
    case PivotPolicy::LastCheckpoint: return head / epoch_length * epoch_length;
    case PivotPolicy::HeadMinus64: return head >= 64 ? head - 64 : 0;
  }
  throw std::invalid_argument("bad pivot policy");
}

Bytes SyncHost::handle(ByteView request) const {
  ByteReader r(request);
  uint8_t tag = r.u8();
  Bytes out;
  switch (tag) {
    case kFrameStatus: {
      put_u64(out, chain_->head_number());
      Hash256 g = chain_->header(0).hash();
      out.insert(out.end(), g.begin(), g.end());
      break;
    }
    case kFrameHeaders: {
      uint64_t from = r.u64(), to = r.u64();
      put_u32(out, static_cast<uint32_t>(to - from + 1));
      for (uint64_t n = from; n <= to; ++n) append_sized(out, chain_->header(n).encode());
      break;
    }
    case kFrameBodies: {
      uint64_t from = r.u64(), to = r.u64();
      put_u32(out, static_cast<uint32_t>(to - from + 1));
      for (uint64_t n = from; n <= to; ++n) append_sized(out, chain_->body_bytes(n));
      break;
    }
    case kFrameReceipts: {
      uint64_t from = r.u64(), to = r.u64();
      put_u32(out, static_cast<uint32_t>(to - from + 1));
      for (uint64_t n = from; n <= to; ++n) append_sized(out, chain_->receipt_bytes(n));
      break;
    }
    case kFrameTrieNodes: {
      uint32_t count = r.u32();
      put_u32(out, count);
      for (uint32_t i = 0; i < count; ++i) {
        Hash256 key = r.take_array<32>();
        auto node = chain_->db().get(key);
        out.push_back(node ? 1 : 0);
        if (node) append_sized(out, *node);
      }
      break;
    }
    case kFrameBloom: {
      uint64_t index = r.u64();
      const auto& cps = chain_->checkpoints();
      const BloomFilter* bloom = nullptr;
      if (index < cps.size()) {
        bloom = &cps[index].bloom;
      } else if (index == cps.size() && chain_->is_checkpoint_height(chain_->head_number()) &&
                 chain_->head_number() / chain_->config().epoch_length == index) {
        // Sealed by the head block but not yet snapshotted (that happens when
        // the next block begins the new epoch).
        bloom = &chain_->epoch_bloom();
      }
      out.push_back(bloom ? 1 : 0);
      if (bloom) append_sized(out, bloom->serialize());
      break;
    }
    default:
      throw std::invalid_argument("unknown sync frame tag");
  }
  if (!r.eof()) throw DecodeError("trailing bytes in sync request");
  return out;
}

namespace {

struct SyncAbort {
  uint64_t block;
  std::string reason;
};

// Per-sync client context: issues frames, applies the tamper hook, and keeps
// the wire accounting.
class Client {
 public:
  Client(const SyncHost& host, const SyncOptions& opts, SyncReport& report)
      : host_(&host), opts_(&opts), report_(&report) {}

  Bytes fetch(const Bytes& request, DataCategory wire_category) {
    Bytes response = host_->handle(request);
    if (opts_->on_response) opts_->on_response(report_->frames, response);
    ++report_->frames;
    report_->wire_bytes += response.size();
    report_->wire_by_category[static_cast<size_t>(wire_category)] += response.size();
    return response;
  }

  std::pair<uint64_t, Hash256> status() {
    Bytes req{kFrameStatus};
    Bytes response = fetch(req, DataCategory::Other);
    ByteReader r(response);
    uint64_t head = r.u64();
    Hash256 genesis = r.take_array<32>();
    if (!r.eof()) throw SyncAbort{0, "malformed status response"};
    return {head, genesis};
  }

  std::vector<Bytes> ranged(uint8_t tag, uint64_t from, uint64_t to, DataCategory category,
                            const char* what) {
    Bytes req{tag};
    put_u64(req, from);
    put_u64(req, to);
    Bytes response = fetch(req, category);
    try {
      ByteReader r(response);
      uint32_t count = r.u32();
      if (count != to - from + 1) throw SyncAbort{from, std::string("short ") + what + " response"};
      std::vector<Bytes> items;
      items.reserve(count);
      for (uint32_t i = 0; i < count; ++i) {
        uint32_t len = r.u32();
        items.push_back(r.take(len));
      }
      if (!r.eof()) throw SyncAbort{from, std::string("trailing bytes in ") + what + " response"};
      return items;
    } catch (const DecodeError&) {
      throw SyncAbort{from, std::string("malformed ") + what + " response"};
    }
  }

  BloomFilter bloom(uint64_t index) {
    Bytes req{kFrameBloom};
    put_u64(req, index);
    Bytes response = fetch(req, DataCategory::Headers);
    try {
      ByteReader r(response);
      if (r.u8() != 1) throw SyncAbort{index, "checkpoint bloom unavailable"};
      uint32_t len = r.u32();
      Bytes raw = r.take(len);
      if (!r.eof()) throw SyncAbort{index, "trailing bytes in bloom response"};
      return BloomFilter::deserialize(raw);
    } catch (const DecodeError&) {
      throw SyncAbort{index, "malformed bloom response"};
    } catch (const std::invalid_argument&) {
      throw SyncAbort{index, "malformed bloom response"};
    }
  }

  // Downloads every node reachable from `root` into `db`, verifying each
  // node's content address before trusting its child references.
  void download_trie(const Hash256& root, KvStore& db) {
    if (root == Trie::kEmptyRoot) return;
    std::vector<Hash256> queue;
    std::unordered_set<std::string> seen;
    auto enqueue = [&](const Hash256& h) {
      if (db.contains(h)) return;
      if (seen.insert(std::string(h.begin(), h.end())).second) queue.push_back(h);
    };
    enqueue(root);
    while (!queue.empty()) {
      size_t batch = std::min(queue.size(), opts_->trie_batch);
      std::vector<Hash256> keys(queue.end() - batch, queue.end());
      queue.resize(queue.size() - batch);

      Bytes req{kFrameTrieNodes};
      put_u32(req, static_cast<uint32_t>(keys.size()));
      for (const Hash256& k : keys) req.insert(req.end(), k.begin(), k.end());
      Bytes response = fetch(req, DataCategory::TrieNodes);

      try {
        ByteReader r(response);
        if (r.u32() != keys.size()) throw SyncAbort{0, "short trie node response"};
        for (const Hash256& key : keys) {
          if (r.u8() != 1) throw SyncAbort{0, "missing trie node " + to_hex(key)};
          uint32_t len = r.u32();
          Bytes node = r.take(len);
          if (hash256(node) != key)
            throw SyncAbort{0, "trie node fails content address " + to_hex(key)};
          for (const Hash256& child : trie_node_children(node)) enqueue(child);
          db.put(DataCategory::TrieNodes, std::move(node));
        }
        if (!r.eof()) throw SyncAbort{0, "trailing bytes in trie node response"};
      } catch (const DecodeError&) {
        throw SyncAbort{0, "malformed trie node response"};
      } catch (const TrieError&) {
        throw SyncAbort{0, "malformed trie node encoding"};
      }
    }
  }

 private:
  const SyncHost* host_;
  const SyncOptions* opts_;
  SyncReport* report_;
};

std::vector<Header> verify_header_chain(const std::vector<Bytes>& raw, const Header& genesis,
                                        uint64_t head) {
  std::vector<Header> headers;
  headers.reserve(raw.size());
  for (const Bytes& bytes : raw) {
    try {
      headers.push_back(Header::decode(bytes));
    } catch (const DecodeError&) {
      throw SyncAbort{headers.size(), "malformed header"};
    }
  }
  if (headers.size() != head + 1) throw SyncAbort{0, "header count mismatch"};
  if (headers[0] != genesis) throw SyncAbort{0, "genesis header mismatch"};
  for (uint64_t n = 1; n <= head; ++n) {
    if (headers[n].number != n) throw SyncAbort{n, "header number out of sequence"};
    if (headers[n].prev_hash != headers[n - 1].hash())
      throw SyncAbort{n, "broken header chain"};
  }
  return headers;
}

std::vector<Transaction> verified_body(const Bytes& raw, const Header& header) {
  std::vector<Transaction> txs;
  try {
    txs = decode_body(raw);
  } catch (const DecodeError&) {
    throw SyncAbort{header.number, "malformed body"};
  }
  if (compute_tx_root(txs) != header.tx_root)
    throw SyncAbort{header.number, "body does not match tx root"};
  return txs;
}

}  // namespace

std::string SyncReport::to_json() const {
  nlohmann::json j;
  j["mode"] = sync_mode_name(mode);
  j["head"] = head;
  j["pivot"] = pivot;
  j["frames"] = frames;
  j["wire_bytes"] = wire_bytes;
  nlohmann::json wire, storage;
  for (size_t i = 0; i < kCategoryCount; ++i) {
    const char* name = category_name(static_cast<DataCategory>(i));
    wire[name] = wire_by_category[i];
    storage[name] = client_storage.category_bytes[i];
  }
  j["wire_by_category"] = std::move(wire);
  j["storage_by_category"] = std::move(storage);
  j["storage_bytes"] = client_storage.total();
  j["download_seconds"] = download_seconds;
  j["replay_seconds"] = replay_seconds;
  j["final_root"] = to_hex(final_root);
  j["verified"] = verified;
  if (!verified) {
    j["abort_block"] = abort_block;
    j["abort_reason"] = abort_reason;
  }
  return j.dump();
}

std::pair<SyncReport, std::unique_ptr<Chain>> run_sync(
    const SyncHost& host, EpochConfig cfg,
    const std::vector<std::pair<Address, u128>>& genesis_alloc, SyncOptions opts) {
  using clock = std::chrono::steady_clock;
  SyncReport report;
  report.mode = opts.mode;
  Client client(host, opts, report);

  try {
    auto t0 = clock::now();

    // The trusted inputs are the protocol parameters and the genesis
    // allocation; the expected genesis header follows from them.
    Header genesis = Chain(cfg, genesis_alloc).header(0);
    auto [head, genesis_hash] = client.status();
    if (genesis_hash != genesis.hash()) throw SyncAbort{0, "genesis hash mismatch"};
    report.head = head;

    std::vector<Header> headers = verify_header_chain(
        client.ranged(kFrameHeaders, 0, head, DataCategory::Headers, "header"), genesis, head);

    if (opts.mode == SyncMode::FullArchive) {
      report.pivot = 0;
      auto chain = std::make_unique<Chain>(cfg, genesis_alloc);
      std::vector<Bytes> bodies;
      if (head > 0)
        bodies = client.ranged(kFrameBodies, 1, head, DataCategory::Bodies, "body");
      report.download_seconds = std::chrono::duration<double>(clock::now() - t0).count();

      auto t1 = clock::now();
      for (uint64_t n = 1; n <= head; ++n) {
        Block block{headers[n], verified_body(bodies[n - 1], headers[n])};
        BlockReject rej = chain->verify_and_append(block);
        if (rej != BlockReject::None)
          throw SyncAbort{n, std::string("replay rejected: ") + block_reject_name(rej)};
      }
      report.replay_seconds = std::chrono::duration<double>(clock::now() - t1).count();
      report.final_root = chain->state_root();
      report.client_storage = chain->db().stats();
      report.verified = true;
      return {report, std::move(chain)};
    }

    uint64_t pivot = select_pivot(head, cfg.epoch_length, opts.pivot_policy);
    report.pivot = pivot;
    uint64_t pivot_epoch = pivot / cfg.epoch_length;
    bool pivot_sealed = pivot % cfg.epoch_length == 0;

    // Checkpoint blooms 0..pivot_epoch, each verified against the digest
    // committed by the header at its checkpoint height.
    std::vector<BloomFilter> blooms;
    if (cfg.sweep_enabled) {
      for (uint64_t i = 0; i <= pivot_epoch; ++i) {
        BloomFilter b = client.bloom(i);
        if (b.digest() != headers[i * cfg.epoch_length].bloom_digest)
          throw SyncAbort{i * cfg.epoch_length, "checkpoint bloom does not match header digest"};
        blooms.push_back(std::move(b));
      }
    }

    // Body range. Fast keeps the full history; compact keeps nothing before
    // the pivot but still fetches the pivot's partial epoch transiently to
    // recompute the in-progress activity bloom.
    uint64_t body_from;
    if (opts.mode == SyncMode::Fast) {
      body_from = 0;
    } else if (cfg.sweep_enabled && !pivot_sealed) {
      body_from = pivot_epoch * cfg.epoch_length + 1;
    } else {
      body_from = pivot + 1;
    }
    std::vector<Bytes> bodies;
    if (body_from <= head)
      bodies = client.ranged(kFrameBodies, body_from, head, DataCategory::Bodies, "body");
    auto body_at = [&](uint64_t n) -> const Bytes& { return bodies.at(n - body_from); };

    // In-progress epoch bloom: downloaded when the pivot seals an epoch,
    // otherwise rebuilt from the partial epoch's verified bodies (write-sets
    // are derivable from blocks alone).
    BloomFilter epoch_bloom(cfg.bloom_bits, cfg.bloom_hashes);
    if (cfg.sweep_enabled && pivot_sealed) {
      epoch_bloom = blooms[pivot_epoch];
    } else if (cfg.sweep_enabled) {
      std::set<Address> seen;
      for (uint64_t n = pivot_epoch * cfg.epoch_length + 1; n <= pivot; ++n) {
        std::vector<Transaction> txs = verified_body(body_at(n), headers[n]);
        try {
          bloom_insert_block_activity(epoch_bloom, seen, headers[n], txs);
        } catch (const std::exception&) {
          throw SyncAbort{n, "malformed restore payload in body"};
        }
      }
    }

    // State tries: the pivot root, plus the resolver fallback (the enclosing
    // epoch's checkpoint) when the pivot is mid-epoch.
    auto replica = [&] {
      std::vector<Checkpoint> checkpoints;
      uint64_t checkpoint_count = pivot_sealed ? pivot_epoch : pivot_epoch + 1;
      for (uint64_t i = 0; i < checkpoint_count; ++i) {
        Checkpoint cp;
        cp.index = i;
        cp.block_number = i * cfg.epoch_length;
        cp.state_root = headers[cp.block_number].state_root;
        cp.bloom = cfg.sweep_enabled ? blooms[i] : BloomFilter(cfg.bloom_bits, cfg.bloom_hashes);
        checkpoints.push_back(std::move(cp));
      }
      std::vector<Header> prefix(headers.begin(), headers.begin() + pivot + 1);
      return Chain::prime_replica(cfg, std::move(prefix), std::move(checkpoints),
                                  headers[pivot].state_root, std::move(epoch_bloom));
    }();

    for (const Header& h : headers) replica->db().put(DataCategory::Headers, h.encode());
    for (const BloomFilter& b : blooms) replica->db().put(DataCategory::Headers, b.serialize());

    client.download_trie(headers[pivot].state_root, replica->db());
    if (cfg.sweep_enabled && !pivot_sealed)
      client.download_trie(headers[pivot_epoch * cfg.epoch_length].state_root, replica->db());

    if (opts.mode == SyncMode::Fast) {
      // Pre-pivot history: verified bodies plus their derived receipt and
      // tx-index records, and the receipts cross-checked against the wire.
      std::vector<Bytes> receipts =
          client.ranged(kFrameReceipts, 0, pivot, DataCategory::Receipts, "receipt");
      for (uint64_t n = 0; n <= pivot; ++n) {
        std::vector<Transaction> txs = verified_body(body_at(n), headers[n]);
        if (receipts[n] != receipt_record(txs))
          throw SyncAbort{n, "receipt record does not match body"};
        replica->db().put(DataCategory::Bodies, body_at(n));
        replica->db().put(DataCategory::Receipts, receipts[n]);
        for (size_t i = 0; i < txs.size(); ++i)
          replica->db().put(DataCategory::TxIndex,
                            tx_index_record(txs[i].hash(), n, static_cast<uint32_t>(i)));
      }
    }
    report.download_seconds = std::chrono::duration<double>(clock::now() - t0).count();

    auto t1 = clock::now();
    for (uint64_t n = pivot + 1; n <= head; ++n) {
      Block block{headers[n], verified_body(body_at(n), headers[n])};
      BlockReject rej = replica->verify_and_append(block);
      if (rej != BlockReject::None)
        throw SyncAbort{n, std::string("replay rejected: ") + block_reject_name(rej)};
    }
    report.replay_seconds = std::chrono::duration<double>(clock::now() - t1).count();

    report.final_root = replica->state_root();
    report.client_storage = replica->db().stats();
    report.verified = true;
    return {report, std::move(replica)};
  } catch (const SyncAbort& abort) {
    report.abort_block = abort.block;
    report.abort_reason = abort.reason;
    report.verified = false;
    return {report, nullptr};
  }
}

}  // namespace sweep

#pragma once

#include "sweep/chain.hpp"

namespace sweep {

enum class SyncMode {
  FullArchive,  // replay every block from genesis
  Fast,         // all headers/bodies/receipts, pivot state trie(s), replay pivot..head
  Compact,      // fast minus pre-pivot bodies and receipts
};

enum class PivotPolicy {
  LastCheckpoint,  // (head / epoch_length) * epoch_length
  HeadMinus64,     // max(0, head - 64)
};

const char* sync_mode_name(SyncMode m);
const char* pivot_policy_name(PivotPolicy p);
std::optional<SyncMode> sync_mode_from_name(std::string_view s);
std::optional<PivotPolicy> pivot_policy_from_name(std::string_view s);

uint64_t select_pivot(uint64_t head, uint64_t epoch_length, PivotPolicy policy);

/// Serving side of the wire protocol. Stateless request/response over an
/// existing chain; requests and responses are length-delimited byte frames.
class SyncHost {
 public:
  explicit SyncHost(const Chain& chain) : chain_(&chain) {}

  Bytes handle(ByteView request) const;

 private:
  const Chain* chain_;
};

struct SyncOptions {
  SyncMode mode = SyncMode::Fast;
  PivotPolicy pivot_policy = PivotPolicy::LastCheckpoint;
  size_t trie_batch = 256;  // trie node keys per request frame
  /// Test hook: invoked with (frame index, mutable response bytes) for every
  /// response before the client sees it.
  std::function<void(uint64_t, Bytes&)> on_response;
};

struct SyncReport {
  SyncMode mode = SyncMode::Fast;
  uint64_t head = 0;
  uint64_t pivot = 0;
  uint64_t frames = 0;
  uint64_t wire_bytes = 0;                      // total response payload bytes
  std::array<uint64_t, kCategoryCount> wire_by_category{};
  StorageStats client_storage;                  // post-sync local store
  double download_seconds = 0;
  double replay_seconds = 0;
  Hash256 final_root{};
  bool verified = false;
  uint64_t abort_block = 0;   // block (or frame) where verification failed
  std::string abort_reason;   // empty when verified

  std::string to_json() const;
};

/// Runs one sync from `host` into a fresh client chain. `cfg` and
/// `genesis_alloc` are the client's trusted configuration (everything else is
/// fetched and verified). Returns the report and, on success, the synced
/// chain (null when verification aborted).
std::pair<SyncReport, std::unique_ptr<Chain>> run_sync(
    const SyncHost& host, EpochConfig cfg,
    const std::vector<std::pair<Address, u128>>& genesis_alloc, SyncOptions opts = {});

}  // namespace sweep

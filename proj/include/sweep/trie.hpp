#pragma once

#include <functional>

#include "sweep/kv_store.hpp"

namespace sweep {

struct TrieError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class ProofError {
  None,
  RootMismatch,    // first node does not hash to the claimed root
  BrokenChain,     // a node's hash is not referenced by its predecessor
  PathMismatch,    // node path diverges from the key path
  BadEncoding,     // node bytes do not decode
  FakeVoid,        // terminal node actually contains the path continuation
  EmptyProof,
};

const char* proof_error_name(ProofError e);

struct MembershipProof {
  std::vector<Bytes> nodes;  // encodings ordered root -> leaf
};

struct VoidProof {
  std::vector<Bytes> nodes;  // encodings ordered root -> divergence point
};

struct MembershipResult {
  ProofError error = ProofError::None;
  Bytes value;
  explicit operator bool() const { return error == ProofError::None; }
};

/// Modified Merkle Patricia Trie over a content-addressed store. Paths are
/// the 64 nibbles of hash256(key), so all paths have equal length and the
/// trie stays balanced regardless of key distribution. Tries are persistent:
/// put() returns a new root and leaves every old root readable.
///
/// Node encodings (the bytes whose hash labels a node):
///   leaf:      0x00 | u16 nibble_count | nibbles (one byte each) | u32 len | value
///   extension: 0x01 | u16 nibble_count | nibbles | 32-byte child hash
///   branch:    0x02 | u16 occupancy bitmask | 32-byte child hash per set bit,
///              ascending nibble order
class Trie {
 public:
  /// Root committing to zero bindings: hash of the empty byte string.
  static const Hash256 kEmptyRoot;

  explicit Trie(KvStore& db) : db_(&db) {}

  Hash256 put(const Hash256& root, ByteView key, Bytes value);
  std::optional<Bytes> get(const Hash256& root, ByteView key) const;

  /// Requires the key to be present; absent keys are a precondition error
  /// (callers wanting absence evidence use prove_void).
  MembershipProof prove_membership(const Hash256& root, ByteView key) const;
  /// Requires the key to be absent.
  VoidProof prove_void(const Hash256& root, ByteView key) const;

  /// Visits every node reachable from root exactly once.
  void walk(const Hash256& root,
            const std::function<void(const Hash256&, const Bytes&)>& visit) const;
  /// Total encoded bytes (key + value) of the nodes reachable from root.
  uint64_t reachable_bytes(const Hash256& root) const;
  uint64_t reachable_node_count(const Hash256& root) const;

  static std::vector<uint8_t> key_path(ByteView key);

 private:
  KvStore* db_;
};

// Stateless proof verification: needs only the claimed root, the key and the
// proof bytes, never the local store.
MembershipResult verify_membership(const Hash256& root, ByteView key,
                                   const MembershipProof& proof);
ProofError verify_void(const Hash256& root, ByteView key, const VoidProof& proof);

Bytes encode_proof_nodes(const std::vector<Bytes>& nodes);
std::vector<Bytes> decode_proof_nodes(ByteView data);

/// Child hashes referenced by one node encoding (empty for leaves). Throws
/// TrieError on a malformed encoding; used by sync to crawl a remote trie.
std::vector<Hash256> trie_node_children(ByteView encoding);

}  // namespace sweep

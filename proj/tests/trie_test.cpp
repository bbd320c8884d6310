#include <doctest.h>

#include <map>
#include <random>

#include "helpers.hpp"
#include "sweep/trie.hpp"

using namespace sweep;
using namespace sweep::test;

namespace {

Bytes key_of(uint64_t i) { return bytes_of("key-" + std::to_string(i)); }

}  // namespace

TEST_CASE("empty trie root is the hash of the empty string") {
  CHECK(Trie::kEmptyRoot == hash256(ByteView{}));
  KvStore db;
  Trie t(db);
  CHECK(!t.get(Trie::kEmptyRoot, key_of(0)));
  CHECK(t.reachable_node_count(Trie::kEmptyRoot) == 0);
}

TEST_CASE("put/get agrees with a shadow map over random workloads") {
  KvStore db;
  Trie t(db);
  std::mt19937_64 rng(7);
  std::map<uint64_t, Bytes> shadow;
  Hash256 root = Trie::kEmptyRoot;
  for (int i = 0; i < 3000; ++i) {
    uint64_t k = rng() % 800;  // collisions force overwrites
    Bytes v = bytes_of("v" + std::to_string(rng()));
    root = t.put(root, key_of(k), v);
    shadow[k] = v;
  }
  for (const auto& [k, v] : shadow) CHECK(t.get(root, key_of(k)) == v);
  for (uint64_t k = 800; k < 820; ++k) CHECK(!t.get(root, key_of(k)));
}

TEST_CASE("root is independent of insertion order") {
  std::vector<uint64_t> keys(1000);
  for (uint64_t i = 0; i < keys.size(); ++i) keys[i] = i;

  auto build = [&](const std::vector<uint64_t>& order) {
    KvStore db;
    Trie t(db);
    Hash256 root = Trie::kEmptyRoot;
    for (uint64_t k : order) root = t.put(root, key_of(k), bytes_of("v" + std::to_string(k)));
    return root;
  };
  Hash256 forward = build(keys);
  std::reverse(keys.begin(), keys.end());
  CHECK(build(keys) == forward);
  std::mt19937_64 rng(3);
  std::shuffle(keys.begin(), keys.end(), rng);
  CHECK(build(keys) == forward);
}

TEST_CASE("tries are persistent: old roots stay readable after updates") {
  KvStore db;
  Trie t(db);
  Hash256 r1 = t.put(Trie::kEmptyRoot, key_of(1), bytes_of("one"));
  Hash256 r2 = t.put(r1, key_of(1), bytes_of("uno"));
  Hash256 r3 = t.put(r2, key_of(2), bytes_of("two"));
  CHECK(t.get(r1, key_of(1)) == bytes_of("one"));
  CHECK(t.get(r2, key_of(1)) == bytes_of("uno"));
  CHECK(!t.get(r2, key_of(2)));
  CHECK(t.get(r3, key_of(2)) == bytes_of("two"));
}

TEST_CASE("walk visits each reachable node exactly once and sizes add up") {
  KvStore db;
  Trie t(db);
  Hash256 root = Trie::kEmptyRoot;
  for (uint64_t i = 0; i < 200; ++i) root = t.put(root, key_of(i), bytes_of("x"));
  std::set<Hash256> seen;
  uint64_t bytes = 0;
  t.walk(root, [&](const Hash256& k, const Bytes& v) {
    CHECK(seen.insert(k).second);
    bytes += k.size() + v.size();
  });
  CHECK(seen.size() == t.reachable_node_count(root));
  CHECK(bytes == t.reachable_bytes(root));
  CHECK(seen.size() >= 200);  // at least one leaf per binding
}

TEST_CASE("honest membership proofs verify and carry the bound value") {
  KvStore db;
  Trie t(db);
  Hash256 root = Trie::kEmptyRoot;
  for (uint64_t i = 0; i < 50; ++i) root = t.put(root, key_of(i), bytes_of("val" + std::to_string(i)));
  for (uint64_t i = 0; i < 50; ++i) {
    MembershipProof p = t.prove_membership(root, key_of(i));
    MembershipResult r = verify_membership(root, key_of(i), p);
    REQUIRE(r);
    CHECK(r.value == bytes_of("val" + std::to_string(i)));
  }
  CHECK_THROWS_AS(t.prove_membership(root, key_of(99)), TrieError);
}

TEST_CASE("honest void proofs verify for absent keys") {
  KvStore db;
  Trie t(db);
  Hash256 root = Trie::kEmptyRoot;
  for (uint64_t i = 0; i < 50; ++i) root = t.put(root, key_of(i), bytes_of("x"));
  for (uint64_t i = 50; i < 100; ++i) {
    VoidProof p = t.prove_void(root, key_of(i));
    CHECK(verify_void(root, key_of(i), p) == ProofError::None);
  }
  CHECK_THROWS_AS(t.prove_void(root, key_of(1)), TrieError);

  // Empty trie: absence is proven by zero nodes, and only there.
  CHECK(verify_void(Trie::kEmptyRoot, key_of(0), VoidProof{}) == ProofError::None);
  CHECK(verify_void(root, key_of(60), VoidProof{}) == ProofError::RootMismatch);
}

TEST_CASE("tampered proofs fail with the matching error code") {
  KvStore db;
  Trie t(db);
  Hash256 root = Trie::kEmptyRoot;
  for (uint64_t i = 0; i < 64; ++i) root = t.put(root, key_of(i), bytes_of("v" + std::to_string(i)));
  MembershipProof honest = t.prove_membership(root, key_of(7));
  REQUIRE(honest.nodes.size() >= 2);

  SUBCASE("wrong root") {
    Hash256 other = t.put(root, key_of(7), bytes_of("changed"));
    CHECK(verify_membership(other, key_of(7), honest).error == ProofError::RootMismatch);
  }
  SUBCASE("empty proof") {
    CHECK(verify_membership(root, key_of(7), MembershipProof{}).error == ProofError::EmptyProof);
  }
  SUBCASE("flipped byte breaks the hash chain") {
    MembershipProof p = honest;
    p.nodes[1][p.nodes[1].size() / 2] ^= 0x01;
    auto err = verify_membership(root, key_of(7), p).error;
    CHECK(err != ProofError::None);
  }
  SUBCASE("dropped interior node") {
    MembershipProof p = honest;
    p.nodes.erase(p.nodes.begin() + 1);
    CHECK(verify_membership(root, key_of(7), p).error != ProofError::None);
  }
  SUBCASE("proof for one key presented for another is a path mismatch") {
    MembershipProof other = t.prove_membership(root, key_of(9));
    auto err = verify_membership(root, key_of(7), other).error;
    CHECK(err == ProofError::PathMismatch);
  }
  SUBCASE("membership proof cannot double as a void proof") {
    VoidProof fake{honest.nodes};
    CHECK(verify_void(root, key_of(7), fake) == ProofError::FakeVoid);
  }
  SUBCASE("truncated void proof is rejected, not treated as divergence") {
    VoidProof p = t.prove_void(root, key_of(99));
    if (p.nodes.size() > 1) {
      p.nodes.pop_back();
      // The shortened chain either ends at a node that still continues the
      // path (FakeVoid) or no longer parses as evidence of absence.
      CHECK(verify_void(root, key_of(99), p) != ProofError::None);
    }
  }
  SUBCASE("garbage node encoding") {
    MembershipProof p = honest;
    p.nodes[0] = bytes_of("not a node");
    CHECK(verify_membership(root, key_of(7), p).error == ProofError::RootMismatch);
    p = honest;
    p.nodes.push_back(bytes_of("junk"));
    CHECK(verify_membership(root, key_of(7), p).error != ProofError::None);
  }
}

TEST_CASE("proof node list codec round-trips and rejects trailing bytes") {
  std::vector<Bytes> nodes{bytes_of("alpha"), bytes_of(""), bytes_of("gamma")};
  Bytes enc = encode_proof_nodes(nodes);
  CHECK(decode_proof_nodes(enc) == nodes);
  enc.push_back(0);
  CHECK_THROWS_AS(decode_proof_nodes(enc), DecodeError);
}

TEST_CASE("trie_node_children exposes referenced hashes for sync crawling") {
  KvStore db;
  Trie t(db);
  Hash256 root = Trie::kEmptyRoot;
  for (uint64_t i = 0; i < 40; ++i) root = t.put(root, key_of(i), bytes_of("x"));

  // Every reachable node's children must themselves be reachable keys.
  std::set<Hash256> keys;
  t.walk(root, [&](const Hash256& k, const Bytes&) { keys.insert(k); });
  uint64_t edges = 0;
  t.walk(root, [&](const Hash256&, const Bytes& enc) {
    for (const Hash256& child : trie_node_children(enc)) {
      CHECK(keys.count(child));
      ++edges;
    }
  });
  CHECK(edges == keys.size() - 1);  // tree: every node except the root has one parent
  CHECK_THROWS_AS(trie_node_children(bytes_of("garbage")), TrieError);
}

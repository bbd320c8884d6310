#include "sweep/trie.hpp"

#include <algorithm>
#include <cassert>

namespace sweep {

namespace {

constexpr uint8_t kTagLeaf = 0x00;
constexpr uint8_t kTagExtension = 0x01;
constexpr uint8_t kTagBranch = 0x02;
constexpr size_t kPathNibbles = 64;

struct Node {
  enum class Kind : uint8_t { Leaf, Extension, Branch };
  Kind kind = Kind::Leaf;
  std::vector<uint8_t> path;  // leaf suffix or extension shared prefix
  Bytes value;                // leaf only
  std::array<std::optional<Hash256>, 16> children;  // branch only

  Bytes encode() const {
    Bytes out;
    switch (kind) {
      case Kind::Leaf:
        out.push_back(kTagLeaf);
        put_u16(out, static_cast<uint16_t>(path.size()));
        out.insert(out.end(), path.begin(), path.end());
        put_u32(out, static_cast<uint32_t>(value.size()));
        out.insert(out.end(), value.begin(), value.end());
        break;
      case Kind::Extension:
        out.push_back(kTagExtension);
        put_u16(out, static_cast<uint16_t>(path.size()));
        out.insert(out.end(), path.begin(), path.end());
        out.insert(out.end(), children[0]->begin(), children[0]->end());
        break;
      case Kind::Branch: {
        out.push_back(kTagBranch);
        uint16_t mask = 0;
        for (int i = 0; i < 16; ++i)
          if (children[i]) mask |= static_cast<uint16_t>(1u << i);
        put_u16(out, mask);
        for (int i = 0; i < 16; ++i)
          if (children[i]) out.insert(out.end(), children[i]->begin(), children[i]->end());
        break;
      }
    }
    return out;
  }

  static std::optional<Node> decode(ByteView data) {
    try {
      ByteReader r(data);
      Node n;
      uint8_t tag = r.u8();
      switch (tag) {
        case kTagLeaf: {
          n.kind = Kind::Leaf;
          uint16_t len = r.u16();
          n.path = r.take(len);
          uint32_t vlen = r.u32();
          n.value = r.take(vlen);
          break;
        }
        case kTagExtension: {
          n.kind = Kind::Extension;
          uint16_t len = r.u16();
          if (len == 0) return std::nullopt;  // extension path must be non-empty
          n.path = r.take(len);
          n.children[0] = r.take_array<32>();
          break;
        }
        case kTagBranch: {
          n.kind = Kind::Branch;
          uint16_t mask = r.u16();
          int occupied = 0;
          for (int i = 0; i < 16; ++i) {
            if (mask & (1u << i)) {
              n.children[i] = r.take_array<32>();
              ++occupied;
            }
          }
          if (occupied < 2) return std::nullopt;  // no degenerate branches
          break;
        }
        default:
          return std::nullopt;
      }
      for (uint8_t nib : n.path)
        if (nib > 0xf) return std::nullopt;
      if (!r.eof()) return std::nullopt;
      return n;
    } catch (const DecodeError&) {
      return std::nullopt;
    }
  }
};

size_t common_prefix(std::span<const uint8_t> a, std::span<const uint8_t> b) {
  size_t n = std::min(a.size(), b.size());
  size_t i = 0;
  while (i < n && a[i] == b[i]) ++i;
  return i;
}

}  // namespace

const Hash256 Trie::kEmptyRoot = hash256(ByteView{});

const char* proof_error_name(ProofError e) {
  switch (e) {
    case ProofError::None: return "ok";
    case ProofError::RootMismatch: return "root-mismatch";
    case ProofError::BrokenChain: return "broken-chain";
    case ProofError::PathMismatch: return "path-mismatch";
    case ProofError::BadEncoding: return "bad-encoding";
    case ProofError::FakeVoid: return "fake-void";
    case ProofError::EmptyProof: return "empty-proof";
  }
  return "unknown";
}

std::vector<uint8_t> Trie::key_path(ByteView key) {
  Hash256 h = hash256(key);
  std::vector<uint8_t> nibbles;
  nibbles.reserve(kPathNibbles);
  for (uint8_t b : h) {
    nibbles.push_back(b >> 4);
    nibbles.push_back(b & 0xf);
  }
  return nibbles;
}

namespace {

// Shared walk machinery: load + decode a node or fail loudly.
Node load_node(const KvStore& db, const Hash256& key) {
  auto raw = db.get(key);
  if (!raw) throw TrieError("missing trie node " + to_hex(key));
  auto node = Node::decode(*raw);
  if (!node) throw TrieError("corrupt trie node encoding " + to_hex(key));
  return *node;
}

}  // namespace

Hash256 Trie::put(const Hash256& root, ByteView key, Bytes value) {
  std::vector<uint8_t> path = key_path(key);

  auto store = [this](const Node& n) { return db_->put(DataCategory::TrieNodes, n.encode()); };

  // Recursive persistent insert; returns the hash of the replacement node.
  std::function<Hash256(const std::optional<Hash256>&, std::span<const uint8_t>)> insert =
      [&](const std::optional<Hash256>& at, std::span<const uint8_t> rest) -> Hash256 {
    if (!at) {
      Node leaf;
      leaf.kind = Node::Kind::Leaf;
      leaf.path.assign(rest.begin(), rest.end());
      leaf.value = value;
      return store(leaf);
    }
    Node node = load_node(*db_, *at);
    switch (node.kind) {
      case Node::Kind::Leaf: {
        size_t cp = common_prefix(node.path, rest);
        if (cp == node.path.size() && cp == rest.size()) {
          Node leaf = node;
          leaf.value = value;  // overwrite binding
          return store(leaf);
        }
        // Keys are fixed length so both suffixes extend past the split point.
        assert(cp < node.path.size() && cp < rest.size());
        Node branch;
        branch.kind = Node::Kind::Branch;
        Node old_leaf;
        old_leaf.kind = Node::Kind::Leaf;
        old_leaf.path.assign(node.path.begin() + cp + 1, node.path.end());
        old_leaf.value = node.value;
        branch.children[node.path[cp]] = store(old_leaf);
        Node new_leaf;
        new_leaf.kind = Node::Kind::Leaf;
        new_leaf.path.assign(rest.begin() + cp + 1, rest.end());
        new_leaf.value = value;
        branch.children[rest[cp]] = store(new_leaf);
        Hash256 branch_key = store(branch);
        if (cp == 0) return branch_key;
        Node ext;
        ext.kind = Node::Kind::Extension;
        ext.path.assign(rest.begin(), rest.begin() + cp);
        ext.children[0] = branch_key;
        return store(ext);
      }
      case Node::Kind::Extension: {
        size_t cp = common_prefix(node.path, rest);
        if (cp == node.path.size()) {
          Node ext = node;
          ext.children[0] = insert(node.children[0], rest.subspan(cp));
          return store(ext);
        }
        // Split the extension at the divergence point.
        Node branch;
        branch.kind = Node::Kind::Branch;
        std::vector<uint8_t> tail(node.path.begin() + cp + 1, node.path.end());
        if (tail.empty()) {
          branch.children[node.path[cp]] = node.children[0];
        } else {
          Node sub_ext;
          sub_ext.kind = Node::Kind::Extension;
          sub_ext.path = tail;
          sub_ext.children[0] = node.children[0];
          branch.children[node.path[cp]] = store(sub_ext);
        }
        Node new_leaf;
        new_leaf.kind = Node::Kind::Leaf;
        new_leaf.path.assign(rest.begin() + cp + 1, rest.end());
        new_leaf.value = value;
        branch.children[rest[cp]] = store(new_leaf);
        Hash256 branch_key = store(branch);
        if (cp == 0) return branch_key;
        Node ext;
        ext.kind = Node::Kind::Extension;
        ext.path.assign(rest.begin(), rest.begin() + cp);
        ext.children[0] = branch_key;
        return store(ext);
      }
      case Node::Kind::Branch: {
        Node branch = node;
        uint8_t nib = rest[0];
        branch.children[nib] = insert(node.children[nib], rest.subspan(1));
        return store(branch);
      }
    }
    throw TrieError("unreachable");
  };

  if (root == kEmptyRoot) return insert(std::nullopt, path);
  return insert(root, path);
}

std::optional<Bytes> Trie::get(const Hash256& root, ByteView key) const {
  if (root == kEmptyRoot) return std::nullopt;
  std::vector<uint8_t> path = key_path(key);
  std::span<const uint8_t> rest(path);
  Hash256 at = root;
  while (true) {
    Node node = load_node(*db_, at);
    switch (node.kind) {
      case Node::Kind::Leaf:
        if (std::equal(node.path.begin(), node.path.end(), rest.begin(), rest.end()))
          return node.value;
        return std::nullopt;
      case Node::Kind::Extension: {
        size_t cp = common_prefix(node.path, rest);
        if (cp != node.path.size()) return std::nullopt;
        rest = rest.subspan(cp);
        at = *node.children[0];
        break;
      }
      case Node::Kind::Branch: {
        uint8_t nib = rest[0];
        if (!node.children[nib]) return std::nullopt;
        rest = rest.subspan(1);
        at = *node.children[nib];
        break;
      }
    }
  }
}

MembershipProof Trie::prove_membership(const Hash256& root, ByteView key) const {
  if (root == kEmptyRoot) throw TrieError("prove_membership: key absent (empty trie), use prove_void");
  std::vector<uint8_t> path = key_path(key);
  std::span<const uint8_t> rest(path);
  MembershipProof proof;
  Hash256 at = root;
  while (true) {
    auto raw = db_->get(at);
    if (!raw) throw TrieError("missing trie node " + to_hex(at));
    auto node = Node::decode(*raw);
    if (!node) throw TrieError("corrupt trie node encoding " + to_hex(at));
    proof.nodes.push_back(*raw);
    switch (node->kind) {
      case Node::Kind::Leaf:
        if (!std::equal(node->path.begin(), node->path.end(), rest.begin(), rest.end()))
          throw TrieError("prove_membership: key absent, use prove_void");
        return proof;
      case Node::Kind::Extension: {
        size_t cp = common_prefix(node->path, rest);
        if (cp != node->path.size())
          throw TrieError("prove_membership: key absent, use prove_void");
        rest = rest.subspan(cp);
        at = *node->children[0];
        break;
      }
      case Node::Kind::Branch: {
        uint8_t nib = rest[0];
        if (!node->children[nib])
          throw TrieError("prove_membership: key absent, use prove_void");
        rest = rest.subspan(1);
        at = *node->children[nib];
        break;
      }
    }
  }
}

VoidProof Trie::prove_void(const Hash256& root, ByteView key) const {
  VoidProof proof;
  if (root == kEmptyRoot) return proof;  // zero nodes: the empty root itself is the evidence
  std::vector<uint8_t> path = key_path(key);
  std::span<const uint8_t> rest(path);
  Hash256 at = root;
  while (true) {
    auto raw = db_->get(at);
    if (!raw) throw TrieError("missing trie node " + to_hex(at));
    auto node = Node::decode(*raw);
    if (!node) throw TrieError("corrupt trie node encoding " + to_hex(at));
    proof.nodes.push_back(*raw);
    switch (node->kind) {
      case Node::Kind::Leaf:
        if (std::equal(node->path.begin(), node->path.end(), rest.begin(), rest.end()))
          throw TrieError("prove_void: key present, use prove_membership");
        return proof;  // mismatching leaf suffix is the divergence
      case Node::Kind::Extension: {
        size_t cp = common_prefix(node->path, rest);
        if (cp != node->path.size()) return proof;  // diverges inside the shared path
        rest = rest.subspan(cp);
        at = *node->children[0];
        break;
      }
      case Node::Kind::Branch: {
        uint8_t nib = rest[0];
        if (!node->children[nib]) return proof;  // empty slot at the next nibble
        rest = rest.subspan(1);
        at = *node->children[nib];
        break;
      }
    }
  }
}

void Trie::walk(const Hash256& root,
                const std::function<void(const Hash256&, const Bytes&)>& visit) const {
  if (root == kEmptyRoot) return;
  std::vector<Hash256> stack{root};
  while (!stack.empty()) {
    Hash256 at = stack.back();
    stack.pop_back();
    auto raw = db_->get(at);
    if (!raw) throw TrieError("missing trie node " + to_hex(at));
    auto node = Node::decode(*raw);
    if (!node) throw TrieError("corrupt trie node encoding " + to_hex(at));
    visit(at, *raw);
    if (node->kind == Node::Kind::Extension) {
      stack.push_back(*node->children[0]);
    } else if (node->kind == Node::Kind::Branch) {
      for (const auto& child : node->children)
        if (child) stack.push_back(*child);
    }
  }
}

uint64_t Trie::reachable_bytes(const Hash256& root) const {
  uint64_t total = 0;
  walk(root, [&](const Hash256& k, const Bytes& v) { total += k.size() + v.size(); });
  return total;
}

uint64_t Trie::reachable_node_count(const Hash256& root) const {
  uint64_t n = 0;
  walk(root, [&](const Hash256&, const Bytes&) { ++n; });
  return n;
}

namespace {

// Common chain-walking core for both verifiers. Walks the node list checking
// hash linkage and path consumption. On success fills `terminal` with the
// decoded last node and `consumed` with how many nibbles it consumed before
// reaching it. Intermediate nodes must consume the path exactly (a leaf can
// only appear last).
ProofError walk_chain(const Hash256& root, std::span<const uint8_t> path,
                      const std::vector<Bytes>& nodes, Node& terminal, size_t& pos) {
  if (hash256(nodes[0]) != root) return ProofError::RootMismatch;
  pos = 0;
  for (size_t i = 0; i < nodes.size(); ++i) {
    auto node = Node::decode(nodes[i]);
    if (!node) return ProofError::BadEncoding;
    bool last = i + 1 == nodes.size();
    if (last) {
      terminal = *node;
      return ProofError::None;
    }
    Hash256 next = hash256(nodes[i + 1]);
    switch (node->kind) {
      case Node::Kind::Leaf:
        return ProofError::BrokenChain;  // leaf cannot have a successor
      case Node::Kind::Extension: {
        if (node->path.size() > path.size() - pos ||
            !std::equal(node->path.begin(), node->path.end(), path.begin() + pos))
          return ProofError::PathMismatch;
        pos += node->path.size();
        if (*node->children[0] != next) return ProofError::BrokenChain;
        break;
      }
      case Node::Kind::Branch: {
        if (pos >= path.size()) return ProofError::PathMismatch;
        uint8_t nib = path[pos];
        if (!node->children[nib] || *node->children[nib] != next) {
          // The successor hangs off a different slot: the proof follows some
          // other key's path. Linked nowhere at all: tampered chain.
          for (const auto& child : node->children)
            if (child && *child == next) return ProofError::PathMismatch;
          return ProofError::BrokenChain;
        }
        ++pos;
        break;
      }
    }
  }
  return ProofError::BrokenChain;  // unreachable
}

}  // namespace

MembershipResult verify_membership(const Hash256& root, ByteView key,
                                   const MembershipProof& proof) {
  if (proof.nodes.empty()) return {ProofError::EmptyProof, {}};
  std::vector<uint8_t> path = Trie::key_path(key);
  Node terminal;
  size_t pos = 0;
  ProofError err = walk_chain(root, path, proof.nodes, terminal, pos);
  if (err != ProofError::None) return {err, {}};
  if (terminal.kind != Node::Kind::Leaf) return {ProofError::BrokenChain, {}};
  if (terminal.path.size() != path.size() - pos ||
      !std::equal(terminal.path.begin(), terminal.path.end(), path.begin() + pos))
    return {ProofError::PathMismatch, {}};
  return {ProofError::None, terminal.value};
}

ProofError verify_void(const Hash256& root, ByteView key, const VoidProof& proof) {
  if (proof.nodes.empty())
    return root == Trie::kEmptyRoot ? ProofError::None : ProofError::RootMismatch;
  std::vector<uint8_t> path = Trie::key_path(key);
  Node terminal;
  size_t pos = 0;
  ProofError err = walk_chain(root, path, proof.nodes, terminal, pos);
  if (err != ProofError::None) return err;
  switch (terminal.kind) {
    case Node::Kind::Leaf: {
      bool matches = terminal.path.size() == path.size() - pos &&
                     std::equal(terminal.path.begin(), terminal.path.end(), path.begin() + pos);
      return matches ? ProofError::FakeVoid : ProofError::None;
    }
    case Node::Kind::Extension: {
      size_t rem = path.size() - pos;
      bool prefix_matches =
          terminal.path.size() <= rem &&
          std::equal(terminal.path.begin(), terminal.path.end(), path.begin() + pos);
      // A matching extension means the path continues below: truncated proof.
      return prefix_matches ? ProofError::FakeVoid : ProofError::None;
    }
    case Node::Kind::Branch: {
      if (pos >= path.size()) return ProofError::PathMismatch;
      return terminal.children[path[pos]] ? ProofError::FakeVoid : ProofError::None;
    }
  }
  return ProofError::BadEncoding;
}

std::vector<Hash256> trie_node_children(ByteView encoding) {
  auto node = Node::decode(encoding);
  if (!node) throw TrieError("corrupt trie node encoding");
  std::vector<Hash256> out;
  for (const auto& child : node->children)
    if (child) out.push_back(*child);
  return out;
}

Bytes encode_proof_nodes(const std::vector<Bytes>& nodes) {
  Bytes out;
  put_u32(out, static_cast<uint32_t>(nodes.size()));
  for (const Bytes& n : nodes) {
    put_u32(out, static_cast<uint32_t>(n.size()));
    out.insert(out.end(), n.begin(), n.end());
  }
  return out;
}

std::vector<Bytes> decode_proof_nodes(ByteView data) {
  ByteReader r(data);
  uint32_t count = r.u32();
  std::vector<Bytes> nodes;
  nodes.reserve(count);
  for (uint32_t i = 0; i < count; ++i) {
    uint32_t len = r.u32();
    nodes.push_back(r.take(len));
  }
  if (!r.eof()) throw DecodeError("trailing bytes after proof nodes");
  return nodes;
}

}  // namespace sweep

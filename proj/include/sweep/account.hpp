#pragma once

#include "sweep/hash.hpp"
#include "sweep/types.hpp"

namespace sweep {

/// Leaf value of the state trie. storage_root / code_hash exist for schema
/// parity but stay empty: contract accounts are modeled as plain accounts.
struct Account {
  uint64_t nonce = 0;
  u128 balance = 0;
  bool restored = false;
  std::optional<Hash256> storage_root;
  std::optional<Hash256> code_hash;

  Bytes encode() const;
  static std::optional<Account> decode(ByteView data);

  bool operator==(const Account& other) const {
    return nonce == other.nonce && balance == other.balance && restored == other.restored &&
           storage_root == other.storage_root && code_hash == other.code_hash;
  }
};

/// Transfers to this address are restore transactions; the payload carries
/// the serialized restore bundle.
inline const Address kRestoreAddress = [] {
  Address a{};
  a[18] = 0x12;
  a[19] = 0x34;
  return a;
}();

struct Transaction {
  Address from{};
  Address to{};
  u128 value = 0;
  u128 fee = 0;
  uint64_t nonce = 0;
  Bytes payload;  // restore bundle bytes when to == kRestoreAddress

  bool is_restore() const { return to == kRestoreAddress; }

  Bytes encode() const;
  static Transaction decode(ByteView data);
  Hash256 hash() const { return hash256(encode()); }

  bool operator==(const Transaction&) const = default;
};

std::string address_hex(const Address& a);
Address address_from_hex(const std::string& hex);

}  // namespace sweep

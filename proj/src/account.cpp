#include "sweep/account.hpp"

namespace sweep {

namespace {
constexpr uint8_t kFlagRestored = 1u << 0;
constexpr uint8_t kFlagStorageRoot = 1u << 1;
constexpr uint8_t kFlagCodeHash = 1u << 2;
}  // namespace

Bytes Account::encode() const {
  Bytes out;
  put_u64(out, nonce);
  put_u128(out, balance);
  uint8_t flags = 0;
  if (restored) flags |= kFlagRestored;
  if (storage_root) flags |= kFlagStorageRoot;
  if (code_hash) flags |= kFlagCodeHash;
  out.push_back(flags);
  if (storage_root) out.insert(out.end(), storage_root->begin(), storage_root->end());
  if (code_hash) out.insert(out.end(), code_hash->begin(), code_hash->end());
  return out;
}

std::optional<Account> Account::decode(ByteView data) {
  try {
    ByteReader r(data);
    Account a;
    a.nonce = r.u64();
    a.balance = r.u128v();
    uint8_t flags = r.u8();
    if (flags & ~(kFlagRestored | kFlagStorageRoot | kFlagCodeHash)) return std::nullopt;
    a.restored = flags & kFlagRestored;
    if (flags & kFlagStorageRoot) a.storage_root = r.take_array<32>();
    if (flags & kFlagCodeHash) a.code_hash = r.take_array<32>();
    if (!r.eof()) return std::nullopt;
    return a;
  } catch (const DecodeError&) {
    return std::nullopt;
  }
}

Bytes Transaction::encode() const {
  Bytes out;
  out.insert(out.end(), from.begin(), from.end());
  out.insert(out.end(), to.begin(), to.end());
  put_u128(out, value);
  put_u128(out, fee);
  put_u64(out, nonce);
  put_u32(out, static_cast<uint32_t>(payload.size()));
  out.insert(out.end(), payload.begin(), payload.end());
  return out;
}

Transaction Transaction::decode(ByteView data) {
  ByteReader r(data);
  Transaction tx;
  tx.from = r.take_array<20>();
  tx.to = r.take_array<20>();
  tx.value = r.u128v();
  tx.fee = r.u128v();
  tx.nonce = r.u64();
  uint32_t len = r.u32();
  tx.payload = r.take(len);
  if (!r.eof()) throw DecodeError("trailing bytes after transaction");
  return tx;
}

std::string address_hex(const Address& a) { return "0x" + to_hex(a); }

Address address_from_hex(const std::string& hex) { return array_from_hex<20>(hex); }

}  // namespace sweep

#pragma once

#include <random>

#include "sweep/workload.hpp"

namespace sweep::test {

inline Address addr(uint64_t i) { return account_address(i); }

inline Bytes bytes_of(const std::string& s) { return Bytes(s.begin(), s.end()); }

inline ByteView view(const Address& a) { return ByteView(a.data(), a.size()); }

inline Transaction transfer(uint64_t from, uint64_t to, u128 value, u128 fee, uint64_t nonce) {
  Transaction tx;
  tx.from = addr(from);
  tx.to = addr(to);
  tx.value = value;
  tx.fee = fee;
  tx.nonce = nonce;
  return tx;
}

// Small funded chain: accounts 0..n-1 hold `balance` each at genesis.
inline std::vector<std::pair<Address, u128>> flat_alloc(uint64_t n, u128 balance) {
  std::vector<std::pair<Address, u128>> alloc;
  for (uint64_t i = 0; i < n; ++i) alloc.emplace_back(addr(i), balance);
  return alloc;
}

}  // namespace sweep::test

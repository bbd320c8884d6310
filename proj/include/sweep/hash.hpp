#pragma once

#include "sweep/types.hpp"

namespace sweep {

/// 256-bit Keccak-family digest (SHA3-256). Every content-addressed key,
/// trie node label and header hash in the system uses this one function.
Hash256 hash256(ByteView data);

inline Hash256 hash256(const Bytes& data) { return hash256(ByteView(data)); }
inline Hash256 hash256(const std::string& data) {
  return hash256(ByteView(reinterpret_cast<const uint8_t*>(data.data()), data.size()));
}

}  // namespace sweep

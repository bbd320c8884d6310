#include "sweep/hash.hpp"

#include <openssl/evp.h>

#include <stdexcept>

namespace sweep {

Hash256 hash256(ByteView data) {
  Hash256 out{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), out.data(), &len, EVP_sha3_256(), nullptr) != 1 ||
      len != out.size()) {
    throw std::runtime_error("sha3-256 digest failed");
  }
  return out;
}

}  // namespace sweep

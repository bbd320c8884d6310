#pragma once

#include "sweep/hash.hpp"
#include "sweep/types.hpp"

namespace sweep {

/// Fixed-size bloom filter over addresses. Negative answers are definitive;
/// positives may be false at the standard (1 - e^(-kn/m))^k rate.
class BloomFilter {
 public:
  BloomFilter() : BloomFilter(1u << 20, 4) {}
  BloomFilter(uint64_t bit_count, uint32_t hash_count);

  void insert(ByteView item);
  bool maybe_contains(ByteView item) const;
  void insert(const Address& a) { insert(ByteView(a.data(), a.size())); }
  bool maybe_contains(const Address& a) const { return maybe_contains(ByteView(a.data(), a.size())); }

  void clear();
  /// Bitwise union; both filters must share parameters.
  void merge(const BloomFilter& other);

  uint64_t bit_count() const { return bit_count_; }
  uint32_t hash_count() const { return hash_count_; }

  Bytes serialize() const;
  static BloomFilter deserialize(ByteView data);
  Hash256 digest() const { return hash256(serialize()); }

  /// Expected false-positive rate for n insertions: (1 - e^(-kn/m))^k.
  static double expected_fp_rate(uint64_t n, uint64_t m_bits, uint32_t k);

  bool operator==(const BloomFilter&) const = default;

 private:
  uint64_t bit_index(uint64_t h1, uint64_t h2, uint32_t i) const;

  uint64_t bit_count_;
  uint32_t hash_count_;
  std::vector<uint64_t> words_;
};

}  // namespace sweep

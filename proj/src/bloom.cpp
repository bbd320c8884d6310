#include "sweep/bloom.hpp"

#include <cmath>

namespace sweep {

BloomFilter::BloomFilter(uint64_t bit_count, uint32_t hash_count)
    : bit_count_(bit_count), hash_count_(hash_count), words_((bit_count + 63) / 64, 0) {
  if (bit_count == 0 || hash_count == 0) throw std::invalid_argument("bad bloom parameters");
}

namespace {
// Double hashing over the two 64-bit halves of one digest; index i is
// (h1 + i*h2) mod m.
std::pair<uint64_t, uint64_t> item_hashes(ByteView item) {
  Hash256 h = hash256(item);
  uint64_t h1 = 0, h2 = 0;
  for (int i = 0; i < 8; ++i) {
    h1 |= static_cast<uint64_t>(h[i]) << (8 * i);
    h2 |= static_cast<uint64_t>(h[8 + i]) << (8 * i);
  }
  if (h2 == 0) h2 = 1;
  return {h1, h2};
}
}  // namespace

uint64_t BloomFilter::bit_index(uint64_t h1, uint64_t h2, uint32_t i) const {
  return (h1 + static_cast<uint64_t>(i) * h2) % bit_count_;
}

void BloomFilter::insert(ByteView item) {
  auto [h1, h2] = item_hashes(item);
  for (uint32_t i = 0; i < hash_count_; ++i) {
    uint64_t bit = bit_index(h1, h2, i);
    words_[bit / 64] |= uint64_t{1} << (bit % 64);
  }
}

bool BloomFilter::maybe_contains(ByteView item) const {
  auto [h1, h2] = item_hashes(item);
  for (uint32_t i = 0; i < hash_count_; ++i) {
    uint64_t bit = bit_index(h1, h2, i);
    if (!(words_[bit / 64] & uint64_t{1} << (bit % 64))) return false;
  }
  return true;
}

void BloomFilter::clear() { std::fill(words_.begin(), words_.end(), 0); }

void BloomFilter::merge(const BloomFilter& other) {
  if (other.bit_count_ != bit_count_ || other.hash_count_ != hash_count_)
    throw std::invalid_argument("bloom parameter mismatch");
  for (size_t i = 0; i < words_.size(); ++i) words_[i] |= other.words_[i];
}

Bytes BloomFilter::serialize() const {
  Bytes out;
  put_u64(out, bit_count_);
  put_u32(out, hash_count_);
  for (uint64_t w : words_) put_u64(out, w);
  return out;
}

BloomFilter BloomFilter::deserialize(ByteView data) {
  ByteReader r(data);
  uint64_t m = r.u64();
  uint32_t k = r.u32();
  BloomFilter bf(m, k);
  for (auto& w : bf.words_) w = r.u64();
  if (!r.eof()) throw DecodeError("trailing bytes after bloom filter");
  return bf;
}

double BloomFilter::expected_fp_rate(uint64_t n, uint64_t m_bits, uint32_t k) {
  double exponent = -static_cast<double>(k) * static_cast<double>(n) / static_cast<double>(m_bits);
  return std::pow(1.0 - std::exp(exponent), static_cast<double>(k));
}

}  // namespace sweep

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace sweep {

using Bytes = std::vector<uint8_t>;
using ByteView = std::span<const uint8_t>;
using Hash256 = std::array<uint8_t, 32>;
using Address = std::array<uint8_t, 20>;
using u128 = unsigned __int128;

inline constexpr Hash256 kZeroHash{};

std::string to_hex(ByteView data);
Bytes from_hex(const std::string& hex);

template <size_t N>
std::string to_hex(const std::array<uint8_t, N>& a) {
  return to_hex(ByteView(a.data(), a.size()));
}

template <size_t N>
std::array<uint8_t, N> array_from_hex(const std::string& hex) {
  Bytes b = from_hex(hex);
  if (b.size() != N) throw std::invalid_argument("hex length mismatch");
  std::array<uint8_t, N> out{};
  std::copy(b.begin(), b.end(), out.begin());
  return out;
}

std::string u128_to_string(u128 v);
u128 u128_from_string(const std::string& s);

// Little-endian fixed-width integer helpers used by all binary encodings.
void put_u16(Bytes& out, uint16_t v);
void put_u32(Bytes& out, uint32_t v);
void put_u64(Bytes& out, uint64_t v);
void put_u128(Bytes& out, u128 v);

class ByteReader {
 public:
  explicit ByteReader(ByteView data) : data_(data) {}
  bool eof() const { return pos_ == data_.size(); }
  size_t remaining() const { return data_.size() - pos_; }
  uint8_t u8();
  uint16_t u16();
  uint32_t u32();
  uint64_t u64();
  u128 u128v();
  Bytes take(size_t n);
  template <size_t N>
  std::array<uint8_t, N> take_array() {
    Bytes b = take(N);
    std::array<uint8_t, N> out{};
    std::copy(b.begin(), b.end(), out.begin());
    return out;
  }

 private:
  ByteView data_;
  size_t pos_ = 0;
};

struct DecodeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace sweep

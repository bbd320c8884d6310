#include "sweep/types.hpp"

#include <algorithm>

namespace sweep {

namespace {
constexpr char kHexDigits[] = "0123456789abcdef";

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}
}  // namespace

std::string to_hex(ByteView data) {
  std::string out;
  out.reserve(data.size() * 2);
  for (uint8_t b : data) {
    out.push_back(kHexDigits[b >> 4]);
    out.push_back(kHexDigits[b & 0xf]);
  }
  return out;
}

Bytes from_hex(const std::string& hex) {
  std::string_view sv = hex;
  if (sv.size() >= 2 && sv[0] == '0' && (sv[1] == 'x' || sv[1] == 'X')) sv.remove_prefix(2);
  if (sv.size() % 2 != 0) throw std::invalid_argument("odd hex length");
  Bytes out;
  out.reserve(sv.size() / 2);
  for (size_t i = 0; i < sv.size(); i += 2) {
    int hi = hex_value(sv[i]), lo = hex_value(sv[i + 1]);
    if (hi < 0 || lo < 0) throw std::invalid_argument("bad hex digit");
    out.push_back(static_cast<uint8_t>(hi << 4 | lo));
  }
  return out;
}

std::string u128_to_string(u128 v) {
  if (v == 0) return "0";
  std::string out;
  while (v > 0) {
    out.push_back(static_cast<char>('0' + static_cast<unsigned>(v % 10)));
    v /= 10;
  }
  std::reverse(out.begin(), out.end());
  return out;
}

u128 u128_from_string(const std::string& s) {
  if (s.empty()) throw std::invalid_argument("empty decimal");
  u128 v = 0;
  constexpr u128 kMax = ~static_cast<u128>(0);
  for (char c : s) {
    if (c < '0' || c > '9') throw std::invalid_argument("bad decimal digit");
    unsigned d = static_cast<unsigned>(c - '0');
    if (v > (kMax - d) / 10) throw std::out_of_range("u128 overflow");
    v = v * 10 + d;
  }
  return v;
}

void put_u16(Bytes& out, uint16_t v) {
  for (int i = 0; i < 2; ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

void put_u32(Bytes& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

void put_u64(Bytes& out, uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

void put_u128(Bytes& out, u128 v) {
  for (int i = 0; i < 16; ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

uint8_t ByteReader::u8() {
  if (remaining() < 1) throw DecodeError("truncated u8");
  return data_[pos_++];
}

uint16_t ByteReader::u16() {
  if (remaining() < 2) throw DecodeError("truncated u16");
  uint16_t v = 0;
  for (int i = 0; i < 2; ++i) v |= static_cast<uint16_t>(data_[pos_++]) << (8 * i);
  return v;
}

uint32_t ByteReader::u32() {
  if (remaining() < 4) throw DecodeError("truncated u32");
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(data_[pos_++]) << (8 * i);
  return v;
}

uint64_t ByteReader::u64() {
  if (remaining() < 8) throw DecodeError("truncated u64");
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(data_[pos_++]) << (8 * i);
  return v;
}

u128 ByteReader::u128v() {
  if (remaining() < 16) throw DecodeError("truncated u128");
  u128 v = 0;
  for (int i = 0; i < 16; ++i) v |= static_cast<u128>(data_[pos_++]) << (8 * i);
  return v;
}

Bytes ByteReader::take(size_t n) {
  if (remaining() < n) throw DecodeError("truncated bytes");
  Bytes out(data_.begin() + pos_, data_.begin() + pos_ + n);
  pos_ += n;
  return out;
}

}  // namespace sweep

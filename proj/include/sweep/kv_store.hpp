#pragma once

#include <array>
#include <iosfwd>
#include <unordered_map>

#include "sweep/hash.hpp"
#include "sweep/types.hpp"

namespace sweep {

enum class DataCategory : uint8_t {
  Headers = 0,
  Bodies = 1,
  Receipts = 2,
  TrieNodes = 3,
  TxIndex = 4,
  Other = 5,
};

inline constexpr size_t kCategoryCount = 6;
const char* category_name(DataCategory c);

struct StorageStats {
  std::array<uint64_t, kCategoryCount> category_bytes{};

  uint64_t operator[](DataCategory c) const {
    return category_bytes[static_cast<size_t>(c)];
  }
  uint64_t total() const;
};

/// Content-addressed key-value store. Keys are always the 256-bit hash of
/// the stored value, and every write is attributed to exactly one data
/// category so the sync experiments can account bytes per category.
class KvStore {
 public:
  Hash256 put(DataCategory category, Bytes value);
  std::optional<Bytes> get(const Hash256& key) const;
  bool contains(const Hash256& key) const { return entries_.count(key) != 0; }
  bool erase(const Hash256& key);

  StorageStats stats() const;
  size_t entry_count() const { return entries_.size(); }

  // Persistence: length-prefixed (category byte, key, value) records,
  // little-endian 4-byte lengths.
  void dump(std::ostream& out) const;
  void load(std::istream& in);

 private:
  struct Entry {
    Bytes value;
    DataCategory category;
  };
  struct KeyHasher {
    size_t operator()(const Hash256& k) const {
      size_t h = 0;
      for (int i = 0; i < 8; ++i) h = h << 8 | k[i];
      return h;
    }
  };

  std::unordered_map<Hash256, Entry, KeyHasher> entries_;
  std::array<uint64_t, kCategoryCount> category_bytes_{};
};

}  // namespace sweep

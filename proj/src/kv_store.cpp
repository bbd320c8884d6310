#include "sweep/kv_store.hpp"

#include <istream>
#include <numeric>
#include <ostream>

namespace sweep {

const char* category_name(DataCategory c) {
  switch (c) {
    case DataCategory::Headers: return "headers";
    case DataCategory::Bodies: return "bodies";
    case DataCategory::Receipts: return "receipts";
    case DataCategory::TrieNodes: return "trie_nodes";
    case DataCategory::TxIndex: return "tx_index";
    case DataCategory::Other: return "other";
  }
  return "unknown";
}

uint64_t StorageStats::total() const {
  return std::accumulate(category_bytes.begin(), category_bytes.end(), uint64_t{0});
}

Hash256 KvStore::put(DataCategory category, Bytes value) {
  Hash256 key = hash256(value);
  auto it = entries_.find(key);
  if (it != entries_.end()) {
    if (it->second.value != value) throw std::runtime_error("hash collision on put");
    return key;  // re-put of an existing value is not double counted
  }
  category_bytes_[static_cast<size_t>(category)] += key.size() + value.size();
  entries_.emplace(key, Entry{std::move(value), category});
  return key;
}

std::optional<Bytes> KvStore::get(const Hash256& key) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second.value;
}

bool KvStore::erase(const Hash256& key) {
  auto it = entries_.find(key);
  if (it == entries_.end()) return false;
  category_bytes_[static_cast<size_t>(it->second.category)] -=
      key.size() + it->second.value.size();
  entries_.erase(it);
  return true;
}

StorageStats KvStore::stats() const { return StorageStats{category_bytes_}; }

void KvStore::dump(std::ostream& out) const {
  for (const auto& [key, entry] : entries_) {
    Bytes record;
    record.push_back(static_cast<uint8_t>(entry.category));
    put_u32(record, static_cast<uint32_t>(key.size()));
    record.insert(record.end(), key.begin(), key.end());
    put_u32(record, static_cast<uint32_t>(entry.value.size()));
    record.insert(record.end(), entry.value.begin(), entry.value.end());
    out.write(reinterpret_cast<const char*>(record.data()),
              static_cast<std::streamsize>(record.size()));
  }
}

void KvStore::load(std::istream& in) {
  while (true) {
    int cat = in.get();
    if (cat == std::istream::traits_type::eof()) break;
    if (cat >= static_cast<int>(kCategoryCount)) throw DecodeError("bad category byte");
    auto read_u32 = [&in]() {
      uint8_t b[4];
      in.read(reinterpret_cast<char*>(b), 4);
      if (!in) throw DecodeError("truncated record length");
      return static_cast<uint32_t>(b[0]) | static_cast<uint32_t>(b[1]) << 8 |
             static_cast<uint32_t>(b[2]) << 16 | static_cast<uint32_t>(b[3]) << 24;
    };
    uint32_t key_len = read_u32();
    Bytes key(key_len);
    in.read(reinterpret_cast<char*>(key.data()), key_len);
    uint32_t value_len = read_u32();
    Bytes value(value_len);
    in.read(reinterpret_cast<char*>(value.data()), value_len);
    if (!in) throw DecodeError("truncated record");
    Hash256 stored = put(static_cast<DataCategory>(cat), std::move(value));
    if (key.size() != stored.size() || !std::equal(key.begin(), key.end(), stored.begin())) {
      throw DecodeError("record key does not hash its value");
    }
  }
}

}  // namespace sweep

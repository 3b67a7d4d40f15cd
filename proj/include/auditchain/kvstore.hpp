#pragma once

#include <algorithm>
#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "auditchain/bytes.hpp"
#include "auditchain/digest.hpp"
#include "auditchain/errors.hpp"

namespace auditchain {

/// Where an indexed value lives on the chain.
struct Provenance {
  Digest txid{};
  std::uint64_t height = 0;
  std::uint32_t tx_index = 0;
  std::uint32_t position = 0;

  bool operator==(const Provenance&) const = default;
};

struct IndexValue {
  std::string bytes;
  Provenance provenance;

  bool operator==(const IndexValue&) const = default;
};

struct IndexEntry {
  std::uint64_t count = 0;
  std::vector<IndexValue> values;

  bool operator==(const IndexEntry&) const = default;
};

/// Node-local multi-value index over the stream data on the chain.
///
/// Each dictionary maps a key to the ordered list of values put under it.
/// The index holds no data of its own: it is rebuilt by replaying the chain,
/// and the owner must only put values from sealed transactions.
///
/// Not synchronized; see Streams for the locking contract.
class KvStore {
 public:
  void createDictionary(const std::string& name) {
    if (!dictionaries_.try_emplace(name).second) throw DuplicateDictionary(name);
  }

  bool hasDictionary(std::string_view name) const {
    return dictionaries_.find(name) != dictionaries_.end();
  }

  std::vector<std::string> dictionaryNames() const {
    std::vector<std::string> out;
    for (const auto& [name, _] : dictionaries_) out.push_back(name);
    return out;
  }

  void put(std::string_view dictionary, const std::string& key, std::string value,
           const Provenance& provenance) {
    auto& entry = dict(dictionary)[key];
    entry.values.push_back(IndexValue{std::move(value), provenance});
    ++entry.count;
  }

  std::vector<std::string> get(std::string_view dictionary, const std::string& key) const {
    return lastN(dictionary, key, UINT64_MAX);
  }

  std::uint64_t count(std::string_view dictionary, const std::string& key) const {
    const auto* e = entry(dictionary, key);
    return e ? e->count : 0;
  }

  /// The final n values in insertion order, or all of them if n >= count.
  std::vector<std::string> lastN(std::string_view dictionary, const std::string& key,
                                 std::uint64_t n) const {
    if (n == 0) throw InvalidArgument("lastN requires n >= 1");
    std::vector<std::string> out;
    const auto* e = entry(dictionary, key);
    if (!e) return out;
    const auto take = static_cast<std::size_t>(std::min<std::uint64_t>(n, e->values.size()));
    out.reserve(take);
    for (auto it = e->values.end() - static_cast<std::ptrdiff_t>(take); it != e->values.end(); ++it) {
      out.push_back(it->bytes);
    }
    return out;
  }

  /// Full entry including provenance, or nullptr for an absent key.
  const IndexEntry* entry(std::string_view dictionary, const std::string& key) const {
    const auto& d = dict(dictionary);
    auto it = d.find(key);
    return it == d.end() ? nullptr : &it->second;
  }

  std::vector<std::string> keys(std::string_view dictionary) const {
    const auto& d = dict(dictionary);
    std::vector<std::string> out;
    out.reserve(d.size());
    for (const auto& [k, _] : d) out.push_back(k);
    return out;
  }

  std::size_t keyCount(std::string_view dictionary) const { return dict(dictionary).size(); }

  void clear() { dictionaries_.clear(); }

  bool operator==(const KvStore& other) const { return dictionaries_ == other.dictionaries_; }

  // -- snapshot ----------------------------------------------------------------
  //
  // "AKVS" | u32 version | u32 dict_count |
  //   (bytes name | u64 key_count | (bytes key | u64 value_count |
  //     (bytes value | 32B txid | u64 height | u32 tx_index | u32 position)*)*)*
  //
  // Keys are written in sorted order so equal stores produce equal snapshots.
  // Snapshots are a convenience; replaying the chain is authoritative.

  static constexpr std::uint32_t kSnapshotVersion = 1;

  void writeSnapshot(std::ostream& out) const {
    ByteWriter w;
    w.raw("AKVS");
    w.u32(kSnapshotVersion);
    w.u32(static_cast<std::uint32_t>(dictionaries_.size()));
    for (const auto& [name, d] : dictionaries_) {
      w.bytes(name);
      std::vector<const std::string*> sorted;
      sorted.reserve(d.size());
      for (const auto& [k, _] : d) sorted.push_back(&k);
      std::sort(sorted.begin(), sorted.end(), [](auto* a, auto* b) { return *a < *b; });
      w.u64(sorted.size());
      for (const auto* k : sorted) {
        const auto& e = d.at(*k);
        w.bytes(*k);
        w.u64(e.values.size());
        for (const auto& v : e.values) {
          w.bytes(v.bytes);
          w.raw(v.provenance.txid);
          w.u64(v.provenance.height);
          w.u32(v.provenance.tx_index);
          w.u32(v.provenance.position);
        }
      }
    }
    out.write(w.view().data(), static_cast<std::streamsize>(w.size()));
  }

  static KvStore readSnapshot(std::istream& in) {
    std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    ByteReader r(data);
    if (r.raw(4) != "AKVS") throw DecodeError("not a kvstore snapshot");
    if (const auto v = r.u32(); v != kSnapshotVersion) {
      throw DecodeError("unsupported snapshot version " + std::to_string(v));
    }
    KvStore store;
    const auto dicts = r.u32();
    for (std::uint32_t i = 0; i < dicts; ++i) {
      auto& d = store.dictionaries_[std::string(r.bytes())];
      const auto keys = r.u64();
      for (std::uint64_t j = 0; j < keys; ++j) {
        auto& e = d[std::string(r.bytes())];
        const auto n = r.u64();
        for (std::uint64_t m = 0; m < n; ++m) {
          IndexValue v;
          v.bytes = std::string(r.bytes());
          v.provenance.txid = r.fixed<32>();
          v.provenance.height = r.u64();
          v.provenance.tx_index = r.u32();
          v.provenance.position = r.u32();
          e.values.push_back(std::move(v));
        }
        e.count = e.values.size();
      }
    }
    r.expectDone("snapshot");
    return store;
  }

 private:
  using Dictionary = std::unordered_map<std::string, IndexEntry>;

  Dictionary& dict(std::string_view name) {
    auto it = dictionaries_.find(name);
    if (it == dictionaries_.end()) throw UnknownDictionary(std::string(name));
    return it->second;
  }

  const Dictionary& dict(std::string_view name) const {
    auto it = dictionaries_.find(name);
    if (it == dictionaries_.end()) throw UnknownDictionary(std::string(name));
    return it->second;
  }

  std::map<std::string, Dictionary, std::less<>> dictionaries_;
};

}  // namespace auditchain

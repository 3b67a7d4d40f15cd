#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <shared_mutex>
#include <span>
#include <string>
#include <vector>

#include "auditchain/errors.hpp"
#include "auditchain/kvstore.hpp"
#include "auditchain/ledger.hpp"

namespace auditchain {

struct DictionaryDescriptor {
  std::string name;
  std::uint64_t created_at_height = 0;

  bool operator==(const DictionaryDescriptor&) const = default;
};

/// One (value, key) pair of an insertBatch call.
struct BatchEntry {
  std::string value;
  std::string key;
};

/// Dictionaries on top of the ledger, as seen from one node.
///
/// Writes become transactions in the node's pending pool (and are handed to
/// the submit hook so a network can broadcast them). Reads are served from the
/// local index and only see sealed data. There is no update or delete.
///
/// Locking: every public member takes the internal shared_mutex, exclusively
/// for writes and chain maintenance, shared for reads. The submit hook runs
/// after the lock is released.
class Streams {
 public:
  using SubmitHook = std::function<void(const Transaction&)>;

  Streams(NodeId id, LedgerConfig cfg) : ledger_(id, cfg) {}

  Streams(const Streams&) = delete;
  Streams& operator=(const Streams&) = delete;

  NodeId id() const noexcept { return ledger_.id(); }

  void onSubmit(SubmitHook hook) { submit_hook_ = std::move(hook); }

  // -- writes ------------------------------------------------------------------

  Digest createDictionary(const std::string& name) {
    if (name.empty()) throw InvalidArgument("dictionary name must be non-empty");
    std::vector<StreamItem> items{{ItemKind::create_dictionary, name, name, {}}};
    auto tx = Transaction::make(id(), items);
    {
      std::unique_lock lock(mutex_);
      if (registry_.contains(name) || pendingCreation(name)) throw DuplicateDictionary(name);
      ledger_.appendTransaction(tx);
    }
    submitted(tx);
    return tx.txid;
  }

  Digest insert(const std::string& name, std::string value, const std::string& key) {
    std::vector<StreamItem> items{{ItemKind::put, name, key, std::move(value)}};
    return submit(name, items);
  }

  /// All items travel in one transaction; on TxTooLarge nothing is written.
  Digest insertBatch(const std::string& name, std::span<const BatchEntry> entries) {
    std::vector<StreamItem> items;
    items.reserve(entries.size());
    for (const auto& e : entries) items.push_back({ItemKind::put, name, e.key, e.value});
    return submit(name, items);
  }

  // -- reads (sealed data only) -------------------------------------------------

  std::vector<std::string> retrieve(const std::string& name, const std::string& key) const {
    std::shared_lock lock(mutex_);
    return index_.get(name, key);
  }

  std::uint64_t getCount(const std::string& name, const std::string& key) const {
    std::shared_lock lock(mutex_);
    return index_.count(name, key);
  }

  std::vector<std::string> lastN(const std::string& name, const std::string& key,
                                 std::uint64_t n) const {
    std::shared_lock lock(mutex_);
    return index_.lastN(name, key, n);
  }

  std::vector<std::string> listKeys(const std::string& name) const {
    std::shared_lock lock(mutex_);
    return index_.keys(name);
  }

  std::size_t keyCount(const std::string& name) const {
    std::shared_lock lock(mutex_);
    return index_.keyCount(name);
  }

  /// Registered on the sealed chain.
  bool hasDictionary(const std::string& name) const {
    std::shared_lock lock(mutex_);
    return registry_.contains(name);
  }

  /// Registered, or awaiting sealing in the local pool.
  bool dictionaryKnown(const std::string& name) const {
    std::shared_lock lock(mutex_);
    return registry_.contains(name) || pendingCreation(name);
  }

  std::vector<DictionaryDescriptor> dictionaries() const {
    std::shared_lock lock(mutex_);
    std::vector<DictionaryDescriptor> out;
    for (const auto& [_, d] : registry_) out.push_back(d);
    return out;
  }

  // -- chain maintenance ---------------------------------------------------------

  /// Seals the local pending pool as this node and indexes the new block.
  Chain::BlockPtr seal(std::uint64_t seal_time) {
    std::unique_lock lock(mutex_);
    auto block = ledger_.sealBlock(id(), seal_time);
    apply(*block);
    return block;
  }

  /// Replication: append a block sealed by another node.
  void acceptBlock(Chain::BlockPtr block) {
    std::unique_lock lock(mutex_);
    ledger_.acceptBlock(block);
    apply(*block);
  }

  /// Mempool broadcast from a peer. Validated like a local append.
  void acceptTransaction(Transaction tx) {
    std::unique_lock lock(mutex_);
    ledger_.appendTransaction(std::move(tx));
  }

  void replacePending(std::deque<Transaction> pool) {
    std::unique_lock lock(mutex_);
    ledger_.replacePending(std::move(pool));
  }

  /// Swaps in a chain (restart from disk) and rebuilds the index from it.
  void replaceChain(Chain chain) {
    std::unique_lock lock(mutex_);
    ledger_.replaceChain(std::move(chain));
    for (const auto& b : ledger_.chain().blocks()) ledger_.dropPending(*b);
    rebuildLocked();
  }

  /// Drops the index and dictionary registry and replays the whole chain.
  void rebuildIndex() {
    std::unique_lock lock(mutex_);
    rebuildLocked();
  }

  // Snapshot accessors. Callers must not race them with writers.
  const Ledger& ledger() const noexcept { return ledger_; }
  Ledger& ledger() noexcept { return ledger_; }
  const KvStore& index() const noexcept { return index_; }

  std::deque<Transaction> pendingCopy() const {
    std::shared_lock lock(mutex_);
    return ledger_.pending();
  }

 private:
  Digest submit(const std::string& name, std::span<const StreamItem> items) {
    for (const auto& item : items) {
      if (item.key.empty()) throw InvalidArgument("stream item key must be non-empty");
    }
    auto tx = Transaction::make(id(), items);
    {
      std::unique_lock lock(mutex_);
      if (!registry_.contains(name) && !pendingCreation(name)) throw UnknownDictionary(name);
      ledger_.appendTransaction(tx);
    }
    submitted(tx);
    return tx.txid;
  }

  void submitted(const Transaction& tx) {
    if (submit_hook_) submit_hook_(tx);
  }

  bool pendingCreation(const std::string& name) const {
    for (const auto& tx : ledger_.pending()) {
      // Creation transactions are single-item and tiny; skip anything else.
      if (tx.itemCount() != 1 || tx.byteSize() > 64 + 2 * name.size()) continue;
      const auto items = tx.items();
      if (items[0].kind == ItemKind::create_dictionary && items[0].dictionary == name) {
        return true;
      }
    }
    return false;
  }

  void apply(const Block& block) {
    for (std::uint32_t ti = 0; ti < block.txs.size(); ++ti) {
      const auto& tx = block.txs[ti];
      auto items = tx.items();
      for (std::uint32_t pos = 0; pos < items.size(); ++pos) {
        auto& item = items[pos];
        if (item.kind == ItemKind::create_dictionary) {
          // First creation wins; a later duplicate on the chain is ignored.
          if (registry_.try_emplace(item.dictionary,
                                    DictionaryDescriptor{item.dictionary, block.height})
                  .second) {
            index_.createDictionary(item.dictionary);
          }
        } else if (registry_.contains(item.dictionary)) {
          index_.put(item.dictionary, item.key, std::move(item.value),
                     Provenance{tx.txid, block.height, ti, pos});
        }
      }
    }
  }

  void rebuildLocked() {
    index_.clear();
    registry_.clear();
    for (const auto& b : ledger_.chain().blocks()) apply(*b);
  }

  mutable std::shared_mutex mutex_;
  Ledger ledger_;
  KvStore index_;
  std::map<std::string, DictionaryDescriptor, std::less<>> registry_;
  SubmitHook submit_hook_;
};

}  // namespace auditchain

#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "auditchain/query_engine.hpp"
#include "auditchain/streams.hpp"

namespace auditchain {

/// StreamBackend over a single-node Streams instance that seals its own
/// blocks. Copies share the same node and logical clock, so several engines
/// can write to one chain.
class LocalBackend {
 public:
  struct State {
    explicit State(LedgerConfig cfg) : streams(1, cfg) {}
    Streams streams;
    std::uint64_t last_seq = 0;
    std::uint64_t tick = 0;
    /// When false, commit() leaves transactions pending.
    bool auto_seal = true;
  };

  explicit LocalBackend(std::size_t max_tx_bytes = kDefaultMaxTxBytes)
      : state_(std::make_shared<State>(LedgerConfig{max_tx_bytes, 1})) {}

  explicit LocalBackend(std::shared_ptr<State> state) : state_(std::move(state)) {}

  State& state() const noexcept { return *state_; }
  Streams& streams() const noexcept { return state_->streams; }
  const std::shared_ptr<State>& shared() const noexcept { return state_; }

  bool dictionaryKnown(const std::string& name) const { return streams().dictionaryKnown(name); }
  void createDictionary(const std::string& name) { streams().createDictionary(name); }

  Digest insert(const std::string& name, std::string value, const std::string& key) {
    return streams().insert(name, std::move(value), key);
  }

  Digest insertBatch(const std::string& name, std::span<const BatchEntry> entries) {
    return streams().insertBatch(name, entries);
  }

  std::vector<std::string> retrieve(const std::string& name, const std::string& key) const {
    return streams().retrieve(name, key);
  }

  std::uint64_t getCount(const std::string& name, const std::string& key) const {
    return streams().getCount(name, key);
  }

  std::vector<std::string> lastN(const std::string& name, const std::string& key, std::uint64_t n) const {
    return streams().lastN(name, key, n);
  }

  std::vector<std::string> listKeys(const std::string& name) const { return streams().listKeys(name); }
  std::size_t keyCount(const std::string& name) const { return streams().keyCount(name); }
  std::size_t maxTxBytes() const { return streams().ledger().config().max_tx_bytes; }

  void commit() {
    if (state_->auto_seal) seal();
  }

  /// Seals regardless of auto_seal.
  void seal() { streams().seal(++state_->tick); }

  IngestStamp nextStamp() { return {++state_->last_seq, 1}; }

 private:
  std::shared_ptr<State> state_;
};

static_assert(StreamBackend<LocalBackend>);

}  // namespace auditchain

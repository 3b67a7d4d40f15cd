#pragma once

#include <atomic>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "auditchain/errors.hpp"
#include "auditchain/ledger.hpp"
#include "auditchain/query_engine.hpp"
#include "auditchain/streams.hpp"

namespace auditchain {

struct NetworkConfig {
  std::uint32_t node_count = 4;
  /// Logical ticks between sealing a block and peers receiving it.
  std::uint64_t replication_delay = 0;
  std::size_t max_tx_bytes = kDefaultMaxTxBytes;
  EngineConfig engine;
  /// When set, each node keeps its chain in `<data_dir>/node-<id>.chain` and
  /// a network built on an existing directory resumes from those files.
  std::optional<std::filesystem::path> data_dir;

  void validate() const {
    if (node_count == 0) throw ConfigError("node_count must be >= 1");
    if (max_tx_bytes == 0) throw ConfigError("max_tx_bytes must be >= 1");
    engine.validate();
  }
};

enum class NodeStatus : std::uint8_t { up, crashed };

class Network;

/// StreamBackend handle binding a query engine to one node of a network.
class NodeClient {
 public:
  NodeClient(Network* net, NodeId id) : net_(net), id_(id) {}

  bool dictionaryKnown(const std::string& name) const;
  void createDictionary(const std::string& name);
  Digest insert(const std::string& name, std::string value, const std::string& key);
  Digest insertBatch(const std::string& name, std::span<const BatchEntry> entries);
  std::vector<std::string> retrieve(const std::string& name, const std::string& key) const;
  std::uint64_t getCount(const std::string& name, const std::string& key) const;
  std::vector<std::string> lastN(const std::string& name, const std::string& key, std::uint64_t n) const;
  std::vector<std::string> listKeys(const std::string& name) const;
  std::size_t keyCount(const std::string& name) const;
  std::size_t maxTxBytes() const;
  void commit();
  IngestStamp nextStamp();

 private:
  Streams& streams() const;

  Network* net_;
  NodeId id_;
};

struct Node {
  Node(Network* net, NodeId id, const NetworkConfig& cfg)
      : id(id),
        streams(id, LedgerConfig{cfg.max_tx_bytes, cfg.node_count}),
        engine(NodeClient(net, id), cfg.engine) {}

  NodeId id;
  NodeStatus status = NodeStatus::up;
  Streams streams;
  QueryEngine<NodeClient> engine;

  bool up() const noexcept { return status == NodeStatus::up; }
  const Chain& chain() const noexcept { return streams.ledger().chain(); }
};

/// In-process permissioned network of identical nodes.
///
/// Global steps (ingest, seal, replicate, crash, restart) are serialized by
/// one network mutex. Blocks are sealed round-robin; when the scheduled sealer
/// is down, sealing stalls and transactions wait in the pools. Pending pools
/// survive a crash; only the ingest buffer is lost.
class Network {
 public:
  explicit Network(NetworkConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    for (NodeId id = 1; id <= cfg_.node_count; ++id) {
      auto node = std::make_unique<Node>(this, id, cfg_);
      node->streams.onSubmit([this, id](const Transaction& tx) { broadcast(id, tx); });
      nodes_.push_back(std::move(node));
    }
    if (cfg_.data_dir) std::filesystem::create_directories(*cfg_.data_dir);
    if (cfg_.data_dir && std::filesystem::exists(chainPath(1))) {
      resume();
    } else {
      for (auto& n : nodes_) persist(n->id, n->chain().at(0));
      // Dictionaries are created once, network-wide.
      nodes_.front()->engine.ensureLayout();
    }
  }

  Network(const Network&) = delete;
  Network& operator=(const Network&) = delete;

  const NetworkConfig& config() const noexcept { return cfg_; }
  std::uint32_t size() const noexcept { return cfg_.node_count; }
  std::uint64_t tick() const noexcept { return tick_; }

  Node& node(NodeId id) {
    if (id < 1 || id > nodes_.size()) throw InvalidArgument("no node " + std::to_string(id));
    return *nodes_[id - 1];
  }
  const Node& node(NodeId id) const { return const_cast<Network*>(this)->node(id); }

  // -- data path ---------------------------------------------------------------

  void ingest(NodeId id, const LogRecord& r) {
    std::lock_guard lock(mutex_);
    upNode(id).engine.ingest(r);
  }

  void flush(NodeId id) {
    std::lock_guard lock(mutex_);
    upNode(id).engine.flushBuffer();
  }

  void flushAll() {
    std::lock_guard lock(mutex_);
    for (auto& n : nodes_) {
      if (n->up()) n->engine.flushBuffer();
    }
  }

  QueryResult query(NodeId id, const Query& q) { return upNode(id).engine.execute(q); }

  /// Runs read-only queries in parallel against a quiesced network.
  std::vector<QueryResult> queryParallel(NodeId id, const std::vector<Query>& queries, unsigned threads) {
    auto& engine = upNode(id).engine;
    std::vector<QueryResult> out(queries.size());
    std::atomic<std::size_t> next{0};
    {
      std::vector<std::jthread> pool;
      for (unsigned t = 0; t < std::max(1u, threads); ++t) {
        pool.emplace_back([&] {
          for (auto i = next++; i < queries.size(); i = next++) out[i] = engine.execute(queries[i]);
        });
      }
    }
    return out;
  }

  // -- chain maintenance -------------------------------------------------------------

  NodeId scheduledSealer() const {
    return auditchain::scheduledSealer(height() + 1, cfg_.node_count);
  }

  /// Seals the pool of the scheduled node, or returns nullopt when that node
  /// is down. With zero replication delay the block reaches every up node
  /// before this returns.
  std::optional<Block> seal() {
    std::lock_guard lock(mutex_);
    auto& sealer = node(scheduledSealer());
    if (!sealer.up()) return std::nullopt;
    catchUp(sealer, /*force=*/true);
    ++tick_;
    auto block = sealer.streams.seal(tick_);
    persist(sealer.id, *block);
    in_flight_.push_back({block, tick_ + cfg_.replication_delay});
    deliverDue();
    return *block;
  }

  /// Advances the logical clock, delivering blocks whose delay has elapsed.
  void advance(std::uint64_t ticks) {
    std::lock_guard lock(mutex_);
    tick_ += ticks;
    deliverDue();
  }

  /// Delivers everything in flight and brings every up node to the longest
  /// chain.
  void replicate() {
    std::lock_guard lock(mutex_);
    in_flight_.clear();
    for (auto& n : nodes_) {
      if (n->up()) catchUp(*n);
    }
  }

  void crashNode(NodeId id) {
    std::lock_guard lock(mutex_);
    auto& n = node(id);
    if (!n.up()) throw AlreadyCrashed(id);
    n.engine.dropBuffer();
    n.status = NodeStatus::crashed;
  }

  /// Reloads the node's chain (from disk when persistent), catches up from
  /// the longest peer, adopts a peer's pending pool and rebuilds the index by
  /// replay. The ingest buffer starts empty.
  void restartNode(NodeId id) {
    std::lock_guard lock(mutex_);
    auto& n = node(id);
    if (n.up()) throw AlreadyUp(id);
    Chain chain = cfg_.data_dir ? loadChainFile(chainPath(id)) : n.chain();
    const Node* peer = longestUpPeer(id);
    if (peer) {
      for (auto h = chain.size(); h < peer->chain().size(); ++h) {
        chain.append(peer->chain().ptr(h));
        persist(id, peer->chain().at(h));
      }
    }
    n.streams.replaceChain(std::move(chain));
    if (peer) n.streams.replacePending(peer->streams.pendingCopy());
    n.engine.dropBuffer();
    n.status = NodeStatus::up;
  }

  bool verify(NodeId id) const { return verifyChain(node(id).chain()); }

  /// Test hook; see Ledger::tamperForTesting.
  void tamper(NodeId id, std::uint64_t height, std::size_t tx_index, std::size_t byte_offset,
              std::uint8_t mask = 0x01) {
    std::lock_guard lock(mutex_);
    node(id).streams.ledger().tamperForTesting(height, tx_index, byte_offset, mask);
  }

  std::uint64_t height() const {
    std::uint64_t h = 0;
    for (const auto& n : nodes_) h = std::max(h, n->chain().tipHeight());
    return h;
  }

  std::size_t chainBytes(NodeId id) const { return node(id).chain().encodedBytes(); }

  std::filesystem::path chainPath(NodeId id) const {
    return *cfg_.data_dir / ("node-" + std::to_string(id) + ".chain");
  }

 private:
  friend class NodeClient;

  struct InFlight {
    Chain::BlockPtr block;
    std::uint64_t deliver_at;
  };

  Node& upNode(NodeId id) {
    auto& n = node(id);
    if (!n.up()) throw NodeDown(id);
    return n;
  }

  void broadcast(NodeId from, const Transaction& tx) {
    for (auto& n : nodes_) {
      if (n->id != from && n->up()) n->streams.acceptTransaction(tx);
    }
  }

  IngestStamp nextStamp(NodeId origin) {
    std::lock_guard lock(mutex_);
    return {++last_seq_, origin};
  }

  void commit() {
    std::lock_guard lock(mutex_);
    seal();
  }

  void deliverDue() {
    while (!in_flight_.empty() && in_flight_.front().deliver_at <= tick_) {
      in_flight_.pop_front();
      for (auto& n : nodes_) {
        if (n->up()) catchUp(*n);
      }
    }
  }

  /// Appends the blocks the node is missing from the longest up peer, stopping
  /// at the first block still in flight unless `force` is set.
  void catchUp(Node& n, bool force = false) {
    const Node* src = nullptr;
    for (const auto& other : nodes_) {
      if (other.get() != &n && other->up() && (!src || other->chain().size() > src->chain().size())) {
        src = other.get();
      }
    }
    if (!src) return;
    for (auto h = n.chain().size(); h < src->chain().size(); ++h) {
      if (!force && !deliverable(src->chain().ptr(h))) break;
      n.streams.acceptBlock(src->chain().ptr(h));
      persist(n.id, src->chain().at(h));
    }
  }

  bool deliverable(const Chain::BlockPtr& b) const {
    for (const auto& f : in_flight_) {
      if (f.block == b) return false;
    }
    return true;
  }

  const Node* longestUpPeer(NodeId id) const {
    const Node* best = nullptr;
    for (const auto& n : nodes_) {
      if (n->id != id && n->up() && (!best || n->chain().size() > best->chain().size())) best = n.get();
    }
    return best;
  }

  void persist(NodeId id, const Block& b) {
    if (cfg_.data_dir) appendBlockToFile(chainPath(id), b);
  }

  void resume() {
    for (auto& n : nodes_) {
      if (!std::filesystem::exists(chainPath(n->id))) {
        throw ConfigError("data directory is missing " + chainPath(n->id).string());
      }
      n->streams.replaceChain(loadChainFile(chainPath(n->id)));
    }
    replicate();
    tick_ = node(1).chain().tip().seal_time;
    // Resume the ingest clock after the newest stamp on the chain.
    const auto& idx = nodes_.front()->streams.index();
    const auto dict = DictionaryLayout::forField(Field::timestamp).regular;
    if (!idx.hasDictionary(dict)) {
      nodes_.front()->engine.ensureLayout();
      return;
    }
    std::vector<StoredLog> logs;
    for (const auto& k : idx.keys(dict)) {
      for (const auto& v : idx.entry(dict, k)->values) {
        logs.clear();
        decodeBundle(v.bytes, logs);
        for (const auto& l : logs) last_seq_ = std::max(last_seq_, l.stamp.seq);
      }
    }
  }

  NetworkConfig cfg_;
  std::vector<std::unique_ptr<Node>> nodes_;
  std::deque<InFlight> in_flight_;
  std::uint64_t tick_ = 0;
  std::uint64_t last_seq_ = 0;
  std::recursive_mutex mutex_;
};

inline std::unique_ptr<Network> spawnNetwork(NetworkConfig cfg) {
  return std::make_unique<Network>(std::move(cfg));
}

// -- NodeClient --------------------------------------------------------------------

inline Streams& NodeClient::streams() const { return net_->node(id_).streams; }

inline bool NodeClient::dictionaryKnown(const std::string& name) const { return streams().dictionaryKnown(name); }
inline void NodeClient::createDictionary(const std::string& name) { streams().createDictionary(name); }

inline Digest NodeClient::insert(const std::string& name, std::string value, const std::string& key) {
  return streams().insert(name, std::move(value), key);
}

inline Digest NodeClient::insertBatch(const std::string& name, std::span<const BatchEntry> entries) {
  return streams().insertBatch(name, entries);
}

inline std::vector<std::string> NodeClient::retrieve(const std::string& name, const std::string& key) const {
  return streams().retrieve(name, key);
}

inline std::uint64_t NodeClient::getCount(const std::string& name, const std::string& key) const {
  return streams().getCount(name, key);
}

inline std::vector<std::string> NodeClient::lastN(const std::string& name, const std::string& key,
                                                  std::uint64_t n) const {
  return streams().lastN(name, key, n);
}

inline std::vector<std::string> NodeClient::listKeys(const std::string& name) const {
  return streams().listKeys(name);
}

inline std::size_t NodeClient::keyCount(const std::string& name) const { return streams().keyCount(name); }
inline std::size_t NodeClient::maxTxBytes() const { return net_->config().max_tx_bytes; }
inline void NodeClient::commit() { net_->commit(); }
inline IngestStamp NodeClient::nextStamp() { return net_->nextStamp(id_); }

}  // namespace auditchain

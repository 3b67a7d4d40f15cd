#pragma once

#include <cstdint>
#include <deque>
#include <filesystem>
#include <fstream>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "auditchain/bytes.hpp"
#include "auditchain/digest.hpp"
#include "auditchain/errors.hpp"

// Append-only hash-linked ledger.
//
// Canonical encodings (all integers big-endian, `bytes` = u32 length + data):
//
//   StreamItem   u8 kind | bytes dictionary | bytes key | bytes value
//   payload      u32 item_count | StreamItem*
//   txid         SHA-256(payload)
//   block hash   SHA-256(u64 height | 32B prev_hash | u32 sealer |
//                        u64 seal_time | u32 tx_count |
//                        (32B txid | u32 origin | u32 payload_size)*)
//   block        u64 height | 32B prev_hash | 32B block_hash | u32 sealer |
//                u64 seal_time | u32 tx_count | (32B txid | u32 origin |
//                bytes payload)*
//   chain file   "ACHN" | u32 version | (u32 block_size | block)*
//
// A txid is a pure function of the payload bytes, so byte-identical payloads
// share a txid. Payloads carry no nonce.

namespace auditchain {

using NodeId = std::uint32_t;

inline constexpr std::size_t kDefaultMaxTxBytes = 2u << 20;

enum class ItemKind : std::uint8_t {
  put = 0,
  create_dictionary = 1,
};

struct StreamItem {
  ItemKind kind = ItemKind::put;
  std::string dictionary;
  std::string key;
  std::string value;

  bool operator==(const StreamItem&) const = default;
};

inline std::size_t encodedItemSize(const StreamItem& item) {
  return 1 + 12 + item.dictionary.size() + item.key.size() + item.value.size();
}

inline void encodeItem(ByteWriter& w, const StreamItem& item) {
  w.u8(static_cast<std::uint8_t>(item.kind));
  w.bytes(item.dictionary);
  w.bytes(item.key);
  w.bytes(item.value);
}

inline std::string encodePayload(std::span<const StreamItem> items) {
  std::size_t size = 4;
  for (const auto& item : items) size += encodedItemSize(item);
  ByteWriter w(size);
  w.u32(static_cast<std::uint32_t>(items.size()));
  for (const auto& item : items) encodeItem(w, item);
  return std::move(w).take();
}

inline std::vector<StreamItem> decodePayload(std::string_view payload) {
  ByteReader r(payload);
  const auto count = r.u32();
  if (count > r.remaining()) throw DecodeError("payload item count is corrupt");
  std::vector<StreamItem> items;
  items.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    StreamItem item;
    const auto kind = r.u8();
    if (kind > static_cast<std::uint8_t>(ItemKind::create_dictionary)) {
      throw DecodeError("unknown stream item kind " + std::to_string(kind));
    }
    item.kind = static_cast<ItemKind>(kind);
    item.dictionary = std::string(r.bytes());
    item.key = std::string(r.bytes());
    item.value = std::string(r.bytes());
    items.push_back(std::move(item));
  }
  r.expectDone("payload");
  return items;
}

struct Transaction {
  Digest txid{};
  NodeId origin = 0;
  /// Canonical payload encoding; shared between nodes holding the same tx.
  std::shared_ptr<const std::string> payload;

  static Transaction make(NodeId origin, std::span<const StreamItem> items) {
    Transaction tx;
    tx.origin = origin;
    auto bytes = std::make_shared<const std::string>(encodePayload(items));
    tx.txid = sha256(*bytes);
    tx.payload = std::move(bytes);
    return tx;
  }

  std::size_t byteSize() const noexcept { return payload ? payload->size() : 0; }

  std::vector<StreamItem> items() const {
    return payload ? decodePayload(*payload) : std::vector<StreamItem>{};
  }

  /// Number of items, read from the payload header without decoding it.
  std::uint32_t itemCount() const {
    if (!payload || payload->size() < 4) return 0;
    return ByteReader(*payload).u32();
  }
};

struct Block {
  std::uint64_t height = 0;
  Digest prev_hash{};
  Digest block_hash{};
  NodeId sealer = 0;
  std::uint64_t seal_time = 0;
  std::vector<Transaction> txs;
};

inline Digest computeBlockHash(const Block& b) {
  ByteWriter w(60 + b.txs.size() * 40);
  w.u64(b.height);
  w.raw(b.prev_hash);
  w.u32(b.sealer);
  w.u64(b.seal_time);
  w.u32(static_cast<std::uint32_t>(b.txs.size()));
  for (const auto& tx : b.txs) {
    w.raw(tx.txid);
    w.u32(tx.origin);
    w.u32(static_cast<std::uint32_t>(tx.byteSize()));
  }
  return sha256(w.view());
}

inline std::string encodeBlock(const Block& b) {
  std::size_t size = 8 + 32 + 32 + 4 + 8 + 4;
  for (const auto& tx : b.txs) size += 32 + 4 + 4 + tx.byteSize();
  ByteWriter w(size);
  w.u64(b.height);
  w.raw(b.prev_hash);
  w.raw(b.block_hash);
  w.u32(b.sealer);
  w.u64(b.seal_time);
  w.u32(static_cast<std::uint32_t>(b.txs.size()));
  for (const auto& tx : b.txs) {
    w.raw(tx.txid);
    w.u32(tx.origin);
    w.bytes(tx.payload ? std::string_view(*tx.payload) : std::string_view{});
  }
  return std::move(w).take();
}

/// Size of encodeBlock(b) without materializing it.
inline std::size_t encodedBlockSize(const Block& b) {
  std::size_t size = 8 + 32 + 32 + 4 + 8 + 4;
  for (const auto& tx : b.txs) size += 32 + 4 + 4 + tx.byteSize();
  return size;
}

inline Block decodeBlock(std::string_view bytes) {
  ByteReader r(bytes);
  Block b;
  b.height = r.u64();
  b.prev_hash = r.fixed<32>();
  b.block_hash = r.fixed<32>();
  b.sealer = r.u32();
  b.seal_time = r.u64();
  const auto count = r.u32();
  if (count > r.remaining()) throw DecodeError("block tx count is corrupt");
  b.txs.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    Transaction tx;
    tx.txid = r.fixed<32>();
    tx.origin = r.u32();
    tx.payload = std::make_shared<const std::string>(r.bytes());
    b.txs.push_back(std::move(tx));
  }
  r.expectDone("block");
  return b;
}

inline Block makeGenesis() {
  Block g;
  g.block_hash = computeBlockHash(g);
  return g;
}

/// Round-robin schedule: height h is sealed by the node whose id is congruent
/// to h modulo the node count (ids run 1..node_count).
inline NodeId scheduledSealer(std::uint64_t height, std::uint32_t node_count) {
  const auto slot = static_cast<NodeId>(height % node_count);
  return slot == 0 ? node_count : slot;
}

class Chain {
 public:
  using BlockPtr = std::shared_ptr<const Block>;

  /// A chain holding only the genesis block.
  static Chain withGenesis() {
    Chain c;
    c.blocks_.push_back(std::make_shared<const Block>(makeGenesis()));
    return c;
  }

  bool empty() const noexcept { return blocks_.empty(); }
  std::size_t size() const noexcept { return blocks_.size(); }
  std::uint64_t tipHeight() const { return blocks_.empty() ? 0 : blocks_.size() - 1; }
  const Block& tip() const { return *blocks_.back(); }
  const Block& at(std::uint64_t height) const { return *blocks_.at(height); }
  const BlockPtr& ptr(std::uint64_t height) const { return blocks_.at(height); }
  std::span<const BlockPtr> blocks() const noexcept { return blocks_; }

  /// Appends a block after checking its height and hash link against the tip.
  /// Block contents are not re-verified here; see verifyChain.
  void append(BlockPtr block) {
    if (blocks_.empty()) {
      if (block->height != 0 || block->prev_hash != kZeroDigest) {
        throw InvalidArgument("first block must be a genesis block");
      }
    } else if (block->height != tipHeight() + 1 ||
               block->prev_hash != tip().block_hash) {
      throw InvalidArgument("block " + std::to_string(block->height) +
                            " does not extend tip " + std::to_string(tipHeight()));
    }
    blocks_.push_back(std::move(block));
  }

  /// Test hook: swaps in a modified copy of a sealed block without any checks.
  void replaceForTesting(std::uint64_t height, Block block) {
    blocks_.at(height) = std::make_shared<const Block>(std::move(block));
  }

  std::size_t encodedBytes() const {
    std::size_t total = 0;
    for (const auto& b : blocks_) total += encodedBlockSize(*b);
    return total;
  }

  bool operator==(const Chain& other) const {
    if (blocks_.size() != other.blocks_.size()) return false;
    for (std::size_t i = 0; i < blocks_.size(); ++i) {
      if (blocks_[i]->block_hash != other.blocks_[i]->block_hash) return false;
    }
    return true;
  }

 private:
  std::vector<BlockPtr> blocks_;
};

/// True iff every txid and block hash recomputes and every link matches.
inline bool verifyChain(const Chain& chain) {
  if (chain.empty()) return false;
  Digest prev = kZeroDigest;
  for (std::uint64_t h = 0; h < chain.size(); ++h) {
    const Block& b = chain.at(h);
    if (b.height != h || b.prev_hash != prev) return false;
    for (const auto& tx : b.txs) {
      if (!tx.payload || sha256(*tx.payload) != tx.txid) return false;
    }
    if (computeBlockHash(b) != b.block_hash) return false;
    prev = b.block_hash;
  }
  return true;
}

struct LedgerConfig {
  std::size_t max_tx_bytes = kDefaultMaxTxBytes;
  std::uint32_t node_count = 1;
};

/// One node's view of the ledger: its copy of the chain plus the pending pool.
///
/// Not internally synchronized. The owner serializes appendTransaction,
/// sealBlock and acceptBlock; concurrent readers are fine only while no
/// writer runs.
class Ledger {
 public:
  Ledger(NodeId id, LedgerConfig cfg)
      : id_(id), cfg_(cfg), chain_(Chain::withGenesis()) {
    if (cfg_.node_count == 0) throw ConfigError("node_count must be >= 1");
    if (cfg_.max_tx_bytes == 0) throw ConfigError("max_tx_bytes must be >= 1");
  }

  NodeId id() const noexcept { return id_; }
  const LedgerConfig& config() const noexcept { return cfg_; }
  const Chain& chain() const noexcept { return chain_; }
  const std::deque<Transaction>& pending() const noexcept { return pending_; }

  /// Throws TxTooLarge / EmptyPayload without touching the pool.
  void validate(const Transaction& tx) const {
    if (tx.byteSize() > cfg_.max_tx_bytes) {
      throw TxTooLarge(tx.byteSize(), cfg_.max_tx_bytes);
    }
    if (tx.itemCount() == 0) throw EmptyPayload();
  }

  Digest appendTransaction(Transaction tx) {
    validate(tx);
    const Digest id = tx.txid;
    pending_.push_back(std::move(tx));
    return id;
  }

  NodeId nextSealer() const {
    return scheduledSealer(chain_.tipHeight() + 1, cfg_.node_count);
  }

  /// Drains the whole pending pool into a new block at tip+1.
  Chain::BlockPtr sealBlock(NodeId sealer, std::uint64_t seal_time) {
    const auto height = chain_.tipHeight() + 1;
    if (sealer != nextSealer()) throw NotYourTurn(sealer, nextSealer(), height);
    Block b;
    b.height = height;
    b.prev_hash = chain_.tip().block_hash;
    b.sealer = sealer;
    b.seal_time = seal_time;
    b.txs.assign(std::make_move_iterator(pending_.begin()),
                 std::make_move_iterator(pending_.end()));
    pending_.clear();
    b.block_hash = computeBlockHash(b);
    auto ptr = std::make_shared<const Block>(std::move(b));
    chain_.append(ptr);
    return ptr;
  }

  /// Replication path: append a block sealed elsewhere and drop its
  /// transactions from the local pool.
  void acceptBlock(Chain::BlockPtr block) {
    chain_.append(block);
    dropPending(*block);
  }

  void dropPending(const Block& block) {
    if (pending_.empty() || block.txs.empty()) return;
    std::unordered_map<std::string, std::size_t> sealed;
    for (const auto& tx : block.txs) ++sealed[digestKey(tx.txid)];
    std::deque<Transaction> keep;
    for (auto& tx : pending_) {
      auto it = sealed.find(digestKey(tx.txid));
      if (it != sealed.end() && it->second > 0) {
        --it->second;
      } else {
        keep.push_back(std::move(tx));
      }
    }
    pending_ = std::move(keep);
  }

  void replacePending(std::deque<Transaction> pool) { pending_ = std::move(pool); }
  void replaceChain(Chain chain) { chain_ = std::move(chain); }

  /// Test hook: XORs one byte of a sealed payload with `mask`, leaving every
  /// stored hash untouched.
  void tamperForTesting(std::uint64_t height, std::size_t tx_index,
                        std::size_t byte_offset, std::uint8_t mask = 0x01) {
    Block copy = chain_.at(height);
    auto& tx = copy.txs.at(tx_index);
    std::string bytes = *tx.payload;
    bytes.at(byte_offset) = static_cast<char>(bytes.at(byte_offset) ^ mask);
    tx.payload = std::make_shared<const std::string>(std::move(bytes));
    chain_.replaceForTesting(height, std::move(copy));
  }

 private:
  static std::string digestKey(const Digest& d) {
    return std::string(reinterpret_cast<const char*>(d.data()), d.size());
  }

  NodeId id_;
  LedgerConfig cfg_;
  Chain chain_;
  std::deque<Transaction> pending_;
};

// -- persistence -------------------------------------------------------------

inline constexpr std::string_view kChainFileMagic = "ACHN";
inline constexpr std::uint32_t kChainFileVersion = 1;

/// Appends one block to an append-only chain file, writing the file header
/// first if the file is new.
inline void appendBlockToFile(const std::filesystem::path& path, const Block& b) {
  const bool fresh = !std::filesystem::exists(path) || std::filesystem::file_size(path) == 0;
  std::ofstream out(path, std::ios::binary | std::ios::app);
  if (!out) throw Error("cannot open chain file " + path.string());
  ByteWriter w;
  if (fresh) {
    w.raw(kChainFileMagic);
    w.u32(kChainFileVersion);
  }
  w.bytes(encodeBlock(b));
  out.write(w.view().data(), static_cast<std::streamsize>(w.size()));
  if (!out) throw Error("write failed on chain file " + path.string());
}

/// Reads every block in a chain file. Link checks are applied while loading;
/// content hashes are left to verifyChain.
inline Chain loadChainFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open chain file " + path.string());
  std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  ByteReader r(data);
  if (r.raw(4) != kChainFileMagic) throw DecodeError("not a chain file: " + path.string());
  if (const auto v = r.u32(); v != kChainFileVersion) {
    throw DecodeError("unsupported chain file version " + std::to_string(v));
  }
  Chain chain;
  while (!r.done()) {
    chain.append(std::make_shared<const Block>(decodeBlock(r.bytes())));
  }
  return chain;
}

}  // namespace auditchain

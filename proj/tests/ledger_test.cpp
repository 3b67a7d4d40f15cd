#include <gtest/gtest.h>

#include <random>

#include "support/helpers.hpp"

using namespace auditchain;
using testing_support::put;

namespace {

// Big-endian helpers written out by hand so the expected bytes do not go
// through ByteWriter.
std::string be32(std::uint32_t v) {
  return {static_cast<char>(v >> 24), static_cast<char>(v >> 16), static_cast<char>(v >> 8), static_cast<char>(v)};
}

std::string lenPrefixed(const std::string& s) { return be32(static_cast<std::uint32_t>(s.size())) + s; }

Ledger ledgerWithBlocks(std::size_t blocks, std::uint64_t seed) {
  Ledger l(1, LedgerConfig{kDefaultMaxTxBytes, 1});
  std::mt19937_64 rng(seed);
  for (std::size_t b = 0; b < blocks; ++b) {
    const auto txs = 1 + rng() % 3;
    for (std::size_t t = 0; t < txs; ++t) {
      std::vector<StreamItem> items{put("d", std::to_string(rng() % 10), testing_support::randomText(rng, 40))};
      l.appendTransaction(Transaction::make(1, items));
    }
    l.sealBlock(1, b + 1);
  }
  return l;
}

}  // namespace

TEST(Digest, Sha256KnownVector) {
  EXPECT_EQ(toHex(sha256("abc")), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  EXPECT_EQ(toHex(sha256("")), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST(Payload, EncodingMatchesHandBuiltBytes) {
  std::vector<StreamItem> items{put("user", "7", "hello")};
  const std::string expected = be32(1) + std::string(1, '\0') + lenPrefixed("user") + lenPrefixed("7") +
                               lenPrefixed("hello");
  EXPECT_EQ(encodePayload(items), expected);
  auto tx = Transaction::make(2, items);
  EXPECT_EQ(tx.txid, sha256(expected));
  EXPECT_EQ(tx.origin, 2u);
}

TEST(Payload, RoundTripAndCorruption) {
  std::vector<StreamItem> items{put("a", "k", "v"), {ItemKind::create_dictionary, "b", "", ""}};
  const auto bytes = encodePayload(items);
  EXPECT_EQ(decodePayload(bytes), items);
  EXPECT_THROW(decodePayload(bytes.substr(0, bytes.size() - 1)), DecodeError);
  EXPECT_THROW(decodePayload(bytes + "x"), DecodeError);
  auto bad_kind = bytes;
  bad_kind[4] = 9;
  EXPECT_THROW(decodePayload(bad_kind), DecodeError);
}

TEST(Ledger, AppendEightyByteTransaction) {
  // 4 + 1 + (4+4) + (4+1) + (4+58) = 80
  std::vector<StreamItem> items{put("user", "7", std::string(58, 'x'))};
  auto tx = Transaction::make(1, items);
  ASSERT_EQ(tx.byteSize(), 80u);
  Ledger l(1, LedgerConfig{kDefaultMaxTxBytes, 4});
  const auto id = l.appendTransaction(tx);
  EXPECT_EQ(id, sha256(*tx.payload));
  EXPECT_EQ(l.pending().size(), 1u);
}

TEST(Ledger, SizeLimitIsInclusive) {
  std::vector<StreamItem> items{put("user", "7", std::string(58, 'x'))};
  Ledger at_limit(1, LedgerConfig{80, 1});
  EXPECT_NO_THROW(at_limit.appendTransaction(Transaction::make(1, items)));

  Ledger below(1, LedgerConfig{79, 1});
  EXPECT_THROW(below.appendTransaction(Transaction::make(1, items)), TxTooLarge);
  EXPECT_TRUE(below.pending().empty());
}

TEST(Ledger, OversizedAtDefaultLimit) {
  std::vector<StreamItem> items{put("d", "k", std::string(kDefaultMaxTxBytes, 'x'))};
  Ledger l(1, LedgerConfig{});
  EXPECT_THROW(l.appendTransaction(Transaction::make(1, items)), TxTooLarge);
  EXPECT_TRUE(l.pending().empty());
}

TEST(Ledger, EmptyPayloadRejected) {
  Ledger l(1, LedgerConfig{});
  EXPECT_THROW(l.appendTransaction(Transaction::make(1, {})), EmptyPayload);
}

TEST(Ledger, IdenticalPayloadsShareTxid) {
  std::vector<StreamItem> items{put("d", "k", "same")};
  EXPECT_EQ(Transaction::make(1, items).txid, Transaction::make(3, items).txid);
}

TEST(Ledger, SealDrainsPoolInOrder) {
  Ledger l(1, LedgerConfig{kDefaultMaxTxBytes, 4});
  std::vector<Digest> ids;
  for (int i = 0; i < 3; ++i) {
    std::vector<StreamItem> items{put("d", "k", std::to_string(i))};
    ids.push_back(l.appendTransaction(Transaction::make(1, items)));
  }
  auto b = l.sealBlock(1, 5);
  EXPECT_EQ(b->height, 1u);
  ASSERT_EQ(b->txs.size(), 3u);
  for (int i = 0; i < 3; ++i) EXPECT_EQ(b->txs[i].txid, ids[i]);
  EXPECT_TRUE(l.pending().empty());
  EXPECT_EQ(b->prev_hash, l.chain().at(0).block_hash);
  EXPECT_TRUE(verifyChain(l.chain()));
}

TEST(Ledger, EmptyBlockIsValid) {
  Ledger l(1, LedgerConfig{});
  auto b = l.sealBlock(1, 1);
  EXPECT_TRUE(b->txs.empty());
  EXPECT_EQ(l.chain().tipHeight(), 1u);
  EXPECT_TRUE(verifyChain(l.chain()));
}

TEST(Ledger, WrongSealerRejected) {
  Ledger l(2, LedgerConfig{kDefaultMaxTxBytes, 4});
  EXPECT_THROW(l.sealBlock(2, 1), NotYourTurn);
  EXPECT_EQ(l.chain().tipHeight(), 0u);
  EXPECT_NO_THROW(l.sealBlock(1, 1));
  EXPECT_NO_THROW(l.sealBlock(2, 2));
}

TEST(Ledger, RoundRobinSchedule) {
  EXPECT_EQ(scheduledSealer(1, 4), 1u);
  EXPECT_EQ(scheduledSealer(2, 4), 2u);
  EXPECT_EQ(scheduledSealer(3, 4), 3u);
  EXPECT_EQ(scheduledSealer(4, 4), 4u);
  EXPECT_EQ(scheduledSealer(5, 4), 1u);
  EXPECT_EQ(scheduledSealer(7, 1), 1u);
  for (std::uint64_t h = 1; h < 200; ++h) {
    for (std::uint32_t n = 1; n <= 7; ++n) {
      const auto s = scheduledSealer(h, n);
      EXPECT_GE(s, 1u);
      EXPECT_LE(s, n);
      EXPECT_EQ(s % n, h % n);
    }
  }
}

TEST(Ledger, TenBlockChainVerifies) {
  auto l = ledgerWithBlocks(10, 1);
  EXPECT_EQ(l.chain().tipHeight(), 10u);
  EXPECT_TRUE(verifyChain(l.chain()));
}

TEST(Ledger, PayloadTamperDetected) {
  auto l = ledgerWithBlocks(10, 2);
  l.tamperForTesting(5, 0, 10);
  EXPECT_FALSE(verifyChain(l.chain()));
}

TEST(Ledger, RehashedBlockBreaksNextLink) {
  auto l = ledgerWithBlocks(10, 3);
  Block b5 = l.chain().at(5);
  auto& tx = b5.txs.at(0);
  std::string bytes = *tx.payload;
  bytes.back() = static_cast<char>(bytes.back() ^ 0x20);
  tx.payload = std::make_shared<const std::string>(bytes);
  tx.txid = sha256(bytes);
  b5.block_hash = computeBlockHash(b5);
  Chain chain = l.chain();
  chain.replaceForTesting(5, b5);

  // Block 5 is self-consistent on its own; only the link from block 6 breaks.
  EXPECT_EQ(computeBlockHash(chain.at(5)), chain.at(5).block_hash);
  EXPECT_NE(chain.at(6).prev_hash, chain.at(5).block_hash);
  EXPECT_FALSE(verifyChain(chain));
}

TEST(Ledger, HeaderTamperDetected) {
  auto l = ledgerWithBlocks(4, 4);
  Chain chain = l.chain();
  Block b = chain.at(2);
  b.seal_time += 1;
  chain.replaceForTesting(2, b);
  EXPECT_FALSE(verifyChain(chain));
}

TEST(Ledger, EveryTransactionAppearsOnceInOrder) {
  std::mt19937_64 rng(5);
  Ledger l(1, LedgerConfig{kDefaultMaxTxBytes, 1});
  std::vector<Digest> submitted;
  for (int step = 0; step < 300; ++step) {
    if (rng() % 4 == 0) {
      l.sealBlock(1, step);
    } else {
      std::vector<StreamItem> items{put("d", "k", std::to_string(step))};
      submitted.push_back(l.appendTransaction(Transaction::make(1, items)));
    }
  }
  l.sealBlock(1, 1000);
  std::vector<Digest> on_chain;
  for (const auto& b : l.chain().blocks()) {
    for (const auto& tx : b->txs) on_chain.push_back(tx.txid);
  }
  EXPECT_EQ(on_chain, submitted);
  EXPECT_TRUE(verifyChain(l.chain()));
}

TEST(Ledger, RandomSingleByteMutationsAlwaysDetected) {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 200; ++trial) {
    auto l = ledgerWithBlocks(5, trial);
    const auto h = 1 + rng() % 5;
    const auto& b = l.chain().at(h);
    const auto t = rng() % b.txs.size();
    const auto off = rng() % b.txs[t].byteSize();
    const auto mask = static_cast<std::uint8_t>(1 + rng() % 255);
    l.tamperForTesting(h, t, off, mask);
    EXPECT_FALSE(verifyChain(l.chain())) << "trial " << trial;
  }
}

TEST(Ledger, AcceptBlockDropsSealedFromPool) {
  Ledger a(1, LedgerConfig{kDefaultMaxTxBytes, 2});
  Ledger b(2, LedgerConfig{kDefaultMaxTxBytes, 2});
  std::vector<StreamItem> x{put("d", "k", "x")}, y{put("d", "k", "y")};
  a.appendTransaction(Transaction::make(1, x));
  b.appendTransaction(Transaction::make(1, x));
  b.appendTransaction(Transaction::make(1, y));
  auto block = a.sealBlock(1, 1);
  b.acceptBlock(block);
  ASSERT_EQ(b.pending().size(), 1u);
  EXPECT_EQ(b.pending().front().txid, Transaction::make(1, y).txid);
  EXPECT_EQ(a.chain(), b.chain());
}

TEST(Chain, AppendRejectsBrokenLink) {
  auto l = ledgerWithBlocks(2, 7);
  Chain c = Chain::withGenesis();
  EXPECT_THROW(c.append(l.chain().ptr(2)), InvalidArgument);
  c.append(l.chain().ptr(1));
  c.append(l.chain().ptr(2));
  EXPECT_EQ(c, l.chain());
}

TEST(Block, EncodeDecodeRoundTrip) {
  auto l = ledgerWithBlocks(3, 8);
  for (const auto& b : l.chain().blocks()) {
    const auto bytes = encodeBlock(*b);
    EXPECT_EQ(bytes.size(), encodedBlockSize(*b));
    const auto back = decodeBlock(bytes);
    EXPECT_EQ(back.block_hash, b->block_hash);
    EXPECT_EQ(encodeBlock(back), bytes);
  }
}

TEST(ChainFile, PersistAndReload) {
  testing_support::TempDir dir("ledger");
  auto l = ledgerWithBlocks(6, 9);
  const auto path = dir.path() / "node.chain";
  for (const auto& b : l.chain().blocks()) appendBlockToFile(path, *b);
  const auto loaded = loadChainFile(path);
  EXPECT_EQ(loaded, l.chain());
  EXPECT_TRUE(verifyChain(loaded));
}

TEST(ChainFile, RejectsForeignFile) {
  testing_support::TempDir dir("ledger-bad");
  const auto path = dir.path() / "junk";
  std::ofstream(path) << "not a chain";
  EXPECT_THROW(loadChainFile(path), DecodeError);
}

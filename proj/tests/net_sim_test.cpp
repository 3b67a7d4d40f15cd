#include <gtest/gtest.h>

#include "support/helpers.hpp"

using namespace auditchain;
using testing_support::record;
using testing_support::sorted;

namespace {

NetworkConfig small(std::uint64_t k = 4, std::uint32_t nodes = 4) {
  NetworkConfig c;
  c.node_count = nodes;
  c.engine.buffer_size = k;
  return c;
}

Query byUser(std::uint64_t u) { return Query{{{Field::user, u}}, std::nullopt, std::nullopt}; }

std::vector<LogRecord> someRecords(std::uint64_t n, std::uint64_t seed = 1) {
  GeneratorSpec g;
  g.record_count = n;
  g.seed = seed;
  return generate(g);
}

}  // namespace

TEST(Network, DefaultHasFourNodesWithSameGenesis) {
  auto net = spawnNetwork(NetworkConfig{});
  ASSERT_EQ(net->size(), 4u);
  for (NodeId id = 1; id <= 4; ++id) {
    EXPECT_EQ(net->node(id).chain().at(0).block_hash, net->node(1).chain().at(0).block_hash);
    EXPECT_EQ(net->node(id).chain(), net->node(1).chain());
    EXPECT_EQ(net->node(id).streams.dictionaries().size(), 16u);
  }
}

TEST(Network, SingleNodeWorks) {
  auto net = spawnNetwork(small(4, 1));
  const auto records = someRecords(30);
  bench::loadRecords(*net, records);
  Oracle oracle;
  oracle.addAll(records);
  const auto q = byUser(records[0].user);
  EXPECT_EQ(net->query(1, q).records(), oracle.query(q));
  EXPECT_TRUE(net->verify(1));
}

TEST(Network, RejectsBadConfig) {
  NetworkConfig c;
  c.node_count = 0;
  EXPECT_THROW(Network{c}, ConfigError);
  c = NetworkConfig{};
  c.engine.buffer_size = 0;
  EXPECT_THROW(Network{c}, ConfigError);
}

TEST(Network, SealersRotateAndChainsAgree) {
  auto net = spawnNetwork(small());
  const auto base = net->height();
  for (int i = 0; i < 8; ++i) {
    const auto expected = net->scheduledSealer();
    auto b = net->seal();
    ASSERT_TRUE(b.has_value());
    EXPECT_EQ(b->sealer, expected);
    EXPECT_EQ(b->sealer, scheduledSealer(b->height, 4));
  }
  EXPECT_EQ(net->height(), base + 8);
  for (NodeId id = 2; id <= 4; ++id) EXPECT_EQ(net->node(id).chain(), net->node(1).chain());
}

TEST(Network, InsertAtOneNodeVisibleAtAnother) {
  auto net = spawnNetwork(small());
  const auto r = record(1522257730000, 3, 12, 40345, 7, "read", "TOPMed");
  net->ingest(1, r);
  net->flush(1);
  net->replicate();
  EXPECT_EQ(net->query(4, byUser(7)).records(), std::vector<LogRecord>{r});
}

TEST(Network, ReplicateIsIdempotent) {
  auto net = spawnNetwork(small());
  bench::loadRecords(*net, someRecords(50));
  const Chain before = net->node(2).chain();
  net->replicate();
  EXPECT_EQ(net->node(2).chain(), before);
}

TEST(Network, StallsWhileScheduledSealerDown) {
  auto net = spawnNetwork(small());
  const auto sealer = net->scheduledSealer();
  net->crashNode(sealer);
  const auto h = net->height();
  EXPECT_FALSE(net->seal().has_value());
  EXPECT_EQ(net->height(), h);
  net->restartNode(sealer);
  EXPECT_TRUE(net->seal().has_value());
}

TEST(Network, CrashLosesOnlyTheBuffer) {
  auto net = spawnNetwork(small(4));
  std::vector<LogRecord> records;
  for (std::uint64_t i = 1; i <= 10; ++i) records.push_back(record(i * 1000, 1, i, 1, 7, "read", "TOPMed"));
  for (const auto& r : records) net->ingest(2, r);
  EXPECT_EQ(net->node(2).engine.buffered(), 2u);
  net->crashNode(2);
  EXPECT_THROW(net->ingest(2, records[0]), NodeDown);
  EXPECT_THROW(net->crashNode(2), AlreadyCrashed);
  net->seal();
  const auto& s = net->node(1).streams;
  EXPECT_EQ(s.getCount("regular-user", "7"), 10u);
  std::uint64_t batched = 0;
  std::vector<StoredLog> logs;
  for (const auto& item : s.retrieve("batch-user", "7")) batched += decodeBundle(item, logs);
  EXPECT_EQ(batched, 8u);

  net->restartNode(2);
  EXPECT_THROW(net->restartNode(2), AlreadyUp);
  auto res = net->query(2, byUser(7));
  EXPECT_EQ(res.records(), records);
  ASSERT_EQ(res.recoveries.size(), 1u);
  EXPECT_EQ(res.recoveries[0].gap, 2u);
  EXPECT_TRUE(net->query(3, byUser(7)).recoveries.empty());
}

TEST(Network, RestartRebuildsIdenticalIndex) {
  auto net = spawnNetwork(small(8));
  bench::loadRecords(*net, someRecords(200));
  const KvStore before = net->node(3).streams.index();
  net->crashNode(3);
  net->restartNode(3);
  EXPECT_EQ(net->node(3).streams.index(), before);
  EXPECT_EQ(net->node(3).engine.buffered(), 0u);
}

TEST(Network, RestartWithEmptyBufferChangesNothing) {
  auto net = spawnNetwork(small(8));
  const auto records = someRecords(64);
  bench::loadRecords(*net, records);
  Oracle oracle;
  oracle.addAll(records);
  net->crashNode(1);
  net->restartNode(1);
  const auto q = byUser(records[5].user);
  auto res = net->query(1, q);
  EXPECT_EQ(res.records(), oracle.query(q));
  EXPECT_TRUE(res.recoveries.empty());
}

TEST(Network, CrashedNodeCatchesUpOnRestart) {
  auto net = spawnNetwork(small(5));
  net->crashNode(4);
  // Node 4 is a sealer every fourth block, so some seals stall.
  const auto records = someRecords(40);
  for (std::size_t i = 0; i < records.size(); ++i) net->ingest(static_cast<NodeId>(1 + i % 3), records[i]);
  net->flushAll();
  net->restartNode(4);
  net->seal();
  net->replicate();
  for (NodeId id = 1; id <= 4; ++id) {
    EXPECT_EQ(net->node(id).chain(), net->node(1).chain());
    EXPECT_TRUE(net->verify(id));
  }
  EXPECT_EQ(net->node(4).streams.index(), net->node(1).streams.index());
  Oracle oracle;
  oracle.addAll(records);
  const auto q = byUser(records[0].user);
  EXPECT_EQ(sorted(net->query(4, q).records()), sorted(oracle.query(q)));
}

TEST(Network, ReplicationDelay) {
  auto cfg = small();
  cfg.replication_delay = 3;
  auto net = spawnNetwork(cfg);
  net->replicate();
  const auto r = record(5, 1, 1, 1, 7, "read", "x");
  net->ingest(1, r);
  net->flush(1);
  // The sealing node sees the block at once; its peers only after the delay.
  const auto h = net->height();
  NodeId peer = 0;
  for (NodeId id = 1; id <= 4; ++id) {
    if (net->node(id).chain().tipHeight() < h) peer = id;
  }
  ASSERT_NE(peer, 0u);
  EXPECT_TRUE(net->query(peer, byUser(7)).logs.empty());
  net->advance(2);
  EXPECT_LT(net->node(peer).chain().tipHeight(), h);
  net->advance(1);
  for (NodeId id = 1; id <= 4; ++id) EXPECT_EQ(net->node(id).chain().tipHeight(), net->height());
  EXPECT_EQ(net->query(peer, byUser(7)).records(), std::vector<LogRecord>{r});
}

TEST(Network, TamperDetectedOnOneNodeOnly) {
  auto net = spawnNetwork(small());
  bench::loadRecords(*net, someRecords(20));
  net->tamper(2, 2, 0, 30);
  EXPECT_FALSE(net->verify(2));
  EXPECT_TRUE(net->verify(1));
}

TEST(Network, PersistsAndResumes) {
  testing_support::TempDir dir("net");
  auto cfg = small(6);
  cfg.data_dir = dir.path();
  const auto first = someRecords(100, 5);
  const auto second = someRecords(50, 6);
  Oracle oracle;
  oracle.addAll(first);
  oracle.addAll(second);
  {
    Network net(cfg);
    bench::loadRecords(net, first);
  }
  {
    Network net(cfg);
    for (NodeId id = 1; id <= 4; ++id) EXPECT_TRUE(net.verify(id));
    bench::loadRecords(net, second);
  }
  Network net(cfg);
  for (NodeId id = 1; id <= 4; ++id) {
    EXPECT_TRUE(net.verify(id));
    EXPECT_EQ(net.node(id).chain(), net.node(1).chain());
  }
  for (std::uint64_t u = 1; u <= 20; ++u) {
    auto res = net.query(1 + u % 4, byUser(u));
    EXPECT_EQ(sorted(res.records()), sorted(oracle.query(byUser(u))));
    EXPECT_TRUE(res.recoveries.empty());
  }
}

TEST(Network, ParallelQueriesMatchSequential) {
  auto net = spawnNetwork(small(50));
  const auto records = someRecords(2000, 8);
  bench::loadRecords(*net, records);
  auto spec = GeneratorSpec{};
  bench::WorkloadGenerator gen(records, spec, 9);
  std::vector<Query> queries;
  for (int i = 0; i < 60; ++i) queries.push_back(i % 2 ? gen.conjunctive() : gen.range());
  const auto parallel = net->queryParallel(2, queries, 4);
  ASSERT_EQ(parallel.size(), queries.size());
  for (std::size_t i = 0; i < queries.size(); ++i) {
    EXPECT_EQ(parallel[i].records(), net->query(2, queries[i]).records());
  }
}

// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any
// failure.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>

#include "auditchain/auditchain.hpp"

using namespace auditchain;
using namespace auditchain::bench;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int n, const std::string& title, const std::function<Outcome()>& run) {
  Outcome o;
  Stopwatch sw;
  try {
    o = run();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  if (!o.pass) ++failures;
  std::printf("%s criterion %d: %s (%s) [%.1fs]\n", o.pass ? "PASS" : "FAIL", n, title.c_str(), o.detail.c_str(),
              sw.seconds());
  std::fflush(stdout);
}

std::vector<LogRecord> sortedCopy(std::vector<LogRecord> v) {
  std::sort(v.begin(), v.end(), [](const LogRecord& a, const LogRecord& b) {
    return std::tie(a.timestamp, a.node, a.id, a.ref_id, a.user, a.activity, a.resource) <
           std::tie(b.timestamp, b.node, b.id, b.ref_id, b.user, b.activity, b.resource);
  });
  return v;
}

bool sameAnswer(const Query& q, const std::vector<LogRecord>& got, const std::vector<LogRecord>& want) {
  return q.order_by ? got == want : sortedCopy(got) == sortedCopy(want);
}

// Shared state for criteria 1, 2, 3 and 7.
struct MainRun {
  GeneratorSpec spec = paperShapedSpec(40'000, 2024);
  std::vector<LogRecord> records;
  std::unique_ptr<Network> net;
  Oracle oracle;
  std::vector<Query> conjunctive, range, combined;
  std::vector<QueryResult> range_results;
};

MainRun& mainRun() {
  static MainRun run = [] {
    MainRun r;
    r.records = generate(r.spec);
    r.net = spawnNetwork(NetworkConfig{});
    loadRecords(*r.net, r.records);  // round-robin: 10^4 per node
    r.oracle.addAll(r.records);
    WorkloadGenerator gen(r.records, r.spec, 99);
    for (int i = 0; i < 200; ++i) r.conjunctive.push_back(gen.conjunctive());
    for (int i = 0; i < 200; ++i) r.range.push_back(gen.range());
    for (int i = 0; i < 100; ++i) r.combined.push_back(gen.combined());
    return r;
  }();
  return run;
}

Outcome oracleEquivalence() {
  auto& r = mainRun();
  std::size_t checked = 0, mismatches = 0, ordered = 0, nonempty = 0;
  NodeId node = 1;
  auto run = [&](const std::vector<Query>& qs, bool keep) {
    for (const auto& q : qs) {
      auto res = r.net->query(node, q);
      node = node % r.net->size() + 1;
      const auto want = r.oracle.query(q);
      if (!sameAnswer(q, res.records(), want)) ++mismatches;
      ordered += q.order_by ? 1 : 0;
      nonempty += want.empty() ? 0 : 1;
      ++checked;
      if (keep) r.range_results.push_back(std::move(res));
    }
  };
  run(r.conjunctive, false);
  run(r.range, true);
  run(r.combined, false);
  std::ostringstream d;
  d << checked << " queries over " << r.records.size() << " records, " << mismatches << " mismatches, " << ordered
    << " ordered, " << nonempty << " non-empty";
  return {mismatches == 0 && checked == 500, d.str()};
}

Outcome paperQueries() {
  auto& r = mainRun();
  auto rep = runQueryBench(*r.net, r.oracle, paperShapedQueries(), 1, 2);
  std::ostringstream d;
  bool ok = rep.queries.size() == 4;
  for (const auto& q : rep.queries) {
    d << q.label << "=" << q.records << (q.oracle_match ? "" : "(mismatch)") << " ";
    ok = ok && q.oracle_match && q.records > 0;
  }
  return {ok, d.str()};
}

Outcome interiorBuckets() {
  auto& r = mainRun();
  if (r.range_results.size() != r.range.size()) return {false, "criterion 1 did not produce range results"};
  const auto n = r.net->config().engine.bucket_size;
  // Census straight from the oracle's records.
  std::map<std::uint64_t, std::uint64_t> census;
  for (const auto& rec : r.oracle.records()) ++census[rec.timestamp / n];
  std::size_t violations = 0;
  std::uint64_t scanned = 0, boundary = 0;
  for (std::size_t i = 0; i < r.range.size(); ++i) {
    const auto& q = *r.range[i].range;
    const auto& s = r.range_results[i].stats;
    const auto first = q.lo / n, last = q.hi / n;
    const auto in_boundary = census[first] + (last != first ? census[last] : 0);
    if (s.records_discarded != s.boundary_discarded) ++violations;
    if (s.records_scanned > in_boundary) ++violations;
    scanned += s.records_scanned;
    boundary += in_boundary;
  }
  std::ostringstream d;
  d << r.range.size() << " range queries, " << violations << " violations, scanned " << scanned
    << " of " << boundary << " boundary-bucket records";
  return {violations == 0, d.str()};
}

Outcome crashRecovery() {
  NetworkConfig cfg;
  cfg.engine.buffer_size = 4;
  auto net = spawnNetwork(cfg);
  std::vector<LogRecord> records;
  for (std::uint64_t i = 1; i <= 10; ++i) {
    records.push_back(LogRecord{1522257730000 + i, 3, 100 + i, 40345, 7, "read", "TOPMed"});
  }
  for (const auto& rec : records) net->ingest(1, rec);
  const auto unflushed = net->node(1).engine.buffered();
  net->crashNode(1);
  net->restartNode(1);
  net->seal();
  Oracle oracle;
  oracle.addAll(records);

  // Every key the two lost records touch.
  std::vector<Query> queries;
  for (const auto& lost : {records[8], records[9]}) {
    for (auto f : kAllFields) queries.push_back(Query{{{f, fieldValue(lost, f)}}, std::nullopt, std::nullopt});
  }
  queries.push_back(Query{{}, TimeRange{records.front().timestamp, records.back().timestamp}, std::nullopt});

  std::uint64_t gap_user = 0, repairs = 0, again_repairs = 0;
  bool all_found = true;
  for (const auto& q : queries) {
    auto res = net->query(1, q);
    all_found = all_found && res.records() == oracle.query(q);
    repairs += res.stats.repairs;
    if (q.equality.size() == 1 && q.equality[0].field == Field::user && !res.recoveries.empty()) {
      gap_user = res.recoveries[0].gap;
    }
  }
  const auto user7 = net->query(1, Query{{{Field::user, std::uint64_t{7}}}, std::nullopt, std::nullopt});
  for (const auto& q : queries) {
    auto res = net->query(1, q);
    all_found = all_found && res.records() == oracle.query(q);
    again_repairs += res.stats.repairs;
  }
  std::ostringstream d;
  d << "unflushed=" << unflushed << " user=7 returned " << user7.logs.size() << " x=" << gap_user
    << " first-pass repairs=" << repairs << " second-pass repairs=" << again_repairs;
  return {unflushed == 2 && user7.logs.size() == 10 && gap_user == 2 && all_found && repairs > 0 &&
              again_repairs == 0,
          d.str()};
}

Outcome batchEconomy() {
  NetworkConfig cfg;
  cfg.engine.buffer_size = 100;
  auto net = spawnNetwork(cfg);
  auto spec = paperShapedSpec(10'000, 5);
  spec.cardinality[static_cast<std::size_t>(Field::user)] = 1;
  const auto records = generate(spec);
  loadRecords(*net, records);
  const Query all{{{Field::user, std::uint64_t{1}}}, std::nullopt, std::nullopt};
  auto res = net->query(1, all);
  Oracle oracle;
  oracle.addAll(records);
  const auto regular_items = net->node(1).streams.getCount("regular-user", "1");
  const auto batch_items = res.stats.items_fetched;
  const auto bound = (records.size() + 99) / 100 + res.stats.repairs;
  const double ratio = batch_items ? static_cast<double>(regular_items) / static_cast<double>(batch_items) : 0;
  std::ostringstream d;
  d << "batch items " << batch_items << " (bound " << bound << ") vs regular items " << regular_items
    << ", ratio " << ratio << ", repairs " << res.stats.repairs;
  return {res.records() == oracle.query(all) && batch_items <= bound && ratio >= 90, d.str()};
}

Outcome tamperDetection() {
  NetworkConfig cfg;
  cfg.engine.buffer_size = 50;
  auto net = spawnNetwork(cfg);
  loadRecords(*net, generate(paperShapedSpec(2000, 6)));
  std::mt19937_64 rng(77);
  int detected = 0, restored = 0;
  const int trials = 100;
  for (int t = 0; t < trials; ++t) {
    const NodeId node = static_cast<NodeId>(1 + rng() % net->size());
    const auto& chain = net->node(node).chain();
    std::uint64_t h;
    do {
      h = 1 + rng() % chain.tipHeight();
    } while (chain.at(h).txs.empty());
    const auto tx = rng() % chain.at(h).txs.size();
    const auto offset = rng() % chain.at(h).txs[tx].byteSize();
    const auto mask = static_cast<std::uint8_t>(1 + rng() % 255);
    net->tamper(node, h, tx, offset, mask);
    detected += net->verify(node) ? 0 : 1;
    net->tamper(node, h, tx, offset, mask);  // xor again restores the byte
    restored += net->verify(node) ? 1 : 0;
  }
  std::ostringstream d;
  d << detected << "/" << trials << " mutations detected, " << restored << "/" << trials << " restorations verified";
  return {detected == trials && restored == trials, d.str()};
}

Outcome crossNode() {
  auto& r = mainRun();
  r.net->replicate();
  bool chains = true, indexes = true;
  for (NodeId id = 2; id <= r.net->size(); ++id) {
    chains = chains && r.net->node(id).chain() == r.net->node(1).chain();
    indexes = indexes && r.net->node(id).streams.index() == r.net->node(1).streams.index();
  }
  bool verified = true;
  for (NodeId id = 1; id <= r.net->size(); ++id) verified = verified && r.net->verify(id);
  std::size_t differing = 0, checked = 0;
  std::vector<Query> sample;
  for (std::size_t i = 0; i < 40; ++i) {
    sample.push_back(r.conjunctive[i]);
    sample.push_back(r.range[i]);
    sample.push_back(r.combined[i]);
  }
  for (const auto& lq : paperShapedQueries()) sample.push_back(lq.query);
  for (const auto& q : sample) {
    const auto first = r.net->query(1, q).records();
    for (NodeId id = 2; id <= r.net->size(); ++id) differing += r.net->query(id, q).records() == first ? 0 : 1;
    ++checked;
  }
  std::ostringstream d;
  d << "chains " << (chains ? "identical" : "DIFFER") << ", indexes " << (indexes ? "identical" : "DIFFER")
    << ", all verify " << (verified ? "yes" : "NO") << ", " << checked << " queries x 4 nodes, " << differing
    << " differing answers";
  return {chains && indexes && verified && differing == 0, d.str()};
}

BenchOptions benchOptions() {
  BenchOptions o;
  o.data = paperShapedSpec(1000, 8);
  o.repetitions = 3;
  return o;
}

Outcome loadScaling() {
  auto rep = runLoadBench({1000, 2000, 5000, 10'000, 20'000}, benchOptions());
  std::ostringstream d;
  for (const auto& l : rep.loads) d << l.records << ":" << l.seconds << "s ";
  d << "r2=" << rep.fit->r2;
  return {rep.fit && rep.fit->r2 >= 0.9, d.str()};
}

Outcome retrievalScaling() {
  auto opts = benchOptions();
  opts.repetitions = 5;
  auto rep = runRetrievalScaling({1000, 2000, 5000, 10'000, 20'000}, opts);
  std::ostringstream d;
  for (const auto& q : rep.queries) d << q.records << ":" << q.seconds * 1e3 << "ms ";
  d << "r2=" << rep.fit->r2 << (rep.oracleOk() ? "" : " oracle MISMATCH");
  return {rep.fit && rep.fit->r2 >= 0.9 && rep.oracleOk(), d.str()};
}

Outcome storageAccounting() {
  auto rep = storageReport({5000, 10'000}, benchOptions());
  const auto& a = rep.storage.at(0);
  const auto& b = rep.storage.at(1);
  const double drift = std::abs(a.ratio / b.ratio - 1.0);
  std::ostringstream d;
  d << a.records << " records: " << a.chain_bytes << "/" << a.raw_encoded_bytes << " = " << a.ratio << "x; "
    << b.records << " records: " << b.chain_bytes << "/" << b.raw_encoded_bytes << " = " << b.ratio
    << "x; drift " << drift * 100 << "%";
  return {a.ratio >= 16 && b.ratio >= 16 && drift <= 0.2, d.str()};
}

}  // namespace

int main() {
  report(1, "oracle equivalence", oracleEquivalence);
  report(2, "competition query shapes", paperQueries);
  report(3, "interior-bucket guarantee", interiorBuckets);
  report(4, "crash recovery", crashRecovery);
  report(5, "batch economy", batchEconomy);
  report(6, "tamper detection", tamperDetection);
  report(7, "cross-node consistency", crossNode);
  report(8, "load scaling", loadScaling);
  report(9, "retrieval scaling", retrievalScaling);
  report(10, "storage accounting", storageAccounting);
  std::printf("%d of 10 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}

#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "auditchain/log_model.hpp"
#include "auditchain/net_sim.hpp"
#include "auditchain/oracle.hpp"
#include "auditchain/query.hpp"
#include "auditchain/query_engine.hpp"

namespace auditchain::bench {

// -- statistics ----------------------------------------------------------------

struct LinearFit {
  double slope = 0;
  double intercept = 0;
  double r2 = 0;
};

/// Ordinary least squares y = slope*x + intercept with the coefficient of
/// determination. A constant series fits perfectly (r2 = 1).
inline LinearFit linearFit(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size() || xs.size() < 2) throw InvalidArgument("linear fit needs >= 2 paired points");
  const double n = static_cast<double>(xs.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  if (sxx == 0) throw InvalidArgument("linear fit needs at least two distinct x values");
  LinearFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss_res = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double e = ys[i] - (fit.slope * xs[i] + fit.intercept);
    ss_res += e * e;
  }
  fit.r2 = syy == 0 ? 1.0 : 1.0 - ss_res / syy;
  return fit;
}

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

// -- loading -------------------------------------------------------------------

struct LoadStats {
  std::uint64_t records = 0;
  double seconds = 0;
  std::uint64_t transactions = 0;  // sealed during this load
  std::uint64_t blocks = 0;        // sealed during this load
  std::uint64_t chain_bytes = 0;   // node 1, after the load
};

inline std::uint64_t countTransactions(const Chain& chain) {
  std::uint64_t n = 0;
  for (const auto& b : chain.blocks()) n += b->txs.size();
  return n;
}

/// Ingests the records, then flushes every buffer, seals and replicates.
/// With `node` unset the records are dealt round-robin across the nodes.
inline LoadStats loadRecords(Network& net, const std::vector<LogRecord>& records,
                             std::optional<NodeId> node = std::nullopt) {
  const auto tx_before = countTransactions(net.node(1).chain());
  const auto blocks_before = net.node(1).chain().size();
  Stopwatch sw;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const NodeId target = node ? *node : static_cast<NodeId>(i % net.size() + 1);
    net.ingest(target, records[i]);
  }
  net.flushAll();
  net.seal();
  net.replicate();
  LoadStats s;
  s.seconds = sw.seconds();
  s.records = records.size();
  const auto& chain = net.node(1).chain();
  s.transactions = countTransactions(chain) - tx_before;
  s.blocks = chain.size() - blocks_before;
  s.chain_bytes = chain.encodedBytes();
  return s;
}

// -- workloads -------------------------------------------------------------------

/// Generator tuned so the four competition-style test queries are selective
/// but non-empty.
inline GeneratorSpec paperShapedSpec(std::uint64_t count, std::uint64_t seed) {
  GeneratorSpec g;
  g.record_count = count;
  g.seed = seed;
  g.ts_lo = 1522000000000;
  g.ts_hi = 1523000000000;
  //           ts  node  id    ref_id user activity resource
  g.cardinality = {1, 4, 5000, 100, 10, 6, 5};
  g.base = {1, 1, 1, 40300, 1, 1, 1};
  return g;
}

struct LabeledQuery {
  std::string label;
  Query query;
};

inline std::vector<LabeledQuery> paperShapedQueries() {
  std::vector<LabeledQuery> out;
  out.push_back({"q1-user-and-timestamp-range",
                 Query{{{Field::user, std::uint64_t{7}}}, TimeRange{1522257730000, 1522449160000}, std::nullopt}});
  out.push_back({"q2-resource", Query{{{Field::resource, std::string("MOD_WormBase")}}, std::nullopt, std::nullopt}});
  out.push_back({"q3-user-and-resource",
                 Query{{{Field::user, std::uint64_t{1}}, {Field::resource, std::string("TOPMed")}},
                       std::nullopt,
                       std::nullopt}});
  out.push_back({"q4-node-and-ref-id-ordered",
                 Query{{{Field::node, std::uint64_t{3}}, {Field::ref_id, std::uint64_t{40345}}},
                       std::nullopt,
                       Ordering{Field::timestamp, Direction::ascending}}});
  return out;
}

/// Seeded random queries drawn around the stored records so that most are
/// non-empty.
class WorkloadGenerator {
 public:
  WorkloadGenerator(const std::vector<LogRecord>& records, const GeneratorSpec& spec, std::uint64_t seed)
      : records_(records), spec_(spec), rng_(seed) {}

  Query conjunctive() {
    Query q;
    const auto& tpl = records_.at(draw(records_.size()));
    const auto n = 1 + draw(3);
    std::vector<Field> fields(kAllFields.begin(), kAllFields.end());
    for (std::size_t i = 0; i < n; ++i) {
      std::swap(fields[i], fields[i + draw(fields.size() - i)]);
      q.equality.push_back(predicateFor(tpl, fields[i]));
    }
    maybeOrder(q);
    return q;
  }

  Query range() {
    Query q;
    q.range = randomRange();
    maybeOrder(q);
    return q;
  }

  Query combined() {
    Query q = conjunctive();
    q.equality.resize(std::min<std::size_t>(q.equality.size(), 2));
    q.range = randomRange();
    return q;
  }

 private:
  std::uint64_t draw(std::uint64_t n) { return rng_() % n; }

  Predicate predicateFor(const LogRecord& tpl, Field f) {
    // One in five predicates takes a value that may not occur at all.
    if (draw(5) == 0) {
      if (isNumeric(f)) return {f, std::uint64_t{1 + draw(100000)}};
      return {f, std::string("absent-") + std::to_string(draw(3))};
    }
    return {f, fieldValue(tpl, f)};
  }

  TimeRange randomRange() {
    const auto span = spec_.ts_hi - spec_.ts_lo;
    const auto margin = span / 20;
    const auto lo_floor = spec_.ts_lo > margin ? spec_.ts_lo - margin : 1;
    const auto lo = lo_floor + draw(spec_.ts_hi + margin - lo_floor + 1);
    // Widths span several orders of magnitude, including zero.
    const double exponent = static_cast<double>(draw(1000)) / 1000.0 * std::log10(static_cast<double>(span) / 3);
    const auto width = draw(8) == 0 ? 0 : static_cast<std::uint64_t>(std::pow(10.0, exponent));
    return {lo, lo + width};
  }

  void maybeOrder(Query& q) {
    if (draw(2) == 0) {
      q.order_by = Ordering{kAllFields[draw(kAllFields.size())],
                            draw(2) == 0 ? Direction::ascending : Direction::descending};
    }
  }

  const std::vector<LogRecord>& records_;
  GeneratorSpec spec_;
  std::mt19937_64 rng_;
};

// -- reports -----------------------------------------------------------------------

struct QueryMeasurement {
  std::string label;
  double seconds = 0;
  ScanStats stats;
  Plan plan;
  std::uint64_t records = 0;
  std::uint64_t oracle_records = 0;
  bool oracle_match = false;
};

struct SweepPoint {
  std::uint64_t bucket_size = 0;
  std::uint64_t queries = 0;
  double avg_seconds = 0;
  double avg_buckets = 0;
  double avg_scanned = 0;
  bool oracle_match = false;
};

struct StorageMeasurement {
  std::uint64_t records = 0;
  std::uint64_t chain_bytes = 0;  // per node
  std::uint64_t raw_encoded_bytes = 0;
  std::uint64_t raw_csv_bytes = 0;
  double ratio = 0;  // chain_bytes / raw_encoded_bytes
  bool within_bound = false;
};

/// Each stored copy of a log costs at most this multiple of its raw encoding
/// (transaction, item and bundle framing included) for records of typical
/// size.
inline constexpr double kCopyOverheadBound = 4.0;
inline constexpr std::size_t kLayoutCopies = 16;

struct BenchReport {
  std::string kind;
  std::vector<LoadStats> loads;
  std::vector<QueryMeasurement> queries;
  std::vector<SweepPoint> sweep;
  std::vector<StorageMeasurement> storage;
  std::optional<LinearFit> fit;

  bool oracleOk() const {
    return std::all_of(queries.begin(), queries.end(), [](const auto& q) { return q.oracle_match; }) &&
           std::all_of(sweep.begin(), sweep.end(), [](const auto& p) { return p.oracle_match; });
  }

  bool passed() const {
    return oracleOk() &&
           std::all_of(storage.begin(), storage.end(), [](const auto& s) { return s.within_bound; });
  }

  void writeCsv(std::ostream& out) const {
    if (!loads.empty()) {
      out << "kind,records,seconds,transactions,blocks,chain_bytes\n";
      for (const auto& l : loads) {
        out << kind << ',' << l.records << ',' << l.seconds << ',' << l.transactions << ',' << l.blocks << ','
            << l.chain_bytes << '\n';
      }
    }
    if (!queries.empty()) {
      out << "kind,label,plan,seconds,records,oracle_records,oracle_match,buckets_fetched,items_fetched,"
             "records_fetched,records_scanned,records_discarded,repaired_records\n";
      for (const auto& q : queries) {
        out << kind << ',' << q.label << ','
            << (q.plan.kind == PlanKind::range ? std::string("range")
                                               : "equality:" + std::string(fieldName(q.plan.field.value_or(Field::timestamp))))
            << ',' << q.seconds << ',' << q.records << ',' << q.oracle_records << ',' << (q.oracle_match ? 1 : 0)
            << ',' << q.stats.buckets_fetched << ',' << q.stats.items_fetched << ',' << q.stats.records_fetched
            << ',' << q.stats.records_scanned << ',' << q.stats.records_discarded << ','
            << q.stats.repaired_records << '\n';
      }
    }
    if (!sweep.empty()) {
      out << "kind,bucket_size,queries,avg_seconds,avg_buckets,avg_scanned,oracle_match\n";
      for (const auto& p : sweep) {
        out << kind << ',' << p.bucket_size << ',' << p.queries << ',' << p.avg_seconds << ',' << p.avg_buckets
            << ',' << p.avg_scanned << ',' << (p.oracle_match ? 1 : 0) << '\n';
      }
    }
    if (!storage.empty()) {
      out << "kind,records,chain_bytes,raw_encoded_bytes,raw_csv_bytes,ratio,within_bound\n";
      for (const auto& s : storage) {
        out << kind << ',' << s.records << ',' << s.chain_bytes << ',' << s.raw_encoded_bytes << ','
            << s.raw_csv_bytes << ',' << s.ratio << ',' << (s.within_bound ? 1 : 0) << '\n';
      }
    }
  }

  void writeSummary(std::ostream& out) const {
    out << "# " << kind << ": " << loads.size() << " load runs, " << queries.size() << " queries, "
        << sweep.size() << " sweep points, " << storage.size() << " storage rows\n";
    if (fit) {
      out << "# linear fit: slope=" << fit->slope << " intercept=" << fit->intercept << " r2=" << fit->r2 << '\n';
    }
    out << "# oracle agreement: " << (oracleOk() ? "all match" : "MISMATCH") << '\n';
  }
};

struct BenchOptions {
  NetworkConfig network;
  GeneratorSpec data;
  unsigned repetitions = 3;
};

inline NetworkConfig inMemory(NetworkConfig cfg) {
  cfg.data_dir.reset();
  return cfg;
}

/// Load time against record count, one fresh network per size and
/// repetition; the fastest repetition is kept.
inline BenchReport runLoadBench(const std::vector<std::uint64_t>& sizes, const BenchOptions& opts) {
  BenchReport rep;
  rep.kind = "load";
  std::vector<double> xs, ys;
  for (auto size : sizes) {
    std::vector<LogRecord> records;
    if (size > 0) {
      auto spec = opts.data;
      spec.record_count = size;
      records = generate(spec);
    }
    std::optional<LoadStats> best;
    for (unsigned r = 0; r < std::max(1u, opts.repetitions); ++r) {
      Network net(inMemory(opts.network));
      auto s = loadRecords(net, records);
      if (!best || s.seconds < best->seconds) best = s;
    }
    rep.loads.push_back(*best);
    xs.push_back(static_cast<double>(size));
    ys.push_back(best->seconds);
  }
  if (xs.size() >= 2) rep.fit = linearFit(xs, ys);
  return rep;
}

/// Times each query at `node` and checks it against the oracle (outside the
/// timed region).
inline BenchReport runQueryBench(Network& net, const Oracle& oracle, const std::vector<LabeledQuery>& workload,
                                 unsigned repetitions = 1, NodeId node = 1) {
  BenchReport rep;
  rep.kind = "query";
  for (const auto& lq : workload) {
    QueryMeasurement m;
    m.label = lq.label;
    m.seconds = INFINITY;
    QueryResult res;
    for (unsigned r = 0; r < std::max(1u, repetitions); ++r) {
      Stopwatch sw;
      res = net.query(node, lq.query);
      m.seconds = std::min(m.seconds, sw.seconds());
    }
    m.stats = res.stats;
    m.plan = res.plan;
    m.records = res.logs.size();
    const auto expected = oracle.query(lq.query);
    m.oracle_records = expected.size();
    m.oracle_match = res.records() == expected;
    rep.queries.push_back(std::move(m));
  }
  return rep;
}

/// Query time against the number of records returned: for each size a fresh
/// network is loaded and one unrestricted query (a range covering every
/// timestamp) is timed.
inline BenchReport runRetrievalScaling(const std::vector<std::uint64_t>& sizes, const BenchOptions& opts) {
  BenchReport rep;
  rep.kind = "retrieval";
  std::vector<double> xs, ys;
  for (auto size : sizes) {
    auto spec = opts.data;
    spec.record_count = size;
    const auto records = generate(spec);
    Network net(inMemory(opts.network));
    loadRecords(net, records);
    Oracle oracle;
    oracle.addAll(records);
    const std::vector<LabeledQuery> all{
        {"all-" + std::to_string(size), Query{{}, TimeRange{spec.ts_lo, spec.ts_hi}, std::nullopt}}};
    auto q = runQueryBench(net, oracle, all, std::max(3u, opts.repetitions));
    xs.push_back(static_cast<double>(q.queries.front().records));
    ys.push_back(q.queries.front().seconds);
    rep.queries.push_back(q.queries.front());
  }
  if (xs.size() >= 2) rep.fit = linearFit(xs, ys);
  return rep;
}

/// Average range-query time per bucket size over one fixed dataset and one
/// fixed set of ranges.
inline BenchReport runBucketSweep(const std::vector<std::uint64_t>& bucket_sizes, const BenchOptions& opts,
                                  std::size_t range_queries = 20, std::uint64_t seed = 7) {
  BenchReport rep;
  rep.kind = "sweep";
  const auto records = generate(opts.data);
  Oracle oracle;
  oracle.addAll(records);
  WorkloadGenerator gen(records, opts.data, seed);
  std::vector<Query> workload;
  for (std::size_t i = 0; i < range_queries; ++i) workload.push_back(gen.range());
  for (auto n : bucket_sizes) {
    auto cfg = inMemory(opts.network);
    cfg.engine.bucket_size = n;
    Network net(cfg);
    loadRecords(net, records);
    SweepPoint p;
    p.bucket_size = n;
    p.queries = workload.size();
    p.oracle_match = true;
    for (const auto& q : workload) {
      Stopwatch sw;
      auto res = net.query(1, q);
      p.avg_seconds += sw.seconds();
      p.avg_buckets += static_cast<double>(res.stats.buckets_fetched);
      p.avg_scanned += static_cast<double>(res.stats.records_scanned);
      p.oracle_match = p.oracle_match && res.records() == oracle.query(q);
    }
    if (!workload.empty()) {
      const auto count = static_cast<double>(workload.size());
      p.avg_seconds /= count;
      p.avg_buckets /= count;
      p.avg_scanned /= count;
    }
    rep.sweep.push_back(p);
  }
  return rep;
}

inline StorageMeasurement measureStorage(const Network& net, const std::vector<LogRecord>& records) {
  StorageMeasurement s;
  s.records = records.size();
  s.chain_bytes = net.chainBytes(1);
  s.raw_csv_bytes = kCsvHeader.size() + 1;
  for (const auto& r : records) {
    s.raw_encoded_bytes += encodedSize(r);
    s.raw_csv_bytes += toCsvRow(r).size() + 1;
  }
  s.ratio = s.raw_encoded_bytes == 0 ? 0.0
                                     : static_cast<double>(s.chain_bytes) / static_cast<double>(s.raw_encoded_bytes);
  s.within_bound = s.raw_encoded_bytes == 0 || s.ratio <= kLayoutCopies * kCopyOverheadBound;
  return s;
}

/// Chain size against raw data size for each dataset size.
inline BenchReport storageReport(const std::vector<std::uint64_t>& sizes, const BenchOptions& opts) {
  BenchReport rep;
  rep.kind = "storage";
  for (auto size : sizes) {
    std::vector<LogRecord> records;
    if (size > 0) {
      auto spec = opts.data;
      spec.record_count = size;
      records = generate(spec);
    }
    Network net(inMemory(opts.network));
    loadRecords(net, records);
    rep.storage.push_back(measureStorage(net, records));
  }
  return rep;
}

}  // namespace auditchain::bench

#pragma once

#include <algorithm>
#include <array>
#include <compare>
#include <concepts>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "auditchain/bytes.hpp"
#include "auditchain/errors.hpp"
#include "auditchain/ledger.hpp"
#include "auditchain/log_model.hpp"
#include "auditchain/query.hpp"
#include "auditchain/streams.hpp"

namespace auditchain {

// -- stored values -----------------------------------------------------------

/// Identity and global order of an ingested log. `seq` is assigned by the
/// host's logical clock at ingest time, so ordering by stamp reproduces the
/// order in which the regular-tier writes reached the chain.
struct IngestStamp {
  std::uint64_t seq = 0;
  NodeId origin = 0;

  auto operator<=>(const IngestStamp&) const = default;
};

struct IngestStampHash {
  std::size_t operator()(const IngestStamp& s) const noexcept {
    return std::hash<std::uint64_t>{}(s.seq * 0x9e3779b97f4a7c15ull ^ s.origin);
  }
};

struct StoredLog {
  IngestStamp stamp;
  LogRecord record;

  bool operator==(const StoredLog&) const = default;
};

// Every value the engine writes is a bundle:
//   u32 count | (u64 seq | u32 origin | record)*
// Regular-tier values hold one log, batch-tier values hold every buffered log
// that shares the item's key.

inline std::string encodeBundle(std::span<const StoredLog* const> logs) {
  std::size_t size = 4;
  for (const auto* l : logs) size += 12 + encodedSize(l->record);
  ByteWriter w(size);
  w.u32(static_cast<std::uint32_t>(logs.size()));
  for (const auto* l : logs) {
    w.u64(l->stamp.seq);
    w.u32(l->stamp.origin);
    encodeRecord(w, l->record);
  }
  return std::move(w).take();
}

inline std::string encodeBundle(std::span<const StoredLog> logs) {
  std::vector<const StoredLog*> ptrs;
  ptrs.reserve(logs.size());
  for (const auto& l : logs) ptrs.push_back(&l);
  return encodeBundle(std::span<const StoredLog* const>(ptrs));
}

/// Appends the decoded logs to `out`; returns how many were appended.
inline std::size_t decodeBundle(std::string_view bytes, std::vector<StoredLog>& out) {
  ByteReader r(bytes);
  const auto n = r.u32();
  if (n > r.remaining()) throw DecodeError("bundle count is corrupt");
  for (std::uint32_t i = 0; i < n; ++i) {
    StoredLog l;
    l.stamp.seq = r.u64();
    l.stamp.origin = r.u32();
    l.record = decodeRecord(r);
    out.push_back(std::move(l));
  }
  r.expectDone("bundle");
  return n;
}

// -- configuration and layout -------------------------------------------------

struct EngineConfig {
  std::uint64_t bucket_size = 10'000'000;  // N
  std::uint64_t buffer_size = 10'000;      // k
  /// Seal after this many single-record ingests without a flush.
  std::uint64_t seal_every = 100;

  void validate() const {
    if (bucket_size == 0) throw ConfigError("bucket_size must be >= 1");
    if (buffer_size == 0) throw ConfigError("buffer_size must be >= 1");
    if (seal_every == 0) throw ConfigError("seal_every must be >= 1");
  }
};

inline std::uint64_t bucketKey(std::uint64_t timestamp, std::uint64_t bucket_size) {
  return timestamp / bucket_size;
}

enum class Tier : std::uint8_t { regular, batch };

struct DictionaryPair {
  std::string regular;
  std::string batch;
};

/// Names of the sixteen dictionaries: a regular and a batch tier for each of
/// the seven fields and for the timestamp buckets.
struct DictionaryLayout {
  static std::string name(Tier tier, std::string_view suffix) {
    return std::string(tier == Tier::regular ? "regular-" : "batch-") + std::string(suffix);
  }

  static DictionaryPair forField(Field f) {
    return {name(Tier::regular, fieldName(f)), name(Tier::batch, fieldName(f))};
  }

  static DictionaryPair forRange() { return {name(Tier::regular, "range"), name(Tier::batch, "range")}; }

  static std::vector<std::string> all() {
    std::vector<std::string> out;
    for (auto tier : {Tier::regular, Tier::batch}) {
      for (auto f : kAllFields) out.push_back(name(tier, fieldName(f)));
      out.push_back(name(tier, "range"));
    }
    return out;
  }
};

// -- results ------------------------------------------------------------------

struct ScanStats {
  std::uint64_t buckets_fetched = 0;
  /// Stream items returned by the backend (batch bundles or regular entries).
  std::uint64_t items_fetched = 0;
  /// Distinct logs obtained from the fetched items.
  std::uint64_t records_fetched = 0;
  /// Logs checked against a predicate or timestamp bound.
  std::uint64_t records_scanned = 0;
  std::uint64_t records_discarded = 0;
  /// Logs fetched from the first and last bucket of a range.
  std::uint64_t boundary_records = 0;
  std::uint64_t boundary_discarded = 0;
  std::uint64_t repairs = 0;
  std::uint64_t repaired_records = 0;

  ScanStats& operator+=(const ScanStats& o) {
    buckets_fetched += o.buckets_fetched;
    items_fetched += o.items_fetched;
    records_fetched += o.records_fetched;
    records_scanned += o.records_scanned;
    records_discarded += o.records_discarded;
    boundary_records += o.boundary_records;
    boundary_discarded += o.boundary_discarded;
    repairs += o.repairs;
    repaired_records += o.repaired_records;
    return *this;
  }
};

struct RecoveryReport {
  std::string dictionary;
  std::string key;
  std::uint64_t batch_size = 0;     // distinct logs in the batch tier
  std::uint64_t regular_count = 0;  // getCount on the regular tier
  std::uint64_t gap = 0;            // regular_count - batch_size
  std::uint64_t window = 0;         // regular items read to locate the gap
};

enum class PlanKind : std::uint8_t { equality, range };

struct Plan {
  PlanKind kind = PlanKind::equality;
  std::optional<Field> field;  // dictionary served, for equality plans
  std::uint64_t equality_cost = 0;
  std::uint64_t range_cost = 0;
};

struct QueryResult {
  std::vector<StoredLog> logs;
  ScanStats stats;
  Plan plan;
  std::vector<RecoveryReport> recoveries;

  std::vector<LogRecord> records() const {
    std::vector<LogRecord> out;
    out.reserve(logs.size());
    for (const auto& l : logs) out.push_back(l.record);
    return out;
  }
};

// -- backend -------------------------------------------------------------------

/// What the engine needs from the stream layer of its node. `commit` asks the
/// host to seal pending transactions; it may be a no-op when sealing is not
/// currently possible.
template <class B>
concept StreamBackend = requires(B& b, const B& cb, const std::string& s, std::string v,
                                 std::span<const BatchEntry> entries, std::uint64_t n) {
  { cb.dictionaryKnown(s) } -> std::same_as<bool>;
  b.createDictionary(s);
  { b.insert(s, v, s) } -> std::same_as<Digest>;
  { b.insertBatch(s, entries) } -> std::same_as<Digest>;
  { cb.retrieve(s, s) } -> std::same_as<std::vector<std::string>>;
  { cb.getCount(s, s) } -> std::same_as<std::uint64_t>;
  { cb.lastN(s, s, n) } -> std::same_as<std::vector<std::string>>;
  { cb.listKeys(s) } -> std::same_as<std::vector<std::string>>;
  { cb.keyCount(s) } -> std::convertible_to<std::size_t>;
  { cb.maxTxBytes() } -> std::convertible_to<std::size_t>;
  b.commit();
  { b.nextStamp() } -> std::same_as<IngestStamp>;
};

// -- engine ----------------------------------------------------------------------

/// Per-node query engine over the sixteen-dictionary layout.
///
/// Ingest is single-threaded. Queries may run concurrently with each other
/// while no ingest is in flight; a query that repairs the batch tier writes
/// through the backend, which serializes it.
template <StreamBackend Backend>
class QueryEngine {
 public:
  QueryEngine(Backend backend, EngineConfig cfg) : backend_(std::move(backend)), cfg_(cfg) {
    cfg_.validate();
  }

  const EngineConfig& config() const noexcept { return cfg_; }
  Backend& backend() noexcept { return backend_; }
  const Backend& backend() const noexcept { return backend_; }

  /// Creates whichever layout dictionaries do not exist yet and commits.
  void ensureLayout() {
    bool created = false;
    for (const auto& name : DictionaryLayout::all()) {
      if (!backend_.dictionaryKnown(name)) {
        backend_.createDictionary(name);
        created = true;
      }
    }
    if (created) backend_.commit();
  }

  // -- ingest ------------------------------------------------------------------

  void ingest(const LogRecord& r) {
    if (auto err = validationError(r); !err.empty()) throw InvalidArgument("invalid record: " + err);
    StoredLog log{backend_.nextStamp(), r};
    const StoredLog* one[] = {&log};
    const auto value = encodeBundle(std::span<const StoredLog* const>(one));
    for (auto f : kAllFields) {
      backend_.insert(DictionaryLayout::forField(f).regular, value, fieldKey(r, f));
    }
    backend_.insert(DictionaryLayout::forRange().regular, value,
                    std::to_string(bucketKey(r.timestamp, cfg_.bucket_size)));
    buffer_.push_back(std::move(log));
    ++since_commit_;
    if (buffer_.size() >= cfg_.buffer_size) {
      flushBuffer();
    } else if (since_commit_ >= cfg_.seal_every) {
      backend_.commit();
      since_commit_ = 0;
    }
  }

  /// Writes the buffer to every batch dictionary, one transaction per
  /// dictionary, then commits. All eight payloads are sized before any is
  /// submitted, so an oversized buffer writes nothing.
  void flushBuffer() {
    if (buffer_.empty()) return;
    std::vector<std::pair<std::string, std::vector<BatchEntry>>> writes;
    for (auto f : kAllFields) {
      writes.emplace_back(DictionaryLayout::forField(f).batch,
                          groupByKey([f](const LogRecord& r) { return fieldKey(r, f); }));
    }
    writes.emplace_back(DictionaryLayout::forRange().batch, groupByKey([this](const LogRecord& r) {
                          return std::to_string(bucketKey(r.timestamp, cfg_.bucket_size));
                        }));
    for (const auto& [dict, entries] : writes) {
      const auto size = payloadSize(dict, entries);
      if (size > backend_.maxTxBytes()) {
        throw ConfigError("buffer of " + std::to_string(buffer_.size()) + " logs encodes to " +
                          std::to_string(size) + " bytes for " + dict +
                          ", over the transaction limit; lower buffer_size");
      }
    }
    for (const auto& [dict, entries] : writes) backend_.insertBatch(dict, entries);
    buffer_.clear();
    since_commit_ = 0;
    backend_.commit();
  }

  std::size_t buffered() const noexcept { return buffer_.size(); }
  const std::vector<StoredLog>& buffer() const noexcept { return buffer_; }

  /// Crash: the in-memory buffer is lost.
  void dropBuffer() {
    buffer_.clear();
    since_commit_ = 0;
  }

  // -- retrieval -------------------------------------------------------------------

  /// Reads `key` from the batch tier and reconciles it with the regular tier.
  /// Missing logs are located at the tail of the regular list, appended to the
  /// result and written back to the batch dictionary.
  std::vector<StoredLog> retrieveWithRecovery(const DictionaryPair& pair, const std::string& key,
                                              ScanStats& stats, RecoveryReport* report = nullptr) {
    std::vector<StoredLog> logs;
    std::unordered_set<IngestStamp, IngestStampHash> seen;
    {
      std::vector<StoredLog> raw;
      const auto items = backend_.retrieve(pair.batch, key);
      stats.items_fetched += items.size();
      for (const auto& item : items) decodeBundle(item, raw);
      logs.reserve(raw.size());
      // A log repaired here and later flushed by its origin appears twice.
      for (auto& l : raw) {
        if (seen.insert(l.stamp).second) logs.push_back(std::move(l));
      }
    }
    const auto regular = backend_.getCount(pair.regular, key);
    RecoveryReport rep{pair.batch, key, logs.size(), regular, 0, 0};
    if (logs.size() > regular) throw NegativeGap(pair.batch, key, logs.size(), regular);
    if (logs.size() < regular) {
      rep.gap = regular - logs.size();
      auto missing = locateGap(pair.regular, key, seen, rep, stats);
      const auto chunk = static_cast<std::size_t>(cfg_.buffer_size);
      for (std::size_t i = 0; i < missing.size(); i += chunk) {
        const auto end = std::min(missing.size(), i + chunk);
        BatchEntry e{encodeBundle(std::span<const StoredLog>(missing.data() + i, end - i)), key};
        backend_.insertBatch(pair.batch, std::span<const BatchEntry>(&e, 1));
      }
      backend_.commit();
      ++stats.repairs;
      stats.repaired_records += missing.size();
      std::move(missing.begin(), missing.end(), std::back_inserter(logs));
    }
    stats.records_fetched += logs.size();
    if (report) *report = rep;
    return logs;
  }

  // -- queries ---------------------------------------------------------------------

  QueryResult execute(const Query& q) {
    q.validate();
    if (!q.equality.empty() && q.range) return combinedQuery(q);
    if (q.range) return rangeQuery(*q.range, q.order_by);
    return conjunctiveQuery(q.equality, q.order_by);
  }

  /// Serves the query from the predicate with the smallest regular-tier count
  /// and filters by the others.
  QueryResult conjunctiveQuery(const std::vector<Predicate>& preds,
                               const std::optional<Ordering>& order = std::nullopt) {
    Query q{preds, std::nullopt, order};
    q.validate();
    QueryResult res;
    const auto [best, cost] = mostRestrictive(preds);
    res.plan = {PlanKind::equality, preds[best].field, cost, 0};
    runEqualityPath(res, preds, best, std::nullopt);
    finish(res, order);
    return res;
  }

  QueryResult rangeQuery(const TimeRange& range, const std::optional<Ordering>& order = std::nullopt) {
    if (range.lo < 1 || range.lo > range.hi) throw InvalidRange(range.lo, range.hi);
    QueryResult res;
    auto buckets = occupiedBuckets(range);
    res.plan.kind = PlanKind::range;
    for (const auto& [_, count] : buckets) res.plan.range_cost += count;
    runRangePath(res, range, buckets, {});
    finish(res, order);
    return res;
  }

  /// Equality predicates plus a timestamp range. Runs whichever access path
  /// has the lower regular-tier count; ties go to the equality path.
  QueryResult combinedQuery(const Query& q) {
    q.validate();
    if (q.equality.empty() || !q.range) throw QueryError("combined query needs equality and range parts");
    QueryResult res;
    const auto [best, eq_cost] = mostRestrictive(q.equality);
    auto buckets = occupiedBuckets(*q.range);
    std::uint64_t range_cost = 0;
    for (const auto& [_, count] : buckets) range_cost += count;
    res.plan.equality_cost = eq_cost;
    res.plan.range_cost = range_cost;
    if (range_cost < eq_cost) {
      res.plan.kind = PlanKind::range;
      runRangePath(res, *q.range, buckets, q.equality);
    } else {
      res.plan.kind = PlanKind::equality;
      res.plan.field = q.equality[best].field;
      runEqualityPath(res, q.equality, best, q.range);
    }
    finish(res, q.order_by);
    return res;
  }

  /// Bucket ids in [lo/N, hi/N] with a nonzero regular-tier count, ascending.
  std::vector<std::pair<std::uint64_t, std::uint64_t>> occupiedBuckets(const TimeRange& range) const {
    const auto& regular = DictionaryLayout::forRange().regular;
    const auto first = bucketKey(range.lo, cfg_.bucket_size);
    const auto last = bucketKey(range.hi, cfg_.bucket_size);
    std::vector<std::pair<std::uint64_t, std::uint64_t>> out;
    if (last - first < backend_.keyCount(regular)) {
      for (auto b = first;; ++b) {
        if (auto c = backend_.getCount(regular, std::to_string(b)); c > 0) out.emplace_back(b, c);
        if (b == last) break;
      }
    } else {
      // Span wider than the number of stored buckets: walk the keys instead.
      for (const auto& k : backend_.listKeys(regular)) {
        auto b = parseUnsigned(k);
        if (b && *b >= first && *b <= last) out.emplace_back(*b, backend_.getCount(regular, k));
      }
      std::sort(out.begin(), out.end());
    }
    return out;
  }

 private:
  template <class KeyOf>
  std::vector<BatchEntry> groupByKey(KeyOf key_of) const {
    std::vector<std::pair<std::string, std::vector<const StoredLog*>>> groups;
    std::unordered_map<std::string, std::size_t> slot;
    for (const auto& l : buffer_) {
      auto k = key_of(l.record);
      auto [it, fresh] = slot.try_emplace(k, groups.size());
      if (fresh) groups.emplace_back(std::move(k), std::vector<const StoredLog*>{});
      groups[it->second].second.push_back(&l);
    }
    std::vector<BatchEntry> out;
    out.reserve(groups.size());
    for (auto& [k, logs] : groups) {
      out.push_back({encodeBundle(std::span<const StoredLog* const>(logs)), std::move(k)});
    }
    return out;
  }

  static std::size_t payloadSize(const std::string& dict, const std::vector<BatchEntry>& entries) {
    std::size_t size = 4;
    for (const auto& e : entries) size += 1 + 12 + dict.size() + e.key.size() + e.value.size();
    return size;
  }

  std::vector<StoredLog> locateGap(const std::string& regular_dict, const std::string& key,
                                   const std::unordered_set<IngestStamp, IngestStampHash>& seen,
                                   RecoveryReport& rep, ScanStats& stats) {
    // The gap is normally the tail of the regular list. When other writers
    // interleaved with the lost logs, widen the window until all are found.
    std::uint64_t window = rep.gap;
    std::vector<StoredLog> missing;
    while (true) {
      const auto tail = backend_.lastN(regular_dict, key, window);
      stats.items_fetched += tail.size();
      std::vector<StoredLog> logs;
      for (const auto& item : tail) decodeBundle(item, logs);
      missing.clear();
      std::unordered_set<IngestStamp, IngestStampHash> taken;
      for (auto& l : logs) {
        if (!seen.contains(l.stamp) && taken.insert(l.stamp).second) missing.push_back(std::move(l));
      }
      if (missing.size() >= rep.gap || window >= rep.regular_count) break;
      window = std::min(rep.regular_count, window * 2);
    }
    rep.window = window;
    if (missing.size() != rep.gap) {
      throw Error("batch tier of " + rep.dictionary + "[" + key + "] holds logs absent from the regular tier");
    }
    return missing;
  }

  std::pair<std::size_t, std::uint64_t> mostRestrictive(const std::vector<Predicate>& preds) const {
    std::size_t best = 0;
    std::uint64_t best_count = UINT64_MAX;
    for (std::size_t i = 0; i < preds.size(); ++i) {
      const auto c = backend_.getCount(DictionaryLayout::forField(preds[i].field).regular, preds[i].key());
      const bool better = c < best_count || (c == best_count && preds[i].field < preds[best].field);
      if (better) {
        best = i;
        best_count = c;
      }
    }
    return {best, best_count};
  }

  void runEqualityPath(QueryResult& res, const std::vector<Predicate>& preds, std::size_t best,
                       const std::optional<TimeRange>& range) {
    const auto& p = preds[best];
    RecoveryReport rep;
    auto logs = retrieveWithRecovery(DictionaryLayout::forField(p.field), p.key(), res.stats, &rep);
    if (rep.gap > 0) res.recoveries.push_back(rep);
    if (preds.size() == 1 && !range) {
      res.logs = std::move(logs);
      return;
    }
    res.logs.reserve(logs.size());
    for (auto& l : logs) {
      ++res.stats.records_scanned;
      bool keep = !range || range->contains(l.record.timestamp);
      for (std::size_t i = 0; keep && i < preds.size(); ++i) {
        if (i != best) keep = preds[i].matches(l.record);
      }
      if (keep) {
        res.logs.push_back(std::move(l));
      } else {
        ++res.stats.records_discarded;
      }
    }
  }

  void runRangePath(QueryResult& res, const TimeRange& range,
                    const std::vector<std::pair<std::uint64_t, std::uint64_t>>& buckets,
                    const std::vector<Predicate>& extra) {
    const auto first = bucketKey(range.lo, cfg_.bucket_size);
    const auto last = bucketKey(range.hi, cfg_.bucket_size);
    const auto pair = DictionaryLayout::forRange();
    for (const auto& [bucket, _] : buckets) {
      RecoveryReport rep;
      auto logs = retrieveWithRecovery(pair, std::to_string(bucket), res.stats, &rep);
      if (rep.gap > 0) res.recoveries.push_back(rep);
      ++res.stats.buckets_fetched;
      const bool boundary = bucket == first || bucket == last;
      if (boundary) res.stats.boundary_records += logs.size();
      for (auto& l : logs) {
        bool keep = true;
        if (boundary || !extra.empty()) {
          ++res.stats.records_scanned;
          // Interior buckets lie entirely inside the range.
          keep = !boundary || range.contains(l.record.timestamp);
          for (const auto& p : extra) keep = keep && p.matches(l.record);
        }
        if (keep) {
          res.logs.push_back(std::move(l));
        } else {
          ++res.stats.records_discarded;
          if (boundary) ++res.stats.boundary_discarded;
        }
      }
    }
  }

  /// Canonical chain order first, then the requested stable sort.
  static void finish(QueryResult& res, const std::optional<Ordering>& order) {
    std::sort(res.logs.begin(), res.logs.end(),
              [](const StoredLog& a, const StoredLog& b) { return a.stamp < b.stamp; });
    if (order) {
      sortResults(res.logs, order->field, order->direction,
                  [](const StoredLog& l) -> const LogRecord& { return l.record; });
    }
  }

  Backend backend_;
  EngineConfig cfg_;
  std::vector<StoredLog> buffer_;
  std::uint64_t since_commit_ = 0;
};

}  // namespace auditchain

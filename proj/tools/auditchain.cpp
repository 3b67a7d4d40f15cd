// auditchain command-line tool: loads access logs into a simulated
// four-node chain, queries them, replays scripted scenarios, runs
// benchmarks and verifies stored chains.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "auditchain/auditchain.hpp"

namespace ac = auditchain;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

constexpr const char* kMetaFile = "network.json";

/// Thrown for bad invocations; maps to exit code 2.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// -- network settings ----------------------------------------------------------

struct Settings {
  std::string data_dir;
  std::uint32_t nodes = 4;
  std::uint64_t bucket_size = 10'000'000;
  std::uint64_t buffer_size = 10'000;
  std::uint64_t seal_every = 100;
  std::size_t max_tx_bytes = ac::kDefaultMaxTxBytes;

  // Set when given on the command line or in a config file.
  std::map<std::string, CLI::Option*> opts;

  bool given(const std::string& name) const { return opts.at(name)->count() > 0; }

  ac::NetworkConfig network() const {
    ac::NetworkConfig c;
    c.node_count = nodes;
    c.max_tx_bytes = max_tx_bytes;
    c.engine.bucket_size = bucket_size;
    c.engine.buffer_size = buffer_size;
    c.engine.seal_every = seal_every;
    c.validate();
    return c;
  }
};

json metaOf(const ac::NetworkConfig& c) {
  return {{"node_count", c.node_count},
          {"bucket_size", c.engine.bucket_size},
          {"buffer_size", c.engine.buffer_size},
          {"seal_every", c.engine.seal_every},
          {"max_tx_bytes", c.max_tx_bytes}};
}

/// Network settings for a data directory. The first command to use a
/// directory records its settings; later commands reuse them and reject
/// explicit flags that disagree.
ac::NetworkConfig persistentConfig(Settings& s) {
  if (s.data_dir.empty()) {
    throw UsageError("no data directory: pass --data-dir or set AUDITCHAIN_DATA_DIR");
  }
  const fs::path dir(s.data_dir);
  const auto meta_path = dir / kMetaFile;
  if (fs::exists(meta_path)) {
    std::ifstream in(meta_path);
    const auto meta = json::parse(in);
    auto check = [&](const std::string& flag, const char* key, auto& value) {
      const auto stored = meta.at(key).get<std::remove_reference_t<decltype(value)>>();
      if (s.given(flag) && value != stored) {
        throw UsageError("--" + flag + "=" + std::to_string(value) + " conflicts with " + std::to_string(stored) +
                         " stored in " + meta_path.string());
      }
      value = stored;
    };
    check("nodes", "node_count", s.nodes);
    check("bucket-size", "bucket_size", s.bucket_size);
    check("buffer-size", "buffer_size", s.buffer_size);
    check("seal-every", "seal_every", s.seal_every);
    check("max-tx-bytes", "max_tx_bytes", s.max_tx_bytes);
  }
  auto cfg = s.network();
  cfg.data_dir = dir;
  if (!fs::exists(meta_path)) {
    fs::create_directories(dir);
    std::ofstream(meta_path) << metaOf(cfg).dump(2) << '\n';
  }
  return cfg;
}

std::vector<std::uint64_t> parseList(const std::string& text) {
  std::vector<std::uint64_t> out;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) {
    auto v = ac::parseUnsigned(item);
    if (!v) throw UsageError("expected a comma-separated list of integers, got '" + text + "'");
    out.push_back(*v);
  }
  if (out.empty()) throw UsageError("empty list");
  return out;
}

std::string planLabel(const ac::Plan& p) {
  if (p.kind == ac::PlanKind::range) return "range";
  return "equality:" + std::string(ac::fieldName(p.field.value_or(ac::Field::timestamp)));
}

std::vector<ac::LogRecord> sortedRecords(std::vector<ac::LogRecord> v) {
  std::sort(v.begin(), v.end(), [](const ac::LogRecord& a, const ac::LogRecord& b) {
    return std::tie(a.timestamp, a.node, a.id, a.ref_id, a.user, a.activity, a.resource) <
           std::tie(b.timestamp, b.node, b.id, b.ref_id, b.user, b.activity, b.resource);
  });
  return v;
}

// -- load ------------------------------------------------------------------------

struct LoadArgs {
  std::vector<std::string> files;
  std::uint32_t node = 1;
  bool all_nodes = false;
};

int cmdLoad(Settings& s, const LoadArgs& a) {
  // Parse everything before touching the chain so a bad row writes nothing.
  std::vector<std::vector<ac::LogRecord>> per_file;
  for (const auto& f : a.files) {
    try {
      per_file.push_back(ac::parseLogFile(f));
    } catch (const ac::Error& e) {
      throw ac::Error(f + ": " + e.what());
    }
  }
  auto net = ac::spawnNetwork(persistentConfig(s));
  if (a.node < 1 || a.node > net->size()) throw UsageError("--node must be in 1.." + std::to_string(net->size()));

  ac::bench::Stopwatch sw;
  std::uint64_t total = 0;
  const bool file_per_node = a.all_nodes && per_file.size() == net->size();
  std::uint64_t dealt = 0;
  for (std::size_t fi = 0; fi < per_file.size(); ++fi) {
    for (const auto& r : per_file[fi]) {
      ac::NodeId target = a.node;
      if (file_per_node) {
        target = static_cast<ac::NodeId>(fi + 1);
      } else if (a.all_nodes) {
        target = static_cast<ac::NodeId>(dealt++ % net->size() + 1);
      }
      net->ingest(target, r);
      ++total;
    }
  }
  net->flushAll();
  net->seal();
  net->replicate();
  std::cout << "loaded " << total << " records in " << sw.seconds() << " s (height " << net->height() << ")\n";
  return 0;
}

// -- query -----------------------------------------------------------------------

struct QueryArgs {
  std::vector<std::string> eq;
  std::string range;
  std::string order;
  std::uint32_t node = 1;
  bool stats = false;
};

ac::Query buildQuery(const std::vector<std::string>& eq, const std::string& range, const std::string& order) {
  ac::Query q;
  try {
    for (const auto& e : eq) q.equality.push_back(ac::parsePredicate(e));
    if (!range.empty()) q.range = ac::parseRange(range);
    if (!order.empty()) q.order_by = ac::parseOrdering(order);
    q.validate();
  } catch (const ac::Error& e) {
    throw UsageError(e.what());
  }
  return q;
}

int cmdQuery(Settings& s, const QueryArgs& a) {
  const auto q = buildQuery(a.eq, a.range, a.order);
  auto net = ac::spawnNetwork(persistentConfig(s));
  auto res = net->query(a.node, q);
  std::cout << "# count=" << res.logs.size() << '\n';
  ac::writeCsv(std::cout, res.records());
  if (a.stats) {
    std::cerr << "# plan=" << planLabel(res.plan) << " equality_cost=" << res.plan.equality_cost
              << " range_cost=" << res.plan.range_cost << " buckets=" << res.stats.buckets_fetched
              << " items=" << res.stats.items_fetched << " scanned=" << res.stats.records_scanned
              << " discarded=" << res.stats.records_discarded << " repaired=" << res.stats.repaired_records
              << '\n';
  }
  return 0;
}

// -- verify ----------------------------------------------------------------------

struct VerifyArgs {
  std::uint32_t node = 0;  // 0 = all
  std::vector<std::string> tamper;
};

/// Flips one payload byte of a chain held in memory: node:height:tx:offset.
void tamperChain(ac::Chain& chain, std::uint64_t height, std::size_t tx, std::size_t offset) {
  ac::Block b = chain.at(height);
  auto& t = b.txs.at(tx);
  std::string bytes = *t.payload;
  bytes.at(offset) = static_cast<char>(bytes.at(offset) ^ 0x01);
  t.payload = std::make_shared<const std::string>(std::move(bytes));
  chain.replaceForTesting(height, std::move(b));
}

int cmdVerify(Settings& s, const VerifyArgs& a) {
  const auto cfg = persistentConfig(s);
  std::map<ac::NodeId, std::vector<std::array<std::uint64_t, 3>>> tampers;
  for (const auto& spec : a.tamper) {
    std::vector<std::uint64_t> parts;
    std::stringstream ss(spec);
    for (std::string p; std::getline(ss, p, ':');) {
      auto v = ac::parseUnsigned(p);
      if (!v) throw UsageError("--tamper expects node:height:tx:offset");
      parts.push_back(*v);
    }
    if (parts.size() != 4) throw UsageError("--tamper expects node:height:tx:offset");
    tampers[static_cast<ac::NodeId>(parts[0])].push_back({parts[1], parts[2], parts[3]});
  }
  bool all_ok = true;
  for (ac::NodeId id = 1; id <= cfg.node_count; ++id) {
    if (a.node != 0 && id != a.node) continue;
    const auto path = *cfg.data_dir / ("node-" + std::to_string(id) + ".chain");
    std::string status;
    try {
      auto chain = ac::loadChainFile(path);
      for (const auto& [h, tx, off] : tampers[id]) tamperChain(chain, h, tx, off);
      status = ac::verifyChain(chain) ? "ok (height " + std::to_string(chain.tipHeight()) + ")" : "INVALID";
    } catch (const std::exception& e) {
      status = std::string("INVALID: ") + e.what();
    }
    all_ok = all_ok && status.rfind("ok", 0) == 0;
    std::cout << "node " << id << ": " << status << '\n';
  }
  return all_ok ? 0 : 1;
}

// -- generate ----------------------------------------------------------------------

struct GenerateArgs {
  std::uint64_t count = 1000;
  std::uint64_t seed = 1;
  std::string output;
  std::uint64_t ts_lo = 0;
  std::uint64_t ts_hi = 0;
  std::vector<std::string> cardinality;
  bool uniform = false;
};

ac::GeneratorSpec generatorSpec(const GenerateArgs& a) {
  auto spec = a.uniform ? ac::GeneratorSpec{} : ac::bench::paperShapedSpec(a.count, a.seed);
  spec.record_count = a.count;
  spec.seed = a.seed;
  if (a.ts_lo) spec.ts_lo = a.ts_lo;
  if (a.ts_hi) spec.ts_hi = a.ts_hi;
  for (const auto& c : a.cardinality) {
    const auto eq = c.find('=');
    auto field = ac::parseField(c.substr(0, eq));
    auto n = eq == std::string::npos ? std::nullopt : ac::parseUnsigned(c.substr(eq + 1));
    if (!field || !n) throw UsageError("--cardinality expects field=count, got '" + c + "'");
    spec.cardinality[static_cast<std::size_t>(*field)] = *n;
  }
  return spec;
}

int cmdGenerate(const GenerateArgs& a) {
  const auto records = ac::generate(generatorSpec(a));
  if (a.output.empty()) {
    ac::writeCsv(std::cout, records);
  } else {
    if (auto parent = fs::path(a.output).parent_path(); !parent.empty()) fs::create_directories(parent);
    std::ofstream out(a.output);
    if (!out) throw ac::Error("cannot write " + a.output);
    ac::writeCsv(out, records);
    std::cerr << "wrote " << records.size() << " records to " << a.output << '\n';
  }
  return 0;
}

// -- bench -------------------------------------------------------------------------

struct BenchArgs {
  std::string kind;
  std::string sizes = "1000,2000,5000,10000,20000";
  std::string bucket_sizes = "1000000,10000000,100000000,1000000000";
  std::uint64_t records = 10'000;
  std::uint64_t queries = 20;
  std::uint64_t seed = 1;
  unsigned repetitions = 3;
  bool json = false;
};

json toJson(const ac::bench::BenchReport& r) {
  json j;
  j["kind"] = r.kind;
  j["loads"] = json::array();
  for (const auto& l : r.loads) {
    j["loads"].push_back({{"records", l.records},
                          {"seconds", l.seconds},
                          {"transactions", l.transactions},
                          {"blocks", l.blocks},
                          {"chain_bytes", l.chain_bytes}});
  }
  j["queries"] = json::array();
  for (const auto& q : r.queries) {
    j["queries"].push_back({{"label", q.label},
                            {"plan", planLabel(q.plan)},
                            {"seconds", q.seconds},
                            {"records", q.records},
                            {"oracle_records", q.oracle_records},
                            {"oracle_match", q.oracle_match},
                            {"buckets_fetched", q.stats.buckets_fetched},
                            {"items_fetched", q.stats.items_fetched},
                            {"records_fetched", q.stats.records_fetched},
                            {"records_scanned", q.stats.records_scanned},
                            {"records_discarded", q.stats.records_discarded},
                            {"repaired_records", q.stats.repaired_records}});
  }
  j["sweep"] = json::array();
  for (const auto& p : r.sweep) {
    j["sweep"].push_back({{"bucket_size", p.bucket_size},
                          {"queries", p.queries},
                          {"avg_seconds", p.avg_seconds},
                          {"avg_buckets", p.avg_buckets},
                          {"avg_scanned", p.avg_scanned},
                          {"oracle_match", p.oracle_match}});
  }
  j["storage"] = json::array();
  for (const auto& s : r.storage) {
    j["storage"].push_back({{"records", s.records},
                            {"chain_bytes", s.chain_bytes},
                            {"raw_encoded_bytes", s.raw_encoded_bytes},
                            {"raw_csv_bytes", s.raw_csv_bytes},
                            {"ratio", s.ratio},
                            {"within_bound", s.within_bound}});
  }
  j["fit"] = r.fit ? json{{"slope", r.fit->slope}, {"intercept", r.fit->intercept}, {"r2", r.fit->r2}} : json(nullptr);
  j["oracle_ok"] = r.oracleOk();
  j["passed"] = r.passed();
  return j;
}

int cmdBench(Settings& s, const BenchArgs& a) {
  ac::bench::BenchOptions opts;
  opts.network = s.network();
  opts.data = ac::bench::paperShapedSpec(a.records, a.seed);
  opts.repetitions = a.repetitions;

  ac::bench::BenchReport rep;
  if (a.kind == "load") {
    rep = ac::bench::runLoadBench(parseList(a.sizes), opts);
  } else if (a.kind == "retrieval") {
    rep = ac::bench::runRetrievalScaling(parseList(a.sizes), opts);
  } else if (a.kind == "storage") {
    rep = ac::bench::storageReport(parseList(a.sizes), opts);
  } else if (a.kind == "sweep") {
    rep = ac::bench::runBucketSweep(parseList(a.bucket_sizes), opts, a.queries, a.seed + 1);
  } else if (a.kind == "query") {
    const auto records = ac::generate(opts.data);
    ac::Network net(opts.network);
    ac::bench::loadRecords(net, records);
    ac::Oracle oracle;
    oracle.addAll(records);
    auto workload = ac::bench::paperShapedQueries();
    ac::bench::WorkloadGenerator gen(records, opts.data, a.seed + 1);
    for (std::uint64_t i = 0; i < a.queries; ++i) {
      const auto label = std::to_string(i);
      switch (i % 3) {
        case 0: workload.push_back({"conjunctive-" + label, gen.conjunctive()}); break;
        case 1: workload.push_back({"range-" + label, gen.range()}); break;
        default: workload.push_back({"combined-" + label, gen.combined()}); break;
      }
    }
    rep = ac::bench::runQueryBench(net, oracle, workload, a.repetitions);
  } else {
    throw UsageError("unknown bench kind '" + a.kind + "'");
  }
  if (a.json) {
    std::cout << toJson(rep).dump(2) << '\n';
  } else {
    rep.writeCsv(std::cout);
    rep.writeSummary(std::cout);
  }
  return rep.passed() ? 0 : 1;
}

// -- scenario ------------------------------------------------------------------------

/// Runs a line-oriented event script against a fresh in-memory network.
class ScenarioRunner {
 public:
  ScenarioRunner(Settings& s, fs::path base) : settings_(s), base_(std::move(base)) {}

  void run(std::istream& in) {
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      const auto start = line.find_first_not_of(" \t");
      if (start == std::string::npos || line[start] == '#') continue;
      try {
        event(line.substr(start));
        ++events_;
      } catch (const std::exception& e) {
        throw ac::Error("scenario line " + std::to_string(lineno) + ": " + e.what());
      }
    }
    std::cout << "scenario passed (" << events_ << " events)\n";
  }

 private:
  using Args = std::multimap<std::string, std::string>;

  static Args parseArgs(const std::string& rest) {
    Args args;
    std::size_t pos = 0;
    while (pos < rest.size()) {
      pos = rest.find_first_not_of(" \t", pos);
      if (pos == std::string::npos) break;
      // row= takes the remainder of the line; CSV text may contain spaces.
      if (rest.compare(pos, 4, "row=") == 0) {
        args.emplace("row", rest.substr(pos + 4));
        break;
      }
      auto end = rest.find_first_of(" \t", pos);
      const auto tok = rest.substr(pos, end == std::string::npos ? std::string::npos : end - pos);
      const auto eq = tok.find('=');
      if (eq == std::string::npos) throw ac::Error("expected key=value, got '" + tok + "'");
      args.emplace(tok.substr(0, eq), tok.substr(eq + 1));
      pos = end == std::string::npos ? rest.size() : end;
    }
    return args;
  }

  static std::optional<std::string> opt(const Args& a, const std::string& k) {
    auto it = a.find(k);
    if (it == a.end()) return std::nullopt;
    return it->second;
  }

  static std::uint64_t num(const Args& a, const std::string& k, std::optional<std::uint64_t> def = std::nullopt) {
    auto v = opt(a, k);
    if (!v) {
      if (def) return *def;
      throw ac::Error("missing " + k + "=");
    }
    auto n = ac::parseUnsigned(*v);
    if (!n) throw ac::Error(k + " must be an unsigned integer");
    return *n;
  }

  ac::Network& net() {
    if (!net_) net_ = ac::spawnNetwork(settings_.network());
    return *net_;
  }

  ac::NodeId node(const Args& a) { return static_cast<ac::NodeId>(num(a, "node", 1)); }

  void ingest(ac::NodeId id, const ac::LogRecord& r) {
    net().ingest(id, r);
    oracle_.add(r);
  }

  void event(const std::string& line) {
    const auto sp = line.find_first_of(" \t");
    const auto name = line.substr(0, sp);
    const auto args = parseArgs(sp == std::string::npos ? "" : line.substr(sp + 1));

    if (name == "network") {
      if (net_) throw ac::Error("network must come before any other event");
      settings_.nodes = static_cast<std::uint32_t>(num(args, "nodes", settings_.nodes));
      settings_.buffer_size = num(args, "buffer_size", settings_.buffer_size);
      settings_.bucket_size = num(args, "bucket_size", settings_.bucket_size);
      settings_.seal_every = num(args, "seal_every", settings_.seal_every);
      settings_.max_tx_bytes = num(args, "max_tx_bytes", settings_.max_tx_bytes);
      auto cfg = settings_.network();
      cfg.replication_delay = num(args, "delay", 0);
      net_ = ac::spawnNetwork(cfg);
    } else if (name == "ingest") {
      const auto id = node(args);
      if (auto row = opt(args, "row")) {
        ingest(id, ac::parseCsvRow(*row, 0));
      } else if (auto file = opt(args, "file")) {
        for (const auto& r : ac::parseLogFile(base_ / *file)) ingest(id, r);
      } else {
        throw ac::Error("ingest needs row= or file=");
      }
    } else if (name == "generate") {
      GenerateArgs g;
      g.count = num(args, "count");
      g.seed = num(args, "seed", 1);
      const auto id = opt(args, "node") ? std::optional<ac::NodeId>(node(args)) : std::nullopt;
      const auto records = ac::generate(generatorSpec(g));
      for (std::size_t i = 0; i < records.size(); ++i) {
        ingest(id ? *id : static_cast<ac::NodeId>(i % net().size() + 1), records[i]);
      }
    } else if (name == "flush") {
      if (opt(args, "node")) {
        net().flush(node(args));
      } else {
        net().flushAll();
      }
    } else if (name == "seal") {
      auto b = net().seal();
      std::cout << "seal: " << (b ? "height " + std::to_string(b->height) + " by node " + std::to_string(b->sealer)
                                  : std::string("stalled, scheduled sealer is down"))
                << '\n';
    } else if (name == "replicate") {
      net().replicate();
    } else if (name == "advance") {
      net().advance(num(args, "ticks"));
    } else if (name == "crash") {
      net().crashNode(node(args));
      std::cout << "crash: node " << node(args) << '\n';
    } else if (name == "restart") {
      net().restartNode(node(args));
      std::cout << "restart: node " << node(args) << '\n';
    } else if (name == "query") {
      std::vector<std::string> eq;
      for (auto [it, end] = args.equal_range("eq"); it != end; ++it) eq.push_back(it->second);
      const auto q = buildQuery(eq, opt(args, "range").value_or(""), opt(args, "order").value_or(""));
      last_ = net().query(node(args), q);
      const auto want = oracle_.query(q);
      const auto got = last_->records();
      oracle_match_ = q.order_by ? got == want : sortedRecords(got) == sortedRecords(want);
      std::uint64_t gap = 0;
      for (const auto& r : last_->recoveries) gap += r.gap;
      std::cout << "query: node " << node(args) << " count=" << last_->logs.size()
                << " plan=" << planLabel(last_->plan) << " repaired=" << last_->stats.repaired_records
                << " gap=" << gap << " oracle=" << (oracle_match_ ? "match" : "MISMATCH") << '\n';
      if (opt(args, "print") == std::optional<std::string>("yes")) ac::writeCsv(std::cout, got);
    } else if (name == "verify") {
      bool all = true;
      for (ac::NodeId id = 1; id <= net().size(); ++id) {
        const bool ok = net().verify(id);
        all = all && ok;
        std::cout << "verify: node " << id << (ok ? " ok" : " INVALID") << '\n';
      }
      verified_ = all;
    } else if (name == "tamper") {
      net().tamper(node(args), num(args, "height"), num(args, "tx", 0), num(args, "offset"));
    } else if (name == "expect") {
      expect(args);
    } else {
      throw ac::Error("unknown event '" + name + "'");
    }
  }

  void expect(const Args& args) {
    auto fail = [](const std::string& what, auto want, auto got) {
      std::ostringstream m;
      m << "expected " << what << "=" << want << ", got " << got;
      throw ac::Error(m.str());
    };
    for (const auto& [k, v] : args) {
      if (k == "node") continue;
      if (k == "buffered") {
        const auto got = net().node(node(args)).engine.buffered();
        if (got != num(args, k)) fail(k, v, got);
        continue;
      }
      if (k == "valid") {
        if (!verified_) throw ac::Error("expect valid= needs a preceding verify");
        if ((v == "true") != *verified_) fail(k, v, *verified_ ? "true" : "false");
        continue;
      }
      if (!last_) throw ac::Error("expect " + k + "= needs a preceding query");
      std::uint64_t gap = 0;
      for (const auto& r : last_->recoveries) gap += r.gap;
      if (k == "count" && last_->logs.size() != num(args, k)) fail(k, v, last_->logs.size());
      else if (k == "repaired" && last_->stats.repaired_records != num(args, k)) fail(k, v, last_->stats.repaired_records);
      else if (k == "gap" && gap != num(args, k)) fail(k, v, gap);
      else if (k == "oracle" && (v == "match") != oracle_match_) fail(k, v, oracle_match_ ? "match" : "mismatch");
      else if (k != "count" && k != "repaired" && k != "gap" && k != "oracle") throw ac::Error("unknown expectation " + k);
    }
  }

  Settings& settings_;
  fs::path base_;
  std::unique_ptr<ac::Network> net_;
  ac::Oracle oracle_;
  std::optional<ac::QueryResult> last_;
  bool oracle_match_ = false;
  std::optional<bool> verified_;
  std::size_t events_ = 0;
};

int cmdScenario(Settings& s, const std::string& script) {
  std::ifstream in(script);
  if (!in) throw ac::Error("cannot open " + script);
  ScenarioRunner(s, fs::path(script).parent_path()).run(in);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Audit-log storage and query on a simulated permissioned chain"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Read option defaults from a key=value file");

  Settings s;
  app.add_option("--data-dir", s.data_dir, "Directory holding the node chains")->envname("AUDITCHAIN_DATA_DIR");
  s.opts["nodes"] = app.add_option("--nodes", s.nodes, "Number of nodes")->capture_default_str();
  s.opts["bucket-size"] = app.add_option("--bucket-size", s.bucket_size, "Timestamp bucket width N")->capture_default_str();
  s.opts["buffer-size"] = app.add_option("--buffer-size", s.buffer_size, "Batch buffer size k")->capture_default_str();
  s.opts["seal-every"] = app.add_option("--seal-every", s.seal_every, "Seal after this many unflushed ingests")->capture_default_str();
  s.opts["max-tx-bytes"] = app.add_option("--max-tx-bytes", s.max_tx_bytes, "Transaction size limit")->capture_default_str();

  LoadArgs load;
  auto* load_cmd = app.add_subcommand("load", "Load CSV log files");
  load_cmd->add_option("files", load.files, "CSV files")->required()->check(CLI::ExistingFile);
  load_cmd->add_option("--node", load.node, "Entry node")->capture_default_str();
  load_cmd->add_flag("--all-nodes", load.all_nodes, "One file per node, or deal records round-robin");

  QueryArgs query;
  auto* query_cmd = app.add_subcommand("query", "Query stored logs");
  query_cmd->add_option("--eq", query.eq, "field=value, repeatable");
  query_cmd->add_option("--range", query.range, "Timestamp range lo..hi");
  query_cmd->add_option("--order", query.order, "field:asc or field:desc");
  query_cmd->add_option("--node", query.node, "Entry node")->capture_default_str();
  query_cmd->add_flag("--stats", query.stats, "Print plan and scan counters to stderr");

  std::string script;
  auto* scenario_cmd = app.add_subcommand("scenario", "Run an event script on a fresh in-memory network");
  scenario_cmd->add_option("script", script, "Script file")->required()->check(CLI::ExistingFile);

  BenchArgs bench;
  auto* bench_cmd = app.add_subcommand("bench", "Run a benchmark");
  bench_cmd->add_option("kind", bench.kind, "load, query, retrieval, sweep or storage")
      ->required()
      ->check(CLI::IsMember({"load", "query", "retrieval", "sweep", "storage"}));
  bench_cmd->add_option("--sizes", bench.sizes, "Record counts for load, retrieval and storage")->capture_default_str();
  bench_cmd->add_option("--bucket-sizes", bench.bucket_sizes, "Bucket widths for sweep")->capture_default_str();
  bench_cmd->add_option("--records", bench.records, "Record count for query and sweep")->capture_default_str();
  bench_cmd->add_option("--queries", bench.queries, "Random queries for query and sweep")->capture_default_str();
  bench_cmd->add_option("--seed", bench.seed, "Data seed")->capture_default_str();
  bench_cmd->add_option("--repetitions", bench.repetitions, "Timed repetitions")->capture_default_str();
  bench_cmd->add_flag("--json", bench.json, "Emit JSON instead of CSV");

  VerifyArgs verify;
  auto* verify_cmd = app.add_subcommand("verify", "Check every stored chain");
  verify_cmd->add_option("--node", verify.node, "Only this node");
  verify_cmd->add_option("--tamper", verify.tamper, "Flip a byte in memory first: node:height:tx:offset");

  GenerateArgs gen;
  auto* gen_cmd = app.add_subcommand("generate", "Write synthetic logs as CSV");
  gen_cmd->add_option("--count", gen.count, "Number of records")->capture_default_str();
  gen_cmd->add_option("--seed", gen.seed, "Random seed")->capture_default_str();
  gen_cmd->add_option("--output,-o", gen.output, "Output file (default stdout)");
  gen_cmd->add_option("--ts-lo", gen.ts_lo, "Lowest timestamp");
  gen_cmd->add_option("--ts-hi", gen.ts_hi, "Highest timestamp");
  gen_cmd->add_option("--cardinality", gen.cardinality, "field=count, repeatable");
  gen_cmd->add_flag("--uniform", gen.uniform, "Use the flat default pools");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*load_cmd) return cmdLoad(s, load);
    if (*query_cmd) {
      if (query.eq.empty() && query.range.empty()) {
        throw UsageError("query needs at least one --eq or --range\n" + query_cmd->help());
      }
      return cmdQuery(s, query);
    }
    if (*scenario_cmd) return cmdScenario(s, script);
    if (*bench_cmd) return cmdBench(s, bench);
    if (*verify_cmd) return cmdVerify(s, verify);
    if (*gen_cmd) return cmdGenerate(gen);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

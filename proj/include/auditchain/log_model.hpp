#pragma once

#include <array>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "auditchain/bytes.hpp"
#include "auditchain/errors.hpp"

namespace auditchain {

/// One access-log entry.
struct LogRecord {
  std::uint64_t timestamp = 1;  // epoch milliseconds
  std::uint64_t node = 1;
  std::uint64_t id = 1;
  std::uint64_t ref_id = 1;
  std::uint64_t user = 1;
  std::string activity;
  std::string resource;

  bool operator==(const LogRecord&) const = default;
};

/// The seven log fields, in the fixed order used for planner tie-breaks.
enum class Field : std::uint8_t { timestamp, node, id, ref_id, user, activity, resource };

inline constexpr std::array<Field, 7> kAllFields{Field::timestamp, Field::node,     Field::id,
                                                 Field::ref_id,    Field::user,     Field::activity,
                                                 Field::resource};

inline constexpr std::string_view fieldName(Field f) {
  constexpr std::array<std::string_view, 7> names{"timestamp", "node", "id",      "ref_id",
                                                  "user",      "activity", "resource"};
  return names[static_cast<std::size_t>(f)];
}

inline std::optional<Field> parseField(std::string_view name) {
  for (auto f : kAllFields) {
    if (fieldName(f) == name) return f;
  }
  // The original trail spells these with dashes and capitals.
  if (name == "ref-id" || name == "ref-ID" || name == "refid") return Field::ref_id;
  if (name == "ID") return Field::id;
  return std::nullopt;
}

inline constexpr bool isNumeric(Field f) {
  return f != Field::activity && f != Field::resource;
}

using FieldValue = std::variant<std::uint64_t, std::string>;

inline std::uint64_t numericField(const LogRecord& r, Field f) {
  switch (f) {
    case Field::timestamp: return r.timestamp;
    case Field::node: return r.node;
    case Field::id: return r.id;
    case Field::ref_id: return r.ref_id;
    case Field::user: return r.user;
    default: throw InvalidArgument(std::string(fieldName(f)) + " is not numeric");
  }
}

inline const std::string& textField(const LogRecord& r, Field f) {
  if (f == Field::activity) return r.activity;
  if (f == Field::resource) return r.resource;
  throw InvalidArgument(std::string(fieldName(f)) + " is not a string field");
}

inline FieldValue fieldValue(const LogRecord& r, Field f) {
  if (isNumeric(f)) return numericField(r, f);
  return textField(r, f);
}

/// Dictionary key for a field value: canonical decimal (no sign, no leading
/// zeros) for integers, the raw string otherwise.
inline std::string canonicalKey(const FieldValue& v) {
  if (const auto* n = std::get_if<std::uint64_t>(&v)) return std::to_string(*n);
  return std::get<std::string>(v);
}

inline std::string fieldKey(const LogRecord& r, Field f) {
  if (isNumeric(f)) return std::to_string(numericField(r, f));
  return textField(r, f);
}

/// Strict unsigned decimal; rejects signs, blanks and overflow.
inline std::optional<std::uint64_t> parseUnsigned(std::string_view s) {
  if (s.empty()) return std::nullopt;
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

inline bool validText(std::string_view s) {
  return !s.empty() && s.find_first_of(",\n\r") == std::string_view::npos;
}

/// Empty string when valid, otherwise the first violated invariant.
inline std::string validationError(const LogRecord& r) {
  for (auto f : kAllFields) {
    if (isNumeric(f)) {
      if (numericField(r, f) == 0) return std::string(fieldName(f)) + " must be >= 1";
    } else if (!validText(textField(r, f))) {
      return std::string(fieldName(f)) + " must be non-empty without comma or newline";
    }
  }
  return {};
}

inline bool isValid(const LogRecord& r) { return validationError(r).empty(); }

// -- binary codec --------------------------------------------------------------
//
//   u64 timestamp | u64 node | u64 id | u64 ref_id | u64 user |
//   bytes activity | bytes resource

inline std::size_t encodedSize(const LogRecord& r) {
  return 5 * 8 + 8 + r.activity.size() + r.resource.size();
}

inline void encodeRecord(ByteWriter& w, const LogRecord& r) {
  w.u64(r.timestamp);
  w.u64(r.node);
  w.u64(r.id);
  w.u64(r.ref_id);
  w.u64(r.user);
  w.bytes(r.activity);
  w.bytes(r.resource);
}

inline std::string encodeRecord(const LogRecord& r) {
  if (auto err = validationError(r); !err.empty()) throw InvalidArgument("invalid record: " + err);
  ByteWriter w(encodedSize(r));
  encodeRecord(w, r);
  return std::move(w).take();
}

inline LogRecord decodeRecord(ByteReader& in) {
  LogRecord r;
  r.timestamp = in.u64();
  r.node = in.u64();
  r.id = in.u64();
  r.ref_id = in.u64();
  r.user = in.u64();
  r.activity = std::string(in.bytes());
  r.resource = std::string(in.bytes());
  if (auto err = validationError(r); !err.empty()) throw DecodeError("decoded record invalid: " + err);
  return r;
}

inline LogRecord decodeRecord(std::string_view bytes) {
  ByteReader in(bytes);
  auto r = decodeRecord(in);
  in.expectDone("record");
  return r;
}

// -- CSV -----------------------------------------------------------------------

inline constexpr std::string_view kCsvHeader = "timestamp,node,id,ref_id,user,activity,resource";

inline std::string toCsvRow(const LogRecord& r) {
  std::string out;
  out.reserve(64 + r.activity.size() + r.resource.size());
  for (auto v : {r.timestamp, r.node, r.id, r.ref_id, r.user}) {
    out += std::to_string(v);
    out += ',';
  }
  out += r.activity;
  out += ',';
  out += r.resource;
  return out;
}

inline void writeCsv(std::ostream& out, const std::vector<LogRecord>& records) {
  out << kCsvHeader << '\n';
  for (const auto& r : records) out << toCsvRow(r) << '\n';
}

/// Parses one data row; `line` is only used for error reporting.
inline LogRecord parseCsvRow(std::string_view row, std::size_t line) {
  std::array<std::string_view, 7> cols;
  std::size_t n = 0;
  std::size_t start = 0;
  while (true) {
    const auto comma = row.find(',', start);
    if (n == cols.size()) throw MalformedRow(line, "expected 7 columns, found more");
    cols[n++] = row.substr(start, comma == std::string_view::npos ? row.npos : comma - start);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  if (n != cols.size()) {
    throw MalformedRow(line, "expected 7 columns, found " + std::to_string(n));
  }
  LogRecord r;
  std::uint64_t* ints[] = {&r.timestamp, &r.node, &r.id, &r.ref_id, &r.user};
  for (std::size_t i = 0; i < 5; ++i) {
    auto v = parseUnsigned(cols[i]);
    const auto name = std::string(fieldName(kAllFields[i]));
    if (!v) throw MalformedRow(line, name + " is not an unsigned integer: '" + std::string(cols[i]) + "'");
    if (*v == 0) throw MalformedRow(line, name + " must be >= 1");
    *ints[i] = *v;
  }
  r.activity = std::string(cols[5]);
  r.resource = std::string(cols[6]);
  if (r.activity.empty()) throw MalformedRow(line, "activity is empty");
  if (r.resource.empty()) throw MalformedRow(line, "resource is empty");
  return r;
}

inline std::vector<LogRecord> parseCsv(std::istream& in) {
  std::string line;
  std::size_t lineno = 1;
  if (!std::getline(in, line)) throw MissingHeader("file is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kCsvHeader) throw MissingHeader("expected '" + std::string(kCsvHeader) + "'");
  std::vector<LogRecord> out;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) {
      if (in.peek() == std::char_traits<char>::eof()) break;
      throw MalformedRow(lineno, "empty line");
    }
    out.push_back(parseCsvRow(line, lineno));
  }
  return out;
}

inline std::vector<LogRecord> parseLogFile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  return parseCsv(in);
}

// -- synthetic data --------------------------------------------------------------

/// Per-field pool sizes for the generator. Integer fields draw from
/// [base, base + cardinality); string fields draw from the first
/// `cardinality` names of a fixed vocabulary, extended with numbered names
/// past its end.
struct GeneratorSpec {
  std::uint64_t record_count = 1000;
  std::uint64_t ts_lo = 1522000000000;
  std::uint64_t ts_hi = 1523000000000;
  std::array<std::uint64_t, 7> cardinality{1, 4, 1000, 100, 20, 5, 10};
  std::array<std::uint64_t, 7> base{1, 1, 1, 1, 1, 1, 1};
  std::uint64_t seed = 1;

  void validate() const {
    if (record_count == 0) throw ConfigError("record_count must be >= 1");
    if (ts_lo == 0 || ts_lo > ts_hi) throw ConfigError("timestamp range must satisfy 1 <= lo <= hi");
    for (auto f : kAllFields) {
      const auto i = static_cast<std::size_t>(f);
      if (f == Field::timestamp) continue;
      if (cardinality[i] == 0) throw ConfigError(std::string(fieldName(f)) + " cardinality must be >= 1");
      if (isNumeric(f) && base[i] == 0) throw ConfigError(std::string(fieldName(f)) + " base must be >= 1");
    }
  }
};

inline const std::vector<std::string>& activityVocabulary() {
  static const std::vector<std::string> words{"read", "write", "query", "download", "login",
                                              "logout", "update", "delete", "share", "export"};
  return words;
}

inline const std::vector<std::string>& resourceVocabulary() {
  static const std::vector<std::string> words{
      "TOPMed", "MOD_WormBase", "dbGaP", "ClinVar", "1000Genomes",
      "gnomAD", "ENCODE", "GTEx", "UKBiobank", "TCGA"};
  return words;
}

inline std::string vocabularyWord(const std::vector<std::string>& vocab, std::uint64_t i) {
  if (i < vocab.size()) return vocab[i];
  return vocab[i % vocab.size()] + "_" + std::to_string(i / vocab.size());
}

/// Deterministic for a given spec. Uses the raw mt19937_64 stream with modulo
/// reduction so output does not depend on the standard library's
/// distribution implementations.
inline std::vector<LogRecord> generate(const GeneratorSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  auto draw = [&](std::uint64_t n) { return n == 0 ? 0 : rng() % n; };
  const std::uint64_t span = spec.ts_hi - spec.ts_lo;
  std::vector<LogRecord> out;
  out.reserve(spec.record_count);
  for (std::uint64_t i = 0; i < spec.record_count; ++i) {
    LogRecord r;
    r.timestamp = spec.ts_lo + (span == UINT64_MAX ? rng() : draw(span + 1));
    r.node = spec.base[1] + draw(spec.cardinality[1]);
    r.id = spec.base[2] + draw(spec.cardinality[2]);
    r.ref_id = spec.base[3] + draw(spec.cardinality[3]);
    r.user = spec.base[4] + draw(spec.cardinality[4]);
    r.activity = vocabularyWord(activityVocabulary(), draw(spec.cardinality[5]));
    r.resource = vocabularyWord(resourceVocabulary(), draw(spec.cardinality[6]));
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace auditchain

#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "auditchain/errors.hpp"
#include "auditchain/log_model.hpp"

namespace auditchain {

struct Predicate {
  Field field;
  FieldValue value;

  bool matches(const LogRecord& r) const {
    if (const auto* n = std::get_if<std::uint64_t>(&value)) return numericField(r, field) == *n;
    return textField(r, field) == std::get<std::string>(value);
  }

  std::string key() const { return canonicalKey(value); }

  bool operator==(const Predicate&) const = default;
};

/// Inclusive timestamp interval.
struct TimeRange {
  std::uint64_t lo = 1;
  std::uint64_t hi = 1;

  bool contains(std::uint64_t t) const noexcept { return lo <= t && t <= hi; }
  bool operator==(const TimeRange&) const = default;
};

enum class Direction : std::uint8_t { ascending, descending };

struct Ordering {
  Field field;
  Direction direction = Direction::ascending;

  bool operator==(const Ordering&) const = default;
};

struct Query {
  std::vector<Predicate> equality;
  std::optional<TimeRange> range;
  std::optional<Ordering> order_by;

  void validate() const {
    if (equality.empty() && !range) throw QueryError("query needs an equality predicate or a range");
    for (std::size_t i = 0; i < equality.size(); ++i) {
      const auto& p = equality[i];
      if (isNumeric(p.field) != std::holds_alternative<std::uint64_t>(p.value)) {
        throw QueryError("value type does not match field " + std::string(fieldName(p.field)));
      }
      for (std::size_t j = 0; j < i; ++j) {
        if (equality[j].field == p.field) {
          throw QueryError("more than one predicate on " + std::string(fieldName(p.field)));
        }
      }
    }
    if (range && (range->lo < 1 || range->lo > range->hi)) throw InvalidRange(range->lo, range->hi);
  }

  bool operator==(const Query&) const = default;
};

/// Parses `field=value`. Integer fields accept decimal input and are
/// canonicalized ("007" and "7" are the same predicate).
inline Predicate parsePredicate(std::string_view text) {
  const auto eq = text.find('=');
  if (eq == std::string_view::npos) throw QueryError("expected field=value, got '" + std::string(text) + "'");
  auto field = parseField(text.substr(0, eq));
  if (!field) throw QueryError("unknown field '" + std::string(text.substr(0, eq)) + "'");
  const auto raw = text.substr(eq + 1);
  if (isNumeric(*field)) {
    auto v = parseUnsigned(raw);
    if (!v || *v == 0) throw QueryError("field " + std::string(fieldName(*field)) + " needs a positive integer");
    return {*field, *v};
  }
  if (!validText(raw)) throw QueryError("invalid value for " + std::string(fieldName(*field)));
  return {*field, std::string(raw)};
}

/// Parses `lo..hi`.
inline TimeRange parseRange(std::string_view text) {
  const auto dots = text.find("..");
  if (dots == std::string_view::npos) throw QueryError("expected lo..hi, got '" + std::string(text) + "'");
  auto lo = parseUnsigned(text.substr(0, dots));
  auto hi = parseUnsigned(text.substr(dots + 2));
  if (!lo || !hi) throw QueryError("range bounds must be unsigned integers");
  if (*lo < 1 || *lo > *hi) throw InvalidRange(*lo, *hi);
  return {*lo, *hi};
}

/// Parses `field:asc` or `field:desc`.
inline Ordering parseOrdering(std::string_view text) {
  const auto colon = text.find(':');
  auto field = parseField(text.substr(0, colon));
  if (!field) throw QueryError("unknown order field '" + std::string(text.substr(0, colon)) + "'");
  if (colon == std::string_view::npos) return {*field, Direction::ascending};
  const auto dir = text.substr(colon + 1);
  if (dir == "asc") return {*field, Direction::ascending};
  if (dir == "desc") return {*field, Direction::descending};
  throw QueryError("order direction must be asc or desc");
}

/// Three-way comparison on one field: numeric for integers, bytewise for
/// strings.
inline int compareField(const LogRecord& a, const LogRecord& b, Field f) {
  if (isNumeric(f)) {
    const auto x = numericField(a, f);
    const auto y = numericField(b, f);
    return x < y ? -1 : (x > y ? 1 : 0);
  }
  const auto c = textField(a, f).compare(textField(b, f));
  return c < 0 ? -1 : (c > 0 ? 1 : 0);
}

/// Stable sort on one field; equal keys keep their input order. `project`
/// maps an element to its LogRecord.
template <class T, class Project>
void sortResults(std::vector<T>& items, Field field, Direction dir, Project project) {
  std::stable_sort(items.begin(), items.end(), [&](const T& a, const T& b) {
    const int c = compareField(project(a), project(b), field);
    return dir == Direction::ascending ? c < 0 : c > 0;
  });
}

inline void sortResults(std::vector<LogRecord>& records, Field field, Direction dir) {
  sortResults(records, field, dir, [](const LogRecord& r) -> const LogRecord& { return r; });
}

}  // namespace auditchain

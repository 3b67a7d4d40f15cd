#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <tuple>
#include <vector>

#include "auditchain/log_model.hpp"
#include "auditchain/query.hpp"

namespace auditchain {

/// Brute-force ground truth: a flat list of every ingested record, queried by
/// linear scan. Deliberately shares no evaluation code with the engine.
class Oracle {
 public:
  void add(const LogRecord& r) { records_.push_back(r); }

  void addAll(const std::vector<LogRecord>& rs) { records_.insert(records_.end(), rs.begin(), rs.end()); }

  const std::vector<LogRecord>& records() const noexcept { return records_; }
  std::size_t size() const noexcept { return records_.size(); }

  std::vector<LogRecord> query(const Query& q) const {
    std::vector<LogRecord> out;
    for (const auto& r : records_) {
      if (q.range && (r.timestamp < q.range->lo || r.timestamp > q.range->hi)) continue;
      bool ok = true;
      for (const auto& p : q.equality) {
        if (column(r, p.field) != std::visit([](const auto& v) { return render(v); }, p.value)) {
          ok = false;
          break;
        }
      }
      if (ok) out.push_back(r);
    }
    if (q.order_by) {
      const auto f = q.order_by->field;
      const bool asc = q.order_by->direction == Direction::ascending;
      std::stable_sort(out.begin(), out.end(), [&](const LogRecord& a, const LogRecord& b) {
        return asc ? less(a, b, f) : less(b, a, f);
      });
    }
    return out;
  }

 private:
  static std::string render(std::uint64_t v) { return std::to_string(v); }
  static std::string render(const std::string& v) { return v; }

  static std::string column(const LogRecord& r, Field f) {
    switch (f) {
      case Field::timestamp: return std::to_string(r.timestamp);
      case Field::node: return std::to_string(r.node);
      case Field::id: return std::to_string(r.id);
      case Field::ref_id: return std::to_string(r.ref_id);
      case Field::user: return std::to_string(r.user);
      case Field::activity: return r.activity;
      case Field::resource: return r.resource;
    }
    return {};
  }

  static bool less(const LogRecord& a, const LogRecord& b, Field f) {
    switch (f) {
      case Field::timestamp: return a.timestamp < b.timestamp;
      case Field::node: return a.node < b.node;
      case Field::id: return a.id < b.id;
      case Field::ref_id: return a.ref_id < b.ref_id;
      case Field::user: return a.user < b.user;
      case Field::activity: return a.activity < b.activity;
      case Field::resource: return a.resource < b.resource;
    }
    return false;
  }

  std::vector<LogRecord> records_;
};

}  // namespace auditchain

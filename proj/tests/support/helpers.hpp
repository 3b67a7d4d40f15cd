#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "auditchain/auditchain.hpp"

namespace testing_support {

using namespace auditchain;

inline LogRecord record(std::uint64_t ts, std::uint64_t node, std::uint64_t id, std::uint64_t ref_id,
                        std::uint64_t user, std::string activity, std::string resource) {
  return LogRecord{ts, node, id, ref_id, user, std::move(activity), std::move(resource)};
}

inline StreamItem put(std::string dict, std::string key, std::string value) {
  return StreamItem{ItemKind::put, std::move(dict), std::move(key), std::move(value)};
}

/// Random printable string without commas or line breaks.
inline std::string randomText(std::mt19937_64& rng, std::size_t max_len) {
  static constexpr std::string_view alphabet =
      "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_-.:/ ";
  const auto len = 1 + rng() % max_len;
  std::string s;
  for (std::size_t i = 0; i < len; ++i) s += alphabet[rng() % alphabet.size()];
  return s;
}

inline LogRecord randomRecord(std::mt19937_64& rng) {
  LogRecord r;
  r.timestamp = 1 + rng() % 2'000'000'000'000ull;
  r.node = 1 + rng() % 8;
  r.id = 1 + rng() % 100000;
  r.ref_id = 1 + rng() % 100000;
  r.user = 1 + rng() % 50;
  r.activity = randomText(rng, 12);
  r.resource = randomText(rng, 16);
  return r;
}

/// Fresh, empty directory under the system temp dir.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("auditchain-" + tag + "-" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

/// Sorted copy, for multiset comparisons.
inline std::vector<LogRecord> sorted(std::vector<LogRecord> v) {
  std::sort(v.begin(), v.end(), [](const LogRecord& a, const LogRecord& b) {
    return std::tie(a.timestamp, a.node, a.id, a.ref_id, a.user, a.activity, a.resource) <
           std::tie(b.timestamp, b.node, b.id, b.ref_id, b.user, b.activity, b.resource);
  });
  return v;
}

}  // namespace testing_support

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace auditchain {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// -- ledger ------------------------------------------------------------------

class TxTooLarge : public Error {
 public:
  TxTooLarge(std::size_t size, std::size_t limit)
      : Error("transaction of " + std::to_string(size) +
              " bytes exceeds limit of " + std::to_string(limit)),
        size_(size),
        limit_(limit) {}

  std::size_t size() const noexcept { return size_; }
  std::size_t limit() const noexcept { return limit_; }

 private:
  std::size_t size_;
  std::size_t limit_;
};

class EmptyPayload : public Error {
 public:
  EmptyPayload() : Error("transaction payload is empty") {}
};

class NotYourTurn : public Error {
 public:
  NotYourTurn(std::uint32_t sealer, std::uint32_t expected, std::uint64_t height)
      : Error("node " + std::to_string(sealer) + " may not seal height " +
              std::to_string(height) + "; scheduled sealer is node " +
              std::to_string(expected)) {}
};

class DecodeError : public Error {
 public:
  using Error::Error;
};

// -- streams / kvstore -------------------------------------------------------

class UnknownDictionary : public Error {
 public:
  explicit UnknownDictionary(const std::string& name)
      : Error("unknown dictionary '" + name + "'") {}
};

class DuplicateDictionary : public Error {
 public:
  explicit DuplicateDictionary(const std::string& name)
      : Error("dictionary '" + name + "' already exists") {}
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// -- log model ---------------------------------------------------------------

class MissingHeader : public Error {
 public:
  explicit MissingHeader(const std::string& detail)
      : Error("missing or invalid CSV header: " + detail) {}
};

class MalformedRow : public Error {
 public:
  MalformedRow(std::size_t line, const std::string& reason)
      : Error("line " + std::to_string(line) + ": " + reason),
        line_(line),
        reason_(reason) {}

  std::size_t line() const noexcept { return line_; }
  const std::string& reason() const noexcept { return reason_; }

 private:
  std::size_t line_;
  std::string reason_;
};

// -- query engine ------------------------------------------------------------

class InvalidRange : public Error {
 public:
  InvalidRange(std::uint64_t lo, std::uint64_t hi)
      : Error("invalid timestamp range [" + std::to_string(lo) + ", " +
              std::to_string(hi) + "]") {}
};

class NegativeGap : public Error {
 public:
  NegativeGap(const std::string& dictionary, const std::string& key,
              std::uint64_t batch_size, std::uint64_t regular_count)
      : Error("batch list for " + dictionary + "[" + key + "] holds " +
              std::to_string(batch_size) + " logs but the regular tier only " +
              std::to_string(regular_count)) {}
};

class QueryError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// -- network -----------------------------------------------------------------

class AlreadyCrashed : public Error {
 public:
  explicit AlreadyCrashed(std::uint32_t id)
      : Error("node " + std::to_string(id) + " is already crashed") {}
};

class AlreadyUp : public Error {
 public:
  explicit AlreadyUp(std::uint32_t id)
      : Error("node " + std::to_string(id) + " is already up") {}
};

class NodeDown : public Error {
 public:
  explicit NodeDown(std::uint32_t id)
      : Error("node " + std::to_string(id) + " is crashed") {}
};

}  // namespace auditchain

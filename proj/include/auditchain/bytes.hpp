#pragma once

#include <array>
#include <cstdint>
#include <cstring>
#include <limits>
#include <string>
#include <string_view>

#include "auditchain/errors.hpp"

namespace auditchain {

// All binary encodings in the library use big-endian fixed-width integers and
// u32 length prefixes for variable-length fields. Byte strings are carried in
// std::string.

class ByteWriter {
 public:
  ByteWriter() = default;
  explicit ByteWriter(std::size_t reserve) { out_.reserve(reserve); }

  void u8(std::uint8_t v) { out_.push_back(static_cast<char>(v)); }

  void u32(std::uint32_t v) {
    for (int shift = 24; shift >= 0; shift -= 8) {
      out_.push_back(static_cast<char>((v >> shift) & 0xff));
    }
  }

  void u64(std::uint64_t v) {
    for (int shift = 56; shift >= 0; shift -= 8) {
      out_.push_back(static_cast<char>((v >> shift) & 0xff));
    }
  }

  void raw(std::string_view bytes) { out_.append(bytes); }

  template <std::size_t N>
  void raw(const std::array<std::uint8_t, N>& bytes) {
    out_.append(reinterpret_cast<const char*>(bytes.data()), N);
  }

  /// u32 length prefix followed by the bytes.
  void bytes(std::string_view b) {
    if (b.size() > std::numeric_limits<std::uint32_t>::max()) {
      throw InvalidArgument("field longer than 4 GiB");
    }
    u32(static_cast<std::uint32_t>(b.size()));
    raw(b);
  }

  std::size_t size() const noexcept { return out_.size(); }
  const std::string& view() const noexcept { return out_; }
  std::string take() && { return std::move(out_); }

 private:
  std::string out_;
};

class ByteReader {
 public:
  explicit ByteReader(std::string_view in) : in_(in) {}

  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(in_[pos_++]);
  }

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      v = (v << 8) | static_cast<std::uint8_t>(in_[pos_++]);
    }
    return v;
  }

  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
      v = (v << 8) | static_cast<std::uint8_t>(in_[pos_++]);
    }
    return v;
  }

  std::string_view raw(std::size_t n) {
    need(n);
    auto out = in_.substr(pos_, n);
    pos_ += n;
    return out;
  }

  template <std::size_t N>
  std::array<std::uint8_t, N> fixed() {
    need(N);
    std::array<std::uint8_t, N> out{};
    std::memcpy(out.data(), in_.data() + pos_, N);
    pos_ += N;
    return out;
  }

  std::string_view bytes() { return raw(u32()); }

  bool done() const noexcept { return pos_ == in_.size(); }
  std::size_t remaining() const noexcept { return in_.size() - pos_; }
  std::size_t position() const noexcept { return pos_; }

  void expectDone(const char* what) const {
    if (!done()) {
      throw DecodeError(std::string(what) + ": " + std::to_string(remaining()) +
                        " trailing bytes");
    }
  }

 private:
  void need(std::size_t n) const {
    if (in_.size() - pos_ < n) {
      throw DecodeError("truncated input: need " + std::to_string(n) +
                        " bytes at offset " + std::to_string(pos_));
    }
  }

  std::string_view in_;
  std::size_t pos_ = 0;
};

inline std::string toHex(std::string_view bytes) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string out;
  out.reserve(bytes.size() * 2);
  for (unsigned char c : bytes) {
    out.push_back(digits[c >> 4]);
    out.push_back(digits[c & 0x0f]);
  }
  return out;
}

}  // namespace auditchain

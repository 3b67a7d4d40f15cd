#pragma once

#include <openssl/evp.h>

#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <string_view>

#include "auditchain/bytes.hpp"
#include "auditchain/errors.hpp"

namespace auditchain {

/// 256-bit SHA-256 digest.
using Digest = std::array<std::uint8_t, 32>;

inline constexpr Digest kZeroDigest{};

inline Digest sha256(std::string_view data) {
  using Ctx = std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)>;
  Ctx ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  Digest out{};
  unsigned int len = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), data.data(), data.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), out.data(), &len) != 1 || len != out.size()) {
    throw Error("SHA-256 computation failed");
  }
  return out;
}

inline std::string toHex(const Digest& d) {
  return toHex(std::string_view(reinterpret_cast<const char*>(d.data()), d.size()));
}

}  // namespace auditchain

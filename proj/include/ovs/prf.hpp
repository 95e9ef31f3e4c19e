#pragma once

#include "ovs/bytes.hpp"

#include <sodium.h>

#include <algorithm>
#include <array>
#include <cstdint>
#include <initializer_list>
#include <stdexcept>

namespace ovs {

using key128   = std::array<std::uint8_t, 16>;
using block128 = std::array<std::uint8_t, 16>;

namespace detail {

inline void ensure_sodium()
{
  static const bool ready = [] {
    if (sodium_init() < 0) {
      throw std::runtime_error("libsodium initialisation failed");
    }
    return true;
  }();
  (void)ready;
}

} // namespace detail

/// Keyed pseudorandom function: BLAKE2b keyed with `key` over the
/// concatenation of `parts`, truncated to `out_len` bytes (1..64).
/// Keys must be 16..64 bytes.
inline byte_buffer prf(byte_view key, std::initializer_list<byte_view> parts, std::size_t out_len)
{
  detail::ensure_sodium();
  if (out_len == 0 || out_len > crypto_generichash_BYTES_MAX || key.size() < crypto_generichash_KEYBYTES_MIN ||
      key.size() > crypto_generichash_KEYBYTES_MAX) {
    throw usage_error("prf: unsupported key or output length");
  }
  const std::size_t        full = std::max<std::size_t>(out_len, crypto_generichash_BYTES_MIN);
  crypto_generichash_state st;
  crypto_generichash_init(&st, key.data(), key.size(), full);
  for (byte_view p : parts) {
    crypto_generichash_update(&st, p.data(), p.size());
  }
  byte_buffer out(full);
  crypto_generichash_final(&st, out.data(), full);
  out.resize(out_len);
  return out;
}

inline block128 prf128(byte_view key, std::initializer_list<byte_view> parts)
{
  byte_buffer v = prf(key, parts, 16);
  block128    out{};
  std::copy(v.begin(), v.end(), out.begin());
  return out;
}

inline bool constant_time_equal(byte_view a, byte_view b)
{
  detail::ensure_sodium();
  return a.size() == b.size() && sodium_memcmp(a.data(), b.data(), a.size()) == 0;
}

} // namespace ovs

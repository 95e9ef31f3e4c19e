#pragma once

// Abstract subscription concealment. A SUCI carries an 8-byte ephemeral value
// and a ciphertext (8-byte masked SUPI + 4-byte tag) under the home network
// key. Concealment is randomised and carries no freshness, so any old SUCI
// keeps deconcealing to the same SUPI.

#include "ovs/bytes.hpp"
#include "ovs/prf.hpp"
#include "ovs/rng.hpp"
#include "ovs/types.hpp"

#include <array>
#include <cstdint>
#include <string>

namespace ovs {

struct home_network_key {
  std::uint8_t key_id = 1;
  key128       key{};
};

struct suci {
  std::uint8_t                scheme_id           = 1;
  std::uint8_t                home_network_key_id = 1;
  std::array<std::uint8_t, 8> ephemeral_blob{};
  byte_buffer                 ciphertext;

  friend bool operator==(const suci&, const suci&) = default;
};

class deconceal_error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline constexpr std::uint8_t ks_label[]  = {'s', 'u', 'c', 'i', '-', 'k', 's'};
inline constexpr std::uint8_t tag_label[] = {'s', 'u', 'c', 'i', '-', 't', 'a', 'g'};

inline byte_buffer suci_tag(const home_network_key& hk, byte_view eph, byte_view masked)
{
  return prf(hk.key, {tag_label, eph, masked}, 4);
}

} // namespace detail

inline suci conceal_supi(supi id, const home_network_key& hk, sim_rng& rng)
{
  suci out;
  out.home_network_key_id = hk.key_id;
  const std::uint64_t eph = rng.next_u64();
  for (int i = 0; i < 8; ++i) {
    out.ephemeral_blob[i] = static_cast<std::uint8_t>(eph >> (56 - 8 * i));
  }
  const byte_buffer ks = prf(hk.key, {detail::ks_label, out.ephemeral_blob}, 8);
  byte_buffer       masked;
  put_uint_be(masked, id.value, 8);
  for (std::size_t i = 0; i < 8; ++i) {
    masked[i] ^= ks[i];
  }
  out.ciphertext = masked;
  append(out.ciphertext, detail::suci_tag(hk, out.ephemeral_blob, masked));
  return out;
}

/// Throws deconceal_error on key mismatch or a corrupted ciphertext.
inline supi deconceal_suci(const suci& s, const home_network_key& hk)
{
  if (s.home_network_key_id != hk.key_id) {
    throw deconceal_error("suci: unknown home network key id");
  }
  if (s.ciphertext.size() != 12) {
    throw deconceal_error("suci: bad ciphertext length");
  }
  const byte_view masked(s.ciphertext.data(), 8);
  const byte_view tag(s.ciphertext.data() + 8, 4);
  if (!constant_time_equal(tag, detail::suci_tag(hk, s.ephemeral_blob, masked))) {
    throw deconceal_error("suci: integrity check failed");
  }
  const byte_buffer ks = prf(hk.key, {detail::ks_label, s.ephemeral_blob}, 8);
  std::uint64_t     v  = 0;
  for (std::size_t i = 0; i < 8; ++i) {
    v = (v << 8) | static_cast<std::uint8_t>(masked[i] ^ ks[i]);
  }
  return supi{v};
}

inline byte_buffer encode_suci(const suci& s)
{
  if (s.ciphertext.size() > 255) {
    throw usage_error("suci: ciphertext too long");
  }
  byte_buffer out;
  out.push_back(s.scheme_id);
  out.push_back(s.home_network_key_id);
  out.insert(out.end(), s.ephemeral_blob.begin(), s.ephemeral_blob.end());
  out.push_back(static_cast<std::uint8_t>(s.ciphertext.size()));
  append(out, s.ciphertext);
  return out;
}

inline suci decode_suci(byte_reader& rd)
{
  suci s;
  s.scheme_id           = rd.u8();
  s.home_network_key_id = rd.u8();
  byte_buffer eph       = rd.take(8);
  std::copy(eph.begin(), eph.end(), s.ephemeral_blob.begin());
  s.ciphertext = rd.take(rd.u8());
  return s;
}

inline suci decode_suci(byte_view bytes)
{
  byte_reader rd(bytes);
  suci        s = decode_suci(rd);
  if (!rd.empty()) {
    throw decode_error("suci: trailing bytes");
  }
  return s;
}

} // namespace ovs

#pragma once

// PDCP PDU layout for signalling bearers (12-bit SN):
//   byte 0  bits 7-4 reserved, 0; bits 3-0 SN[11:8]
//   byte 1  SN[7:0]
//   SDU
//   4-byte MAC-I (all zero before integrity protection is active)

#include "ovs/bytes.hpp"

#include <array>
#include <cstdint>
#include <string>

namespace ovs::pdcp {

inline constexpr std::uint16_t max_sn         = 4095;
inline constexpr std::size_t   overhead_bytes = 6;

using mac_i_t = std::array<std::uint8_t, 4>;

struct pdu {
  std::uint16_t sn = 0;
  byte_buffer   sdu;
  mac_i_t       mac_i{};

  friend bool operator==(const pdu&, const pdu&) = default;

  bool unprotected() const { return mac_i == mac_i_t{}; }
};

inline byte_buffer encode(const pdu& p)
{
  if (p.sn > max_sn) {
    throw usage_error("pdcp: SN exceeds 12 bits");
  }
  byte_buffer out;
  out.reserve(p.sdu.size() + overhead_bytes);
  put_uint_be(out, p.sn, 2);
  append(out, p.sdu);
  out.insert(out.end(), p.mac_i.begin(), p.mac_i.end());
  return out;
}

inline pdu decode(byte_view bytes)
{
  if (bytes.size() < overhead_bytes) {
    throw decode_error("pdcp: PDU shorter than 6 bytes");
  }
  if (bytes[0] & 0xf0) {
    throw decode_error("pdcp: reserved bits set");
  }
  pdu p;
  p.sn = static_cast<std::uint16_t>(((bytes[0] & 0x0f) << 8) | bytes[1]);
  p.sdu.assign(bytes.begin() + 2, bytes.end() - 4);
  std::copy(bytes.end() - 4, bytes.end(), p.mac_i.begin());
  return p;
}

inline std::string describe(const pdu& p)
{
  return "PDCP[sn=" + std::to_string(p.sn) + " mac_i=" + to_hex(p.mac_i) + " " + std::to_string(p.sdu.size()) + "B]";
}

} // namespace ovs::pdcp

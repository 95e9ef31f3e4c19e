#pragma once

// MAC PDU layout (uplink). Each subPDU starts with one header byte
//   bit 7   R   reserved, 0
//   bit 6   F   length-field width for SDUs: 0 -> 1 byte L, 1 -> 2 byte L
//   bits 5-0 LCID
// CCCH (LCID 0) is a fixed 6-byte SDU without L, C-RNTI CE (58) carries 2
// bytes, short BSR (61) carries 1 byte, padding (63) runs to the end of the
// PDU and must be all zero. DCCH (LCID 1) carries an L field; F may be 1
// only when L > 255.

#include "ovs/bytes.hpp"
#include "ovs/types.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace ovs::mac {

namespace lcid {
inline constexpr std::uint8_t ccch      = 0;
inline constexpr std::uint8_t dcch      = 1;
inline constexpr std::uint8_t crnti_ce  = 58;
inline constexpr std::uint8_t short_bsr = 61;
inline constexpr std::uint8_t padding   = 63;
} // namespace lcid

inline constexpr std::size_t ccch_sdu_bytes = 6;

/// Buffer-size index advertised by an adversary that wants the largest
/// possible follow-up grant.
inline constexpr std::uint8_t bsr_large_buffer = 0x1f;

struct subpdu {
  std::uint8_t lcid = lcid::padding;
  byte_buffer  payload;

  friend bool operator==(const subpdu&, const subpdu&) = default;

  static subpdu ccch(byte_buffer sdu) { return {lcid::ccch, std::move(sdu)}; }
  static subpdu dcch(byte_buffer sdu) { return {lcid::dcch, std::move(sdu)}; }
  static subpdu crnti(rnti r)
  {
    return {lcid::crnti_ce, {static_cast<std::uint8_t>(r.value >> 8), static_cast<std::uint8_t>(r.value & 0xff)}};
  }
  static subpdu short_bsr(std::uint8_t index) { return {lcid::short_bsr, {index}}; }
  static subpdu padding(std::size_t zero_bytes) { return {lcid::padding, byte_buffer(zero_bytes, 0)}; }

  /// Encoded size including the subheader.
  std::size_t encoded_size() const
  {
    switch (lcid) {
      case lcid::dcch:
        return 1 + (payload.size() > 255 ? 2 : 1) + payload.size();
      default:
        return 1 + payload.size();
    }
  }
};

struct pdu {
  std::vector<subpdu> subpdus;
  std::size_t         total_bytes = 0;

  friend bool operator==(const pdu&, const pdu&) = default;

  /// True when the PDU contains nothing but padding.
  bool is_empty() const { return subpdus.size() == 1 && subpdus.front().lcid == lcid::padding; }

  const subpdu* find(std::uint8_t id) const
  {
    for (const auto& s : subpdus) {
      if (s.lcid == id) {
        return &s;
      }
    }
    return nullptr;
  }
};

/// Size of the smallest PDU holding `subs` with no padding.
inline std::size_t payload_size(const std::vector<subpdu>& subs)
{
  std::size_t n = 0;
  for (const auto& s : subs) {
    n += s.encoded_size();
  }
  return n;
}

/// Builds a PDU of exactly `total_bytes`, appending a padding subPDU for any
/// remainder. Throws usage_error when `subs` do not fit.
inline pdu make_pdu(std::vector<subpdu> subs, std::size_t total_bytes)
{
  const std::size_t used = payload_size(subs);
  if (used > total_bytes) {
    throw usage_error("make_pdu: subPDUs exceed transport block");
  }
  if (used < total_bytes) {
    subs.push_back(subpdu::padding(total_bytes - used - 1));
  }
  return {std::move(subs), total_bytes};
}

inline pdu make_empty_pdu(std::size_t total_bytes) { return make_pdu({}, total_bytes); }

namespace detail {

inline void check_subpdu(const subpdu& s, bool last)
{
  switch (s.lcid) {
    case lcid::ccch:
      if (s.payload.size() != ccch_sdu_bytes) {
        throw usage_error("mac: CCCH SDU must be 6 bytes");
      }
      break;
    case lcid::dcch:
      if (s.payload.size() > 0xffff) {
        throw usage_error("mac: DCCH SDU too long");
      }
      break;
    case lcid::crnti_ce:
      if (s.payload.size() != 2) {
        throw usage_error("mac: C-RNTI CE must be 2 bytes");
      }
      break;
    case lcid::short_bsr:
      if (s.payload.size() != 1) {
        throw usage_error("mac: short BSR must be 1 byte");
      }
      break;
    case lcid::padding:
      if (!last) {
        throw usage_error("mac: padding must be the last subPDU");
      }
      for (auto b : s.payload) {
        if (b != 0) {
          throw usage_error("mac: padding must be zero");
        }
      }
      break;
    default:
      throw usage_error("mac: unsupported LCID " + std::to_string(s.lcid));
  }
}

} // namespace detail

inline byte_buffer encode(const pdu& p)
{
  byte_buffer out;
  out.reserve(p.total_bytes);
  for (std::size_t i = 0; i < p.subpdus.size(); ++i) {
    const auto& s = p.subpdus[i];
    detail::check_subpdu(s, i + 1 == p.subpdus.size());
    if (s.lcid == lcid::dcch) {
      const bool wide = s.payload.size() > 255;
      out.push_back(static_cast<std::uint8_t>((wide ? 0x40 : 0x00) | s.lcid));
      put_uint_be(out, s.payload.size(), wide ? 2 : 1);
    } else {
      out.push_back(s.lcid);
    }
    append(out, s.payload);
  }
  if (out.size() != p.total_bytes) {
    throw usage_error("mac: encoded length does not match total_bytes");
  }
  return out;
}

inline pdu decode(byte_view bytes)
{
  if (bytes.empty()) {
    throw decode_error("mac: empty PDU");
  }
  pdu         p;
  byte_reader rd(bytes);
  p.total_bytes = bytes.size();
  while (!rd.empty()) {
    const std::uint8_t hdr = rd.u8();
    if (hdr & 0x80) {
      throw decode_error("mac: reserved bit set");
    }
    const bool         wide = (hdr & 0x40) != 0;
    const std::uint8_t id   = hdr & 0x3f;
    if (wide && id != lcid::dcch) {
      throw decode_error("mac: F bit set on fixed-size subPDU");
    }
    subpdu s;
    s.lcid = id;
    switch (id) {
      case lcid::ccch:
        s.payload = rd.take(ccch_sdu_bytes);
        break;
      case lcid::dcch: {
        const std::size_t len = wide ? rd.u16() : rd.u8();
        if (wide && len <= 255) {
          throw decode_error("mac: non-minimal length field");
        }
        s.payload = rd.take(len);
        break;
      }
      case lcid::crnti_ce:
        s.payload = rd.take(2);
        break;
      case lcid::short_bsr:
        s.payload = rd.take(1);
        break;
      case lcid::padding:
        s.payload = rd.rest();
        for (auto b : s.payload) {
          if (b != 0) {
            throw decode_error("mac: non-zero padding");
          }
        }
        break;
      default:
        throw decode_error("mac: unknown LCID " + std::to_string(id));
    }
    p.subpdus.push_back(std::move(s));
  }
  return p;
}

inline rnti crnti_of(const subpdu& s)
{
  return rnti{static_cast<std::uint16_t>((s.payload.at(0) << 8) | s.payload.at(1))};
}

inline std::string describe(const pdu& p)
{
  if (p.is_empty()) {
    return "MAC[empty " + std::to_string(p.total_bytes) + "B]";
  }
  std::string out = "MAC[";
  for (std::size_t i = 0; i < p.subpdus.size(); ++i) {
    const auto& s = p.subpdus[i];
    if (i) {
      out += ' ';
    }
    switch (s.lcid) {
      case lcid::ccch:
        out += "CCCH:" + to_hex(s.payload);
        break;
      case lcid::dcch:
        out += "DCCH:" + std::to_string(s.payload.size()) + "B";
        break;
      case lcid::crnti_ce:
        out += "CRNTI:" + to_hex(s.payload);
        break;
      case lcid::short_bsr:
        out += "BSR:" + std::to_string(s.payload.front());
        break;
      case lcid::padding:
        out += "PAD:" + std::to_string(s.payload.size());
        break;
      default:
        out += "LCID" + std::to_string(s.lcid);
    }
  }
  return out + "]";
}

} // namespace ovs::mac

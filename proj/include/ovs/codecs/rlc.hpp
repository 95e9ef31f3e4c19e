#pragma once

// RLC segment layout (12-bit SN):
//   byte 0  bits 7-5 SI (0 full, 1 first, 2 middle, 3 last; 4-7 reserved)
//           bit 4    R, 0
//           bits 3-0 SN[11:8]
//   byte 1  SN[7:0]
//   bytes 2-3 SO, big endian, present only for middle and last segments
//   data

#include "ovs/bytes.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>

namespace ovs::rlc {

enum class segment_info : std::uint8_t { full = 0, first = 1, middle = 2, last = 3 };

inline constexpr std::uint16_t max_sn = 4095;

struct segment {
  std::uint16_t                sn = 0;
  segment_info                 si = segment_info::full;
  std::optional<std::uint16_t> so;
  byte_buffer                  data;

  friend bool operator==(const segment&, const segment&) = default;

  std::size_t header_size() const { return has_offset(si) ? 4 : 2; }
  std::size_t encoded_size() const { return header_size() + data.size(); }

  static bool has_offset(segment_info s) { return s == segment_info::middle || s == segment_info::last; }
};

inline segment full(std::uint16_t sn, byte_buffer data) { return {sn, segment_info::full, std::nullopt, std::move(data)}; }

inline byte_buffer encode(const segment& s)
{
  if (s.sn > max_sn) {
    throw usage_error("rlc: SN exceeds 12 bits");
  }
  if (segment::has_offset(s.si) != s.so.has_value()) {
    throw usage_error("rlc: SO presence does not match SI");
  }
  byte_buffer out;
  out.reserve(s.encoded_size());
  out.push_back(static_cast<std::uint8_t>((static_cast<std::uint8_t>(s.si) << 5) | (s.sn >> 8)));
  out.push_back(static_cast<std::uint8_t>(s.sn & 0xff));
  if (s.so) {
    put_uint_be(out, *s.so, 2);
  }
  append(out, s.data);
  return out;
}

inline segment decode(byte_view bytes)
{
  byte_reader        rd(bytes);
  const std::uint8_t b0 = rd.u8();
  const std::uint8_t si = b0 >> 5;
  if (si > 3) {
    throw decode_error("rlc: reserved SI value");
  }
  if (b0 & 0x10) {
    throw decode_error("rlc: reserved bit set");
  }
  segment s;
  s.si = static_cast<segment_info>(si);
  s.sn = static_cast<std::uint16_t>(((b0 & 0x0f) << 8) | rd.u8());
  if (segment::has_offset(s.si)) {
    s.so = rd.u16();
  }
  s.data = rd.rest();
  return s;
}

/// Transmit side for one SDU: hands out segments sized to each grant.
class transmitter
{
public:
  transmitter() = default;
  transmitter(std::uint16_t sn, byte_buffer sdu) : sn_(sn), sdu_(std::move(sdu)), active_(true) {}

  bool        pending() const { return active_; }
  std::size_t remaining() const { return active_ ? sdu_.size() - offset_ : 0; }

  /// Smallest budget for which next_segment() makes progress.
  std::size_t min_budget() const { return offset_ == 0 ? 2 + (sdu_.empty() ? 0 : 1) : 5; }

  /// Next segment fitting in `budget` encoded bytes, or nullopt when nothing
  /// useful fits.
  std::optional<segment> next_segment(std::size_t budget)
  {
    if (!active_ || budget < min_budget()) {
      return std::nullopt;
    }
    segment s;
    s.sn = sn_;
    if (offset_ == 0) {
      const std::size_t room = budget - 2;
      if (room >= sdu_.size()) {
        s.si   = segment_info::full;
        s.data = sdu_;
        active_ = false;
        return s;
      }
      s.si = segment_info::first;
      s.data.assign(sdu_.begin(), sdu_.begin() + static_cast<std::ptrdiff_t>(room));
      offset_ = room;
      return s;
    }
    const std::size_t room = budget - 4;
    const std::size_t take = std::min(room, remaining());
    s.so                   = static_cast<std::uint16_t>(offset_);
    s.si                   = take == remaining() ? segment_info::last : segment_info::middle;
    s.data.assign(sdu_.begin() + static_cast<std::ptrdiff_t>(offset_),
                  sdu_.begin() + static_cast<std::ptrdiff_t>(offset_ + take));
    offset_ += take;
    if (s.si == segment_info::last) {
      active_ = false;
    }
    return s;
  }

private:
  std::uint16_t sn_ = 0;
  byte_buffer   sdu_;
  std::size_t   offset_ = 0;
  bool          active_ = false;
};

/// Receive-side reassembly with duplicate suppression: at most one SDU is
/// delivered per SN.
class reassembler
{
public:
  /// Feeds one segment; returns the complete SDU when it becomes available.
  std::optional<byte_buffer> push(const segment& s)
  {
    if (delivered_.contains(s.sn)) {
      ++duplicates_;
      return std::nullopt;
    }
    if (s.si == segment_info::full) {
      delivered_[s.sn] = true;
      pending_.erase(s.sn);
      return s.data;
    }
    auto&             pend   = pending_[s.sn];
    const std::size_t offset = s.si == segment_info::first ? 0 : *s.so;
    pend.pieces[offset]      = s.data;
    if (s.si == segment_info::last) {
      pend.total = offset + s.data.size();
    }
    if (!pend.total) {
      return std::nullopt;
    }
    byte_buffer sdu;
    std::size_t next = 0;
    for (const auto& [off, piece] : pend.pieces) {
      if (off != next) {
        return std::nullopt;
      }
      append(sdu, piece);
      next += piece.size();
    }
    if (next != *pend.total) {
      return std::nullopt;
    }
    delivered_[s.sn] = true;
    pending_.erase(s.sn);
    return sdu;
  }

  std::size_t duplicates() const { return duplicates_; }

private:
  struct partial {
    std::map<std::size_t, byte_buffer> pieces;
    std::optional<std::size_t>         total;
  };
  std::map<std::uint16_t, partial> pending_;
  std::map<std::uint16_t, bool>    delivered_;
  std::size_t                      duplicates_ = 0;
};

inline std::string describe(const segment& s)
{
  static constexpr const char* names[] = {"full", "first", "middle", "last"};
  std::string out = std::string("RLC[") + names[static_cast<int>(s.si)] + " sn=" + std::to_string(s.sn);
  if (s.so) {
    out += " so=" + std::to_string(*s.so);
  }
  return out + " " + std::to_string(s.data.size()) + "B]";
}

} // namespace ovs::rlc

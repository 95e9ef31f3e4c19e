#pragma once

#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace ovs {

using byte_buffer = std::vector<std::uint8_t>;
using byte_view   = std::span<const std::uint8_t>;

/// Thrown by every decode_* routine on malformed input.
class decode_error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// Thrown when a caller violates an operation precondition.
class usage_error : public std::logic_error
{
public:
  using std::logic_error::logic_error;
};

inline std::string to_hex(byte_view bytes)
{
  static constexpr char digits[] = "0123456789abcdef";
  std::string out;
  out.reserve(bytes.size() * 2);
  for (std::uint8_t b : bytes) {
    out.push_back(digits[b >> 4]);
    out.push_back(digits[b & 0x0f]);
  }
  return out;
}

inline std::string to_hex_u64(std::uint64_t v)
{
  char buf[24];
  std::snprintf(buf, sizeof(buf), "0x%llx", static_cast<unsigned long long>(v));
  return buf;
}

inline byte_buffer from_hex(std::string_view hex)
{
  auto nibble = [](char c) -> int {
    if (c >= '0' && c <= '9') {
      return c - '0';
    }
    if (c >= 'a' && c <= 'f') {
      return c - 'a' + 10;
    }
    if (c >= 'A' && c <= 'F') {
      return c - 'A' + 10;
    }
    return -1;
  };
  byte_buffer out;
  int         hi = -1;
  for (char c : hex) {
    if (c == ' ' || c == '\n' || c == '\t' || c == '\r') {
      continue;
    }
    int v = nibble(c);
    if (v < 0) {
      throw decode_error("invalid hex digit");
    }
    if (hi < 0) {
      hi = v;
    } else {
      out.push_back(static_cast<std::uint8_t>((hi << 4) | v));
      hi = -1;
    }
  }
  if (hi >= 0) {
    throw decode_error("odd number of hex digits");
  }
  return out;
}

// Big-endian cursor over a byte view. Every read checks bounds.
class byte_reader
{
public:
  explicit byte_reader(byte_view data) : data_(data) {}

  std::size_t remaining() const { return data_.size() - pos_; }
  std::size_t position() const { return pos_; }
  bool        empty() const { return remaining() == 0; }

  std::uint8_t u8()
  {
    need(1);
    return data_[pos_++];
  }

  std::uint16_t u16()
  {
    need(2);
    std::uint16_t v = static_cast<std::uint16_t>((data_[pos_] << 8) | data_[pos_ + 1]);
    pos_ += 2;
    return v;
  }

  std::uint64_t uint_be(std::size_t width)
  {
    need(width);
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < width; ++i) {
      v = (v << 8) | data_[pos_ + i];
    }
    pos_ += width;
    return v;
  }

  byte_buffer take(std::size_t n)
  {
    need(n);
    byte_buffer out(data_.begin() + static_cast<std::ptrdiff_t>(pos_),
                    data_.begin() + static_cast<std::ptrdiff_t>(pos_ + n));
    pos_ += n;
    return out;
  }

  byte_buffer rest() { return take(remaining()); }

private:
  void need(std::size_t n) const
  {
    if (remaining() < n) {
      throw decode_error("truncated input");
    }
  }

  byte_view   data_;
  std::size_t pos_ = 0;
};

inline void put_uint_be(byte_buffer& out, std::uint64_t v, std::size_t width)
{
  for (std::size_t i = width; i-- > 0;) {
    out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xff));
  }
}

inline void append(byte_buffer& out, byte_view more)
{
  out.insert(out.end(), more.begin(), more.end());
}

} // namespace ovs

#pragma once

// RRC-lite messages. The first three bits of every encoding are the message
// tag; see docs/byte_layout.md for the full table.

#include "ovs/bytes.hpp"
#include "ovs/types.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <variant>

namespace ovs::rrc {

inline constexpr std::uint64_t random_value_mask = (std::uint64_t{1} << 39) - 1;

enum class identity_type : std::uint8_t { s_tmsi_part1 = 0, random_value = 1 };

/// Establishment causes (4 bits).
namespace cause {
inline constexpr std::uint8_t mo_signalling = 3;
inline constexpr std::uint8_t mo_data       = 4;
} // namespace cause

using cri_t = std::array<std::uint8_t, 6>;

struct setup_request {
  identity_type type  = identity_type::random_value;
  std::uint64_t value = 0; ///< 39 bits
  std::uint8_t  cause = cause::mo_signalling;
  friend bool   operator==(const setup_request&, const setup_request&) = default;
};

struct setup {
  std::uint8_t transaction_id = 0;
  friend bool  operator==(const setup&, const setup&) = default;
};

struct setup_complete {
  std::uint8_t transaction_id      = 0;
  std::uint8_t selected_plmn_index = 0; ///< 0..7
  byte_buffer  nas_container;
  friend bool  operator==(const setup_complete&, const setup_complete&) = default;
};

struct security_mode_command {
  std::uint8_t transaction_id = 0;
  friend bool  operator==(const security_mode_command&, const security_mode_command&) = default;
};

struct contention_resolution_id {
  cri_t       first_48_bits{};
  friend bool operator==(const contention_resolution_id&, const contention_resolution_id&) = default;
};

struct dl_information_transfer {
  std::uint8_t transaction_id = 0;
  byte_buffer  nas_container;
  friend bool  operator==(const dl_information_transfer&, const dl_information_transfer&) = default;
};

struct ul_information_transfer {
  byte_buffer nas_container;
  friend bool operator==(const ul_information_transfer&, const ul_information_transfer&) = default;
};

using message = std::variant<setup_request, setup, setup_complete, security_mode_command, contention_resolution_id,
                             dl_information_transfer, ul_information_transfer>;

namespace tag {
inline constexpr std::uint8_t setup_request            = 0;
inline constexpr std::uint8_t setup                    = 1;
inline constexpr std::uint8_t setup_complete           = 2;
inline constexpr std::uint8_t security_mode_command    = 3;
inline constexpr std::uint8_t contention_resolution_id = 4;
inline constexpr std::uint8_t dl_information_transfer  = 5;
inline constexpr std::uint8_t ul_information_transfer  = 6;
} // namespace tag

namespace detail {

inline std::uint8_t head(std::uint8_t t, std::uint8_t tid = 0, std::uint8_t low3 = 0)
{
  return static_cast<std::uint8_t>((t << 5) | ((tid & 0x3) << 3) | (low3 & 0x7));
}

inline void check_tid(std::uint8_t tid)
{
  if (tid > 3) {
    throw usage_error("rrc: transaction id exceeds 2 bits");
  }
}

inline void put_container(byte_buffer& out, const byte_buffer& nas)
{
  if (nas.size() > 255) {
    throw usage_error("rrc: NAS container exceeds 255 bytes");
  }
  out.push_back(static_cast<std::uint8_t>(nas.size()));
  append(out, nas);
}

inline byte_buffer get_container(byte_reader& rd)
{
  const std::size_t len = rd.u8();
  return rd.take(len);
}

} // namespace detail

inline byte_buffer encode(const message& m)
{
  byte_buffer out;
  std::visit(
      [&out](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, setup_request>) {
          if (v.value > random_value_mask) {
            throw usage_error("rrc: setup request identity exceeds 39 bits");
          }
          if (v.cause > 0xf) {
            throw usage_error("rrc: establishment cause exceeds 4 bits");
          }
          std::uint64_t bits = 0;
          bits |= std::uint64_t{tag::setup_request} << 45;
          bits |= std::uint64_t{static_cast<std::uint8_t>(v.type)} << 44;
          bits |= v.value << 5;
          bits |= std::uint64_t{v.cause} << 1;
          put_uint_be(out, bits, 6);
        } else if constexpr (std::is_same_v<T, setup>) {
          detail::check_tid(v.transaction_id);
          out.push_back(detail::head(tag::setup, v.transaction_id));
        } else if constexpr (std::is_same_v<T, setup_complete>) {
          detail::check_tid(v.transaction_id);
          if (v.selected_plmn_index > 7) {
            throw usage_error("rrc: PLMN index exceeds 3 bits");
          }
          out.push_back(detail::head(tag::setup_complete, v.transaction_id, v.selected_plmn_index));
          detail::put_container(out, v.nas_container);
        } else if constexpr (std::is_same_v<T, security_mode_command>) {
          detail::check_tid(v.transaction_id);
          out.push_back(detail::head(tag::security_mode_command, v.transaction_id));
        } else if constexpr (std::is_same_v<T, contention_resolution_id>) {
          out.push_back(detail::head(tag::contention_resolution_id));
          out.insert(out.end(), v.first_48_bits.begin(), v.first_48_bits.end());
        } else if constexpr (std::is_same_v<T, dl_information_transfer>) {
          detail::check_tid(v.transaction_id);
          out.push_back(detail::head(tag::dl_information_transfer, v.transaction_id));
          detail::put_container(out, v.nas_container);
        } else {
          out.push_back(detail::head(tag::ul_information_transfer));
          detail::put_container(out, v.nas_container);
        }
      },
      m);
  return out;
}

inline message decode(byte_view bytes)
{
  byte_reader        rd(bytes);
  if (bytes.empty()) {
    throw decode_error("rrc: empty message");
  }
  const std::uint8_t b0  = bytes[0];
  const std::uint8_t t   = b0 >> 5;
  const std::uint8_t tid = (b0 >> 3) & 0x3;
  const std::uint8_t low = b0 & 0x7;
  message            m;
  switch (t) {
    case tag::setup_request: {
      const std::uint64_t bits = rd.uint_be(6);
      if (bits & 1) {
        throw decode_error("rrc: spare bit set");
      }
      setup_request v;
      v.type  = static_cast<identity_type>((bits >> 44) & 1);
      v.value = (bits >> 5) & random_value_mask;
      v.cause = static_cast<std::uint8_t>((bits >> 1) & 0xf);
      m       = v;
      break;
    }
    case tag::setup:
    case tag::security_mode_command:
      rd.u8();
      if (low) {
        throw decode_error("rrc: spare bits set");
      }
      if (t == tag::setup) {
        m = setup{tid};
      } else {
        m = security_mode_command{tid};
      }
      break;
    case tag::setup_complete: {
      rd.u8();
      setup_complete v;
      v.transaction_id      = tid;
      v.selected_plmn_index = low;
      v.nas_container       = detail::get_container(rd);
      m                     = std::move(v);
      break;
    }
    case tag::contention_resolution_id: {
      rd.u8();
      if (tid || low) {
        throw decode_error("rrc: spare bits set");
      }
      contention_resolution_id v;
      byte_buffer              raw = rd.take(6);
      std::copy(raw.begin(), raw.end(), v.first_48_bits.begin());
      m = v;
      break;
    }
    case tag::dl_information_transfer: {
      rd.u8();
      if (low) {
        throw decode_error("rrc: spare bits set");
      }
      m = dl_information_transfer{tid, detail::get_container(rd)};
      break;
    }
    case tag::ul_information_transfer: {
      rd.u8();
      if (tid || low) {
        throw decode_error("rrc: spare bits set");
      }
      m = ul_information_transfer{detail::get_container(rd)};
      break;
    }
    default:
      throw decode_error("rrc: unknown message tag " + std::to_string(t));
  }
  if (!rd.empty()) {
    throw decode_error("rrc: trailing bytes");
  }
  return m;
}

/// Contention-resolution identity: the first 48 bits of the encoded setup
/// request carried in Msg3.
inline cri_t contention_identity(byte_view msg3_ccch_sdu)
{
  if (msg3_ccch_sdu.size() < 6) {
    throw usage_error("contention_identity: SDU shorter than 48 bits");
  }
  cri_t out{};
  std::copy(msg3_ccch_sdu.begin(), msg3_ccch_sdu.begin() + 6, out.begin());
  return out;
}

inline std::string describe(const message& m)
{
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, setup_request>) {
          return std::string("RRCSetupRequest[") +
                 (v.type == identity_type::random_value ? "randomValue=" : "sTmsiPart1=") + to_hex_u64(v.value) +
                 " cause=" + std::to_string(v.cause) + "]";
        } else if constexpr (std::is_same_v<T, setup>) {
          return "RRCSetup[tid=" + std::to_string(v.transaction_id) + "]";
        } else if constexpr (std::is_same_v<T, setup_complete>) {
          return "RRCSetupComplete[tid=" + std::to_string(v.transaction_id) +
                 " plmn=" + std::to_string(v.selected_plmn_index) + " nas=" + std::to_string(v.nas_container.size()) +
                 "B]";
        } else if constexpr (std::is_same_v<T, security_mode_command>) {
          return "RRCSecurityModeCommand[tid=" + std::to_string(v.transaction_id) + "]";
        } else if constexpr (std::is_same_v<T, contention_resolution_id>) {
          return "ContentionResolutionId[" + to_hex(v.first_48_bits) + "]";
        } else if constexpr (std::is_same_v<T, dl_information_transfer>) {
          return "DLInformationTransfer[nas=" + std::to_string(v.nas_container.size()) + "B]";
        } else {
          return "ULInformationTransfer[nas=" + std::to_string(v.nas_container.size()) + "B]";
        }
      },
      m);
}

} // namespace ovs::rrc

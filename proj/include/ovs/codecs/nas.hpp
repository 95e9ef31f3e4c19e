#pragma once

// NAS-lite messages. Byte 0 is the message type (TS 24.501 numbering), the
// remaining fields are fixed-order; see docs/byte_layout.md.

#include "ovs/bytes.hpp"
#include "ovs/codecs/suci.hpp"
#include "ovs/prf.hpp"
#include "ovs/types.hpp"

#include <cstdint>
#include <initializer_list>
#include <string>
#include <string_view>
#include <variant>

namespace ovs::nas {

/// EA0..EA7 / IA0..IA7 as two bitmasks; bit i of each mask is algorithm i.
struct security_capabilities {
  std::uint8_t ea_mask = 0;
  std::uint8_t ia_mask = 0;

  friend bool operator==(const security_capabilities&, const security_capabilities&) = default;

  /// Parses tags like "EA0", "IA7".
  static security_capabilities of(std::initializer_list<std::string_view> tags)
  {
    security_capabilities c;
    for (auto t : tags) {
      c.add(t);
    }
    return c;
  }

  void add(std::string_view tag)
  {
    if (tag.size() != 3 || tag[1] != 'A' || tag[2] < '0' || tag[2] > '7' || (tag[0] != 'E' && tag[0] != 'I')) {
      throw usage_error("unknown algorithm tag: " + std::string(tag));
    }
    const auto bit = static_cast<std::uint8_t>(1u << (tag[2] - '0'));
    (tag[0] == 'E' ? ea_mask : ia_mask) |= bit;
  }

  std::string str() const
  {
    std::string out;
    for (int i = 0; i < 8; ++i) {
      if (ea_mask & (1 << i)) {
        out += (out.empty() ? "" : ",") + std::string("EA") + char('0' + i);
      }
    }
    for (int i = 0; i < 8; ++i) {
      if (ia_mask & (1 << i)) {
        out += (out.empty() ? "" : ",") + std::string("IA") + char('0' + i);
      }
    }
    return "{" + out + "}";
  }
};

/// Capability set injected by the SUCI extraction attack; chosen so that no
/// real UE matches it.
inline security_capabilities poisoned_capabilities()
{
  return security_capabilities::of({"EA0", "EA1", "IA1", "IA7", "EA7"});
}

namespace cause {
inline constexpr std::uint8_t ue_identity_cannot_be_derived   = 9;
inline constexpr std::uint8_t no_suitable_cells_in_ta         = 15;
inline constexpr std::uint8_t mac_failure                     = 20;
inline constexpr std::uint8_t ue_security_capabilities_mismatch = 23;
inline constexpr std::uint8_t n1_mode_not_allowed             = 27;
} // namespace cause

using mobile_identity = std::variant<suci, tmsi48>;

struct registration_request {
  mobile_identity       id;
  security_capabilities capabilities;
  friend bool           operator==(const registration_request&, const registration_request&) = default;
};
struct service_request {
  tmsi48      s_tmsi;
  friend bool operator==(const service_request&, const service_request&) = default;
};
struct service_reject {
  std::uint8_t cause = cause::ue_identity_cannot_be_derived;
  friend bool  operator==(const service_reject&, const service_reject&) = default;
};
struct service_accept {
  friend bool operator==(const service_accept&, const service_accept&) = default;
};
/// Always requests the SUCI.
struct identity_request {
  friend bool operator==(const identity_request&, const identity_request&) = default;
};
struct identity_response {
  ovs::suci   suci;
  friend bool operator==(const identity_response&, const identity_response&) = default;
};
struct authentication_request {
  block128    rand{};
  block128    autn{};
  friend bool operator==(const authentication_request&, const authentication_request&) = default;
};
struct authentication_response {
  block128    res{};
  friend bool operator==(const authentication_response&, const authentication_response&) = default;
};
struct authentication_failure {
  std::uint8_t cause = cause::mac_failure;
  friend bool  operator==(const authentication_failure&, const authentication_failure&) = default;
};
struct authentication_reject {
  friend bool operator==(const authentication_reject&, const authentication_reject&) = default;
};
struct registration_reject {
  std::uint8_t cause = cause::n1_mode_not_allowed;
  friend bool  operator==(const registration_reject&, const registration_reject&) = default;
};
struct security_mode_command {
  security_capabilities replayed_capabilities;
  friend bool           operator==(const security_mode_command&, const security_mode_command&) = default;
};
struct security_mode_complete {
  friend bool operator==(const security_mode_complete&, const security_mode_complete&) = default;
};
struct security_mode_reject {
  std::uint8_t cause = cause::ue_security_capabilities_mismatch;
  friend bool  operator==(const security_mode_reject&, const security_mode_reject&) = default;
};
struct registration_accept {
  tmsi48      new_tmsi;
  friend bool operator==(const registration_accept&, const registration_accept&) = default;
};

using message = std::variant<registration_request, service_request, service_reject, service_accept, identity_request,
                             identity_response, authentication_request, authentication_response,
                             authentication_failure, authentication_reject, registration_reject,
                             security_mode_command, security_mode_complete, security_mode_reject, registration_accept>;

namespace type {
inline constexpr std::uint8_t registration_request    = 0x41;
inline constexpr std::uint8_t registration_accept     = 0x42;
inline constexpr std::uint8_t registration_reject     = 0x44;
inline constexpr std::uint8_t service_request         = 0x4c;
inline constexpr std::uint8_t service_reject          = 0x4d;
inline constexpr std::uint8_t service_accept          = 0x4e;
inline constexpr std::uint8_t authentication_request  = 0x56;
inline constexpr std::uint8_t authentication_response = 0x57;
inline constexpr std::uint8_t authentication_reject   = 0x58;
inline constexpr std::uint8_t authentication_failure  = 0x59;
inline constexpr std::uint8_t identity_request        = 0x5b;
inline constexpr std::uint8_t identity_response       = 0x5c;
inline constexpr std::uint8_t security_mode_command   = 0x5d;
inline constexpr std::uint8_t security_mode_complete  = 0x5e;
inline constexpr std::uint8_t security_mode_reject    = 0x5f;
} // namespace type

namespace identity_kind {
inline constexpr std::uint8_t suci   = 0x01;
inline constexpr std::uint8_t tmsi5g = 0x02;
} // namespace identity_kind

inline byte_buffer encode(const message& m)
{
  byte_buffer out;
  auto        put_block = [&out](const block128& b) { out.insert(out.end(), b.begin(), b.end()); };
  std::visit(
      [&](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, registration_request>) {
          out.push_back(type::registration_request);
          if (const auto* s = std::get_if<suci>(&v.id)) {
            out.push_back(identity_kind::suci);
            append(out, encode_suci(*s));
          } else {
            out.push_back(identity_kind::tmsi5g);
            put_uint_be(out, std::get<tmsi48>(v.id).value, 6);
          }
          out.push_back(v.capabilities.ea_mask);
          out.push_back(v.capabilities.ia_mask);
        } else if constexpr (std::is_same_v<T, service_request>) {
          out.push_back(type::service_request);
          put_uint_be(out, v.s_tmsi.value, 6);
        } else if constexpr (std::is_same_v<T, service_reject>) {
          out.push_back(type::service_reject);
          out.push_back(v.cause);
        } else if constexpr (std::is_same_v<T, service_accept>) {
          out.push_back(type::service_accept);
        } else if constexpr (std::is_same_v<T, identity_request>) {
          out.push_back(type::identity_request);
          out.push_back(identity_kind::suci);
        } else if constexpr (std::is_same_v<T, identity_response>) {
          out.push_back(type::identity_response);
          append(out, encode_suci(v.suci));
        } else if constexpr (std::is_same_v<T, authentication_request>) {
          out.push_back(type::authentication_request);
          put_block(v.rand);
          put_block(v.autn);
        } else if constexpr (std::is_same_v<T, authentication_response>) {
          out.push_back(type::authentication_response);
          put_block(v.res);
        } else if constexpr (std::is_same_v<T, authentication_failure>) {
          out.push_back(type::authentication_failure);
          out.push_back(v.cause);
        } else if constexpr (std::is_same_v<T, authentication_reject>) {
          out.push_back(type::authentication_reject);
        } else if constexpr (std::is_same_v<T, registration_reject>) {
          out.push_back(type::registration_reject);
          out.push_back(v.cause);
        } else if constexpr (std::is_same_v<T, security_mode_command>) {
          out.push_back(type::security_mode_command);
          out.push_back(v.replayed_capabilities.ea_mask);
          out.push_back(v.replayed_capabilities.ia_mask);
        } else if constexpr (std::is_same_v<T, security_mode_complete>) {
          out.push_back(type::security_mode_complete);
        } else if constexpr (std::is_same_v<T, security_mode_reject>) {
          out.push_back(type::security_mode_reject);
          out.push_back(v.cause);
        } else {
          out.push_back(type::registration_accept);
          put_uint_be(out, v.new_tmsi.value, 6);
        }
      },
      m);
  return out;
}

inline message decode(byte_view bytes)
{
  byte_reader rd(bytes);
  auto        get_block = [&rd] {
    block128    b{};
    byte_buffer raw = rd.take(16);
    std::copy(raw.begin(), raw.end(), b.begin());
    return b;
  };
  message m;
  try {
    switch (rd.u8()) {
      case type::registration_request: {
        registration_request v;
        switch (rd.u8()) {
          case identity_kind::suci:
            v.id = decode_suci(rd);
            break;
          case identity_kind::tmsi5g:
            v.id = tmsi48{rd.uint_be(6)};
            break;
          default:
            throw decode_error("nas: unknown mobile identity type");
        }
        v.capabilities.ea_mask = rd.u8();
        v.capabilities.ia_mask = rd.u8();
        m                      = std::move(v);
        break;
      }
      case type::service_request:
        m = service_request{tmsi48{rd.uint_be(6)}};
        break;
      case type::service_reject:
        m = service_reject{rd.u8()};
        break;
      case type::service_accept:
        m = service_accept{};
        break;
      case type::identity_request:
        if (rd.u8() != identity_kind::suci) {
          throw decode_error("nas: identity request for unsupported identity type");
        }
        m = identity_request{};
        break;
      case type::identity_response:
        m = identity_response{decode_suci(rd)};
        break;
      case type::authentication_request: {
        authentication_request v;
        v.rand = get_block();
        v.autn = get_block();
        m      = v;
        break;
      }
      case type::authentication_response:
        m = authentication_response{get_block()};
        break;
      case type::authentication_failure:
        m = authentication_failure{rd.u8()};
        break;
      case type::authentication_reject:
        m = authentication_reject{};
        break;
      case type::registration_reject:
        m = registration_reject{rd.u8()};
        break;
      case type::security_mode_command: {
        security_mode_command v;
        v.replayed_capabilities.ea_mask = rd.u8();
        v.replayed_capabilities.ia_mask = rd.u8();
        m                               = v;
        break;
      }
      case type::security_mode_complete:
        m = security_mode_complete{};
        break;
      case type::security_mode_reject:
        m = security_mode_reject{rd.u8()};
        break;
      case type::registration_accept:
        m = registration_accept{tmsi48{rd.uint_be(6)}};
        break;
      default:
        throw decode_error("nas: unknown message type");
    }
  } catch (const decode_error& e) {
    throw decode_error(std::string(e.what()).starts_with("nas:") ? e.what() : std::string("nas: ") + e.what());
  }
  if (!rd.empty()) {
    throw decode_error("nas: trailing bytes");
  }
  return m;
}

inline std::string name(const message& m)
{
  static constexpr const char* names[] = {"RegistrationRequest",    "ServiceRequest",        "ServiceReject",
                                          "ServiceAccept",          "IdentityRequest",       "IdentityResponse",
                                          "AuthenticationRequest",  "AuthenticationResponse", "AuthenticationFailure",
                                          "AuthenticationReject",   "RegistrationReject",    "SecurityModeCommand",
                                          "SecurityModeComplete",   "SecurityModeReject",    "RegistrationAccept"};
  return names[m.index()];
}

inline std::string describe(const message& m)
{
  std::string out = name(m);
  std::visit(
      [&out](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, registration_request>) {
          if (const auto* s = std::get_if<suci>(&v.id)) {
            out += "[suci=" + to_hex(encode_suci(*s));
          } else {
            out += "[tmsi=" + to_hex_u64(std::get<tmsi48>(v.id).value);
          }
          out += " caps=" + v.capabilities.str() + "]";
        } else if constexpr (std::is_same_v<T, service_request>) {
          out += "[s_tmsi=" + to_hex_u64(v.s_tmsi.value) + "]";
        } else if constexpr (std::is_same_v<T, registration_accept>) {
          out += "[new_tmsi=" + to_hex_u64(v.new_tmsi.value) + "]";
        } else if constexpr (std::is_same_v<T, identity_response>) {
          out += "[suci=" + to_hex(encode_suci(v.suci)) + "]";
        } else if constexpr (std::is_same_v<T, security_mode_command>) {
          out += "[caps=" + v.replayed_capabilities.str() + "]";
        } else if constexpr (requires { v.cause; }) {
          out += "[cause=" + std::to_string(v.cause) + "]";
        }
      },
      m);
  return out;
}

} // namespace ovs::nas

#pragma once

// Straight-line reference decoders written from docs/byte_layout.md. They
// share no code with the library decoders: each renders the fields it finds
// as a flat "name=value;" string, and a second renderer produces the same
// string from an in-memory message, so the two can be compared.

#include "ovs/codecs/mac.hpp"
#include "ovs/codecs/nas.hpp"
#include "ovs/codecs/pdcp.hpp"
#include "ovs/codecs/rlc.hpp"

#include <cstdio>
#include <optional>
#include <string>

namespace ovs::ref {

inline std::string hx(const std::uint8_t* p, std::size_t n)
{
  std::string s;
  char        buf[3];
  for (std::size_t i = 0; i < n; ++i) {
    std::snprintf(buf, sizeof(buf), "%02x", p[i]);
    s += buf;
  }
  return s;
}

inline std::string hx(const byte_buffer& b) { return hx(b.data(), b.size()); }

inline std::optional<std::string> mac_fields(const byte_buffer& b)
{
  std::string out;
  std::size_t i = 0;
  while (i < b.size()) {
    const unsigned h = b[i++];
    const unsigned f = (h >> 6) & 1, id = h & 0x3f;
    std::size_t    len;
    if (id == 0) {
      len = 6;
    } else if (id == 1) {
      if (f) {
        if (i + 2 > b.size()) {
          return std::nullopt;
        }
        len = (std::size_t(b[i]) << 8) | b[i + 1];
        i += 2;
      } else {
        if (i + 1 > b.size()) {
          return std::nullopt;
        }
        len = b[i++];
      }
    } else if (id == 58) {
      len = 2;
    } else if (id == 61) {
      len = 1;
    } else if (id == 63) {
      len = b.size() - i;
    } else {
      return std::nullopt;
    }
    if (i + len > b.size()) {
      return std::nullopt;
    }
    out += "lcid=" + std::to_string(id) + ":" + hx(b.data() + i, len) + ";";
    i += len;
  }
  return out;
}

inline std::string mac_fields(const mac::pdu& p)
{
  std::string out;
  for (const auto& s : p.subpdus) {
    out += "lcid=" + std::to_string(s.lcid) + ":" + hx(s.payload) + ";";
  }
  return out;
}

inline std::optional<std::string> rlc_fields(const byte_buffer& b)
{
  if (b.size() < 2) {
    return std::nullopt;
  }
  const unsigned si = b[0] >> 5;
  const unsigned sn = ((b[0] & 0x0f) << 8) | b[1];
  std::string    out = "si=" + std::to_string(si) + ";sn=" + std::to_string(sn) + ";";
  std::size_t    i   = 2;
  if (si == 2 || si == 3) {
    if (b.size() < 4) {
      return std::nullopt;
    }
    out += "so=" + std::to_string((unsigned(b[2]) << 8) | b[3]) + ";";
    i = 4;
  }
  return out + "data=" + hx(b.data() + i, b.size() - i) + ";";
}

inline std::string rlc_fields(const rlc::segment& s)
{
  std::string out = "si=" + std::to_string(static_cast<int>(s.si)) + ";sn=" + std::to_string(s.sn) + ";";
  if (s.so) {
    out += "so=" + std::to_string(*s.so) + ";";
  }
  return out + "data=" + hx(s.data) + ";";
}

inline std::optional<std::string> pdcp_fields(const byte_buffer& b)
{
  if (b.size() < 6) {
    return std::nullopt;
  }
  const unsigned sn = ((b[0] & 0x0f) << 8) | b[1];
  return "sn=" + std::to_string(sn) + ";sdu=" + hx(b.data() + 2, b.size() - 6) + ";mac=" + hx(b.data() + b.size() - 4, 4) +
         ";";
}

inline std::string pdcp_fields(const pdcp::pdu& p)
{
  return "sn=" + std::to_string(p.sn) + ";sdu=" + hx(p.sdu) + ";mac=" + hx(p.mac_i.data(), 4) + ";";
}

inline std::optional<std::string> nas_fields(const byte_buffer& b)
{
  if (b.empty()) {
    return std::nullopt;
  }
  const unsigned t   = b[0];
  std::string    out = "type=" + std::to_string(t) + ";";
  std::size_t    i   = 1;
  auto           take = [&](std::size_t n, const char* name) {
    if (i + n > b.size()) {
      return false;
    }
    out += std::string(name) + "=" + hx(b.data() + i, n) + ";";
    i += n;
    return true;
  };
  auto take_suci = [&] {
    if (i + 11 > b.size()) {
      return false;
    }
    const std::size_t ct = b[i + 10];
    out += "suci=" + hx(b.data() + i, 10) + "/" ;
    i += 11;
    if (i + ct > b.size()) {
      return false;
    }
    out += hx(b.data() + i, ct) + ";";
    i += ct;
    return true;
  };
  bool ok = true;
  switch (t) {
    case 0x41:
      if (i >= b.size()) {
        return std::nullopt;
      }
      if (b[i] == 1) {
        ++i;
        ok = take_suci();
      } else if (b[i] == 2) {
        ++i;
        ok = take(6, "tmsi");
      } else {
        return std::nullopt;
      }
      ok = ok && take(1, "ea") && take(1, "ia");
      break;
    case 0x4c:
    case 0x42:
      ok = take(6, "tmsi");
      break;
    case 0x4d:
    case 0x59:
    case 0x44:
    case 0x5f:
      ok = take(1, "cause");
      break;
    case 0x4e:
    case 0x58:
    case 0x5e:
      break;
    case 0x5b:
      ok = i < b.size() && b[i] == 1;
      ++i;
      break;
    case 0x5c:
      ok = take_suci();
      break;
    case 0x56:
      ok = take(16, "rand") && take(16, "autn");
      break;
    case 0x57:
      ok = take(16, "res");
      break;
    case 0x5d:
      ok = take(1, "ea") && take(1, "ia");
      break;
    default:
      return std::nullopt;
  }
  if (!ok || i != b.size()) {
    return std::nullopt;
  }
  return out;
}

inline std::string nas_fields(const nas::message& m)
{
  auto tm = [](tmsi48 t) {
    std::uint8_t raw[6];
    for (int k = 0; k < 6; ++k) {
      raw[k] = static_cast<std::uint8_t>(t.value >> (40 - 8 * k));
    }
    return hx(raw, 6);
  };
  auto sc = [](const suci& s) {
    std::uint8_t head[10] = {s.scheme_id, s.home_network_key_id};
    std::copy(s.ephemeral_blob.begin(), s.ephemeral_blob.end(), head + 2);
    return "suci=" + hx(head, 10) + "/" + hx(s.ciphertext) + ";";
  };
  auto by = [](std::uint8_t v) { return hx(&v, 1); };
  std::string out;
  std::visit(
      [&](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, nas::registration_request>) {
          out = "type=65;";
          if (const auto* s = std::get_if<suci>(&v.id)) {
            out += sc(*s);
          } else {
            out += "tmsi=" + tm(std::get<tmsi48>(v.id)) + ";";
          }
          out += "ea=" + by(v.capabilities.ea_mask) + ";ia=" + by(v.capabilities.ia_mask) + ";";
        } else if constexpr (std::is_same_v<T, nas::service_request>) {
          out = "type=76;tmsi=" + tm(v.s_tmsi) + ";";
        } else if constexpr (std::is_same_v<T, nas::registration_accept>) {
          out = "type=66;tmsi=" + tm(v.new_tmsi) + ";";
        } else if constexpr (std::is_same_v<T, nas::service_reject>) {
          out = "type=77;cause=" + by(v.cause) + ";";
        } else if constexpr (std::is_same_v<T, nas::authentication_failure>) {
          out = "type=89;cause=" + by(v.cause) + ";";
        } else if constexpr (std::is_same_v<T, nas::registration_reject>) {
          out = "type=68;cause=" + by(v.cause) + ";";
        } else if constexpr (std::is_same_v<T, nas::security_mode_reject>) {
          out = "type=95;cause=" + by(v.cause) + ";";
        } else if constexpr (std::is_same_v<T, nas::service_accept>) {
          out = "type=78;";
        } else if constexpr (std::is_same_v<T, nas::authentication_reject>) {
          out = "type=88;";
        } else if constexpr (std::is_same_v<T, nas::security_mode_complete>) {
          out = "type=94;";
        } else if constexpr (std::is_same_v<T, nas::identity_request>) {
          out = "type=91;";
        } else if constexpr (std::is_same_v<T, nas::identity_response>) {
          out = "type=92;" + sc(v.suci);
        } else if constexpr (std::is_same_v<T, nas::authentication_request>) {
          out = "type=86;rand=" + hx(v.rand.data(), 16) + ";autn=" + hx(v.autn.data(), 16) + ";";
        } else if constexpr (std::is_same_v<T, nas::authentication_response>) {
          out = "type=87;res=" + hx(v.res.data(), 16) + ";";
        } else if constexpr (std::is_same_v<T, nas::security_mode_command>) {
          out = "type=93;ea=" + by(v.replayed_capabilities.ea_mask) + ";ia=" + by(v.replayed_capabilities.ia_mask) + ";";
        }
      },
      m);
  return out;
}

} // namespace ovs::ref

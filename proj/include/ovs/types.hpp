#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <string>

namespace ovs {

/// 16-bit radio network temporary identifier.
struct rnti {
  std::uint16_t value = 0;
  friend auto   operator<=>(const rnti&, const rnti&) = default;
};

/// 48-bit 5G-S-TMSI. The constructor masks to 48 bits.
struct tmsi48 {
  static constexpr std::uint64_t mask = (std::uint64_t{1} << 48) - 1;

  constexpr tmsi48() = default;
  constexpr explicit tmsi48(std::uint64_t v) : value(v & mask) {}

  /// The 39 least significant bits, carried as ng-5G-S-TMSI-Part1 in the
  /// RRC setup request.
  constexpr std::uint64_t part1() const { return value & ((std::uint64_t{1} << 39) - 1); }

  std::uint64_t value = 0;
  friend auto   operator<=>(const tmsi48&, const tmsi48&) = default;
};

/// Permanent subscriber identifier (IMSI digits as an integer).
struct supi {
  std::uint64_t value = 0;
  friend auto   operator<=>(const supi&, const supi&) = default;
};

enum class entity_kind : std::uint8_t { ue, gnb, amf, attacker, sim };

struct entity_id {
  entity_kind   kind  = entity_kind::sim;
  std::uint32_t index = 0;

  friend auto operator<=>(const entity_id&, const entity_id&) = default;

  std::string str() const
  {
    switch (kind) {
      case entity_kind::ue:
        return "ue:" + std::to_string(index);
      case entity_kind::gnb:
        return "gnb:" + std::to_string(index);
      case entity_kind::amf:
        return "amf";
      case entity_kind::attacker:
        return "attacker";
      case entity_kind::sim:
        return "sim";
    }
    return "?";
  }
};

inline entity_id ue_entity(std::uint32_t i) { return {entity_kind::ue, i}; }
inline entity_id gnb_entity(std::uint32_t cell) { return {entity_kind::gnb, cell}; }
inline constexpr entity_id amf_entity{entity_kind::amf, 0};
inline constexpr entity_id attacker_entity{entity_kind::attacker, 0};

} // namespace ovs

template <>
struct std::hash<ovs::rnti> {
  std::size_t operator()(const ovs::rnti& r) const noexcept { return r.value; }
};
template <>
struct std::hash<ovs::tmsi48> {
  std::size_t operator()(const ovs::tmsi48& t) const noexcept { return std::hash<std::uint64_t>{}(t.value); }
};
template <>
struct std::hash<ovs::supi> {
  std::size_t operator()(const ovs::supi& s) const noexcept { return std::hash<std::uint64_t>{}(s.value); }
};

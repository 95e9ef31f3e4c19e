#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "ovs/bytes.hpp"

namespace ovs {

enum class radio_access { nr, lte };

inline std::string_view to_string(radio_access r) { return r == radio_access::nr ? "5G" : "4G"; }

inline radio_access parse_radio_access(std::string_view s)
{
  if (s == "5G" || s == "nr") {
    return radio_access::nr;
  }
  if (s == "4G" || s == "lte") {
    return radio_access::lte;
  }
  throw usage_error("unknown radio access technology: " + std::string(s));
}

/// Static description of a cell as seen by UEs and the attacker.
struct cell_info {
  std::uint32_t cell_id       = 0;
  std::uint32_t tracking_area = 0;
  radio_access  rat           = radio_access::nr;
  double        tx_power_dbm  = 30.0;
  std::uint32_t k2            = 3;
};

} // namespace ovs

#pragma once

// Human-readable run summary followed by one machine-readable totals line.

#include "ovs/sim/engine.hpp"

#include <iomanip>
#include <ostream>

namespace ovs::sim {

inline void emit_report(std::ostream& os, const run_report& r, const std::vector<std::string>& failures = {})
{
  os << "scenario " << r.name << "  seed " << r.seed << "  duration " << r.duration_s << " s\n";
  os << "events " << r.events_processed << "  trace lines " << r.trace_lines << "  trace digest " << std::hex
     << std::setw(16) << std::setfill('0') << r.trace_digest << std::dec << std::setfill(' ') << "\n\n";

  os << "connections\n";
  os << "  preambles sent            " << r.kpis.preambles << "\n";
  os << "  successful connections    " << r.kpis.successful_connections << "\n";
  for (const auto& [cell, n] : r.connections_by_cell) {
    os << "    cell " << cell << (r.attacked_cell == cell ? " (attacked)" : "") << "  " << n << "\n";
  }
  os << "  failed attempts           " << r.kpis.failed_connection_attempts << "\n";
  os << "  contention failures       " << r.kpis.contention_failures << "\n";
  os << "  grants issued/decoded/collided/unused/pending  " << r.grants_issued << "/" << r.grants_decoded << "/"
     << r.grants_collided << "/" << r.grants_unused << "/" << r.grants_pending << "\n\n";

  os << "core\n";
  os << "  uplink NAS events         " << r.amf_events << "\n";
  os << "  registration accepts      " << r.kpis.registration_accepts << "\n";
  os << "  service accepts           " << r.kpis.service_accepts << "\n";
  os << "  registration rejects      " << r.kpis.registration_rejects << "\n";
  os << "  service rejects           " << r.kpis.service_rejects << "\n";
  os << "  identity requests         " << r.kpis.identity_requests << "\n";
  os << "  authentication rejects    " << r.kpis.auth_rejects << "\n\n";

  if (r.attacked_cell) {
    os << "attacker (cell " << *r.attacked_cell << ")\n";
    os << "  RARs on attacked cell     " << r.attacked_cell_rars << "  fully overshadowed " << r.attacked_cell_rars_overshadowed
       << "  rate " << std::fixed << std::setprecision(4) << r.rar_overshadow_rate() << std::defaultfloat << "\n";
    os << "  transmissions             " << r.attacker.transmissions << "\n";
    os << "  deadline misses           " << r.attacker.deadline_misses << "\n";
    os << "  connections armed/exempt  " << r.attacker.connections_armed << "/" << r.attacker.connections_exempt << "\n";
    os << "  injected connections      " << r.injected_connections << "\n";
    os << "  attacked registrations    " << r.attacked_registrations << "  rejected " << r.attacked_registrations_rejected
       << "\n";
    os << "  attacked service requests " << r.attacked_service_requests << "  rejected "
       << r.attacked_service_requests_rejected << "\n";
    os << "  attempts attacked         " << r.attacked_attempts << " of " << r.cadence_attempts << "\n";
    os << "  core events from cell     " << r.amf_events_attacked_cell << "\n";
    os << "  downlink transmissions    " << r.attacker_dl_transmissions << "\n";
    for (const auto& c : r.captured) {
      os << "  captured tmsi " << to_hex_u64(c.tmsi.value) << " suci " << to_hex(encode_suci(c.suci)) << "\n";
    }
    for (auto v : {replay_verdict::suci_matches_ue, replay_verdict::suci_mismatch, replay_verdict::inconclusive}) {
      if (auto n = r.verdict_count(v)) {
        os << "  verdict " << to_string(v) << "  " << n << "\n";
      }
    }
    os << "\n";
  }

  os << "ues\n";
  for (const auto& u : r.ues) {
    os << "  " << std::setw(3) << u.index << "  " << std::left << std::setw(18) << u.profile << std::right << " "
       << std::left << std::setw(17) << to_string(u.state) << std::right << " cell "
       << (u.serving_cell ? std::to_string(*u.serving_cell) : "-") << "  preambles " << u.preambles << "  connections "
       << u.connections << "\n";
  }

  if (!failures.empty()) {
    os << "\nexpectations failed\n";
    for (const auto& f : failures) {
      os << "  " << f << "\n";
    }
  }

  nlohmann::ordered_json totals;
  for (const auto& [k, v] : r.metrics()) {
    totals[k] = v;
  }
  os << "\ntotals " << totals.dump() << "\n";
}

} // namespace ovs::sim

#pragma once

// gNB MAC/RRC: random access responses, uplink grants, contention resolution,
// Msg3 classification, BSR-driven grant enlargement and NAS relay.

#include "ovs/airtime.hpp"
#include "ovs/cell.hpp"
#include "ovs/codecs/mac.hpp"
#include "ovs/codecs/pdcp.hpp"
#include "ovs/codecs/rlc.hpp"
#include "ovs/codecs/rrc.hpp"
#include "ovs/rng.hpp"
#include "ovs/ue.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace ovs {

enum class msg3_empty_policy { abort_silently, invalid_cri };

inline std::string_view to_string(msg3_empty_policy p)
{
  return p == msg3_empty_policy::abort_silently ? "abort" : "invalid_cri";
}

inline msg3_empty_policy parse_msg3_empty_policy(std::string_view s)
{
  if (s == "abort") {
    return msg3_empty_policy::abort_silently;
  }
  if (s == "invalid_cri") {
    return msg3_empty_policy::invalid_cri;
  }
  throw usage_error("unknown msg3_empty_policy: " + std::string(s));
}

struct gnb_config {
  cell_info         cell;
  std::uint32_t     msg3_tbs           = 7;
  std::uint32_t     large_grant_tbs    = 128;
  std::uint32_t     max_tbs            = 128;
  std::uint32_t     rar_window_slots   = 10;
  msg3_empty_policy empty_policy       = msg3_empty_policy::abort_silently;
  sim_ns            rnti_quarantine_ns = from_ms(100);
};

/// A preamble detected in one PRACH occasion.
struct preamble_rx {
  std::uint8_t index       = 0;
  entity_id    sender;
  double       distance_us = 0.0;
};

struct rar_message {
  symbol_time            slot;
  std::vector<rar_entry> entries;
};

enum class msg3_outcome_kind { cri_sent, aborted, collision, crnti_contention };

inline std::string_view to_string(msg3_outcome_kind k)
{
  switch (k) {
    case msg3_outcome_kind::cri_sent:
      return "cri";
    case msg3_outcome_kind::aborted:
      return "abort";
    case msg3_outcome_kind::collision:
      return "collision";
    case msg3_outcome_kind::crnti_contention:
      return "crnti";
  }
  return "?";
}

struct msg3_outcome {
  msg3_outcome_kind         kind = msg3_outcome_kind::collision;
  rnti                      tc_rnti;
  std::optional<rrc::cri_t> cri;
  std::optional<rrc::setup> setup;
  /// Holder of the C-RNTI named in a C-RNTI MAC CE.
  std::optional<rnti>       crnti;
  std::string               note;
};

struct ul_result {
  bool                     large_bsr = false;
  std::vector<byte_buffer> nas_uplink;
  std::vector<std::string> anomalies;
  std::size_t              duplicates = 0;
};

class gnb
{
public:
  enum class rrc_phase { awaiting_msg3, setup_sent, connected };

  struct connection {
    rnti             id;
    std::uint64_t    serial = 0;
    byte_buffer      msg3_bytes;
    rrc_phase        phase       = rrc_phase::awaiting_msg3;
    bool             pending_bsr = false;
    double           ta_us       = 0.0;
    std::uint8_t     transaction_id = 0;
    rlc::reassembler rx;
  };

  gnb(gnb_config cfg, sim_rng rng) : cfg_(std::move(cfg)), rng_(rng)
  {
    if (cfg_.cell.k2 < 1 || cfg_.msg3_tbs < 7 || cfg_.large_grant_tbs < cfg_.msg3_tbs || cfg_.max_tbs < cfg_.large_grant_tbs) {
      throw usage_error("gnb: invalid grant configuration");
    }
  }

  const gnb_config& config() const { return cfg_; }
  std::uint32_t     cell_id() const { return cfg_.cell.cell_id; }

  bool                 active(rnti r) const { return conns_.contains(r.value); }
  const connection*    find(rnti r) const
  {
    auto it = conns_.find(r.value);
    return it == conns_.end() ? nullptr : &it->second;
  }
  std::size_t active_count() const { return conns_.size(); }

  /// Aggregates every preamble of one occasion into a single RAR. Two UEs
  /// picking the same preamble share one grant.
  std::optional<rar_message> on_preambles(const symbol_time& rar_slot, const std::vector<preamble_rx>& rx, sim_ns now,
                                          std::vector<std::string>* anomalies = nullptr)
  {
    rar_message                  rar{rar_slot, {}};
    std::map<std::uint8_t, bool> seen;
    for (const auto& p : rx) {
      if (seen[p.index]) {
        continue;
      }
      seen[p.index] = true;
      const auto tc = allocate_rnti(now);
      if (!tc) {
        if (anomalies) {
          anomalies->push_back("rnti space exhausted, preamble " + std::to_string(p.index) + " ignored");
        }
        continue;
      }
      connection c;
      c.id     = *tc;
      c.serial = ++serial_;
      c.ta_us  = required_timing_advance(p.distance_us);
      rar_entry e;
      e.preamble_index    = p.index;
      e.tc_rnti           = *tc;
      e.grant             = make_grant(*tc, rar_slot, cfg_.msg3_tbs);
      e.timing_advance_us = c.ta_us;
      conns_[tc->value]   = std::move(c);
      rar.entries.push_back(e);
    }
    if (rar.entries.empty()) {
      return std::nullopt;
    }
    return rar;
  }

  /// Classifies the Msg3 reception on a TC-RNTI's grant.
  msg3_outcome on_msg3(rnti tc, const reception_result& rx, sim_ns now)
  {
    msg3_outcome out;
    out.tc_rnti = tc;
    auto it     = conns_.find(tc.value);
    if (it == conns_.end() || it->second.phase != rrc_phase::awaiting_msg3) {
      out.kind = msg3_outcome_kind::collision;
      out.note = "no pending random access for rnti";
      return out;
    }
    if (rx.collision()) {
      out.kind = msg3_outcome_kind::collision;
      out.note = "msg3 not decodable";
      release(tc, now);
      return out;
    }
    mac::pdu pdu;
    try {
      pdu = mac::decode(rx.decoded->payload);
    } catch (const decode_error& e) {
      out.kind = msg3_outcome_kind::aborted;
      out.note = std::string("msg3 parse error: ") + e.what();
      release(tc, now);
      return out;
    }
    if (pdu.is_empty()) {
      out.kind = msg3_outcome_kind::aborted;
      out.note = "empty mac pdu";
      if (cfg_.empty_policy == msg3_empty_policy::invalid_cri) {
        out.cri = rrc::cri_t{};
        out.note += ", invalid contention resolution id";
      }
      release(tc, now);
      return out;
    }
    if (const auto* ce = pdu.find(mac::lcid::crnti_ce)) {
      out.kind  = msg3_outcome_kind::crnti_contention;
      out.crnti = mac::crnti_of(*ce);
      out.note  = "contention for c-rnti " + std::to_string(out.crnti->value);
      release(tc, now);
      return out;
    }
    const auto* ccch = pdu.find(mac::lcid::ccch);
    if (!ccch) {
      out.kind = msg3_outcome_kind::aborted;
      out.note = "msg3 without ccch";
      release(tc, now);
      return out;
    }
    try {
      (void)std::get<rrc::setup_request>(rrc::decode(ccch->payload));
    } catch (const std::exception& e) {
      out.kind = msg3_outcome_kind::aborted;
      out.note = std::string("msg3 rrc error: ") + e.what();
      release(tc, now);
      return out;
    }
    auto& c          = it->second;
    c.msg3_bytes     = rx.decoded->payload;
    c.phase          = rrc_phase::setup_sent;
    c.transaction_id = static_cast<std::uint8_t>(c.serial % 4);
    out.kind         = msg3_outcome_kind::cri_sent;
    out.cri          = rrc::contention_identity(ccch->payload);
    out.setup        = rrc::setup{c.transaction_id};
    return out;
  }

  /// Next grant for an active RNTI. A pending large BSR enlarges it.
  uplink_grant schedule_ul(rnti r, std::uint32_t requested_bytes, const symbol_time& slot)
  {
    auto it = conns_.find(r.value);
    if (it == conns_.end()) {
      throw usage_error("schedule_ul: inactive rnti " + std::to_string(r.value));
    }
    std::uint32_t tbs = std::max(cfg_.msg3_tbs, std::min(requested_bytes, cfg_.max_tbs));
    if (it->second.pending_bsr) {
      tbs                     = std::max(tbs, cfg_.large_grant_tbs);
      it->second.pending_bsr = false;
    }
    return make_grant(r, slot, tbs);
  }

  /// Processes a connected-mode uplink reception: BSR, RLC reassembly with
  /// duplicate suppression, and extraction of uplink NAS.
  ul_result on_ul(rnti r, const reception_result& rx)
  {
    ul_result out;
    auto      it = conns_.find(r.value);
    if (it == conns_.end()) {
      out.anomalies.push_back("uplink for unknown rnti " + std::to_string(r.value));
      return out;
    }
    if (rx.collision()) {
      return out;
    }
    auto&    c = it->second;
    mac::pdu pdu;
    try {
      pdu = mac::decode(rx.decoded->payload);
    } catch (const decode_error& e) {
      out.anomalies.push_back(std::string("uplink parse error: ") + e.what());
      return out;
    }
    for (const auto& s : pdu.subpdus) {
      if (s.lcid == mac::lcid::short_bsr && !s.payload.empty() && s.payload[0] > 0) {
        c.pending_bsr = true;
        out.large_bsr = true;
      }
      if (s.lcid != mac::lcid::dcch) {
        continue;
      }
      try {
        const auto before = c.rx.duplicates();
        auto       sdu    = c.rx.push(rlc::decode(s.payload));
        out.duplicates += c.rx.duplicates() - before;
        if (!sdu) {
          continue;
        }
        const auto p   = pdcp::decode(*sdu);
        const auto msg = rrc::decode(p.sdu);
        if (const auto* sc = std::get_if<rrc::setup_complete>(&msg)) {
          c.phase = rrc_phase::connected;
          if (!sc->nas_container.empty()) {
            out.nas_uplink.push_back(sc->nas_container);
          }
        } else if (const auto* ul = std::get_if<rrc::ul_information_transfer>(&msg)) {
          if (c.phase != rrc_phase::connected) {
            out.anomalies.push_back("ul information transfer before setup complete");
            continue;
          }
          out.nas_uplink.push_back(ul->nas_container);
        } else {
          out.anomalies.push_back("unexpected uplink rrc " + rrc::describe(msg));
        }
      } catch (const decode_error& e) {
        out.anomalies.push_back(std::string("uplink dcch error: ") + e.what());
      }
    }
    return out;
  }

  /// Wraps downlink NAS for an RNTI; nothing when the RNTI is unknown.
  std::optional<rrc::dl_information_transfer> relay_dl(rnti r, const byte_buffer& nas_bytes) const
  {
    auto it = conns_.find(r.value);
    if (it == conns_.end()) {
      return std::nullopt;
    }
    return rrc::dl_information_transfer{it->second.transaction_id, nas_bytes};
  }

  /// Ends a connection and keeps its RNTI out of use for the quarantine time.
  void release(rnti r, sim_ns now)
  {
    if (conns_.erase(r.value) > 0) {
      quarantine_[r.value] = now + cfg_.rnti_quarantine_ns;
    }
  }

  bool quarantined(rnti r, sim_ns now) const
  {
    auto it = quarantine_.find(r.value);
    return it != quarantine_.end() && it->second > now;
  }

private:
  static constexpr std::uint16_t first_rnti = 0x0001;
  static constexpr std::uint16_t last_rnti  = 0xffef;

  uplink_grant make_grant(rnti r, const symbol_time& slot, std::uint32_t tbs)
  {
    uplink_grant g;
    g.target        = r;
    g.grant_slot    = symbol_time::from_slot_index(slot.slot_index());
    g.k2            = cfg_.cell.k2;
    g.tbs_bytes     = tbs;
    g.allocation_id = (static_cast<std::uint64_t>(cfg_.cell.cell_id) << 40) | ++allocations_;
    return g;
  }

  std::optional<rnti> allocate_rnti(sim_ns now)
  {
    auto usable = [&](std::uint16_t v) { return !conns_.contains(v) && !quarantined(rnti{v}, now); };
    for (int i = 0; i < 64; ++i) {
      const auto v = static_cast<std::uint16_t>(rng_.uniform(first_rnti, last_rnti));
      if (usable(v)) {
        return rnti{v};
      }
    }
    for (std::uint32_t v = first_rnti; v <= last_rnti; ++v) {
      if (usable(static_cast<std::uint16_t>(v))) {
        return rnti{static_cast<std::uint16_t>(v)};
      }
    }
    return std::nullopt;
  }

  gnb_config                           cfg_;
  sim_rng                              rng_;
  std::map<std::uint16_t, connection>  conns_;
  std::map<std::uint16_t, sim_ns>      quarantine_;
  std::uint64_t                        serial_      = 0;
  std::uint64_t                        allocations_ = 0;
};

} // namespace ovs

#pragma once

// Composition of the layer-2/3 codecs for signalling on DCCH.

#include "ovs/codecs/mac.hpp"
#include "ovs/codecs/nas.hpp"
#include "ovs/codecs/pdcp.hpp"
#include "ovs/codecs/rlc.hpp"
#include "ovs/codecs/rrc.hpp"

#include <optional>

namespace ovs {

/// Fields of the RRC setup complete that wraps an injected NAS message.
struct setup_complete_template {
  std::uint8_t transaction_id      = 0;
  std::uint8_t selected_plmn_index = 0;
};

/// RRC setup complete -> PDCP (sn 0, zero MAC-I) -> RLC (full, sn 0).
inline rlc::segment build_setup_complete_segment(const nas::message& msg, const setup_complete_template& tpl)
{
  const rrc::setup_complete sc{tpl.transaction_id, tpl.selected_plmn_index, nas::encode(msg)};
  const pdcp::pdu           p{0, rrc::encode(sc), {}};
  return rlc::full(0, pdcp::encode(p));
}

/// Encoded MAC bytes needed to carry `msg` in one unsegmented subPDU.
inline std::size_t layer_stack_size(const nas::message& msg, const setup_complete_template& tpl)
{
  return mac::subpdu::dcch(rlc::encode(build_setup_complete_segment(msg, tpl))).encoded_size();
}

/// Encodes the whole stack into one MAC PDU of `tbs_bytes`. When the stack
/// does not fit, returns a PDU carrying a short BSR that advertises a large
/// buffer instead (or pure padding if even the BSR does not fit).
inline mac::pdu layer_stack_encode(const nas::message& msg, const setup_complete_template& tpl, std::size_t tbs_bytes)
{
  auto sdu = mac::subpdu::dcch(rlc::encode(build_setup_complete_segment(msg, tpl)));
  if (sdu.encoded_size() <= tbs_bytes) {
    return mac::make_pdu({std::move(sdu)}, tbs_bytes);
  }
  if (tbs_bytes >= 2) {
    return mac::make_pdu({mac::subpdu::short_bsr(mac::bsr_large_buffer)}, tbs_bytes);
  }
  return mac::make_empty_pdu(tbs_bytes);
}

/// Result of peeling one DCCH SDU down to NAS.
struct dcch_contents {
  rlc::segment                 segment;
  std::optional<pdcp::pdu>     pdcp_pdu;
  std::optional<rrc::message>  rrc_msg;
  std::optional<nas::message>  nas_msg;
};

/// Decodes a complete PDCP PDU (reassembled RLC SDU) to RRC and NAS.
inline void decode_pdcp_chain(byte_view pdcp_bytes, dcch_contents& out)
{
  out.pdcp_pdu = pdcp::decode(pdcp_bytes);
  out.rrc_msg  = rrc::decode(out.pdcp_pdu->sdu);
  if (const auto* sc = std::get_if<rrc::setup_complete>(&*out.rrc_msg)) {
    if (!sc->nas_container.empty()) {
      out.nas_msg = nas::decode(sc->nas_container);
    }
  } else if (const auto* ul = std::get_if<rrc::ul_information_transfer>(&*out.rrc_msg)) {
    out.nas_msg = nas::decode(ul->nas_container);
  } else if (const auto* dl = std::get_if<rrc::dl_information_transfer>(&*out.rrc_msg)) {
    out.nas_msg = nas::decode(dl->nas_container);
  }
}

/// Human-readable rendering of an uplink MAC PDU through all layers that
/// can be decoded without reassembly state.
inline std::string describe_uplink(byte_view mac_bytes)
{
  const mac::pdu p   = mac::decode(mac_bytes);
  std::string    out = mac::describe(p);
  for (const auto& s : p.subpdus) {
    if (s.lcid == mac::lcid::ccch) {
      out += " " + rrc::describe(rrc::decode(s.payload));
    } else if (s.lcid == mac::lcid::dcch) {
      const rlc::segment seg = rlc::decode(s.payload);
      out += " " + rlc::describe(seg);
      if (seg.si == rlc::segment_info::full) {
        dcch_contents c{seg, {}, {}, {}};
        decode_pdcp_chain(seg.data, c);
        out += " " + pdcp::describe(*c.pdcp_pdu) + " " + rrc::describe(*c.rrc_msg);
        if (c.nas_msg) {
          out += " " + nas::describe(*c.nas_msg);
        }
      }
    }
  }
  return out;
}

} // namespace ovs

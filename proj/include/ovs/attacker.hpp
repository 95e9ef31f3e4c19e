#pragma once

// Uplink-overshadowing adversary: downlink sniffing, strategy logic for the
// four attacks, payload crafting, processing-latency deadline checks, TA and
// power configuration, and uplink sniffing for identity capture.

#include "ovs/airtime.hpp"
#include "ovs/codecs/stack.hpp"
#include "ovs/gnb.hpp"
#include "ovs/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace ovs {

/// Mean and standard deviation of one processing step, in microseconds.
struct cost_term {
  double mean   = 0.0;
  double stddev = 0.0;
};

struct cost_model {
  cost_term sync_demod_per_symbol;
  cost_term pdcch_common;
  cost_term pdcch_ue;
  cost_term pdsch_decode;
  cost_term pusch_encode_per_grant;
  cost_term ofdm_per_symbol;
  double    radio_rtt_us = 200.0;

  bool valid() const
  {
    for (const auto* t : {&sync_demod_per_symbol, &pdcch_common, &pdcch_ue, &pdsch_decode, &pusch_encode_per_grant,
                          &ofdm_per_symbol}) {
      if (!(t->mean >= 0.0) || !(t->stddev >= 0.0) || !std::isfinite(t->mean) || !std::isfinite(t->stddev)) {
        return false;
      }
    }
    return radio_rtt_us >= 0.0 && std::isfinite(radio_rtt_us);
  }

  /// Multiplies every processing cost; the radio round trip is unchanged.
  cost_model scaled(double factor) const
  {
    cost_model out = *this;
    for (auto* t : {&out.sync_demod_per_symbol, &out.pdcch_common, &out.pdcch_ue, &out.pdsch_decode,
                    &out.pusch_encode_per_grant, &out.ofdm_per_symbol}) {
      t->mean *= factor;
      t->stddev *= factor;
    }
    return out;
  }
};

namespace cost_presets {

/// MAC-layer RAR DoS against 64 UEs (no UE-specific search space).
inline cost_model rar_dos()
{
  return {{5.98, 1.34}, {7.97, 1.10}, {0.0, 0.0}, {34.83, 4.45}, {6.90, 0.99}, {11.97, 1.44}, 200.0};
}

/// NAS registration reject against 64 UEs.
inline cost_model nas_64()
{
  return {{5.32, 1.26}, {8.54, 2.60}, {78.72, 11.41}, {36.32, 16.70}, {21.78, 2.56}, {11.04, 1.22}, 200.0};
}

/// Single-UE k2=1 run; the default.
inline cost_model k2_1()
{
  return {{5.13, 1.18}, {8.27, 2.29}, {77.65, 10.14}, {52.64, 22.29}, {25.42, 4.36}, {11.66, 1.54}, 200.0};
}

inline cost_model by_name(std::string_view name)
{
  if (name == "rar_dos") {
    return rar_dos();
  }
  if (name == "nas_64") {
    return nas_64();
  }
  if (name == "k2_1") {
    return k2_1();
  }
  if (name == "zero") {
    return {{}, {}, {}, {}, {}, {}, 0.0};
  }
  throw usage_error("unknown cost preset: " + std::string(name));
}

} // namespace cost_presets

/// Work needed between seeing a downlink grant and having the uplink on air.
struct pipeline {
  std::uint32_t n_symbols_synced    = 0;
  bool          used_ue_searchspace = false;
  std::uint32_t n_pdsch             = 0;
  std::uint32_t n_grants            = 0;
  std::uint32_t n_ofdm_symbols      = 1;
};

/// Closed-form processing latency in microseconds from mean costs.
inline double compute_latency(const cost_model& c, const pipeline& p)
{
  return p.n_symbols_synced * c.sync_demod_per_symbol.mean + c.pdcch_common.mean +
         (p.used_ue_searchspace ? c.pdcch_ue.mean : 0.0) + p.n_pdsch * c.pdsch_decode.mean +
         p.n_grants * c.pusch_encode_per_grant.mean + p.n_ofdm_symbols * c.ofdm_per_symbol.mean;
}

/// Same sum with every step drawn from a gaussian clamped at zero.
inline double sample_latency(const cost_model& c, const pipeline& p, sim_rng& rng)
{
  auto draw = [&](const cost_term& t) { return std::max(0.0, rng.gaussian(t.mean, t.stddev)); };
  double total = 0.0;
  for (std::uint32_t i = 0; i < p.n_symbols_synced; ++i) {
    total += draw(c.sync_demod_per_symbol);
  }
  total += draw(c.pdcch_common);
  if (p.used_ue_searchspace) {
    total += draw(c.pdcch_ue);
  }
  for (std::uint32_t i = 0; i < p.n_pdsch; ++i) {
    total += draw(c.pdsch_decode);
  }
  for (std::uint32_t i = 0; i < p.n_grants; ++i) {
    total += draw(c.pusch_encode_per_grant);
  }
  for (std::uint32_t i = 0; i < p.n_ofdm_symbols; ++i) {
    total += draw(c.ofdm_per_symbol);
  }
  return total;
}

/// now + processing + radio round trip must not pass the deadline.
inline bool meets_deadline(double now_us, double processing_us, double rtt_us, double deadline_us)
{
  return now_us + processing_us + rtt_us <= deadline_us;
}

enum class attack_strategy { cell_wide_dos, registration_reject_downgrade, suci_extraction, suci_replay };
enum class ta_mode { computed, copy_victim };

inline std::string_view to_string(attack_strategy s)
{
  switch (s) {
    case attack_strategy::cell_wide_dos:
      return "CellWideDos";
    case attack_strategy::registration_reject_downgrade:
      return "RegistrationRejectDowngrade";
    case attack_strategy::suci_extraction:
      return "SuciExtraction";
    case attack_strategy::suci_replay:
      return "SuciReplay";
  }
  return "?";
}

inline attack_strategy parse_attack_strategy(std::string_view s)
{
  for (auto v : {attack_strategy::cell_wide_dos, attack_strategy::registration_reject_downgrade,
                 attack_strategy::suci_extraction, attack_strategy::suci_replay}) {
    if (to_string(v) == s) {
      return v;
    }
  }
  throw usage_error("unknown attack strategy: " + std::string(s));
}

inline std::string_view to_string(ta_mode m) { return m == ta_mode::computed ? "Computed" : "CopyVictim"; }

inline ta_mode parse_ta_mode(std::string_view s)
{
  if (s == "Computed") {
    return ta_mode::computed;
  }
  if (s == "CopyVictim") {
    return ta_mode::copy_victim;
  }
  throw usage_error("unknown ta_mode: " + std::string(s));
}

struct attack_plan {
  attack_strategy            strategy    = attack_strategy::cell_wide_dos;
  std::uint32_t              target_cell = 1;
  double                     power_offset_db  = 6.0;
  double                     victim_power_dbm = 20.0;
  double                     distance_us      = 1.0;
  ta_mode                    ta               = ta_mode::computed;
  cost_model                 costs            = cost_presets::k2_1();
  bool                       jitter           = false;
  std::optional<std::vector<tmsi48>> target_filter;
  /// Captured SUCI replayed by the replay strategy.
  std::optional<suci>        target_suci;
  bool                       whitelist_mode = false;
  nas::security_capabilities replay_capabilities = nas::poisoned_capabilities();
  /// Concealed identity of a subscriber that is not allowed 5G service.
  std::optional<suci>        downgrade_suci;
  std::uint32_t              max_repeats           = 2;
  double                     attacker_rx_margin_db = 0.0;
  sim_ns                     verdict_window_ns     = from_ms(1000);

  bool nas_layer() const { return strategy != attack_strategy::cell_wide_dos; }
};

struct captured_identity {
  tmsi48      tmsi;
  ovs::suci   suci;
  symbol_time captured_at;

  friend bool operator==(const captured_identity&, const captured_identity&) = default;
};

enum class replay_verdict { suci_matches_ue, suci_mismatch, inconclusive };

inline std::string_view to_string(replay_verdict v)
{
  switch (v) {
    case replay_verdict::suci_matches_ue:
      return "SuciMatchesUe";
    case replay_verdict::suci_mismatch:
      return "SuciMismatch";
    case replay_verdict::inconclusive:
      return "Inconclusive";
  }
  return "?";
}

enum class anticipated_message { registration_request, service_request, unknown, exempt };

inline std::string_view to_string(anticipated_message a)
{
  switch (a) {
    case anticipated_message::registration_request:
      return "RegistrationRequest";
    case anticipated_message::service_request:
      return "ServiceRequest";
    case anticipated_message::unknown:
      return "unknown";
    case anticipated_message::exempt:
      return "exempt";
  }
  return "?";
}

/// One scheduled adversarial uplink.
struct adversarial_tx {
  transmission tx;
  /// Earliest instant the payload could be on air.
  sim_ns       ready_ns = 0;
  sim_ns       on_air_ns = 0;
  std::string  note;
};

/// Outcome of reacting to one downlink observation.
struct attack_decision {
  std::vector<adversarial_tx> txs;
  std::vector<std::string>    misses;
  std::vector<std::string>    notes;
};

struct attacker_stats {
  std::uint64_t rars_seen            = 0;
  std::uint64_t rar_grants_seen      = 0;
  std::uint64_t deadline_misses      = 0;
  std::uint64_t transmissions        = 0;
  std::uint64_t connections_armed    = 0;
  std::uint64_t connections_exempt   = 0;
  std::uint64_t nas_injections       = 0;
};

class attacker
{
public:
  struct connection_state {
    rnti                       id;
    double                     victim_ta_us = 0.0;
    anticipated_message        next         = anticipated_message::unknown;
    bool                       armed        = false;
    std::optional<tmsi48>      observed_tmsi;
    std::uint8_t               transaction_id = 0;
    std::optional<nas::message> payload;
    std::uint32_t              attempts      = 0;
    bool                       injected      = false;
    bool                       yielded       = false;
    bool                       awaiting_verdict = false;
    sim_ns                     verdict_deadline = 0;
    rlc::reassembler           sniff;
  };

  attacker(attack_plan plan, sim_rng rng, std::vector<tmsi48> avoid_tmsis = {}) :
    plan_(std::move(plan)), rng_(rng), avoid_(avoid_tmsis.begin(), avoid_tmsis.end())
  {
    if (!std::isfinite(plan_.power_offset_db) || !plan_.costs.valid() || plan_.distance_us < 0.0) {
      throw usage_error("attacker: invalid plan");
    }
    if (plan_.strategy == attack_strategy::suci_replay && !plan_.target_suci) {
      throw usage_error("attacker: replay needs a target SUCI");
    }
    if (plan_.strategy == attack_strategy::registration_reject_downgrade && !plan_.downgrade_suci) {
      throw usage_error("attacker: downgrade needs a non-5G SUCI");
    }
    if (plan_.target_filter) {
      for (const auto& t : *plan_.target_filter) {
        avoid_.insert(t);
      }
    }
  }

  const attack_plan&                     plan() const { return plan_; }
  const attacker_stats&                  stats() const { return stats_; }
  const std::vector<captured_identity>&  captured() const { return captured_; }
  const std::vector<replay_verdict>&     verdicts() const { return verdicts_; }
  const connection_state*                connection(rnti r) const
  {
    auto it = conns_.find(r.value);
    return it == conns_.end() ? nullptr : &it->second;
  }

  double tx_power_dbm() const { return plan_.victim_power_dbm + plan_.power_offset_db; }

  double timing_advance_for(double victim_ta_us) const
  {
    return plan_.ta == ta_mode::computed ? required_timing_advance(plan_.distance_us) : victim_ta_us;
  }

  /// Reacts to a sniffed RAR. The MAC DoS answers every grant with an empty
  /// MAC PDU; other strategies only remember the victims' timing advance.
  attack_decision on_rar(std::uint32_t cell, const rar_message& rar, sim_ns now)
  {
    attack_decision d;
    if (cell != plan_.target_cell || rar.entries.empty()) {
      return d;
    }
    for (const auto& e : rar.entries) {
      auto& c        = conns_[e.tc_rnti.value];
      c              = connection_state{};
      c.id           = e.tc_rnti;
      c.victim_ta_us = e.timing_advance_us;
    }
    if (plan_.strategy != attack_strategy::cell_wide_dos) {
      return d;
    }
    ++stats_.rars_seen;
    stats_.rar_grants_seen += rar.entries.size();
    const pipeline pl{0, false, 1, static_cast<std::uint32_t>(rar.entries.size()), 1};
    const double   latency  = processing(pl);
    const auto&    first    = rar.entries.front().grant;
    const double   deadline = grant_deadline(first).absolute_ns() / 1000.0;
    const double   now_us   = now / 1000.0;
    if (!meets_deadline(now_us, latency, plan_.costs.radio_rtt_us, deadline)) {
      stats_.deadline_misses += rar.entries.size();
      d.misses.push_back("rar with " + std::to_string(rar.entries.size()) + " grants: ready at " +
                         std::to_string(now_us + latency + plan_.costs.radio_rtt_us) + " us > deadline " +
                         std::to_string(deadline) + " us");
      return d;
    }
    for (const auto& e : rar.entries) {
      adversarial_tx a;
      a.tx        = make_tx(e.grant, mac::encode(mac::make_empty_pdu(e.grant.tbs_bytes)), e.timing_advance_us);
      a.ready_ns  = now + from_us(latency + plan_.costs.radio_rtt_us);
      a.on_air_ns = grant_deadline(e.grant).absolute_ns();
      a.note      = "empty mac pdu for tc-rnti " + std::to_string(e.tc_rnti.value);
      d.txs.push_back(std::move(a));
      ++stats_.transmissions;
    }
    return d;
  }

  /// Classifies the connection from its echoed Msg3 and arms the attack
  /// when the strategy and target filter allow.
  anticipated_message on_contention_resolution(std::uint32_t cell, rnti r, const rrc::cri_t& cri,
                                               std::uint8_t transaction_id, std::string* note = nullptr)
  {
    if (cell != plan_.target_cell || !plan_.nas_layer()) {
      return anticipated_message::exempt;
    }
    auto& c          = conns_[r.value];
    c.id             = r;
    c.transaction_id = transaction_id;
    std::optional<rrc::setup_request> req;
    try {
      req = std::get<rrc::setup_request>(rrc::decode(byte_buffer(cri.begin(), cri.end())));
    } catch (const std::exception&) {
    }

    auto exempt = [&](const std::string& why) {
      c.next  = anticipated_message::exempt;
      c.armed = false;
      ++stats_.connections_exempt;
      if (note) {
        *note = why;
      }
      return c.next;
    };

    if (!req) {
      c.next = anticipated_message::unknown;
    } else if (req->type == rrc::identity_type::s_tmsi_part1) {
      c.next = anticipated_message::service_request;
      if (plan_.target_filter) {
        std::optional<tmsi48> match;
        for (const auto& t : *plan_.target_filter) {
          if (t.part1() == req->value) {
            match = t;
          }
        }
        if (!match) {
          return exempt("s-tmsi part1 " + to_hex_u64(req->value) + " not in target filter");
        }
        c.observed_tmsi = match;
      } else {
        c.observed_tmsi = tmsi48{req->value};
      }
      if (!plan_.whitelist_mode && done_.contains(c.observed_tmsi->value)) {
        return exempt("tmsi " + to_hex_u64(c.observed_tmsi->value) + " already attacked");
      }
      if (owners_.contains(c.observed_tmsi->value)) {
        return exempt("tmsi " + to_hex_u64(c.observed_tmsi->value) + " owns the replayed suci");
      }
    } else {
      c.next          = anticipated_message::registration_request;
      c.observed_tmsi = tmsi48{req->value};
      if (plan_.target_filter && !plan_.whitelist_mode) {
        if (plan_.strategy == attack_strategy::registration_reject_downgrade && pending_followups_ > 0) {
          --pending_followups_;
        } else {
          return exempt("random value connection outside target filter");
        }
      }
    }

    c.payload = craft(c.next);
    c.armed   = true;
    ++stats_.connections_armed;
    if (note) {
      *note = "anticipate " + std::string(to_string(c.next)) + ", inject " + nas::describe(*c.payload);
    }
    return c.next;
  }

  /// Overshadows an uplink grant of an armed connection. Grants too small
  /// for the payload get a BSR to obtain a larger one.
  attack_decision on_ul_grant(std::uint32_t cell, const uplink_grant& g, sim_ns now)
  {
    attack_decision d;
    if (cell != plan_.target_cell || !plan_.nas_layer()) {
      return d;
    }
    auto it = conns_.find(g.target.value);
    if (it == conns_.end() || !it->second.armed || it->second.yielded) {
      return d;
    }
    auto&          c        = it->second;
    const pipeline pl{0, true, 1, 1, 1};
    const double   latency  = processing(pl);
    const double   deadline = grant_deadline(g).absolute_ns() / 1000.0;
    const double   now_us   = now / 1000.0;
    if (!meets_deadline(now_us, latency, plan_.costs.radio_rtt_us, deadline)) {
      ++stats_.deadline_misses;
      ++c.attempts;
      if (c.attempts >= plan_.max_repeats) {
        c.yielded = true;
      }
      d.misses.push_back("grant " + std::to_string(g.allocation_id) + ": ready at " +
                         std::to_string(now_us + latency + plan_.costs.radio_rtt_us) + " us > deadline " +
                         std::to_string(deadline) + " us");
      return d;
    }
    const mac::pdu pdu = layer_stack_encode(*c.payload, {c.transaction_id, 0}, g.tbs_bytes);
    adversarial_tx a;
    a.tx        = make_tx(g, mac::encode(pdu), c.victim_ta_us);
    a.ready_ns  = now + from_us(latency + plan_.costs.radio_rtt_us);
    a.on_air_ns = grant_deadline(g).absolute_ns();
    if (pdu.find(mac::lcid::dcch)) {
      ++c.attempts;
      ++stats_.nas_injections;
      if (!c.injected && c.observed_tmsi) {
        done_.insert(c.observed_tmsi->value);
        if (plan_.target_filter && c.next == anticipated_message::service_request &&
            plan_.strategy == attack_strategy::registration_reject_downgrade) {
          ++pending_followups_;
        }
      }
      c.injected = true;
      if (plan_.strategy == attack_strategy::suci_replay && !c.awaiting_verdict) {
        c.awaiting_verdict = true;
        c.verdict_deadline = now + plan_.verdict_window_ns;
      }
      if (c.attempts >= plan_.max_repeats) {
        c.yielded = true;
      }
      a.note = "inject " + nas::describe(*c.payload);
    } else {
      a.note = "short bsr to enlarge grant";
    }
    ++stats_.transmissions;
    d.txs.push_back(std::move(a));
    return d;
  }

  /// Downlink NAS on a connection: ends repeats and yields replay verdicts.
  std::optional<replay_verdict> on_dl_nas(std::uint32_t cell, rnti r, const nas::message& m)
  {
    if (cell != plan_.target_cell) {
      return std::nullopt;
    }
    auto it = conns_.find(r.value);
    if (it == conns_.end() || !it->second.injected) {
      return std::nullopt;
    }
    auto& c   = it->second;
    c.yielded = true;
    if (!c.awaiting_verdict) {
      return std::nullopt;
    }
    std::optional<replay_verdict> v;
    if (std::holds_alternative<nas::security_mode_command>(m)) {
      v = replay_verdict::suci_matches_ue;
      if (c.observed_tmsi && c.next == anticipated_message::service_request) {
        owners_.insert(c.observed_tmsi->value);
      }
    } else if (std::holds_alternative<nas::authentication_reject>(m)) {
      v = replay_verdict::suci_mismatch;
    }
    if (v) {
      c.awaiting_verdict = false;
      verdicts_.push_back(*v);
    }
    return v;
  }

  /// Replay verdicts still open at `now` past their window become
  /// inconclusive.
  std::vector<replay_verdict> expire(sim_ns now)
  {
    std::vector<replay_verdict> out;
    for (auto& [id, c] : conns_) {
      if (c.awaiting_verdict && c.verdict_deadline <= now) {
        c.awaiting_verdict = false;
        verdicts_.push_back(replay_verdict::inconclusive);
        out.push_back(replay_verdict::inconclusive);
      }
    }
    return out;
  }

  /// Passive reception of a victim uplink on an attacked connection.
  std::optional<captured_identity> on_ul_observed(std::uint32_t cell, rnti r, std::span<const transmission> txs,
                                                  const symbol_time& at, std::vector<std::string>* notes = nullptr)
  {
    if (cell != plan_.target_cell || plan_.strategy != attack_strategy::suci_extraction || txs.empty()) {
      return std::nullopt;
    }
    auto it = conns_.find(r.value);
    if (it == conns_.end() || !it->second.injected) {
      return std::nullopt;
    }
    const capture_config cfg{plan_.attacker_rx_margin_db, std::numeric_limits<double>::infinity()};
    const auto           rx = resolve_reception(txs, cfg);
    if (rx.collision()) {
      return std::nullopt;
    }
    auto& c = it->second;
    try {
      const mac::pdu pdu = mac::decode(rx.decoded->payload);
      for (const auto& s : pdu.subpdus) {
        if (s.lcid != mac::lcid::dcch) {
          continue;
        }
        const rlc::segment seg = rlc::decode(s.payload);
        auto               sdu = c.sniff.push(seg);
        if (!sdu) {
          continue;
        }
        dcch_contents dc{seg, {}, {}, {}};
        decode_pdcp_chain(*sdu, dc);
        if (!dc.nas_msg) {
          continue;
        }
        if (const auto* idr = std::get_if<nas::identity_response>(&*dc.nas_msg)) {
          captured_identity ci{c.observed_tmsi.value_or(tmsi48{}), idr->suci, at};
          if (std::find(captured_.begin(), captured_.end(), ci) == captured_.end()) {
            captured_.push_back(ci);
            if (c.observed_tmsi) {
              done_.insert(c.observed_tmsi->value);
            }
            return ci;
          }
        }
      }
    } catch (const std::exception& e) {
      if (notes) {
        notes->push_back(std::string("sniffed uplink skipped: ") + e.what());
      }
    }
    return std::nullopt;
  }

  void on_connection_end(std::uint32_t cell, rnti r)
  {
    if (cell != plan_.target_cell) {
      return;
    }
    auto it = conns_.find(r.value);
    if (it == conns_.end()) {
      return;
    }
    if (it->second.awaiting_verdict) {
      verdicts_.push_back(replay_verdict::inconclusive);
    }
    conns_.erase(it);
  }

  /// Random 48-bit TMSI avoiding every TMSI the attacker knows of.
  tmsi48 random_invalid_tmsi()
  {
    for (;;) {
      const tmsi48 t{rng_.next_u64()};
      if (t.value != 0 && !avoid_.contains(t)) {
        return t;
      }
    }
  }

private:
  double processing(const pipeline& pl)
  {
    return plan_.jitter ? sample_latency(plan_.costs, pl, rng_) : compute_latency(plan_.costs, pl);
  }

  nas::message craft(anticipated_message next)
  {
    switch (plan_.strategy) {
      case attack_strategy::registration_reject_downgrade:
        if (next == anticipated_message::service_request) {
          return nas::service_request{random_invalid_tmsi()};
        }
        return nas::registration_request{*plan_.downgrade_suci, nas::poisoned_capabilities()};
      case attack_strategy::suci_extraction:
        return nas::registration_request{random_invalid_tmsi(), nas::poisoned_capabilities()};
      case attack_strategy::suci_replay:
        return nas::registration_request{*plan_.target_suci, plan_.replay_capabilities};
      case attack_strategy::cell_wide_dos:
        break;
    }
    throw usage_error("craft: strategy has no NAS payload");
  }

  transmission make_tx(const uplink_grant& g, byte_buffer payload, double victim_ta_us) const
  {
    transmission t;
    t.allocation_id      = g.allocation_id;
    t.sender             = attacker_entity;
    t.payload            = std::move(payload);
    t.tx_power_dbm       = tx_power_dbm();
    t.timing_advance_us  = timing_advance_for(victim_ta_us);
    t.sender_distance_us = plan_.distance_us;
    return t;
  }

  attack_plan                              plan_;
  sim_rng                                  rng_;
  std::set<tmsi48>                         avoid_;
  std::map<std::uint16_t, connection_state> conns_;
  std::set<std::uint64_t>                  done_;
  std::set<std::uint64_t>                  owners_;
  std::uint32_t                            pending_followups_ = 0;
  attacker_stats                           stats_;
  std::vector<captured_identity>           captured_;
  std::vector<replay_verdict>              verdicts_;
};

} // namespace ovs

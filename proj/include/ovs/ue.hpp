#pragma once

// UE state machine: random access with backoff and reselection, contention
// resolution, RRC setup, NAS registration and service flows, and the
// reject-driven behaviour of individual phone models.

#include "ovs/aka.hpp"
#include "ovs/airtime.hpp"
#include "ovs/cell.hpp"
#include "ovs/codecs/mac.hpp"
#include "ovs/codecs/nas.hpp"
#include "ovs/codecs/pdcp.hpp"
#include "ovs/codecs/rlc.hpp"
#include "ovs/codecs/rrc.hpp"
#include "ovs/codecs/suci.hpp"
#include "ovs/rng.hpp"

#include <algorithm>
#include <deque>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace ovs {

enum class ra_failure_action { reselect_weaker_cell, disable_cellular_until_toggle };
enum class auth_reject_action { downgrade_to_4g, persistent_dos, retry_5g };

inline std::string_view to_string(ra_failure_action a)
{
  return a == ra_failure_action::reselect_weaker_cell ? "ReselectWeakerCell" : "DisableCellularUntilToggle";
}

inline std::string_view to_string(auth_reject_action a)
{
  switch (a) {
    case auth_reject_action::downgrade_to_4g:
      return "DowngradeTo4G";
    case auth_reject_action::persistent_dos:
      return "PersistentDoS";
    case auth_reject_action::retry_5g:
      return "Retry5G";
  }
  return "?";
}

inline ra_failure_action parse_ra_failure_action(std::string_view s)
{
  if (s == "ReselectWeakerCell") {
    return ra_failure_action::reselect_weaker_cell;
  }
  if (s == "DisableCellularUntilToggle") {
    return ra_failure_action::disable_cellular_until_toggle;
  }
  throw usage_error("unknown on_ra_failure value: " + std::string(s));
}

inline auth_reject_action parse_auth_reject_action(std::string_view s)
{
  if (s == "DowngradeTo4G") {
    return auth_reject_action::downgrade_to_4g;
  }
  if (s == "PersistentDoS") {
    return auth_reject_action::persistent_dos;
  }
  if (s == "Retry5G") {
    return auth_reject_action::retry_5g;
  }
  throw usage_error("unknown on_auth_reject value: " + std::string(s));
}

struct ue_profile {
  std::string        name           = "generic";
  ra_failure_action  on_ra_failure  = ra_failure_action::reselect_weaker_cell;
  auth_reject_action on_auth_reject = auth_reject_action::downgrade_to_4g;

  friend bool operator==(const ue_profile&, const ue_profile&) = default;
};

/// Behaviour observed on the phones used in the lab experiments.
inline const std::vector<ue_profile>& builtin_profiles()
{
  static const std::vector<ue_profile> profiles = {
      {"Pixel 10 Pro", ra_failure_action::disable_cellular_until_toggle, auth_reject_action::retry_5g},
      {"OnePlus Pro 10", ra_failure_action::reselect_weaker_cell, auth_reject_action::persistent_dos},
      {"Samsung S23", ra_failure_action::reselect_weaker_cell, auth_reject_action::downgrade_to_4g},
      {"Nothing Phone (3)", ra_failure_action::reselect_weaker_cell, auth_reject_action::downgrade_to_4g},
      {"iPhone 16 Pro", ra_failure_action::reselect_weaker_cell, auth_reject_action::downgrade_to_4g},
      {"iPhone 17 Pro", ra_failure_action::reselect_weaker_cell, auth_reject_action::downgrade_to_4g},
      {"Xiaomi 15T Pro", ra_failure_action::reselect_weaker_cell, auth_reject_action::downgrade_to_4g},
  };
  return profiles;
}

inline std::optional<ue_profile> find_builtin_profile(std::string_view name)
{
  for (const auto& p : builtin_profiles()) {
    if (p.name == name) {
      return p;
    }
  }
  return std::nullopt;
}

enum class ue_state {
  idle,
  ra_preamble_sent,
  msg3_sent,
  rrc_connected,
  nas_registering,
  nas_authenticating,
  nas_security_mode,
  registered,
  barred,
  downgraded_to_4g,
  cellular_disabled,
};

inline std::string_view to_string(ue_state s)
{
  switch (s) {
    case ue_state::idle:
      return "Idle";
    case ue_state::ra_preamble_sent:
      return "RaPreambleSent";
    case ue_state::msg3_sent:
      return "Msg3Sent";
    case ue_state::rrc_connected:
      return "RrcConnected";
    case ue_state::nas_registering:
      return "NasRegistering";
    case ue_state::nas_authenticating:
      return "NasAuthenticating";
    case ue_state::nas_security_mode:
      return "NasSecurityMode";
    case ue_state::registered:
      return "Registered";
    case ue_state::barred:
      return "Barred";
    case ue_state::downgraded_to_4g:
      return "DowngradedTo4G";
    case ue_state::cellular_disabled:
      return "CellularDisabled";
  }
  return "?";
}

struct ue_config {
  ue_profile                 profile;
  supi                       id;
  key128                     key{};
  home_network_key           network_key;
  nas::security_capabilities capabilities = nas::security_capabilities::of({"EA0", "EA2", "IA2"});
  std::optional<tmsi48>      tmsi;
  double                     distance_us          = 1.0;
  double                     tx_power_dbm         = 20.0;
  std::uint32_t              preamble_trans_max   = 200;
  std::uint32_t              preamble_pool        = 64;
  sim_ns                     contention_timer_ns  = from_ms(64);
  sim_ns                     max_backoff_ns       = from_ms(1920);
  double                     downgrade_delay_s    = 0.0;
};

/// One entry of a random access response as seen by the UE.
struct rar_entry {
  std::uint8_t preamble_index = 0;
  rnti         tc_rnti;
  uplink_grant grant;
  double       timing_advance_us = 0.0;
};

struct state_change {
  ue_state    from;
  ue_state    to;
  std::string reason;
};

class ue_fsm
{
public:
  struct preamble {
    std::uint32_t cell_id = 0;
    std::uint8_t  index   = 0;
  };

  enum class retry_kind { backoff, reselected, gave_up };

  struct retry_plan {
    retry_kind what     = retry_kind::backoff;
    sim_ns     delay_ns = 0;
  };

  struct nas_outcome {
    bool        reconnect = false;
    bool        anomaly   = false;
    std::string note;
  };

  ue_fsm(std::uint32_t index, ue_config cfg, std::vector<cell_info> cells, sim_rng rng) :
    index_(index), cfg_(std::move(cfg)), cells_(std::move(cells)), rng_(rng)
  {
    if (cfg_.preamble_trans_max == 0 || cfg_.preamble_pool == 0 || cfg_.preamble_pool > 64) {
      throw usage_error("ue: invalid random access configuration");
    }
    reselect("initial cell selection");
  }

  std::uint32_t                    index() const { return index_; }
  const ue_config&                 config() const { return cfg_; }
  ue_state                         state() const { return state_; }
  std::optional<std::uint32_t>     serving_cell() const { return serving_cell_; }
  const std::optional<tmsi48>&     stored_tmsi() const { return cfg_.tmsi; }
  std::uint32_t                    preamble_attempts() const { return preamble_attempts_; }
  std::uint64_t                    total_preambles() const { return total_preambles_; }
  rnti                             current_rnti() const { return rnti_; }
  std::uint64_t                    generation() const { return generation_; }
  const std::set<std::uint32_t>&   barred_tracking_areas() const { return barred_tas_; }
  const std::optional<rrc::cri_t>& pending_cri() const { return own_cri_; }

  bool can_start_ra() const
  {
    return state_ == ue_state::idle && serving_cell_ && cell(*serving_cell_).rat == radio_access::nr &&
           !barred_tas_.contains(cell(*serving_cell_).tracking_area);
  }

  bool in_procedure() const
  {
    return state_ != ue_state::idle && state_ != ue_state::registered && state_ != ue_state::downgraded_to_4g &&
           state_ != ue_state::cellular_disabled;
  }

  /// Sends a preamble on the serving cell. Returns nothing when the UE may not
  /// access the cell.
  std::optional<preamble> start_ra()
  {
    if (!can_start_ra() || preamble_attempts_ >= cfg_.preamble_trans_max) {
      return std::nullopt;
    }
    ++generation_;
    ++preamble_attempts_;
    ++total_preambles_;
    preamble_index_ = static_cast<std::uint8_t>(rng_.uniform(0, cfg_.preamble_pool - 1));
    set_state(ue_state::ra_preamble_sent, "preamble " + std::to_string(preamble_index_));
    return preamble{*serving_cell_, preamble_index_};
  }

  /// Msg3 for a matching RAR entry; entries for other preambles are ignored.
  std::optional<transmission> on_rar(const rar_entry& e)
  {
    if (state_ != ue_state::ra_preamble_sent || e.preamble_index != preamble_index_) {
      return std::nullopt;
    }
    rnti_              = e.tc_rnti;
    timing_advance_us_ = e.timing_advance_us;

    rrc::setup_request req;
    req.cause = rrc::cause::mo_signalling;
    if (cfg_.tmsi) {
      req.type  = rrc::identity_type::s_tmsi_part1;
      req.value = cfg_.tmsi->part1();
    } else {
      req.type  = rrc::identity_type::random_value;
      req.value = rng_.uniform(0, rrc::random_value_mask);
    }
    const byte_buffer sdu = rrc::encode(req);
    own_cri_              = rrc::contention_identity(sdu);
    const auto pdu        = mac::make_pdu({mac::subpdu::ccch(sdu)}, e.grant.tbs_bytes);
    set_state(ue_state::msg3_sent, cfg_.tmsi ? "setup request s-tmsi" : "setup request random value");
    return make_tx(e.grant, mac::encode(pdu));
  }

  /// True when the echoed identity matches the UE's own Msg3.
  bool on_contention_resolution(const rrc::cri_t& cri)
  {
    if (state_ != ue_state::msg3_sent) {
      return false;
    }
    if (!own_cri_ || cri != *own_cri_) {
      return false;
    }
    preamble_attempts_ = 0;
    set_state(ue_state::rrc_connected, "contention resolved");
    return true;
  }

  /// Mismatching identity or expired contention timer.
  retry_plan on_ra_attempt_failed(const std::string& reason)
  {
    own_cri_.reset();
    rnti_ = {};
    if (preamble_attempts_ < cfg_.preamble_trans_max) {
      set_state(ue_state::idle, reason);
      return {retry_kind::backoff, static_cast<sim_ns>(rng_.uniform(0, static_cast<std::uint64_t>(cfg_.max_backoff_ns)))};
    }
    preamble_attempts_ = 0;
    if (cfg_.profile.on_ra_failure == ra_failure_action::disable_cellular_until_toggle) {
      set_state(ue_state::cellular_disabled, "random access failed " + std::to_string(cfg_.preamble_trans_max) + " times");
      return {retry_kind::gave_up, 0};
    }
    if (serving_cell_) {
      ra_failed_cells_.insert(*serving_cell_);
    }
    set_state(ue_state::idle, reason + "; preamble limit reached");
    reselect("random access failure");
    return {state_ == ue_state::idle ? retry_kind::reselected : retry_kind::gave_up, 0};
  }

  void on_rrc_setup(const rrc::setup& s)
  {
    if (state_ != ue_state::rrc_connected) {
      return;
    }
    transaction_id_ = s.transaction_id;
    rlc_sn_         = 0;
    tx_queue_.clear();
    tx_.reset();
    release_after_flush_ = false;
    nas::message first;
    if (cfg_.tmsi) {
      first = nas::service_request{*cfg_.tmsi};
    } else {
      first = nas::registration_request{conceal_supi(cfg_.id, cfg_.network_key, rng_), cfg_.capabilities};
    }
    rrc::setup_complete sc{transaction_id_, 0, nas::encode(first)};
    queue_sdu(rrc::encode(sc));
    set_state(ue_state::nas_registering, std::string("setup complete with ") + nas::name(first));
  }

  /// Uplink MAC PDU for a grant addressed to this UE, or nothing when no data
  /// is pending.
  std::optional<transmission> on_ul_grant(const uplink_grant& g)
  {
    if (g.target != rnti_ || !connected()) {
      return std::nullopt;
    }
    if ((!tx_ || !tx_->pending()) && !tx_queue_.empty()) {
      tx_.emplace(tx_queue_.front().first, tx_queue_.front().second);
      tx_queue_.pop_front();
    }
    if (!tx_ || !tx_->pending()) {
      return std::nullopt;
    }
    const std::size_t tbs      = g.tbs_bytes;
    const std::size_t all_size = (tx_->remaining() + (tx_->min_budget() == 5 ? 4 : 2));
    std::vector<mac::subpdu> subs;
    if (dcch_size(all_size) <= tbs) {
      subs.push_back(mac::subpdu::dcch(rlc::encode(*tx_->next_segment(all_size))));
    } else if (tbs >= 2) {
      subs.push_back(mac::subpdu::short_bsr(mac::bsr_large_buffer));
      std::size_t room = tbs - 2;
      if (room > 2) {
        std::size_t budget = room - 2;
        if (budget > 255) {
          budget = room - 3;
        }
        if (budget >= tx_->min_budget()) {
          subs.push_back(mac::subpdu::dcch(rlc::encode(*tx_->next_segment(budget))));
        }
      }
    } else {
      return std::nullopt;
    }
    auto out = make_tx(g, mac::encode(mac::make_pdu(std::move(subs), tbs)));
    if (release_after_flush_ && !tx_->pending() && tx_queue_.empty()) {
      release_requested_ = true;
    }
    return out;
  }

  /// Set once the last queued uplink before a UE-initiated release has gone
  /// out; reading it clears the flag.
  bool take_release_request() { return std::exchange(release_requested_, false); }

  nas_outcome on_nas(const nas::message& m)
  {
    if (!connected() || state_ == ue_state::rrc_connected) {
      return {false, true, "NAS " + nas::name(m) + " outside a connection"};
    }
    return std::visit([this](const auto& msg) { return handle(msg); }, m);
  }

  /// Connection released by the network or at the end of a session.
  void release(const std::string& reason)
  {
    ++generation_;
    tx_queue_.clear();
    tx_.reset();
    rnti_ = {};
    own_cri_.reset();
    release_after_flush_ = false;
    release_requested_   = false;
    if (in_procedure() || state_ == ue_state::registered) {
      set_state(ue_state::idle, reason);
    }
  }

  /// Airplane-mode toggle: clears downgrade, disabled and reselection state.
  /// Tracking-area barring lasts for the whole run.
  void toggle()
  {
    release("toggle");
    n1_disabled_ = false;
    ra_failed_cells_.clear();
    preamble_attempts_ = 0;
    if (state_ == ue_state::downgraded_to_4g || state_ == ue_state::cellular_disabled) {
      set_state(ue_state::idle, "toggle");
    }
    reselect("toggle");
  }

  std::vector<state_change> take_changes() { return std::exchange(changes_, {}); }

private:
  const cell_info& cell(std::uint32_t id) const
  {
    for (const auto& c : cells_) {
      if (c.cell_id == id) {
        return c;
      }
    }
    throw usage_error("ue: unknown cell " + std::to_string(id));
  }

  bool connected() const
  {
    return state_ == ue_state::rrc_connected || state_ == ue_state::nas_registering ||
           state_ == ue_state::nas_authenticating || state_ == ue_state::nas_security_mode ||
           state_ == ue_state::registered;
  }

  static std::size_t dcch_size(std::size_t rlc_bytes) { return rlc_bytes + (rlc_bytes > 255 ? 3 : 2); }

  void set_state(ue_state s, std::string reason)
  {
    if (s == state_ && reason.empty()) {
      return;
    }
    changes_.push_back({state_, s, std::move(reason)});
    state_ = s;
  }

  /// Strongest usable 5G cell, else the strongest 4G cell.
  void reselect(const std::string& why)
  {
    if (state_ != ue_state::idle) {
      return;
    }
    const cell_info* best_nr  = nullptr;
    const cell_info* best_lte = nullptr;
    for (const auto& c : cells_) {
      if (barred_tas_.contains(c.tracking_area) && c.rat == radio_access::nr) {
        continue;
      }
      if (c.rat == radio_access::nr) {
        if (n1_disabled_ || ra_failed_cells_.contains(c.cell_id)) {
          continue;
        }
        if (!best_nr || c.tx_power_dbm > best_nr->tx_power_dbm) {
          best_nr = &c;
        }
      } else if (!best_lte || c.tx_power_dbm > best_lte->tx_power_dbm) {
        best_lte = &c;
      }
    }
    if (best_nr) {
      serving_cell_ = best_nr->cell_id;
      if (why != "initial cell selection") {
        changes_.push_back({state_, state_, why + ": camp on cell " + std::to_string(best_nr->cell_id)});
      }
      return;
    }
    serving_cell_.reset();
    if (best_lte) {
      serving_cell_ = best_lte->cell_id;
    }
    set_state(ue_state::downgraded_to_4g,
              why + (best_lte ? ": camp on 4G cell " + std::to_string(best_lte->cell_id) : ": no 4G cell"));
  }

  void downgrade(const std::string& why, bool disable_n1)
  {
    release_radio();
    set_state(ue_state::idle, "");
    n1_disabled_ = n1_disabled_ || disable_n1;
    std::string note = why;
    if (cfg_.downgrade_delay_s > 0) {
      note += " (nominal delay " + std::to_string(cfg_.downgrade_delay_s) + " s)";
    }
    reselect(note);
  }

  void release_radio()
  {
    tx_queue_.clear();
    tx_.reset();
    rnti_ = {};
    own_cri_.reset();
  }

  void queue_sdu(const byte_buffer& rrc_bytes)
  {
    const std::uint16_t sn = rlc_sn_++;
    tx_queue_.emplace_back(sn, pdcp::encode(pdcp::pdu{sn, rrc_bytes, {}}));
  }

  void queue_nas(const nas::message& m) { queue_sdu(rrc::encode(rrc::ul_information_transfer{nas::encode(m)})); }

  transmission make_tx(const uplink_grant& g, byte_buffer bytes) const
  {
    transmission t;
    t.allocation_id      = g.allocation_id;
    t.sender             = ue_entity(index_);
    t.payload            = std::move(bytes);
    t.tx_power_dbm       = cfg_.tx_power_dbm;
    t.timing_advance_us  = timing_advance_us_;
    t.sender_distance_us = cfg_.distance_us;
    return t;
  }

  nas_outcome unexpected(const nas::message& m) { return {false, true, "unexpected " + nas::name(m) + " in " + std::string(to_string(state_))}; }

  nas_outcome handle(const nas::service_reject&)
  {
    cfg_.tmsi.reset();
    release_radio();
    set_state(ue_state::idle, "service reject: session cleared");
    return {true, false, "re-register"};
  }

  nas_outcome handle(const nas::service_accept& m)
  {
    if (state_ != ue_state::nas_registering) {
      return unexpected(m);
    }
    set_state(ue_state::registered, "service accept");
    return {};
  }

  nas_outcome handle(const nas::identity_request&)
  {
    queue_nas(nas::identity_response{conceal_supi(cfg_.id, cfg_.network_key, rng_)});
    return {false, false, "identity response"};
  }

  nas_outcome handle(const nas::authentication_request& m)
  {
    const block128 expected = aka::autn_of(cfg_.key, m.rand);
    set_state(ue_state::nas_authenticating, "");
    if (constant_time_equal(expected, m.autn)) {
      queue_nas(nas::authentication_response{aka::res_of(cfg_.key, m.rand)});
      return {false, false, "autn verified"};
    }
    queue_nas(nas::authentication_failure{nas::cause::mac_failure});
    return {false, false, "autn mismatch"};
  }

  nas_outcome handle(const nas::authentication_reject&)
  {
    cfg_.tmsi.reset();
    switch (cfg_.profile.on_auth_reject) {
      case auth_reject_action::downgrade_to_4g:
        downgrade("authentication reject", true);
        return {};
      case auth_reject_action::persistent_dos:
        release_radio();
        set_state(ue_state::cellular_disabled, "authentication reject");
        return {};
      case auth_reject_action::retry_5g:
        release_radio();
        set_state(ue_state::idle, "authentication reject: retry 5G");
        return {true, false, "retry"};
    }
    return {};
  }

  nas_outcome handle(const nas::security_mode_command& m)
  {
    set_state(ue_state::nas_security_mode, "");
    if (m.replayed_capabilities == cfg_.capabilities) {
      queue_nas(nas::security_mode_complete{});
      return {false, false, "capabilities match"};
    }
    queue_nas(nas::security_mode_reject{nas::cause::ue_security_capabilities_mismatch});
    release_after_flush_ = true;
    return {false, false, "capabilities " + m.replayed_capabilities.str() + " != " + cfg_.capabilities.str()};
  }

  nas_outcome handle(const nas::registration_reject& m)
  {
    if (m.cause == nas::cause::no_suitable_cells_in_ta) {
      if (serving_cell_) {
        barred_tas_.insert(cell(*serving_cell_).tracking_area);
      }
      release_radio();
      set_state(ue_state::barred, "registration reject #15: tracking area barred");
      downgrade("registration reject #15", false);
      return {};
    }
    if (m.cause == nas::cause::n1_mode_not_allowed) {
      downgrade("registration reject #27: N1 mode disabled", true);
      return {};
    }
    release_radio();
    set_state(ue_state::idle, "registration reject #" + std::to_string(m.cause));
    return {};
  }

  nas_outcome handle(const nas::registration_accept& m)
  {
    cfg_.tmsi = m.new_tmsi;
    set_state(ue_state::registered, "registration accept, tmsi " + to_hex_u64(m.new_tmsi.value));
    return {};
  }

  template <typename T>
  nas_outcome handle(const T& m)
  {
    return unexpected(nas::message{m});
  }

  std::uint32_t                     index_;
  ue_config                         cfg_;
  std::vector<cell_info>            cells_;
  sim_rng                           rng_;
  ue_state                          state_ = ue_state::idle;
  std::optional<std::uint32_t>      serving_cell_;
  std::set<std::uint32_t>           ra_failed_cells_;
  std::set<std::uint32_t>           barred_tas_;
  bool                              n1_disabled_       = false;
  std::uint32_t                     preamble_attempts_ = 0;
  std::uint64_t                     total_preambles_   = 0;
  std::uint64_t                     generation_        = 0;
  std::uint8_t                      preamble_index_    = 0;
  rnti                              rnti_;
  double                            timing_advance_us_ = 0.0;
  std::optional<rrc::cri_t>         own_cri_;
  std::uint8_t                      transaction_id_ = 0;
  std::uint16_t                     rlc_sn_         = 0;
  std::deque<std::pair<std::uint16_t, byte_buffer>> tx_queue_;
  std::optional<rlc::transmitter>   tx_;
  bool                              release_after_flush_ = false;
  bool                              release_requested_   = false;
  std::vector<state_change>         changes_;
};

} // namespace ovs

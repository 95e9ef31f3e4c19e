#pragma once

// Scenario documents: JSON parsing with field-level validation, dotted-path
// overrides, and expansion of UE groups into individual UEs and subscribers.

#include "ovs/amf.hpp"
#include "ovs/attacker.hpp"
#include "ovs/cell.hpp"
#include "ovs/gnb.hpp"
#include "ovs/ue.hpp"

#include <json.hpp>

#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace ovs::sim {

using json = nlohmann::json;

/// Validation failure listing every offending field.
class scenario_error : public std::runtime_error
{
public:
  explicit scenario_error(std::vector<std::string> problems) :
    std::runtime_error(join(problems)), problems_(std::move(problems))
  {
  }
  const std::vector<std::string>& problems() const { return problems_; }

private:
  static std::string join(const std::vector<std::string>& p)
  {
    std::string out = "invalid scenario:";
    for (const auto& s : p) {
      out += "\n  " + s;
    }
    return out;
  }
  std::vector<std::string> problems_;
};

enum class cadence_mode { reconnect, toggle };

struct ue_spec {
  ue_config     cfg;
  double        connect_cadence_s = 0.0;
  double        start_s           = 0.0;
  cadence_mode  mode              = cadence_mode::reconnect;
  std::uint64_t cadence_count     = 0; ///< 0 = until the end of the run
  bool          subscriber        = true;
  bool          allowed_5g        = true;
};

struct expectation {
  std::optional<double> eq;
  std::optional<double> min;
  std::optional<double> max;
};

struct scenario {
  std::string                        name = "unnamed";
  std::uint64_t                      seed = 1;
  double                             duration_s = 10.0;
  capture_config                     capture;
  std::vector<cell_info>             cells;
  gnb_config                         gnb_defaults;
  home_network_key                   network_key;
  reject_policy                      policy;
  double                             core_delay_ms   = 2.0;
  double                             nas_guard_ms    = 5000.0;
  double                             kpi_interval_s  = 60.0;
  std::vector<ue_spec>               ues;
  std::vector<subscriber_record>     extra_subscribers;
  std::optional<attack_plan>         attack;
  std::map<std::string, expectation> expect;
};

/// Deterministic per-subscriber key so scenario files need not list keys.
inline key128 derive_subscriber_key(supi id)
{
  static constexpr key128  label{'s', 'u', 'b', 's', 'c', 'r', 'i', 'b', 'e', 'r', '-', 'k', 'e', 'y', 's', '!'};
  byte_buffer              v;
  put_uint_be(v, id.value, 8);
  return prf128(label, {v});
}

inline key128 parse_key(const std::string& hex)
{
  const auto b = from_hex(hex);
  if (b.size() != 16) {
    throw usage_error("key must be 16 bytes");
  }
  key128 k{};
  std::copy(b.begin(), b.end(), k.begin());
  return k;
}

inline tmsi48 parse_tmsi(const json& v)
{
  if (v.is_number_unsigned()) {
    return tmsi48{v.get<std::uint64_t>()};
  }
  if (v.is_string()) {
    std::string s = v.get<std::string>();
    std::size_t pos = 0;
    const auto  x   = std::stoull(s, &pos, 0);
    if (pos != s.size() || x > tmsi48::mask) {
      throw usage_error("tmsi out of range: " + s);
    }
    return tmsi48{x};
  }
  throw usage_error("tmsi must be a number or string");
}

namespace detail {

/// Walks a JSON object, collecting every problem instead of stopping at the
/// first one.
class reader
{
public:
  reader(const json& node, std::string path, std::vector<std::string>& errors) :
    node_(node), path_(std::move(path)), errors_(errors)
  {
    if (!node_.is_object()) {
      fail("", "must be an object");
    }
  }

  bool has(const char* key) const { return node_.is_object() && node_.contains(key); }

  const json& raw(const char* key) const { return node_.at(key); }

  std::string at(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

  void fail(const std::string& key, const std::string& msg) const
  {
    errors_.push_back((key.empty() ? (path_.empty() ? "<root>" : path_) : at(key.c_str())) + ": " + msg);
  }

  template <typename T>
  T get(const char* key, T fallback) const
  {
    if (!has(key)) {
      return fallback;
    }
    try {
      return node_.at(key).get<T>();
    } catch (const json::exception&) {
      fail(key, "has the wrong type");
      return fallback;
    }
  }

  double number(const char* key, double fallback, double lo, double hi) const
  {
    const double v = get<double>(key, fallback);
    if (!(v >= lo && v <= hi)) {
      fail(key, "must be within [" + fmt(lo) + ", " + fmt(hi) + "]");
      return fallback;
    }
    return v;
  }

  std::uint64_t integer(const char* key, std::uint64_t fallback, std::uint64_t lo, std::uint64_t hi) const
  {
    if (!has(key)) {
      return fallback;
    }
    const auto& v = node_.at(key);
    if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0)) {
      fail(key, "must be a non-negative integer");
      return fallback;
    }
    const auto x = v.get<std::uint64_t>();
    if (x < lo || x > hi) {
      fail(key, "must be within [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
      return fallback;
    }
    return x;
  }

  template <typename F>
  auto parse(const char* key, F&& fn, decltype(fn(std::string{})) fallback) const
  {
    if (!has(key)) {
      return fallback;
    }
    try {
      return fn(node_.at(key).get<std::string>());
    } catch (const std::exception& e) {
      fail(key, e.what());
      return fallback;
    }
  }

  void only(std::initializer_list<const char*> allowed) const
  {
    if (!node_.is_object()) {
      return;
    }
    for (const auto& [k, v] : node_.items()) {
      bool ok = false;
      for (const char* a : allowed) {
        ok = ok || k == a;
      }
      if (!ok) {
        fail(k, "unknown field");
      }
    }
  }

  reader child(const char* key) const { return reader(node_.at(key), at(key), errors_); }

private:
  static std::string fmt(double v)
  {
    std::ostringstream os;
    os << v;
    return os.str();
  }

  const json&               node_;
  std::string               path_;
  std::vector<std::string>& errors_;
};

inline nas::security_capabilities parse_caps(const reader& r, const char* key, nas::security_capabilities fallback)
{
  if (!r.has(key)) {
    return fallback;
  }
  try {
    nas::security_capabilities c;
    for (const auto& t : r.raw(key)) {
      c.add(t.get<std::string>());
    }
    return c;
  } catch (const std::exception& e) {
    r.fail(key, e.what());
    return fallback;
  }
}

} // namespace detail

/// Applies `path=value` to a JSON document. Path segments are object keys or
/// array indices; the value is parsed as JSON and falls back to a string.
inline void apply_override(json& doc, const std::string& assignment)
{
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw scenario_error({"override '" + assignment + "': expected key=value"});
  }
  const std::string path = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json              value;
  try {
    value = json::parse(text);
  } catch (const json::exception&) {
    value = text;
  }
  json*             node = &doc;
  std::stringstream ss(path);
  std::string       seg;
  std::vector<std::string> segs;
  while (std::getline(ss, seg, '.')) {
    segs.push_back(seg);
  }
  for (std::size_t i = 0; i < segs.size(); ++i) {
    const bool last = i + 1 == segs.size();
    if (node->is_array()) {
      std::size_t idx = 0;
      try {
        idx = std::stoul(segs[i]);
      } catch (const std::exception&) {
        throw scenario_error({"override '" + path + "': '" + segs[i] + "' is not an array index"});
      }
      if (idx >= node->size()) {
        throw scenario_error({"override '" + path + "': index " + segs[i] + " out of range"});
      }
      node = &(*node)[idx];
    } else {
      if (!node->is_object() && !node->is_null()) {
        throw scenario_error({"override '" + path + "': '" + segs[i] + "' is not inside an object"});
      }
      node = &(*node)[segs[i]];
    }
    if (last) {
      *node = value;
    }
  }
}

inline attack_plan parse_attack(const detail::reader& r, const home_network_key& hk, sim_rng& conceal_rng)
{
  r.only({"strategy", "target_cell", "power_offset_db", "victim_power_dbm", "distance_us", "ta_mode", "cost_preset",
          "cost_scale", "jitter", "radio_rtt_us", "target_filter", "target_suci", "target_supi", "whitelist_mode",
          "replay_capabilities", "downgrade_supi", "max_repeats", "attacker_rx_margin_db", "verdict_window_ms"});
  attack_plan p;
  if (!r.has("strategy")) {
    r.fail("strategy", "is required");
  }
  p.strategy         = r.parse("strategy", parse_attack_strategy, p.strategy);
  p.target_cell      = static_cast<std::uint32_t>(r.integer("target_cell", 1, 0, 1u << 30));
  p.power_offset_db  = r.number("power_offset_db", p.power_offset_db, -100.0, 100.0);
  p.victim_power_dbm = r.number("victim_power_dbm", p.victim_power_dbm, -100.0, 100.0);
  p.distance_us      = r.number("distance_us", p.distance_us, 0.0, 1000.0);
  p.ta               = r.parse("ta_mode", parse_ta_mode, p.ta);
  p.costs            = r.parse("cost_preset", cost_presets::by_name, p.costs);
  p.costs            = p.costs.scaled(r.number("cost_scale", 1.0, 0.0, 1e6));
  p.costs.radio_rtt_us = r.number("radio_rtt_us", p.costs.radio_rtt_us, 0.0, 1e6);
  p.jitter           = r.get<bool>("jitter", false);
  p.whitelist_mode   = r.get<bool>("whitelist_mode", false);
  p.replay_capabilities = detail::parse_caps(r, "replay_capabilities", p.replay_capabilities);
  p.max_repeats      = static_cast<std::uint32_t>(r.integer("max_repeats", p.max_repeats, 1, 100));
  p.attacker_rx_margin_db = r.number("attacker_rx_margin_db", p.attacker_rx_margin_db, 0.0, 100.0);
  p.verdict_window_ns = from_ms(r.number("verdict_window_ms", 1000.0, 1.0, 1e7));
  if (r.has("target_filter")) {
    try {
      std::vector<tmsi48> f;
      for (const auto& t : r.raw("target_filter")) {
        f.push_back(parse_tmsi(t));
      }
      p.target_filter = std::move(f);
    } catch (const std::exception& e) {
      r.fail("target_filter", e.what());
    }
  }
  if (r.has("target_suci")) {
    p.target_suci = r.parse("target_suci", [](const std::string& h) { return decode_suci(from_hex(h)); }, suci{});
  } else if (r.has("target_supi")) {
    p.target_suci = conceal_supi(supi{r.integer("target_supi", 0, 0, UINT64_MAX)}, hk, conceal_rng);
  }
  if (r.has("downgrade_supi")) {
    p.downgrade_suci = conceal_supi(supi{r.integer("downgrade_supi", 0, 0, UINT64_MAX)}, hk, conceal_rng);
  }
  if (p.strategy == attack_strategy::suci_replay && !p.target_suci) {
    r.fail("target_suci", "SuciReplay needs target_suci or target_supi");
  }
  if (p.strategy == attack_strategy::registration_reject_downgrade && !p.downgrade_suci) {
    r.fail("downgrade_supi", "RegistrationRejectDowngrade needs downgrade_supi");
  }
  return p;
}

inline scenario parse_scenario(const json& doc)
{
  std::vector<std::string> errors;
  detail::reader           root(doc, "", errors);
  if (!doc.is_object()) {
    throw scenario_error(errors);
  }
  root.only({"name", "description", "seed", "duration_s", "capture", "cells", "gnb", "core", "ue_defaults", "ues",
             "subscribers", "attack", "expect", "kpi_interval_s"});

  scenario sc;
  sc.name           = root.get<std::string>("name", sc.name);
  sc.seed           = root.integer("seed", sc.seed, 0, UINT64_MAX);
  sc.duration_s     = root.number("duration_s", sc.duration_s, 0.001, 86400.0);
  sc.kpi_interval_s = root.number("kpi_interval_s", sc.kpi_interval_s, 0.001, 86400.0);

  if (root.has("capture")) {
    auto c = root.child("capture");
    c.only({"margin_db", "ta_tolerance_us"});
    sc.capture.capture_margin_db = c.number("margin_db", sc.capture.capture_margin_db, 0.0, 100.0);
    sc.capture.ta_tolerance_us   = c.number("ta_tolerance_us", sc.capture.ta_tolerance_us, 0.0, 1000.0);
  }

  if (root.has("gnb")) {
    auto g = root.child("gnb");
    g.only({"msg3_tbs", "large_grant_tbs", "max_tbs", "rar_window_slots", "msg3_empty_policy", "rnti_quarantine_ms"});
    auto& d            = sc.gnb_defaults;
    d.msg3_tbs         = static_cast<std::uint32_t>(g.integer("msg3_tbs", d.msg3_tbs, 7, 65535));
    d.large_grant_tbs  = static_cast<std::uint32_t>(g.integer("large_grant_tbs", d.large_grant_tbs, 7, 65535));
    d.max_tbs          = static_cast<std::uint32_t>(g.integer("max_tbs", std::max<std::uint64_t>(d.max_tbs, d.large_grant_tbs), 7, 65535));
    d.rar_window_slots = static_cast<std::uint32_t>(g.integer("rar_window_slots", d.rar_window_slots, 1, 1000));
    d.empty_policy     = g.parse("msg3_empty_policy", parse_msg3_empty_policy, d.empty_policy);
    d.rnti_quarantine_ns = from_ms(g.number("rnti_quarantine_ms", 100.0, 0.0, 1e6));
    if (d.large_grant_tbs < d.msg3_tbs || d.max_tbs < d.large_grant_tbs) {
      g.fail("", "requires msg3_tbs <= large_grant_tbs <= max_tbs");
    }
  }

  if (root.has("core")) {
    auto c = root.child("core");
    c.only({"delay_ms", "reject_policy", "home_network_key", "home_network_key_id", "nas_guard_ms"});
    sc.core_delay_ms = c.number("delay_ms", sc.core_delay_ms, 0.0, 10000.0);
    sc.nas_guard_ms  = c.number("nas_guard_ms", sc.nas_guard_ms, 1.0, 1e7);
    if (c.has("home_network_key")) {
      sc.network_key.key = c.parse("home_network_key", parse_key, sc.network_key.key);
    }
    sc.network_key.key_id = static_cast<std::uint8_t>(c.integer("home_network_key_id", 1, 0, 255));
    if (c.has("reject_policy")) {
      auto p = c.child("reject_policy");
      p.only({"not_allowed_5g", "unknown_subscriber"});
      sc.policy.not_allowed_5g     = static_cast<std::uint8_t>(p.integer("not_allowed_5g", sc.policy.not_allowed_5g, 1, 255));
      sc.policy.unknown_subscriber = static_cast<std::uint8_t>(p.integer("unknown_subscriber", sc.policy.unknown_subscriber, 1, 255));
    }
  }
  if (!root.has("core") || !doc["core"].contains("home_network_key")) {
    sc.network_key.key = derive_subscriber_key(supi{sc.seed ^ 0x686e6b});
  }

  std::set<std::uint32_t> cell_ids;
  if (!root.has("cells") || !doc["cells"].is_array() || doc["cells"].empty()) {
    root.fail("cells", "must be a non-empty array");
  } else {
    for (std::size_t i = 0; i < doc["cells"].size(); ++i) {
      detail::reader c(doc["cells"][i], "cells." + std::to_string(i), errors);
      c.only({"id", "tracking_area", "rat", "tx_power_dbm", "k2"});
      cell_info ci;
      if (!c.has("id")) {
        c.fail("id", "is required");
      }
      ci.cell_id       = static_cast<std::uint32_t>(c.integer("id", i + 1, 0, 1u << 30));
      ci.tracking_area = static_cast<std::uint32_t>(c.integer("tracking_area", 1, 0, 1u << 24));
      ci.rat           = c.parse("rat", parse_radio_access, radio_access::nr);
      ci.tx_power_dbm  = c.number("tx_power_dbm", 30.0, -100.0, 100.0);
      ci.k2            = static_cast<std::uint32_t>(c.integer("k2", 3, 1, 32));
      if (!cell_ids.insert(ci.cell_id).second) {
        c.fail("id", "duplicate cell id");
      }
      sc.cells.push_back(ci);
    }
  }

  ue_config defaults;
  defaults.network_key = sc.network_key;
  double default_cadence = 0.0;
  if (root.has("ue_defaults")) {
    auto d = root.child("ue_defaults");
    d.only({"preamble_trans_max", "preamble_pool", "contention_timer_ms", "max_backoff_ms", "tx_power_dbm",
            "capabilities", "downgrade_delay_s", "distance_us", "connect_cadence_s"});
    defaults.preamble_trans_max  = static_cast<std::uint32_t>(d.integer("preamble_trans_max", 200, 1, 1000000));
    defaults.preamble_pool       = static_cast<std::uint32_t>(d.integer("preamble_pool", 64, 1, 64));
    defaults.contention_timer_ns = from_ms(d.number("contention_timer_ms", 64.0, 0.5, 100000.0));
    defaults.max_backoff_ns      = from_ms(d.number("max_backoff_ms", 1920.0, 0.0, 1e6));
    defaults.tx_power_dbm        = d.number("tx_power_dbm", defaults.tx_power_dbm, -100.0, 100.0);
    defaults.capabilities        = detail::parse_caps(d, "capabilities", defaults.capabilities);
    defaults.downgrade_delay_s   = d.number("downgrade_delay_s", 0.0, 0.0, 1e6);
    defaults.distance_us         = d.number("distance_us", defaults.distance_us, 0.0, 1000.0);
    default_cadence              = d.number("connect_cadence_s", 0.0, 0.0, 1e6);
  }

  std::map<std::string, ue_profile> profiles;
  for (const auto& p : builtin_profiles()) {
    profiles[p.name] = p;
  }

  sim_rng tmsi_rng(sc.seed ^ 0x746d7369ULL);
  std::set<std::uint64_t> supis;
  if (!root.has("ues") || !doc["ues"].is_array()) {
    root.fail("ues", "must be an array");
  } else {
    for (std::size_t i = 0; i < doc["ues"].size(); ++i) {
      detail::reader u(doc["ues"][i], "ues." + std::to_string(i), errors);
      u.only({"count", "profile", "profiles", "on_ra_failure", "on_auth_reject", "supi", "key", "tmsi", "with_tmsi",
              "distance_us", "connect_cadence_s", "start_s", "cadence_mode", "cadence_count", "capabilities",
              "tx_power_dbm", "subscriber", "allowed_5g"});
      const auto count = u.integer("count", 1, 1, 100000);
      std::vector<std::string> names;
      if (u.has("profiles")) {
        try {
          names = u.raw("profiles").get<std::vector<std::string>>();
        } catch (const json::exception&) {
          u.fail("profiles", "must be a list of profile names");
        }
      } else {
        names.push_back(u.get<std::string>("profile", "generic"));
      }
      std::vector<ue_profile> resolved;
      for (const auto& n : names) {
        if (auto it = profiles.find(n); it != profiles.end()) {
          resolved.push_back(it->second);
        } else if (n == "generic" || u.has("on_ra_failure") || u.has("on_auth_reject")) {
          ue_profile p;
          p.name           = n;
          p.on_ra_failure  = u.parse("on_ra_failure", parse_ra_failure_action, p.on_ra_failure);
          p.on_auth_reject = u.parse("on_auth_reject", parse_auth_reject_action, p.on_auth_reject);
          resolved.push_back(p);
        } else {
          u.fail("profile", "unknown profile '" + n + "'");
        }
      }
      if (resolved.empty()) {
        resolved.push_back(ue_profile{});
      }
      if (!u.has("supi")) {
        u.fail("supi", "is required");
      }
      const std::uint64_t base_supi = u.integer("supi", 0, 0, UINT64_MAX);
      const bool          with_tmsi = u.get<bool>("with_tmsi", false);
      std::optional<tmsi48> tmsi;
      if (u.has("tmsi")) {
        try {
          tmsi = parse_tmsi(u.raw("tmsi"));
        } catch (const std::exception& e) {
          u.fail("tmsi", e.what());
        }
        if (count != 1) {
          u.fail("tmsi", "only valid for a single UE; use with_tmsi for groups");
        }
      }
      ue_spec base;
      base.cfg                   = defaults;
      base.cfg.distance_us       = u.number("distance_us", defaults.distance_us, 0.0, 1000.0);
      base.cfg.tx_power_dbm      = u.number("tx_power_dbm", defaults.tx_power_dbm, -100.0, 100.0);
      base.cfg.capabilities      = detail::parse_caps(u, "capabilities", defaults.capabilities);
      base.connect_cadence_s     = u.number("connect_cadence_s", default_cadence, 0.0, 1e6);
      base.start_s               = u.number("start_s", 0.0, 0.0, 1e6);
      base.mode = u.parse("cadence_mode", [](const std::string& s) {
        if (s == "reconnect") {
          return cadence_mode::reconnect;
        }
        if (s == "toggle") {
          return cadence_mode::toggle;
        }
        throw usage_error("must be reconnect or toggle");
      }, cadence_mode::reconnect);
      base.cadence_count = u.integer("cadence_count", 0, 0, UINT64_MAX);
      base.subscriber    = u.get<bool>("subscriber", true);
      base.allowed_5g    = u.get<bool>("allowed_5g", true);
      const std::optional<key128> key =
          u.has("key") ? std::optional<key128>(u.parse("key", parse_key, key128{})) : std::nullopt;
      for (std::uint64_t k = 0; k < count; ++k) {
        ue_spec s     = base;
        s.cfg.profile = resolved[k % resolved.size()];
        s.cfg.id      = supi{base_supi + k};
        s.cfg.key     = key.value_or(derive_subscriber_key(s.cfg.id));
        if (tmsi) {
          s.cfg.tmsi = tmsi;
        } else if (with_tmsi) {
          s.cfg.tmsi = tmsi48{tmsi_rng.next_u64() | 1};
        }
        if (!supis.insert(s.cfg.id.value).second) {
          u.fail("supi", "duplicate supi " + std::to_string(s.cfg.id.value));
          break;
        }
        sc.ues.push_back(std::move(s));
      }
    }
  }

  if (root.has("subscribers")) {
    if (!doc["subscribers"].is_array()) {
      root.fail("subscribers", "must be an array");
    } else {
      for (std::size_t i = 0; i < doc["subscribers"].size(); ++i) {
        detail::reader s(doc["subscribers"][i], "subscribers." + std::to_string(i), errors);
        s.only({"supi", "key", "allowed_5g", "tmsi"});
        subscriber_record r;
        if (!s.has("supi")) {
          s.fail("supi", "is required");
        }
        r.id         = supi{s.integer("supi", 0, 0, UINT64_MAX)};
        r.key        = s.has("key") ? s.parse("key", parse_key, key128{}) : derive_subscriber_key(r.id);
        r.allowed_5g = s.get<bool>("allowed_5g", true);
        if (s.has("tmsi")) {
          try {
            r.home_tmsi = parse_tmsi(s.raw("tmsi"));
          } catch (const std::exception& e) {
            s.fail("tmsi", e.what());
          }
        }
        if (!supis.insert(r.id.value).second) {
          s.fail("supi", "duplicate supi " + std::to_string(r.id.value));
        }
        sc.extra_subscribers.push_back(r);
      }
    }
  }

  for (auto& u : sc.ues) {
    u.cfg.network_key = sc.network_key;
  }

  if (root.has("attack") && !doc["attack"].is_null()) {
    sim_rng conceal_rng(sc.seed ^ 0x61747461636bULL);
    sc.attack = parse_attack(root.child("attack"), sc.network_key, conceal_rng);
    if (!cell_ids.contains(sc.attack->target_cell)) {
      root.fail("attack.target_cell", "names no configured cell");
    }
  }

  if (root.has("expect")) {
    if (!doc["expect"].is_object()) {
      root.fail("expect", "must be an object");
    } else {
      for (const auto& [metric, rule] : doc["expect"].items()) {
        detail::reader e(rule, "expect." + metric, errors);
        e.only({"eq", "min", "max"});
        expectation x;
        if (e.has("eq")) {
          x.eq = e.get<double>("eq", 0.0);
        }
        if (e.has("min")) {
          x.min = e.get<double>("min", 0.0);
        }
        if (e.has("max")) {
          x.max = e.get<double>("max", 0.0);
        }
        sc.expect[metric] = x;
      }
    }
  }

  if (!errors.empty()) {
    throw scenario_error(errors);
  }
  return sc;
}

inline json load_scenario_json(const std::string& path)
{
  std::ifstream in(path);
  if (!in) {
    throw scenario_error({path + ": cannot open"});
  }
  try {
    return json::parse(in, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw scenario_error({path + ": " + e.what()});
  }
}

inline scenario load_scenario(const std::string& path, const std::vector<std::string>& overrides = {})
{
  json doc = load_scenario_json(path);
  for (const auto& o : overrides) {
    apply_override(doc, o);
  }
  return parse_scenario(doc);
}

} // namespace ovs::sim

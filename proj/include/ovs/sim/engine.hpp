#pragma once

// Discrete-event loop wiring UEs, gNBs, the AMF and the attacker together.

#include "ovs/sim/scenario.hpp"
#include "ovs/sim/trace.hpp"

#include <functional>
#include <map>
#include <memory>
#include <queue>
#include <set>
#include <string>
#include <vector>

namespace ovs::sim {

using ojson = nlohmann::ordered_json;

struct kpi_counters {
  std::uint64_t preambles                  = 0;
  std::uint64_t failed_connection_attempts = 0;
  std::uint64_t contention_failures        = 0;
  std::uint64_t successful_connections     = 0;
  std::uint64_t registration_rejects       = 0;
  std::uint64_t service_rejects            = 0;
  std::uint64_t identity_requests          = 0;
  std::uint64_t auth_rejects               = 0;
  std::uint64_t registration_accepts       = 0;
  std::uint64_t service_accepts            = 0;

  ojson to_json() const
  {
    return ojson{{"preambles", preambles},
                 {"failed_connection_attempts", failed_connection_attempts},
                 {"contention_failures", contention_failures},
                 {"successful_connections", successful_connections},
                 {"registration_rejects", registration_rejects},
                 {"service_rejects", service_rejects},
                 {"identity_requests", identity_requests},
                 {"auth_rejects", auth_rejects},
                 {"registration_accepts", registration_accepts},
                 {"service_accepts", service_accepts}};
  }
};

struct ue_summary {
  std::uint32_t                index = 0;
  std::string                  profile;
  supi                         id;
  ue_state                     state = ue_state::idle;
  std::optional<std::uint32_t> serving_cell;
  std::optional<tmsi48>        initial_tmsi;
  std::optional<tmsi48>        tmsi;
  std::uint64_t                preambles = 0;
  std::uint64_t                connections = 0;
};

struct run_report {
  std::string   name;
  std::uint64_t seed       = 0;
  double        duration_s = 0.0;

  kpi_counters                           kpis;
  std::map<std::uint32_t, std::uint64_t> connections_by_cell;
  std::optional<std::uint32_t>           attacked_cell;

  std::uint64_t grants_issued   = 0;
  std::uint64_t grants_decoded  = 0;
  std::uint64_t grants_collided = 0;
  std::uint64_t grants_unused   = 0;
  std::uint64_t grants_pending  = 0;
  std::uint64_t msg3_aborted    = 0;

  std::uint64_t attacked_cell_rars             = 0;
  std::uint64_t attacked_cell_rars_overshadowed = 0;

  attacker_stats attacker;
  std::uint64_t  injected_connections               = 0;
  std::uint64_t  attacked_registrations             = 0;
  std::uint64_t  attacked_registrations_rejected    = 0;
  std::uint64_t  attacked_service_requests          = 0;
  std::uint64_t  attacked_service_requests_rejected = 0;
  std::uint64_t  cadence_attempts                   = 0;
  std::uint64_t  attacked_attempts                  = 0;
  std::vector<captured_identity> captured;
  std::vector<replay_verdict>    verdicts;

  std::uint64_t amf_events               = 0;
  std::uint64_t amf_events_attacked_cell = 0;
  std::uint64_t attacker_dl_transmissions = 0;

  std::vector<ue_summary> ues;
  std::uint64_t           events_processed = 0;
  std::uint64_t           trace_lines      = 0;
  std::uint64_t           trace_digest     = 0;

  double rar_overshadow_rate() const
  {
    return attacked_cell_rars == 0 ? 0.0
                                   : static_cast<double>(attacked_cell_rars_overshadowed) / attacked_cell_rars;
  }

  std::uint64_t verdict_count(replay_verdict v) const
  {
    return static_cast<std::uint64_t>(std::count(verdicts.begin(), verdicts.end(), v));
  }

  /// Flat name -> value view used by scenario expectations and the totals
  /// line of the report.
  std::map<std::string, double> metrics() const
  {
    std::map<std::string, double> m;
    const auto counters = kpis.to_json();
    for (const auto& [k, v] : counters.items()) {
      m["kpi." + k] = v.get<double>();
    }
    for (const auto& [cell, n] : connections_by_cell) {
      m["connections.cell." + std::to_string(cell)] = static_cast<double>(n);
    }
    m["attacked_cell_connections"] =
        attacked_cell ? static_cast<double>(connections_by_cell.count(*attacked_cell) ? connections_by_cell.at(*attacked_cell) : 0) : 0.0;
    m["grants.issued"]    = static_cast<double>(grants_issued);
    m["grants.pending"]   = static_cast<double>(grants_pending);
    m["grants.decoded"]   = static_cast<double>(grants_decoded);
    m["grants.collided"]  = static_cast<double>(grants_collided);
    m["grants.unused"]    = static_cast<double>(grants_unused);
    m["msg3_aborted"]     = static_cast<double>(msg3_aborted);
    m["rars.attacked_cell"]  = static_cast<double>(attacked_cell_rars);
    m["rars.overshadowed"]   = static_cast<double>(attacked_cell_rars_overshadowed);
    m["rar_overshadow_rate"] = rar_overshadow_rate();
    m["attacker.deadline_misses"]    = static_cast<double>(attacker.deadline_misses);
    m["attacker.transmissions"]      = static_cast<double>(attacker.transmissions);
    m["attacker.connections_armed"]  = static_cast<double>(attacker.connections_armed);
    m["attacker.connections_exempt"] = static_cast<double>(attacker.connections_exempt);
    m["attacker.nas_injections"]     = static_cast<double>(attacker.nas_injections);
    m["attacker.dl_transmissions"]   = static_cast<double>(attacker_dl_transmissions);
    m["injected_connections"]               = static_cast<double>(injected_connections);
    m["attacked_registrations"]             = static_cast<double>(attacked_registrations);
    m["attacked_registrations_rejected"]    = static_cast<double>(attacked_registrations_rejected);
    m["attacked_service_requests"]          = static_cast<double>(attacked_service_requests);
    m["attacked_service_requests_rejected"] = static_cast<double>(attacked_service_requests_rejected);
    m["cadence_attempts"]  = static_cast<double>(cadence_attempts);
    m["attacked_attempts"] = static_cast<double>(attacked_attempts);
    m["captured_identities"] = static_cast<double>(captured.size());
    for (auto v : {replay_verdict::suci_matches_ue, replay_verdict::suci_mismatch, replay_verdict::inconclusive}) {
      m["verdict." + std::string(to_string(v))] = static_cast<double>(verdict_count(v));
    }
    m["amf_events"]               = static_cast<double>(amf_events);
    m["amf_events.attacked_cell"] = static_cast<double>(amf_events_attacked_cell);
    for (auto s : {ue_state::idle, ue_state::ra_preamble_sent, ue_state::msg3_sent, ue_state::rrc_connected,
                   ue_state::nas_registering, ue_state::nas_authenticating, ue_state::nas_security_mode,
                   ue_state::registered, ue_state::barred, ue_state::downgraded_to_4g, ue_state::cellular_disabled}) {
      m["ue_state." + std::string(to_string(s))] = 0.0;
    }
    m["tmsi_unchanged"] = 0.0;
    for (const auto& u : ues) {
      m["ue_state." + std::string(to_string(u.state))] += 1.0;
      if (u.serving_cell) {
        m["serving_cell." + std::to_string(*u.serving_cell)] += 1.0;
      }
      if (u.initial_tmsi && u.tmsi == u.initial_tmsi) {
        m["tmsi_unchanged"] += 1.0;
      }
    }
    m["ues"] = static_cast<double>(ues.size());
    return m;
  }
};

/// Expectation failures of a scenario against a finished run.
inline std::vector<std::string> check_expectations(const scenario& sc, const run_report& r)
{
  std::vector<std::string> out;
  const auto               m = r.metrics();
  for (const auto& [name, e] : sc.expect) {
    auto it = m.find(name);
    if (it == m.end()) {
      out.push_back(name + ": no such metric");
      continue;
    }
    const double v = it->second;
    auto         show = [](double x) {
      std::ostringstream os;
      os << x;
      return os.str();
    };
    if (e.eq && std::fabs(v - *e.eq) > 1e-9) {
      out.push_back(name + " = " + show(v) + ", expected " + show(*e.eq));
    }
    if (e.min && v < *e.min - 1e-9) {
      out.push_back(name + " = " + show(v) + ", expected >= " + show(*e.min));
    }
    if (e.max && v > *e.max + 1e-9) {
      out.push_back(name + " = " + show(v) + ", expected <= " + show(*e.max));
    }
  }
  return out;
}

class simulation
{
public:
  explicit simulation(scenario sc, trace_log* trace = nullptr) : sc_(std::move(sc)), trace_(trace), rng_(sc_.seed)
  {
    if (!trace_) {
      owned_trace_ = std::make_unique<trace_log>();
      trace_       = owned_trace_.get();
    }
    end_ns_ = from_ms(sc_.duration_s * 1000.0);

    for (const auto& c : sc_.cells) {
      if (c.rat != radio_access::nr) {
        continue;
      }
      gnb_config g = sc_.gnb_defaults;
      g.cell       = c;
      cells_.emplace(c.cell_id, cell_runtime{gnb(g, rng_.fork(0x100 + c.cell_id)), {}, {}, {}});
    }

    std::vector<subscriber_record> db = sc_.extra_subscribers;
    std::vector<tmsi48>            known_tmsis;
    for (std::uint32_t i = 0; i < sc_.ues.size(); ++i) {
      const auto& u = sc_.ues[i];
      ues_.emplace_back(i, u.cfg, sc_.cells, rng_.fork(0x10000 + i));
      ue_rt_.push_back({});
      if (u.subscriber) {
        db.push_back({u.cfg.id, u.cfg.key, u.allowed_5g, u.cfg.tmsi});
      }
      if (u.cfg.tmsi) {
        known_tmsis.push_back(*u.cfg.tmsi);
      }
    }
    for (const auto& s : sc_.extra_subscribers) {
      if (s.home_tmsi) {
        known_tmsis.push_back(*s.home_tmsi);
      }
    }
    amf_.emplace(std::move(db), sc_.network_key, sc_.policy, rng_.fork(0x200));
    if (sc_.attack) {
      atk_.emplace(*sc_.attack, rng_.fork(0x300), known_tmsis);
      report_.attacked_cell = sc_.attack->target_cell;
    }
  }

  const scenario&  config() const { return sc_; }
  const attacker*  adversary() const { return atk_ ? &*atk_ : nullptr; }
  const ue_fsm&    ue(std::uint32_t i) const { return ues_.at(i); }
  const amf&       core() const { return *amf_; }
  const trace_log& trace() const { return *trace_; }

  run_report run()
  {
    report_.name       = sc_.name;
    report_.seed       = sc_.seed;
    report_.duration_s = sc_.duration_s;
    for (std::uint32_t i = 0; i < ues_.size(); ++i) {
      drain_changes(i);
      at(from_ms(sc_.ues[i].start_s * 1000.0), [this, i] { cadence(i); });
    }
    const sim_ns tick = from_ms(sc_.kpi_interval_s * 1000.0);
    for (sim_ns t = tick; t < end_ns_; t += tick) {
      at(t, [this] { kpi_tick(); });
    }
    while (!queue_.empty() && queue_.top().t < end_ns_) {
      auto ev = queue_.top();
      queue_.pop();
      now_ = ev.t;
      ++report_.events_processed;
      ev.fn();
    }
    now_ = end_ns_;
    if (atk_) {
      for (auto v : atk_->expire(std::numeric_limits<sim_ns>::max())) {
        emit(attacker_entity, trace_kind::attack_decision,
             {{"event", "verdict"}, {"verdict", to_string(v)}, {"note", "window open at end of run"}});
      }
    }
    kpi_tick();
    finish();
    return report_;
  }

private:
  struct event {
    sim_ns                t   = 0;
    std::uint64_t         seq = 0;
    std::function<void()> fn;
    bool operator>(const event& o) const { return t != o.t ? t > o.t : seq > o.seq; }
  };

  struct prach_entry {
    std::uint32_t ue;
    std::uint8_t  index;
    std::uint64_t generation;
  };

  struct allocation {
    uplink_grant              grant;
    std::uint32_t             cell = 0;
    bool                      msg3 = false;
    std::uint64_t             rar_id = 0;
    bool                      attacker_tx = false;
    std::vector<transmission> txs;
  };

  struct cell_runtime {
    gnb                                                 node;
    std::map<std::uint64_t, std::vector<prach_entry>>   prach;
    std::map<std::uint16_t, std::vector<std::uint32_t>> tc_holders;
    std::map<std::uint16_t, std::uint32_t>              connected;
  };

  struct ue_runtime {
    std::uint64_t cadence_done = 0;
    std::uint64_t attempt      = 0;
    std::uint64_t connections  = 0;
    std::set<std::uint64_t> attacked;
  };

  struct connection_record {
    std::uint32_t               cell = 0;
    std::optional<std::uint32_t> ue;
    std::optional<std::string>  injected;
    bool                        rejected = false;
  };

  struct rar_tally {
    std::size_t total    = 0;
    std::size_t resolved = 0;
    std::size_t by_attacker = 0;
  };

  void at(sim_ns t, std::function<void()> fn) { queue_.push({std::max(t, now_), ++seq_, std::move(fn)}); }

  static sim_ns next_boundary(sim_ns t) { return ((t + slot_ns - 1) / slot_ns) * slot_ns; }

  void emit(const entity_id& who, trace_kind kind, ojson detail) { trace_->emit(now_, who, kind, std::move(detail)); }

  void anomaly(const entity_id& who, const std::string& note) { emit(who, trace_kind::anomaly, {{"note", note}}); }

  bool attacked(std::uint32_t cell) const { return atk_ && sc_.attack->target_cell == cell; }

  static std::uint64_t connection_key(std::uint32_t cell, std::uint64_t serial)
  {
    return (static_cast<std::uint64_t>(cell) << 40) | serial;
  }

  void drain_changes(std::uint32_t u)
  {
    for (auto& c : ues_[u].take_changes()) {
      ojson d{{"from", to_string(c.from)}, {"to", to_string(c.to)}, {"reason", c.reason}};
      if (auto cell = ues_[u].serving_cell()) {
        d["cell"] = *cell;
      }
      emit(ue_entity(u), trace_kind::state_change, std::move(d));
    }
  }

  // -- cadence and random access -------------------------------------------

  void cadence(std::uint32_t u)
  {
    const auto& spec = sc_.ues[u];
    auto&       rt   = ue_rt_[u];
    auto&       fsm  = ues_[u];
    ++rt.cadence_done;
    if (spec.mode == cadence_mode::toggle) {
      release_ue_connection(u, "toggle");
      fsm.toggle();
      drain_changes(u);
      start_attempt(u);
    } else if (fsm.in_procedure()) {
      emit(ue_entity(u), trace_kind::state_change,
           {{"from", to_string(fsm.state())}, {"to", to_string(fsm.state())}, {"reason", "connect skipped: procedure running"}});
    } else {
      if (fsm.state() == ue_state::registered) {
        release_ue_connection(u, "session ended");
      }
      if (fsm.can_start_ra()) {
        start_attempt(u);
      }
    }
    if (spec.connect_cadence_s > 0 && (spec.cadence_count == 0 || rt.cadence_done < spec.cadence_count)) {
      at(now_ + from_ms(spec.connect_cadence_s * 1000.0), [this, u] { cadence(u); });
    }
  }

  void start_attempt(std::uint32_t u)
  {
    ++ue_rt_[u].attempt;
    ++report_.cadence_attempts;
    send_preamble(u);
  }

  void send_preamble(std::uint32_t u)
  {
    auto& fsm = ues_[u];
    auto  p   = fsm.start_ra();
    drain_changes(u);
    if (!p) {
      return;
    }
    auto it = cells_.find(p->cell_id);
    if (it == cells_.end()) {
      anomaly(ue_entity(u), "serving cell has no gNB");
      return;
    }
    ++report_.kpis.preambles;
    const auto slot = static_cast<std::uint64_t>(now_ / slot_ns);
    auto&      occ  = it->second.prach[slot];
    if (occ.empty()) {
      const std::uint32_t cell = p->cell_id;
      at(static_cast<sim_ns>(slot + 1) * slot_ns, [this, cell, slot] { process_prach(cell, slot); });
    }
    occ.push_back({u, p->index, fsm.generation()});
    emit(ue_entity(u), trace_kind::tx_ul,
         {{"layer", "prach"}, {"cell", p->cell_id}, {"summary", "preamble " + std::to_string(p->index)},
          {"attempt", fsm.preamble_attempts()}});
    const auto gen    = fsm.generation();
    const auto window = static_cast<sim_ns>(it->second.node.config().rar_window_slots + 1) * slot_ns;
    at(static_cast<sim_ns>(slot) * slot_ns + window, [this, u, gen] {
      if (ues_[u].generation() == gen && ues_[u].state() == ue_state::ra_preamble_sent) {
        ra_failure(u, "rar window expired");
      }
    });
  }

  void process_prach(std::uint32_t cell, std::uint64_t slot)
  {
    auto& cr  = cells_.at(cell);
    auto  occ = std::move(cr.prach[slot]);
    cr.prach.erase(slot);
    std::vector<preamble_rx> rx;
    for (const auto& e : occ) {
      rx.push_back({e.index, ue_entity(e.ue), ues_[e.ue].config().distance_us});
    }
    std::vector<std::string> problems;
    const auto rar = cr.node.on_preambles(symbol_time::from_slot_index(slot + 1), rx, now_, &problems);
    for (const auto& p : problems) {
      anomaly(gnb_entity(cell), p);
    }
    if (!rar) {
      return;
    }
    const std::uint64_t rar_id = ++rar_seq_;
    rars_[rar_id].total        = rar->entries.size();
    ojson grants               = ojson::array();
    for (const auto& e : rar->entries) {
      grants.push_back({{"preamble", e.preamble_index}, {"tc_rnti", e.tc_rnti.value}, {"alloc", e.grant.allocation_id},
                        {"k2", e.grant.k2}, {"tbs", e.grant.tbs_bytes}, {"ta_us", e.timing_advance_us}});
      auto& a  = allocs_[e.grant.allocation_id];
      a.grant  = e.grant;
      a.cell   = cell;
      a.msg3   = true;
      a.rar_id = rar_id;
      ++report_.grants_issued;
      const auto id = e.grant.allocation_id;
      at(grant_deadline(e.grant).absolute_ns(), [this, id] { resolve(id); });
    }
    emit(gnb_entity(cell), trace_kind::tx_dl,
         {{"layer", "rar"}, {"cell", cell}, {"summary", "rar with " + std::to_string(rar->entries.size()) + " grants"},
          {"grants", grants}});
    if (attacked(cell)) {
      ++report_.attacked_cell_rars;
      apply_decision(cell, atk_->on_rar(cell, *rar, now_), "rar");
    }
    for (const auto& o : occ) {
      auto& fsm = ues_[o.ue];
      if (fsm.generation() != o.generation) {
        continue;
      }
      for (const auto& e : rar->entries) {
        auto tx = fsm.on_rar(e);
        if (!tx) {
          continue;
        }
        cr.tc_holders[e.tc_rnti.value].push_back(o.ue);
        ul_transmit(ue_entity(o.ue), cell, e.tc_rnti, *tx, {});
        drain_changes(o.ue);
        const auto gen  = fsm.generation();
        const auto when = grant_deadline(e.grant).absolute_ns() + fsm.config().contention_timer_ns;
        at(when, [this, u = o.ue, gen] {
          if (ues_[u].generation() == gen && ues_[u].state() == ue_state::msg3_sent) {
            ++report_.kpis.contention_failures;
            ra_failure(u, "contention timer expired");
          }
        });
        break;
      }
    }
  }

  void ul_transmit(const entity_id& who, std::uint32_t cell, rnti r, const transmission& tx, const std::string& note)
  {
    auto& a = allocs_[tx.allocation_id];
    a.txs.push_back(tx);
    if (who.kind == entity_kind::attacker) {
      a.attacker_tx = true;
    }
    ojson d{{"layer", "mac"}, {"cell", cell}, {"rnti", r.value}, {"alloc", tx.allocation_id},
            {"hex", to_hex(tx.payload)}, {"summary", describe_uplink(tx.payload)}};
    if (!note.empty()) {
      d["note"] = note;
    }
    emit(who, trace_kind::tx_ul, std::move(d));
  }

  void apply_decision(std::uint32_t cell, const attack_decision& d, const char* trigger)
  {
    for (const auto& m : d.misses) {
      emit(attacker_entity, trace_kind::attack_decision, {{"event", "deadline_miss"}, {"trigger", trigger}, {"note", m}});
    }
    for (const auto& n : d.notes) {
      emit(attacker_entity, trace_kind::attack_decision, {{"event", "note"}, {"trigger", trigger}, {"note", n}});
    }
    for (const auto& a : d.txs) {
      emit(attacker_entity, trace_kind::attack_decision,
           {{"event", "transmit"}, {"trigger", trigger}, {"alloc", a.tx.allocation_id}, {"ready_ns", a.ready_ns},
            {"on_air_ns", a.on_air_ns}, {"power_dbm", a.tx.tx_power_dbm}, {"ta_us", a.tx.timing_advance_us},
            {"note", a.note}});
      const auto it = allocs_.find(a.tx.allocation_id);
      const rnti r  = it == allocs_.end() ? rnti{} : it->second.grant.target;
      ul_transmit(attacker_entity, cell, r, a.tx, a.note);
    }
  }

  void ra_failure(std::uint32_t u, const std::string& reason)
  {
    ++report_.kpis.failed_connection_attempts;
    auto& fsm  = ues_[u];
    auto  plan = fsm.on_ra_attempt_failed(reason);
    drain_changes(u);
    switch (plan.what) {
      case ue_fsm::retry_kind::backoff: {
        const auto gen = fsm.generation();
        at(now_ + plan.delay_ns, [this, u, gen] {
          if (ues_[u].generation() == gen && ues_[u].state() == ue_state::idle) {
            send_preamble(u);
          }
        });
        break;
      }
      case ue_fsm::retry_kind::reselected:
        send_preamble(u);
        break;
      case ue_fsm::retry_kind::gave_up:
        break;
    }
  }

  // -- grant resolution ----------------------------------------------------

  void resolve(std::uint64_t id)
  {
    auto node = allocs_.extract(id);
    if (node.empty()) {
      return;
    }
    allocation& a    = node.mapped();
    auto&       cr   = cells_.at(a.cell);
    const rnti  r    = a.grant.target;
    const auto  cell = a.cell;

    if (a.txs.empty()) {
      ++report_.grants_unused;
      emit(gnb_entity(cell), trace_kind::state_change, {{"alloc", id}, {"rnti", r.value}, {"outcome", "unused"}});
      if (a.msg3) {
        finish_rar_grant(a.rar_id, false, cell);
        auto out = cr.node.on_msg3(r, reception_result{}, now_);
        (void)out;
        end_tc(cell, r);
      }
      return;
    }

    const auto rx = resolve_reception(a.txs, sc_.capture);
    const bool by_attacker = !rx.collision() && rx.decoded->sender == attacker_entity;
    if (rx.collision()) {
      ++report_.grants_collided;
    } else {
      ++report_.grants_decoded;
    }
    emit(gnb_entity(cell), trace_kind::state_change,
         {{"alloc", id}, {"rnti", r.value}, {"outcome", rx.collision() ? "collision" : "decoded"},
          {"sender", rx.collision() ? std::string("none") : rx.decoded->sender.str()},
          {"transmissions", a.txs.size()}, {"misaligned", rx.misaligned}});

    if (atk_ && !a.attacker_tx) {
      std::vector<std::string> notes;
      if (auto cap = atk_->on_ul_observed(cell, r, a.txs, symbol_time::from_ns(now_), &notes)) {
        emit(attacker_entity, trace_kind::attack_decision,
             {{"event", "identity_captured"}, {"cell", cell}, {"rnti", r.value}, {"tmsi", to_hex_u64(cap->tmsi.value)},
              {"suci", to_hex(encode_suci(cap->suci))}});
      }
      for (const auto& n : notes) {
        emit(attacker_entity, trace_kind::attack_decision, {{"event", "note"}, {"note", n}});
      }
    }

    if (a.msg3) {
      finish_rar_grant(a.rar_id, by_attacker, cell);
      on_msg3_result(cell, r, cr.node.on_msg3(r, rx, now_));
      return;
    }

    auto res = cr.node.on_ul(r, rx);
    for (const auto& p : res.anomalies) {
      anomaly(gnb_entity(cell), p);
    }
    const auto* conn = cr.node.find(r);
    if (!conn) {
      return;
    }
    const auto key = connection_key(cell, conn->serial);
    if (by_attacker && !res.nas_uplink.empty()) {
      auto& rec = conns_[key];
      if (!rec.injected) {
        ++report_.injected_connections;
        try {
          const auto m = nas::decode(res.nas_uplink.front());
          rec.injected = nas::name(m);
          if (std::holds_alternative<nas::registration_request>(m)) {
            ++report_.attacked_registrations;
          } else if (std::holds_alternative<nas::service_request>(m)) {
            ++report_.attacked_service_requests;
          }
        } catch (const decode_error&) {
          rec.injected = "undecodable";
        }
        if (rec.ue) {
          auto& rt = ue_rt_[*rec.ue];
          if (rt.attacked.insert(rt.attempt).second) {
            ++report_.attacked_attempts;
          }
        }
      }
    }
    for (auto& bytes : res.nas_uplink) {
      const nas_context ctx{cell, cr.node.config().cell.tracking_area, key};
      at(now_ + from_ms(sc_.core_delay_ms), [this, ctx, r, b = std::move(bytes)] { amf_uplink(ctx, r, b); });
    }
    if (res.large_bsr) {
      at(next_boundary(now_ + 1), [this, cell, r, serial = conn->serial] { issue_grant(cell, r, serial, 0); });
    }
  }

  void finish_rar_grant(std::uint64_t rar_id, bool by_attacker, std::uint32_t cell)
  {
    auto it = rars_.find(rar_id);
    if (it == rars_.end()) {
      return;
    }
    auto& t = it->second;
    ++t.resolved;
    if (by_attacker) {
      ++t.by_attacker;
    }
    if (t.resolved == t.total) {
      if (attacked(cell) && t.by_attacker == t.total) {
        ++report_.attacked_cell_rars_overshadowed;
      }
      rars_.erase(it);
    }
  }

  void end_tc(std::uint32_t cell, rnti r)
  {
    cells_.at(cell).tc_holders.erase(r.value);
    if (atk_) {
      atk_->on_connection_end(cell, r);
    }
  }

  void on_msg3_result(std::uint32_t cell, rnti r, const msg3_outcome& out)
  {
    emit(gnb_entity(cell), trace_kind::state_change,
         {{"rnti", r.value}, {"msg3", to_string(out.kind)}, {"note", out.note}});
    auto& cr = cells_.at(cell);
    switch (out.kind) {
      case msg3_outcome_kind::cri_sent: {
        const auto serial = cr.node.find(r)->serial;
        at(now_ + slot_ns, [this, cell, r, serial, cri = *out.cri, setup = *out.setup] {
          deliver_msg4(cell, r, serial, cri, setup);
        });
        return;
      }
      case msg3_outcome_kind::aborted:
        ++report_.msg3_aborted;
        if (out.cri) {
          at(now_ + slot_ns, [this, cell, r, cri = *out.cri] {
            emit(gnb_entity(cell), trace_kind::tx_dl,
                 {{"layer", "cri"}, {"cell", cell}, {"rnti", r.value}, {"cri", to_hex(cri)}, {"summary", "invalid contention resolution id"}});
            for (auto u : cells_.at(cell).tc_holders[r.value]) {
              if (ues_[u].state() == ue_state::msg3_sent && ues_[u].current_rnti() == r) {
                ues_[u].on_contention_resolution(cri);
                ++report_.kpis.contention_failures;
                ra_failure(u, "contention resolution mismatch");
              }
            }
            end_tc(cell, r);
          });
          return;
        }
        end_tc(cell, r);
        return;
      case msg3_outcome_kind::collision:
      case msg3_outcome_kind::crnti_contention:
        end_tc(cell, r);
        return;
    }
  }

  void deliver_msg4(std::uint32_t cell, rnti r, std::uint64_t serial, const rrc::cri_t& cri, const rrc::setup& setup)
  {
    auto&       cr   = cells_.at(cell);
    const auto* conn = cr.node.find(r);
    if (!conn || conn->serial != serial) {
      anomaly(gnb_entity(cell), "msg4 for released rnti " + std::to_string(r.value));
      return;
    }
    emit(gnb_entity(cell), trace_kind::tx_dl,
         {{"layer", "rrc"}, {"cell", cell}, {"rnti", r.value}, {"cri", to_hex(cri)}, {"hex", to_hex(rrc::encode(setup))},
          {"summary", "contention resolution + " + rrc::describe(setup)}});
    const auto holders = cr.tc_holders[r.value];
    cr.tc_holders.erase(r.value);
    const auto key = connection_key(cell, serial);
    auto&      rec = conns_[key];
    rec.cell       = cell;
    for (auto u : holders) {
      auto& fsm = ues_[u];
      if (fsm.state() != ue_state::msg3_sent || fsm.current_rnti() != r) {
        continue;
      }
      if (fsm.on_contention_resolution(cri)) {
        fsm.on_rrc_setup(setup);
        drain_changes(u);
        cr.connected[r.value] = u;
        rec.ue                = u;
        ++report_.kpis.successful_connections;
        ++report_.connections_by_cell[cell];
        ++ue_rt_[u].connections;
        const auto gen = fsm.generation();
        at(now_ + from_ms(sc_.nas_guard_ms), [this, u, gen, cell, r] {
          if (ues_[u].generation() == gen && ues_[u].in_procedure()) {
            anomaly(ue_entity(u), "nas procedure timed out");
            release_network(cell, r, "nas guard expired");
          }
        });
      } else {
        drain_changes(u);
        ++report_.kpis.contention_failures;
        ra_failure(u, "contention resolution mismatch");
      }
    }
    if (atk_) {
      std::string note;
      const auto  next = atk_->on_contention_resolution(cell, r, cri, setup.transaction_id, &note);
      if (attacked(cell)) {
        emit(attacker_entity, trace_kind::attack_decision,
             {{"event", "classify"}, {"cell", cell}, {"rnti", r.value}, {"anticipate", to_string(next)}, {"note", note}});
      }
    }
    issue_grant(cell, r, serial, 0);
  }

  void issue_grant(std::uint32_t cell, rnti r, std::uint64_t serial, std::uint32_t requested)
  {
    auto&       cr   = cells_.at(cell);
    const auto* conn = cr.node.find(r);
    if (!conn || conn->serial != serial) {
      return;
    }
    const auto g = cr.node.schedule_ul(r, requested, symbol_time::from_ns(now_));
    ++report_.grants_issued;
    auto& a = allocs_[g.allocation_id];
    a.grant = g;
    a.cell  = cell;
    emit(gnb_entity(cell), trace_kind::tx_dl,
         {{"layer", "dci"}, {"cell", cell}, {"rnti", r.value}, {"alloc", g.allocation_id}, {"tbs", g.tbs_bytes},
          {"k2", g.k2}, {"summary", "ul grant " + std::to_string(g.tbs_bytes) + " bytes"}});
    const auto id = g.allocation_id;
    at(grant_deadline(g).absolute_ns(), [this, id] { resolve(id); });

    if (auto it = cr.connected.find(r.value); it != cr.connected.end()) {
      const auto u  = it->second;
      auto&      fs = ues_[u];
      if (auto tx = fs.on_ul_grant(g)) {
        ul_transmit(ue_entity(u), cell, r, *tx, {});
      }
      if (fs.take_release_request()) {
        at(grant_deadline(g).absolute_ns() + slot_ns, [this, u, cell, r] {
          auto& c = cells_.at(cell);
          if (auto jt = c.connected.find(r.value); jt != c.connected.end() && jt->second == u) {
            c.connected.erase(jt);
          }
          ues_[u].release("security mode reject sent");
          drain_changes(u);
          send_preamble(u);
        });
      }
    }
    if (atk_) {
      const auto d = atk_->on_ul_grant(cell, g, now_);
      apply_decision(cell, d, "ul_grant");
      for (const auto& t : d.txs) {
        (void)t;
        at(now_ + sc_.attack->verdict_window_ns, [this] { expire_verdicts(); });
      }
    }
  }

  void expire_verdicts()
  {
    for (auto v : atk_->expire(now_)) {
      emit(attacker_entity, trace_kind::attack_decision,
           {{"event", "verdict"}, {"verdict", to_string(v)}, {"note", "no decisive downlink within window"}});
    }
  }

  // -- core network --------------------------------------------------------

  void amf_uplink(const nas_context& ctx, rnti r, const byte_buffer& bytes)
  {
    ++report_.amf_events;
    if (attacked(ctx.cell_id)) {
      ++report_.amf_events_attacked_cell;
    }
    auto reply = amf_->on_uplink(ctx, bytes);
    ojson d{{"layer", "nas"}, {"cell", ctx.cell_id}, {"connection", ctx.connection}, {"hex", to_hex(bytes)}};
    try {
      d["summary"] = "rx " + nas::describe(nas::decode(bytes));
    } catch (const decode_error&) {
      d["summary"] = "rx undecodable";
    }
    d["note"] = reply.note;
    emit(amf_entity, reply.anomaly ? trace_kind::anomaly : trace_kind::state_change, std::move(d));
    if (reply.downlink) {
      const auto& m = *reply.downlink;
      count_downlink(m);
      auto& rec = conns_[ctx.connection];
      if (rec.injected && !rec.rejected &&
          (std::holds_alternative<nas::registration_reject>(m) || std::holds_alternative<nas::service_reject>(m))) {
        rec.rejected = true;
        if (std::holds_alternative<nas::registration_reject>(m)) {
          ++report_.attacked_registrations_rejected;
        } else {
          ++report_.attacked_service_requests_rejected;
        }
      }
      const auto out = nas::encode(m);
      emit(amf_entity, trace_kind::tx_dl,
           {{"layer", "nas"}, {"cell", ctx.cell_id}, {"connection", ctx.connection}, {"hex", to_hex(out)},
            {"summary", nas::describe(m)}});
    }
    if (!reply.downlink && !reply.release) {
      return;
    }
    const sim_ns arrive = next_boundary(now_ + from_ms(sc_.core_delay_ms));
    const auto   serial = ctx.connection & ((std::uint64_t{1} << 40) - 1);
    at(arrive, [this, ctx, r, serial, dl = reply.downlink, rel = reply.release] {
      gnb_downlink(ctx.cell_id, r, serial, dl, rel);
    });
  }

  void count_downlink(const nas::message& m)
  {
    auto& k = report_.kpis;
    std::visit(
        [&](const auto& x) {
          using T = std::decay_t<decltype(x)>;
          if constexpr (std::is_same_v<T, nas::registration_reject>) {
            ++k.registration_rejects;
          } else if constexpr (std::is_same_v<T, nas::service_reject>) {
            ++k.service_rejects;
          } else if constexpr (std::is_same_v<T, nas::identity_request>) {
            ++k.identity_requests;
          } else if constexpr (std::is_same_v<T, nas::authentication_reject>) {
            ++k.auth_rejects;
          } else if constexpr (std::is_same_v<T, nas::registration_accept>) {
            ++k.registration_accepts;
          } else if constexpr (std::is_same_v<T, nas::service_accept>) {
            ++k.service_accepts;
          }
        },
        m);
  }

  void gnb_downlink(std::uint32_t cell, rnti r, std::uint64_t serial, const std::optional<nas::message>& m, bool release)
  {
    auto&       cr   = cells_.at(cell);
    const auto* conn = cr.node.find(r);
    if (!conn || conn->serial != serial) {
      if (m) {
        anomaly(gnb_entity(cell), "downlink NAS for released connection dropped");
      }
      return;
    }
    bool reconnect = false;
    std::optional<std::uint32_t> ue_index;
    if (m) {
      const auto wrapped = cr.node.relay_dl(r, nas::encode(*m));
      emit(gnb_entity(cell), trace_kind::tx_dl,
           {{"layer", "rrc"}, {"cell", cell}, {"rnti", r.value}, {"hex", to_hex(rrc::encode(*wrapped))},
            {"summary", rrc::describe(*wrapped) + " " + nas::describe(*m)}});
      if (atk_) {
        if (auto v = atk_->on_dl_nas(cell, r, *m)) {
          emit(attacker_entity, trace_kind::attack_decision,
               {{"event", "verdict"}, {"cell", cell}, {"rnti", r.value}, {"verdict", to_string(*v)},
                {"note", "observed " + nas::name(*m)}});
        }
      }
      if (auto it = cr.connected.find(r.value); it != cr.connected.end()) {
        ue_index     = it->second;
        auto outcome = ues_[it->second].on_nas(*m);
        drain_changes(it->second);
        if (outcome.anomaly) {
          anomaly(ue_entity(it->second), outcome.note);
        }
        reconnect = outcome.reconnect;
      }
    }
    if (release) {
      release_network(cell, r, "core released connection");
    } else {
      issue_grant(cell, r, serial, 0);
    }
    if (reconnect && ue_index) {
      const auto u = *ue_index;
      at(now_, [this, u] {
        if (ues_[u].can_start_ra()) {
          send_preamble(u);
        }
      });
    }
  }

  /// Network-side release; the UE is released only if it still uses `r`.
  void release_network(std::uint32_t cell, rnti r, const std::string& why)
  {
    auto& cr = cells_.at(cell);
    if (const auto* conn = cr.node.find(r)) {
      amf_->close(connection_key(cell, conn->serial));
    }
    cr.node.release(r, now_);
    if (atk_) {
      atk_->on_connection_end(cell, r);
    }
    emit(gnb_entity(cell), trace_kind::state_change, {{"rnti", r.value}, {"released", why}});
    if (auto it = cr.connected.find(r.value); it != cr.connected.end()) {
      const auto u = it->second;
      cr.connected.erase(it);
      if (ues_[u].current_rnti() == r) {
        ues_[u].release(why);
        drain_changes(u);
      }
    }
  }

  void release_ue_connection(std::uint32_t u, const std::string& why)
  {
    for (auto& [cell, cr] : cells_) {
      for (auto it = cr.connected.begin(); it != cr.connected.end(); ++it) {
        if (it->second == u) {
          release_network(cell, rnti{it->first}, why);
          return;
        }
      }
    }
    ues_[u].release(why);
    drain_changes(u);
  }

  void kpi_tick()
  {
    ojson d = report_.kpis.to_json();
    d["rar_overshadow_rate"] = report_.rar_overshadow_rate();
    emit(entity_id{entity_kind::sim, 0}, trace_kind::kpi_tick, std::move(d));
  }

  void finish()
  {
    if (atk_) {
      report_.attacker = atk_->stats();
      report_.captured = atk_->captured();
      report_.verdicts = atk_->verdicts();
    }
    for (std::uint32_t i = 0; i < ues_.size(); ++i) {
      const auto& f = ues_[i];
      report_.ues.push_back({i, f.config().profile.name, f.config().id, f.state(), f.serving_cell(), sc_.ues[i].cfg.tmsi,
                             f.stored_tmsi(), f.total_preambles(), ue_rt_[i].connections});
    }
    report_.grants_pending            = allocs_.size();
    report_.attacker_dl_transmissions = trace_->count(entity_kind::attacker, trace_kind::tx_dl);
    report_.trace_lines               = trace_->lines();
    report_.trace_digest              = trace_->digest();
  }

  scenario                                 sc_;
  trace_log*                               trace_ = nullptr;
  std::unique_ptr<trace_log>               owned_trace_;
  sim_rng                                  rng_;
  sim_ns                                   now_    = 0;
  sim_ns                                   end_ns_ = 0;
  std::uint64_t                            seq_    = 0;
  std::priority_queue<event, std::vector<event>, std::greater<>> queue_;
  std::map<std::uint32_t, cell_runtime>    cells_;
  std::vector<ue_fsm>                      ues_;
  std::vector<ue_runtime>                  ue_rt_;
  std::optional<amf>                       amf_;
  std::optional<attacker>                  atk_;
  std::map<std::uint64_t, allocation>      allocs_;
  std::map<std::uint64_t, rar_tally>       rars_;
  std::uint64_t                            rar_seq_ = 0;
  std::map<std::uint64_t, connection_record> conns_;
  run_report                               report_;
};

/// Parses, runs and checks one scenario.
inline run_report run_scenario(const scenario& sc, trace_log* trace = nullptr)
{
  simulation s(sc, trace);
  return s.run();
}

} // namespace ovs::sim

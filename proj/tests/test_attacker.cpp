#include "ovs/attacker.hpp"

#include "generators.hpp"

#include <gtest/gtest.h>

using namespace ovs;

namespace {

const home_network_key hn_key{1, {0x42}};

suci some_suci(std::uint64_t seed = 1)
{
  sim_rng rng(seed);
  return conceal_supi(supi{1010000001}, hn_key, rng);
}

attack_plan plan_for(attack_strategy s)
{
  attack_plan p;
  p.strategy = s;
  if (s == attack_strategy::suci_replay) {
    p.target_suci = some_suci();
  }
  if (s == attack_strategy::registration_reject_downgrade) {
    p.downgrade_suci = some_suci(2);
  }
  return p;
}

uplink_grant grant(rnti r, std::uint32_t tbs, std::uint32_t k2 = 3, symbol_time slot = {0, 4, 0}, std::uint64_t alloc = 1)
{
  uplink_grant g;
  g.target        = r;
  g.grant_slot    = slot;
  g.k2            = k2;
  g.tbs_bytes     = tbs;
  g.allocation_id = alloc;
  return g;
}

rar_message rar_with(std::size_t n, std::uint32_t k2, symbol_time slot = {0, 4, 0})
{
  rar_message rar{slot, {}};
  for (std::size_t i = 0; i < n; ++i) {
    const rnti r{static_cast<std::uint16_t>(0x100 + i)};
    rar.entries.push_back({static_cast<std::uint8_t>(i), r, grant(r, 7, k2, slot, 10 + i), 2.0});
  }
  return rar;
}

rrc::cri_t cri_of(rrc::identity_type type, std::uint64_t value)
{
  return rrc::contention_identity(rrc::encode(rrc::setup_request{type, value, rrc::cause::mo_signalling}));
}

constexpr rnti victim{0x4601};

/// Contention resolution and a large grant on one connection.
attack_decision arm_and_inject(attacker& a, const rrc::cri_t& cri, std::uint32_t tbs = 128)
{
  a.on_contention_resolution(1, victim, cri, 2);
  return a.on_ul_grant(1, grant(victim, tbs), symbol_time{0, 4, 0}.absolute_ns());
}

std::vector<rlc::segment> dcch_segments(const byte_buffer& mac_bytes)
{
  std::vector<rlc::segment> out;
  for (const auto& s : mac::decode(mac_bytes).subpdus) {
    if (s.lcid == mac::lcid::dcch) {
      out.push_back(rlc::decode(s.payload));
    }
  }
  return out;
}

} // namespace

TEST(AttackerLatency, ClosedFormMatchesPublishedEndToEndClass)
{
  const pipeline k2_1_path{0, true, 1, 1, 14};
  const double   k2_1 = compute_latency(cost_presets::k2_1(), k2_1_path);
  EXPECT_NEAR(k2_1, 8.27 + 77.65 + 52.64 + 25.42 + 14 * 11.66, 1e-9);
  EXPECT_NEAR(k2_1, 362.96, 0.25 * 362.96);

  const double nas_64 = compute_latency(cost_presets::nas_64(), k2_1_path);
  EXPECT_NEAR(nas_64, 8.54 + 78.72 + 36.32 + 21.78 + 14 * 11.04, 1e-9);
  EXPECT_NEAR(nas_64, 368.29, 0.25 * 368.29);
}

TEST(AttackerLatency, ZeroCostsAlwaysMeetDeadline)
{
  const auto zero = cost_presets::by_name("zero");
  EXPECT_EQ(compute_latency(zero, {100, true, 5, 64, 14}), 0.0);
  EXPECT_TRUE(meets_deadline(1000.0, 0.0, zero.radio_rtt_us, 1000.0));
  EXPECT_FALSE(meets_deadline(1000.0, 0.1, 0.0, 1000.0));
  EXPECT_THROW(cost_presets::by_name("fast"), usage_error);
}

TEST(AttackerLatency, SampledMeanConvergesToClosedForm)
{
  sim_rng        rng(42);
  const pipeline pl{2, true, 1, 3, 1};
  const auto     c    = cost_presets::nas_64();
  double         sum  = 0.0;
  constexpr int  n    = 20000;
  for (int i = 0; i < n; ++i) {
    const double s = sample_latency(c, pl, rng);
    ASSERT_GE(s, 0.0);
    sum += s;
  }
  EXPECT_NEAR(sum / n, compute_latency(c, pl), 0.02 * compute_latency(c, pl));
}

TEST(AttackerLatency, ScalingLeavesRttAlone)
{
  const auto c = cost_presets::k2_1().scaled(10.0);
  EXPECT_DOUBLE_EQ(c.pdsch_decode.mean, 526.4);
  EXPECT_DOUBLE_EQ(c.radio_rtt_us, 200.0);
  EXPECT_TRUE(c.valid());
}

TEST(AttackerRarDos, OneGrantAtK2Three)
{
  attack_plan p = plan_for(attack_strategy::cell_wide_dos);
  p.costs       = cost_presets::rar_dos();
  attacker   a(p, sim_rng(1));
  const auto rar = rar_with(1, 3);
  const auto d   = a.on_rar(1, rar, rar.slot.absolute_ns());
  ASSERT_EQ(d.txs.size(), 1u);
  const auto& tx = d.txs[0];
  EXPECT_TRUE(mac::decode(tx.tx.payload).is_empty());
  EXPECT_EQ(tx.tx.payload.size(), 7u);
  EXPECT_EQ(tx.tx.allocation_id, rar.entries[0].grant.allocation_id);
  EXPECT_DOUBLE_EQ(tx.tx.tx_power_dbm, p.victim_power_dbm + p.power_offset_db);
  EXPECT_EQ(tx.on_air_ns, grant_deadline(rar.entries[0].grant).absolute_ns());
  EXPECT_LE(tx.ready_ns, tx.on_air_ns);
}

TEST(AttackerRarDos, FiveGrantsOneAccounting)
{
  attack_plan p = plan_for(attack_strategy::cell_wide_dos);
  p.costs       = cost_presets::rar_dos();
  attacker   a(p, sim_rng(1));
  const auto rar = rar_with(5, 3);
  const auto d   = a.on_rar(1, rar, rar.slot.absolute_ns());
  EXPECT_EQ(d.txs.size(), 5u);
  EXPECT_EQ(a.stats().rars_seen, 1u);
  EXPECT_EQ(a.stats().rar_grants_seen, 5u);
  EXPECT_EQ(a.stats().transmissions, 5u);
}

TEST(AttackerRarDos, TenfoldCostsWithK2OneSkip)
{
  attack_plan p = plan_for(attack_strategy::cell_wide_dos);
  p.costs       = cost_presets::rar_dos();
  {
    attacker   a(p, sim_rng(1));
    const auto rar = rar_with(1, 1);
    EXPECT_EQ(a.on_rar(1, rar, rar.slot.absolute_ns()).txs.size(), 1u);
  }
  p.costs = cost_presets::rar_dos().scaled(10.0);
  attacker   a(p, sim_rng(1));
  const auto rar = rar_with(1, 1);
  const auto d   = a.on_rar(1, rar, rar.slot.absolute_ns());
  EXPECT_TRUE(d.txs.empty());
  ASSERT_EQ(d.misses.size(), 1u);
  EXPECT_EQ(a.stats().deadline_misses, 1u);
}

TEST(AttackerRarDos, DeadlineDecisionMatchesOracle)
{
  // Property: a RAR is answered exactly when now + latency + rtt fits before
  // the slot k2 after the RAR.
  sim_rng rng(5);
  for (int i = 0; i < 2000; ++i) {
    attack_plan p = plan_for(attack_strategy::cell_wide_dos);
    p.costs       = cost_presets::rar_dos().scaled(static_cast<double>(rng.uniform(1, 400)) / 20.0);
    attacker          a(p, sim_rng(i));
    const std::size_t n   = rng.uniform(1, 8);
    const std::uint32_t k2 = static_cast<std::uint32_t>(rng.uniform(1, 4));
    const auto        rar = rar_with(n, k2, symbol_time::from_slot_index(rng.uniform(0, 5000)));
    const double      latency = compute_latency(p.costs, {0, false, 1, static_cast<std::uint32_t>(n), 1});
    const bool fits = rar.slot.absolute_us() + latency + p.costs.radio_rtt_us <= rar.slot.absolute_us() + k2 * slot_us;
    const auto d = a.on_rar(1, rar, rar.slot.absolute_ns());
    ASSERT_EQ(d.txs.size(), fits ? n : 0u);
  }
}

TEST(AttackerRarDos, OtherCellIgnored)
{
  attacker a(plan_for(attack_strategy::cell_wide_dos), sim_rng(1));
  EXPECT_TRUE(a.on_rar(2, rar_with(3, 3), 0).txs.empty());
  EXPECT_EQ(a.stats().rars_seen, 0u);
}

TEST(AttackerClassify, RandomValueAnticipatesRegistration)
{
  attacker a(plan_for(attack_strategy::suci_extraction), sim_rng(1));
  EXPECT_EQ(a.on_contention_resolution(1, victim, cri_of(rrc::identity_type::random_value, 0x12345), 0),
            anticipated_message::registration_request);
  EXPECT_TRUE(a.connection(victim)->armed);
}

TEST(AttackerClassify, TmsiAnticipatesServiceRequest)
{
  attacker a(plan_for(attack_strategy::suci_extraction), sim_rng(1));
  EXPECT_EQ(a.on_contention_resolution(1, victim, cri_of(rrc::identity_type::s_tmsi_part1, 0x777), 0),
            anticipated_message::service_request);
}

TEST(AttackerClassify, FilterExemptsUnlistedTmsi)
{
  attack_plan p   = plan_for(attack_strategy::suci_extraction);
  p.target_filter = std::vector<tmsi48>{tmsi48{0x1a2b3c4d5e6fULL}};
  attacker a(p, sim_rng(1));
  EXPECT_EQ(a.on_contention_resolution(1, victim, cri_of(rrc::identity_type::s_tmsi_part1, 0x999), 0),
            anticipated_message::exempt);
  EXPECT_EQ(a.stats().connections_exempt, 1u);
  EXPECT_EQ(a.on_contention_resolution(1, rnti{2}, cri_of(rrc::identity_type::s_tmsi_part1, tmsi48{0x1a2b3c4d5e6fULL}.part1()), 0),
            anticipated_message::service_request);
  EXPECT_EQ(a.connection(rnti{2})->observed_tmsi, tmsi48{0x1a2b3c4d5e6fULL});
}

TEST(AttackerClassify, FilterSoundness)
{
  // Property: no transmission is ever made on a connection whose S-TMSI is
  // outside the filter.
  std::vector<tmsi48> listed;
  sim_rng             rng(9);
  for (int i = 0; i < 8; ++i) {
    listed.push_back(tmsi48{rng.next_u64()});
  }
  for (auto s : {attack_strategy::registration_reject_downgrade, attack_strategy::suci_extraction, attack_strategy::suci_replay}) {
    attack_plan p   = plan_for(s);
    p.target_filter = listed;
    attacker a(p, sim_rng(1));
    for (std::uint16_t i = 1; i <= 2000; ++i) {
      const tmsi48 t{rng.next_u64()};
      bool         in = false;
      for (const auto& l : listed) {
        in = in || l.part1() == t.part1();
      }
      const rnti r{i};
      a.on_contention_resolution(1, r, cri_of(rrc::identity_type::s_tmsi_part1, t.part1()), 0);
      const auto d = a.on_ul_grant(1, grant(r, 128, 3, {0, 4, 0}, i), symbol_time{0, 4, 0}.absolute_ns());
      if (!in) {
        ASSERT_TRUE(d.txs.empty());
      }
    }
  }
}

TEST(AttackerClassify, UndecodableCriIsUnknown)
{
  attacker   a(plan_for(attack_strategy::suci_replay), sim_rng(1));
  rrc::cri_t junk;
  junk.fill(0xff);
  EXPECT_EQ(a.on_contention_resolution(1, victim, junk, 0), anticipated_message::unknown);
  const auto d = a.on_ul_grant(1, grant(victim, 128), symbol_time{0, 4, 0}.absolute_ns());
  EXPECT_EQ(d.txs.size(), 1u);
}

TEST(AttackerClassify, MacDosIgnoresContentionResolution)
{
  attacker a(plan_for(attack_strategy::cell_wide_dos), sim_rng(1));
  EXPECT_EQ(a.on_contention_resolution(1, victim, cri_of(rrc::identity_type::random_value, 1), 0), anticipated_message::exempt);
}

TEST(AttackerCraft, PayloadPerStrategy)
{
  const auto rv   = cri_of(rrc::identity_type::random_value, 0x55);
  const auto stm  = cri_of(rrc::identity_type::s_tmsi_part1, 0x55);
  {
    attacker a(plan_for(attack_strategy::registration_reject_downgrade), sim_rng(1));
    a.on_contention_resolution(1, victim, stm, 0);
    const auto sr = std::get<nas::service_request>(*a.connection(victim)->payload);
    EXPECT_NE(sr.s_tmsi.part1(), 0x55u);
    a.on_contention_resolution(1, rnti{2}, rv, 0);
    const auto rr = std::get<nas::registration_request>(*a.connection(rnti{2})->payload);
    EXPECT_EQ(std::get<suci>(rr.id), some_suci(2));
  }
  {
    attacker a(plan_for(attack_strategy::suci_extraction), sim_rng(1));
    a.on_contention_resolution(1, victim, rv, 0);
    const auto rr = std::get<nas::registration_request>(*a.connection(victim)->payload);
    EXPECT_TRUE(std::holds_alternative<tmsi48>(rr.id));
    EXPECT_EQ(rr.capabilities, nas::security_capabilities::of({"EA0", "EA1", "IA1", "IA7", "EA7"}));
  }
  {
    attacker a(plan_for(attack_strategy::suci_replay), sim_rng(1));
    a.on_contention_resolution(1, victim, stm, 0);
    const auto rr = std::get<nas::registration_request>(*a.connection(victim)->payload);
    EXPECT_EQ(std::get<suci>(rr.id), some_suci(1));
  }
  for (auto s : {attack_strategy::suci_replay, attack_strategy::registration_reject_downgrade}) {
    attack_plan bare;
    bare.strategy = s;
    EXPECT_THROW(attacker(bare, sim_rng(1)), usage_error);
  }
}

TEST(AttackerCraft, RandomInvalidTmsiAvoidsKnownTmsis)
{
  // The avoid list holds the very value the generator draws first, so the
  // rejection path is exercised on every run.
  for (std::uint64_t seed = 0; seed < 10000; ++seed) {
    const tmsi48 first{sim_rng(seed).next_u64()};
    attacker     a(plan_for(attack_strategy::suci_extraction), sim_rng(seed), {first, tmsi48{seed}});
    const tmsi48 t = a.random_invalid_tmsi();
    ASSERT_NE(t, first);
    ASSERT_NE(t, tmsi48{seed});
    ASSERT_NE(t.value, 0u);
  }
}

TEST(AttackerInject, SmallGrantGetsBsrThenFullOvershadow)
{
  attacker a(plan_for(attack_strategy::suci_extraction), sim_rng(1));
  a.on_contention_resolution(1, victim, cri_of(rrc::identity_type::random_value, 9), 2);
  const auto small = a.on_ul_grant(1, grant(victim, 7), symbol_time{0, 4, 0}.absolute_ns());
  ASSERT_EQ(small.txs.size(), 1u);
  EXPECT_TRUE(mac::decode(small.txs[0].tx.payload).find(mac::lcid::short_bsr));
  EXPECT_FALSE(a.connection(victim)->injected);
  const auto big = a.on_ul_grant(1, grant(victim, 40, 3, {0, 6, 0}, 2), symbol_time{0, 6, 0}.absolute_ns());
  ASSERT_EQ(big.txs.size(), 1u);
  EXPECT_TRUE(a.connection(victim)->injected);
  EXPECT_EQ(big.txs[0].tx.payload.size(), 40u);
}

TEST(AttackerInject, SingleSegmentInvariant)
{
  sim_rng rng(17);
  for (auto s : {attack_strategy::registration_reject_downgrade, attack_strategy::suci_extraction, attack_strategy::suci_replay}) {
    for (int i = 0; i < 300; ++i) {
      attack_plan p    = plan_for(s);
      p.max_repeats    = 100;
      attacker   a(p, sim_rng(i));
      const auto type  = rng.uniform(0, 1) ? rrc::identity_type::s_tmsi_part1 : rrc::identity_type::random_value;
      const auto tbs   = static_cast<std::uint32_t>(rng.uniform(7, 300));
      const auto d     = arm_and_inject(a, cri_of(type, rng.uniform(0, rrc::random_value_mask)), tbs);
      for (const auto& tx : d.txs) {
        const auto segs = dcch_segments(tx.tx.payload);
        ASSERT_LE(segs.size(), 1u);
        for (const auto& seg : segs) {
          ASSERT_EQ(seg.si, rlc::segment_info::full);
          ASSERT_EQ(seg.sn, 0);
        }
      }
    }
  }
}

TEST(AttackerInject, RepeatsStopAtLimitOrDownlink)
{
  attack_plan p = plan_for(attack_strategy::suci_extraction);
  p.max_repeats = 2;
  attacker a(p, sim_rng(1));
  EXPECT_EQ(arm_and_inject(a, cri_of(rrc::identity_type::random_value, 1)).txs.size(), 1u);
  EXPECT_EQ(a.on_ul_grant(1, grant(victim, 128, 3, {0, 8, 0}, 2), symbol_time{0, 8, 0}.absolute_ns()).txs.size(), 1u);
  EXPECT_TRUE(a.on_ul_grant(1, grant(victim, 128, 3, {0, 12, 0}, 3), symbol_time{0, 12, 0}.absolute_ns()).txs.empty());

  attacker b(plan_for(attack_strategy::suci_extraction), sim_rng(1));
  arm_and_inject(b, cri_of(rrc::identity_type::random_value, 1));
  b.on_dl_nas(1, victim, nas::identity_request{});
  EXPECT_TRUE(b.on_ul_grant(1, grant(victim, 128, 3, {0, 8, 0}, 2), symbol_time{0, 8, 0}.absolute_ns()).txs.empty());
}

TEST(AttackerTiming, CopyVictimFromFartherAwayFails)
{
  const double victim_distance = 1.0;
  transmission ue_tx;
  ue_tx.allocation_id      = 1;
  ue_tx.sender             = ue_entity(0);
  ue_tx.tx_power_dbm       = 20.0;
  ue_tx.sender_distance_us = victim_distance;
  ue_tx.timing_advance_us  = required_timing_advance(victim_distance);

  for (auto mode : {ta_mode::copy_victim, ta_mode::computed}) {
    attack_plan p = plan_for(attack_strategy::cell_wide_dos);
    p.ta          = mode;
    p.distance_us = victim_distance + 3.0;
    attacker   a(p, sim_rng(1));
    const auto rar = rar_with(1, 3);
    auto       d   = a.on_rar(1, rar, rar.slot.absolute_ns());
    ASSERT_EQ(d.txs.size(), 1u);
    auto adv          = d.txs[0].tx;
    adv.allocation_id = 1;
    const std::vector<transmission> both{ue_tx, adv};
    const auto rx = resolve_reception(both, capture_config{});
    if (mode == ta_mode::copy_victim) {
      EXPECT_DOUBLE_EQ(adv.arrival_offset_us(), 6.0);
      ASSERT_FALSE(rx.collision());
      EXPECT_EQ(rx.decoded->sender, ue_tx.sender);
      EXPECT_EQ(rx.misaligned, 1u);
    } else {
      EXPECT_DOUBLE_EQ(adv.arrival_offset_us(), 0.0);
      ASSERT_FALSE(rx.collision());
      EXPECT_EQ(rx.decoded->sender, attacker_entity);
    }
  }
}

TEST(AttackerSniff, IdentityResponseInTwoSegments)
{
  attack_plan p   = plan_for(attack_strategy::suci_extraction);
  const tmsi48 t{0x1a2b3c4d5e6fULL};
  p.target_filter = std::vector<tmsi48>{t};
  attacker a(p, sim_rng(1));
  arm_and_inject(a, cri_of(rrc::identity_type::s_tmsi_part1, t.part1()));

  const suci        leaked = some_suci(77);
  const byte_buffer pdcp_bytes =
      pdcp::encode(pdcp::pdu{1, rrc::encode(rrc::ul_information_transfer{nas::encode(nas::identity_response{leaked})}), {}});
  const std::size_t half = pdcp_bytes.size() / 2;
  const rlc::segment first{1, rlc::segment_info::first, std::nullopt, byte_buffer(pdcp_bytes.begin(), pdcp_bytes.begin() + half)};
  const rlc::segment last{1, rlc::segment_info::last, static_cast<std::uint16_t>(half),
                          byte_buffer(pdcp_bytes.begin() + static_cast<std::ptrdiff_t>(half), pdcp_bytes.end())};

  auto victim_tx = [](std::vector<mac::subpdu> subs, std::uint64_t alloc) {
    transmission tx;
    tx.allocation_id = alloc;
    tx.sender        = ue_entity(0);
    tx.tx_power_dbm  = 20.0;
    tx.payload       = mac::encode(mac::make_pdu(std::move(subs), 64));
    return std::vector<transmission>{tx};
  };
  const auto a1 = victim_tx({mac::subpdu::short_bsr(3), mac::subpdu::dcch(rlc::encode(first))}, 5);
  EXPECT_FALSE(a.on_ul_observed(1, victim, a1, {0, 9, 0}));
  const auto a2  = victim_tx({mac::subpdu::dcch(rlc::encode(last))}, 6);
  const auto got = a.on_ul_observed(1, victim, a2, {0, 10, 0});
  ASSERT_TRUE(got);
  EXPECT_EQ(got->suci, leaked);
  EXPECT_EQ(got->tmsi, t);
  ASSERT_EQ(a.captured().size(), 1u);

  // The same TMSI is not attacked again.
  EXPECT_EQ(a.on_contention_resolution(1, rnti{0x77}, cri_of(rrc::identity_type::s_tmsi_part1, t.part1()), 0),
            anticipated_message::exempt);
}

TEST(AttackerSniff, NonDcchAndUnattackedIgnored)
{
  attacker a(plan_for(attack_strategy::suci_extraction), sim_rng(1));
  transmission tx;
  tx.allocation_id = 5;
  tx.payload       = mac::encode(mac::make_pdu({mac::subpdu::ccch(byte_buffer(6, 1))}, 16));
  const std::vector<transmission> txs{tx};
  EXPECT_FALSE(a.on_ul_observed(1, victim, txs, {0, 9, 0}));
  arm_and_inject(a, cri_of(rrc::identity_type::random_value, 3));
  EXPECT_FALSE(a.on_ul_observed(1, victim, txs, {0, 9, 0}));
  EXPECT_TRUE(a.captured().empty());
}

TEST(AttackerReplay, Verdicts)
{
  attack_plan p       = plan_for(attack_strategy::suci_replay);
  p.verdict_window_ns = from_ms(100);
  attacker a(p, sim_rng(1));
  const sim_ns t0 = symbol_time{0, 4, 0}.absolute_ns();

  a.on_contention_resolution(1, rnti{1}, cri_of(rrc::identity_type::s_tmsi_part1, 1), 0);
  a.on_ul_grant(1, grant(rnti{1}, 128, 3, {0, 4, 0}, 1), t0);
  EXPECT_EQ(a.on_dl_nas(1, rnti{1}, nas::authentication_request{}), std::nullopt);
  EXPECT_EQ(a.on_dl_nas(1, rnti{1}, nas::security_mode_command{}), replay_verdict::suci_matches_ue);

  a.on_contention_resolution(1, rnti{2}, cri_of(rrc::identity_type::s_tmsi_part1, 2), 0);
  a.on_ul_grant(1, grant(rnti{2}, 128, 3, {0, 4, 0}, 2), t0);
  EXPECT_EQ(a.on_dl_nas(1, rnti{2}, nas::authentication_reject{}), replay_verdict::suci_mismatch);

  a.on_contention_resolution(1, rnti{3}, cri_of(rrc::identity_type::s_tmsi_part1, 3), 0);
  a.on_ul_grant(1, grant(rnti{3}, 128, 3, {0, 4, 0}, 3), t0);
  EXPECT_TRUE(a.expire(t0 + from_ms(99)).empty());
  EXPECT_EQ(a.expire(t0 + from_ms(100)), std::vector<replay_verdict>{replay_verdict::inconclusive});

  EXPECT_EQ(a.verdicts(), (std::vector<replay_verdict>{replay_verdict::suci_matches_ue, replay_verdict::suci_mismatch,
                                                       replay_verdict::inconclusive}));
  // The matching UE's own later connections are left alone.
  EXPECT_EQ(a.on_contention_resolution(1, rnti{9}, cri_of(rrc::identity_type::s_tmsi_part1, 1), 0), anticipated_message::exempt);
}

#include "ovs/codecs/stack.hpp"
#include "ovs/ue.hpp"

#include <gtest/gtest.h>

using namespace ovs;

namespace {

const home_network_key hn_key{1, {0x10, 0x20, 0x30}};

std::vector<cell_info> two_nr_and_lte()
{
  return {{1, 1, radio_access::nr, 30.0, 3}, {2, 2, radio_access::nr, 20.0, 3}, {3, 3, radio_access::lte, 25.0, 3}};
}

ue_config config_for(std::string_view profile, std::optional<tmsi48> tmsi = std::nullopt)
{
  ue_config c;
  c.profile     = *find_builtin_profile(profile);
  c.id          = supi{1010000001};
  c.key         = key128{1, 2, 3};
  c.network_key = hn_key;
  c.tmsi        = tmsi;
  return c;
}

uplink_grant grant_for(rnti r, std::uint32_t tbs, std::uint64_t alloc = 1)
{
  uplink_grant g;
  g.target        = r;
  g.grant_slot    = symbol_time{0, 1, 0};
  g.k2            = 3;
  g.tbs_bytes     = tbs;
  g.allocation_id = alloc;
  return g;
}

constexpr rnti test_rnti{0x4601};

/// Preamble, RAR, Msg3, contention resolution and RRC setup.
transmission connect(ue_fsm& ue)
{
  const auto p = ue.start_ra();
  EXPECT_TRUE(p.has_value());
  const auto msg3 = ue.on_rar({p->index, test_rnti, grant_for(test_rnti, 7), 2.0});
  EXPECT_TRUE(msg3.has_value());
  EXPECT_TRUE(ue.on_contention_resolution(*ue.pending_cri()));
  ue.on_rrc_setup(rrc::setup{1});
  return *msg3;
}

/// Pulls the next uplink RRC message from a large grant.
std::optional<rrc::message> next_uplink(ue_fsm& ue, std::uint64_t alloc = 2)
{
  const auto tx = ue.on_ul_grant(grant_for(test_rnti, 128, alloc));
  if (!tx) {
    return std::nullopt;
  }
  const auto pdu = mac::decode(tx->payload);
  const auto* s  = pdu.find(mac::lcid::dcch);
  if (!s) {
    return std::nullopt;
  }
  const auto seg = rlc::decode(s->payload);
  EXPECT_EQ(seg.si, rlc::segment_info::full);
  return rrc::decode(pdcp::decode(seg.data).sdu);
}

nas::message nas_of(const rrc::message& m)
{
  if (const auto* sc = std::get_if<rrc::setup_complete>(&m)) {
    return nas::decode(sc->nas_container);
  }
  return nas::decode(std::get<rrc::ul_information_transfer>(m).nas_container);
}

} // namespace

TEST(UeProfiles, BuiltinTable)
{
  ASSERT_EQ(builtin_profiles().size(), 7u);
  EXPECT_EQ(find_builtin_profile("Pixel 10 Pro")->on_ra_failure, ra_failure_action::disable_cellular_until_toggle);
  EXPECT_EQ(find_builtin_profile("Pixel 10 Pro")->on_auth_reject, auth_reject_action::retry_5g);
  EXPECT_EQ(find_builtin_profile("OnePlus Pro 10")->on_auth_reject, auth_reject_action::persistent_dos);
  for (auto name : {"Samsung S23", "Nothing Phone (3)", "iPhone 16 Pro", "iPhone 17 Pro", "Xiaomi 15T Pro"}) {
    EXPECT_EQ(find_builtin_profile(name)->on_ra_failure, ra_failure_action::reselect_weaker_cell) << name;
    EXPECT_EQ(find_builtin_profile(name)->on_auth_reject, auth_reject_action::downgrade_to_4g) << name;
  }
  EXPECT_FALSE(find_builtin_profile("Nokia 3310"));
  EXPECT_THROW(parse_auth_reject_action("Shrug"), usage_error);
}

TEST(UeRandomAccess, CampsOnStrongestNrCell)
{
  ue_fsm ue(0, config_for("Samsung S23"), two_nr_and_lte(), sim_rng(1));
  EXPECT_EQ(ue.serving_cell(), 1u);
  EXPECT_TRUE(ue.can_start_ra());
}

TEST(UeRandomAccess, BackoffBoundedAndAttemptsCapped)
{
  auto cfg               = config_for("Samsung S23");
  cfg.preamble_trans_max = 50;
  ue_fsm ue(0, cfg, two_nr_and_lte(), sim_rng(7));
  std::uint32_t sent = 0;
  for (;;) {
    const auto p = ue.start_ra();
    ASSERT_TRUE(p);
    ASSERT_EQ(p->cell_id, 1u);
    ASSERT_LT(p->index, 64);
    ++sent;
    ASSERT_LE(ue.preamble_attempts(), cfg.preamble_trans_max);
    const auto plan = ue.on_ra_attempt_failed("contention timer expired");
    if (plan.what != ue_fsm::retry_kind::backoff) {
      EXPECT_EQ(plan.what, ue_fsm::retry_kind::reselected);
      break;
    }
    ASSERT_GE(plan.delay_ns, 0);
    ASSERT_LE(plan.delay_ns, from_ms(1920));
  }
  EXPECT_EQ(sent, cfg.preamble_trans_max);
  EXPECT_EQ(ue.serving_cell(), 2u);
  EXPECT_EQ(ue.state(), ue_state::idle);
}

TEST(UeRandomAccess, PixelDisablesCellularAfterLimit)
{
  auto cfg               = config_for("Pixel 10 Pro");
  cfg.preamble_trans_max = 3;
  ue_fsm ue(0, cfg, two_nr_and_lte(), sim_rng(2));
  for (int i = 0; i < 2; ++i) {
    ASSERT_TRUE(ue.start_ra());
    EXPECT_EQ(ue.on_ra_attempt_failed("x").what, ue_fsm::retry_kind::backoff);
  }
  ASSERT_TRUE(ue.start_ra());
  EXPECT_EQ(ue.on_ra_attempt_failed("x").what, ue_fsm::retry_kind::gave_up);
  EXPECT_EQ(ue.state(), ue_state::cellular_disabled);
  EXPECT_FALSE(ue.start_ra());
  ue.toggle();
  EXPECT_EQ(ue.state(), ue_state::idle);
  EXPECT_TRUE(ue.start_ra());
}

TEST(UeRandomAccess, ExhaustingEveryNrCellDowngrades)
{
  auto cfg               = config_for("Xiaomi 15T Pro");
  cfg.preamble_trans_max = 1;
  ue_fsm ue(0, cfg, two_nr_and_lte(), sim_rng(3));
  ASSERT_TRUE(ue.start_ra());
  ue.on_ra_attempt_failed("x");
  ASSERT_EQ(ue.serving_cell(), 2u);
  ASSERT_TRUE(ue.start_ra());
  EXPECT_EQ(ue.on_ra_attempt_failed("x").what, ue_fsm::retry_kind::gave_up);
  EXPECT_EQ(ue.state(), ue_state::downgraded_to_4g);
  EXPECT_EQ(ue.serving_cell(), 3u);
}

TEST(UeRandomAccess, RarForAnotherPreambleIsIgnored)
{
  ue_fsm     ue(0, config_for("Samsung S23"), two_nr_and_lte(), sim_rng(4));
  const auto p = ue.start_ra();
  ASSERT_TRUE(p);
  const std::uint8_t other = static_cast<std::uint8_t>((p->index + 1) % 64);
  EXPECT_FALSE(ue.on_rar({other, test_rnti, grant_for(test_rnti, 7), 1.0}));
  EXPECT_EQ(ue.state(), ue_state::ra_preamble_sent);
  EXPECT_TRUE(ue.on_rar({p->index, test_rnti, grant_for(test_rnti, 7), 1.0}));
  EXPECT_EQ(ue.state(), ue_state::msg3_sent);
}

TEST(UeRandomAccess, Msg3CarriesTmsiPart1AndMatchesOwnCri)
{
  const tmsi48 t{0x1a2b3c4d5e6fULL};
  ue_fsm       ue(0, config_for("Samsung S23", t), two_nr_and_lte(), sim_rng(5));
  const auto   p  = ue.start_ra();
  const auto   tx = ue.on_rar({p->index, test_rnti, grant_for(test_rnti, 7), 1.0});
  ASSERT_TRUE(tx);
  EXPECT_EQ(tx->payload.size(), 7u);
  const auto pdu  = mac::decode(tx->payload);
  const auto* cc  = pdu.find(mac::lcid::ccch);
  ASSERT_TRUE(cc);
  const auto req = std::get<rrc::setup_request>(rrc::decode(cc->payload));
  EXPECT_EQ(req.type, rrc::identity_type::s_tmsi_part1);
  EXPECT_EQ(req.value, t.part1());
  EXPECT_EQ(*ue.pending_cri(), rrc::contention_identity(cc->payload));

  rrc::cri_t wrong = *ue.pending_cri();
  wrong[0] ^= 1;
  EXPECT_FALSE(ue.on_contention_resolution(wrong));
  EXPECT_TRUE(ue.on_contention_resolution(*ue.pending_cri()));
  EXPECT_EQ(ue.state(), ue_state::rrc_connected);
}

TEST(UeNas, RegistrationFlowRotatesTmsi)
{
  auto   cfg = config_for("Samsung S23");
  ue_fsm ue(0, cfg, two_nr_and_lte(), sim_rng(6));
  connect(ue);
  const auto first = next_uplink(ue);
  ASSERT_TRUE(first);
  const auto reg = std::get<nas::registration_request>(nas_of(*first));
  EXPECT_EQ(deconceal_suci(std::get<suci>(reg.id), hn_key), cfg.id);
  EXPECT_EQ(reg.capabilities, cfg.capabilities);

  const auto v = aka::make_vector(cfg.key, 1);
  ue.on_nas(nas::authentication_request{v.rand, v.autn});
  const auto res = std::get<nas::authentication_response>(nas_of(*next_uplink(ue, 3)));
  EXPECT_EQ(res.res, v.res);

  ue.on_nas(nas::security_mode_command{cfg.capabilities});
  EXPECT_TRUE(std::holds_alternative<nas::security_mode_complete>(nas_of(*next_uplink(ue, 4))));
  ue.on_nas(nas::registration_accept{tmsi48{0x42}});
  EXPECT_EQ(ue.state(), ue_state::registered);
  EXPECT_EQ(ue.stored_tmsi(), tmsi48{0x42});
}

TEST(UeNas, WrongAutnAnswersMacFailure)
{
  ue_fsm ue(0, config_for("Samsung S23"), two_nr_and_lte(), sim_rng(8));
  connect(ue);
  next_uplink(ue);
  const auto other = aka::make_vector(key128{9}, 1);
  ue.on_nas(nas::authentication_request{other.rand, other.autn});
  const auto f = std::get<nas::authentication_failure>(nas_of(*next_uplink(ue, 3)));
  EXPECT_EQ(f.cause, nas::cause::mac_failure);
}

TEST(UeNas, SecurityModeRejectKeepsTmsiAndRequestsRelease)
{
  const tmsi48 t{0x0badc0ffee01ULL};
  ue_fsm       ue(0, config_for("iPhone 16 Pro", t), two_nr_and_lte(), sim_rng(9));
  connect(ue);
  EXPECT_TRUE(std::holds_alternative<nas::service_request>(nas_of(*next_uplink(ue))));
  ue.on_nas(nas::security_mode_command{nas::poisoned_capabilities()});
  EXPECT_FALSE(ue.take_release_request());
  const auto rej = std::get<nas::security_mode_reject>(nas_of(*next_uplink(ue, 3)));
  EXPECT_EQ(rej.cause, nas::cause::ue_security_capabilities_mismatch);
  EXPECT_TRUE(ue.take_release_request());
  EXPECT_FALSE(ue.take_release_request());
  ue.release("security mode reject");
  EXPECT_EQ(ue.state(), ue_state::idle);
  EXPECT_EQ(ue.stored_tmsi(), t);
}

TEST(UeNas, ServiceRejectClearsTmsiAndAsksToReconnect)
{
  ue_fsm ue(0, config_for("Samsung S23", tmsi48{0x77}), two_nr_and_lte(), sim_rng(10));
  connect(ue);
  next_uplink(ue);
  const auto out = ue.on_nas(nas::service_reject{nas::cause::ue_identity_cannot_be_derived});
  EXPECT_TRUE(out.reconnect);
  EXPECT_FALSE(ue.stored_tmsi());
  EXPECT_EQ(ue.state(), ue_state::idle);
}

TEST(UeNas, AuthenticationRejectFollowsProfile)
{
  struct expectation {
    const char*  profile;
    ue_state     state;
    bool         reconnect;
  };
  for (const auto& e : {expectation{"Samsung S23", ue_state::downgraded_to_4g, false},
                        expectation{"OnePlus Pro 10", ue_state::cellular_disabled, false},
                        expectation{"Pixel 10 Pro", ue_state::idle, true}}) {
    ue_fsm ue(0, config_for(e.profile, tmsi48{0x55}), two_nr_and_lte(), sim_rng(11));
    connect(ue);
    next_uplink(ue);
    const auto out = ue.on_nas(nas::authentication_reject{});
    EXPECT_EQ(ue.state(), e.state) << e.profile;
    EXPECT_EQ(out.reconnect, e.reconnect) << e.profile;
    EXPECT_FALSE(ue.stored_tmsi()) << e.profile;
    if (e.state == ue_state::idle) {
      EXPECT_EQ(ue.serving_cell(), 1u);
      EXPECT_TRUE(ue.can_start_ra());
    }
  }
}

TEST(UeNas, RejectCause27DisablesNrUntilToggle)
{
  ue_fsm ue(0, config_for("Samsung S23"), two_nr_and_lte(), sim_rng(12));
  connect(ue);
  next_uplink(ue);
  ue.on_nas(nas::registration_reject{nas::cause::n1_mode_not_allowed});
  EXPECT_EQ(ue.state(), ue_state::downgraded_to_4g);
  EXPECT_EQ(ue.serving_cell(), 3u);
  EXPECT_FALSE(ue.start_ra());
  ue.toggle();
  EXPECT_EQ(ue.serving_cell(), 1u);
  EXPECT_TRUE(ue.start_ra());
}

TEST(UeNas, RejectCause15BarsOnlyThatTrackingArea)
{
  ue_fsm ue(0, config_for("Samsung S23"), two_nr_and_lte(), sim_rng(13));
  connect(ue);
  next_uplink(ue);
  ue.on_nas(nas::registration_reject{nas::cause::no_suitable_cells_in_ta});
  EXPECT_TRUE(ue.barred_tracking_areas().contains(1));
  EXPECT_EQ(ue.state(), ue_state::idle);
  EXPECT_EQ(ue.serving_cell(), 2u);
}

TEST(UeNas, BarredTrackingAreaNeverGetsAPreamble)
{
  // Property: whatever happens after a #15 on cell 1, no preamble goes to a
  // cell of tracking area 1, toggles included.
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    auto cfg               = config_for("iPhone 17 Pro");
    cfg.preamble_trans_max = 2;
    std::vector<cell_info> cells{{1, 1, radio_access::nr, 30.0, 3},
                                 {4, 1, radio_access::nr, 28.0, 3},
                                 {2, 2, radio_access::nr, 20.0, 3},
                                 {3, 3, radio_access::lte, 25.0, 3}};
    ue_fsm ue(0, cfg, cells, sim_rng(seed));
    connect(ue);
    next_uplink(ue);
    ue.on_nas(nas::registration_reject{nas::cause::no_suitable_cells_in_ta});
    sim_rng actions(seed + 1000);
    for (int step = 0; step < 60; ++step) {
      switch (actions.uniform(0, 2)) {
        case 0:
          if (const auto p = ue.start_ra()) {
            ASSERT_NE(p->cell_id, 1u);
            ASSERT_NE(p->cell_id, 4u);
            ue.on_ra_attempt_failed("x");
          }
          break;
        case 1:
          ue.toggle();
          break;
        default:
          ue.release("x");
          break;
      }
    }
  }
}

TEST(UeNas, NasOutsideConnectionIsAnomaly)
{
  ue_fsm     ue(0, config_for("Samsung S23"), two_nr_and_lte(), sim_rng(14));
  const auto out = ue.on_nas(nas::service_accept{});
  EXPECT_TRUE(out.anomaly);
  EXPECT_EQ(ue.state(), ue_state::idle);
}

TEST(UeUplink, SmallGrantCarriesLargeBsr)
{
  ue_fsm ue(0, config_for("Samsung S23"), two_nr_and_lte(), sim_rng(15));
  connect(ue);
  const auto tx = ue.on_ul_grant(grant_for(test_rnti, 7));
  ASSERT_TRUE(tx);
  const auto  pdu = mac::decode(tx->payload);
  const auto* bsr = pdu.find(mac::lcid::short_bsr);
  ASSERT_TRUE(bsr);
  EXPECT_EQ(bsr->payload.at(0), mac::bsr_large_buffer);
  EXPECT_FALSE(ue.on_ul_grant(grant_for(rnti{0x1234}, 128)));
}

TEST(UeUplink, ReleaseBumpsGeneration)
{
  ue_fsm     ue(0, config_for("Samsung S23"), two_nr_and_lte(), sim_rng(16));
  const auto g0 = ue.generation();
  ue.start_ra();
  EXPECT_GT(ue.generation(), g0);
  const auto g1 = ue.generation();
  ue.release("x");
  EXPECT_GT(ue.generation(), g1);
}

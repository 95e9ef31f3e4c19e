#pragma once

// Core-network NAS endpoint: subscriber database, TMSI lookup, identity
// procedure, authentication vectors, security-mode capability echo and the
// reject policy.

#include "ovs/aka.hpp"
#include "ovs/codecs/nas.hpp"
#include "ovs/codecs/suci.hpp"
#include "ovs/rng.hpp"

#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace ovs {

struct subscriber_record {
  supi                  id;
  key128                key{};
  bool                  allowed_5g = true;
  std::optional<tmsi48> home_tmsi;
};

/// Reject cause chosen per failure class.
struct reject_policy {
  std::uint8_t not_allowed_5g     = nas::cause::n1_mode_not_allowed;
  std::uint8_t unknown_subscriber = nas::cause::no_suitable_cells_in_ta;
};

enum class identity_status { allowed, not_allowed_5g, unknown };

/// Pure mapping from the identity check to a reject cause.
inline std::optional<std::uint8_t> reject_cause(const reject_policy& p, identity_status s)
{
  switch (s) {
    case identity_status::allowed:
      return std::nullopt;
    case identity_status::not_allowed_5g:
      return p.not_allowed_5g;
    case identity_status::unknown:
      return p.unknown_subscriber;
  }
  return p.unknown_subscriber;
}

/// Where an uplink NAS message came from.
struct nas_context {
  std::uint32_t cell_id       = 0;
  std::uint32_t tracking_area = 0;
  std::uint64_t connection    = 0;
};

enum class amf_session_state { awaiting_identity, awaiting_auth, awaiting_security_mode, established };

inline std::string_view to_string(amf_session_state s)
{
  switch (s) {
    case amf_session_state::awaiting_identity:
      return "AwaitingIdentity";
    case amf_session_state::awaiting_auth:
      return "AwaitingAuth";
    case amf_session_state::awaiting_security_mode:
      return "AwaitingSecurityMode";
    case amf_session_state::established:
      return "Established";
  }
  return "?";
}

struct amf_session {
  std::uint64_t              connection = 0;
  std::optional<tmsi48>      tmsi;
  std::optional<supi>        subscriber;
  amf_session_state          state = amf_session_state::awaiting_identity;
  nas::security_capabilities received_capabilities;
  block128                   expected_res{};
};

struct amf_reply {
  std::optional<nas::message> downlink;
  /// The connection is finished from the core's point of view.
  bool        release = false;
  bool        anomaly = false;
  std::string note;
};

class amf
{
public:
  amf(std::vector<subscriber_record> db, home_network_key hn_key, reject_policy policy, sim_rng rng) :
    hn_key_(hn_key), policy_(policy), rng_(rng)
  {
    for (auto& r : db) {
      if (by_supi_.contains(r.id)) {
        throw usage_error("amf: duplicate supi " + std::to_string(r.id.value));
      }
      by_supi_.emplace(r.id, std::move(r));
    }
  }

  const reject_policy& policy() const { return policy_; }

  const subscriber_record* find(supi id) const
  {
    auto it = by_supi_.find(id);
    return it == by_supi_.end() ? nullptr : &it->second;
  }

  const subscriber_record* find(tmsi48 t) const
  {
    for (const auto& [id, r] : by_supi_) {
      if (r.home_tmsi && *r.home_tmsi == t) {
        return &r;
      }
    }
    return nullptr;
  }

  const amf_session* session(std::uint64_t connection) const
  {
    auto it = sessions_.find(connection);
    return it == sessions_.end() ? nullptr : &it->second;
  }

  std::size_t session_count() const { return sessions_.size(); }

  std::uint64_t auth_sqn(supi id) const
  {
    auto it = sqn_.find(id);
    return it == sqn_.end() ? 0 : it->second;
  }

  amf_reply on_uplink(const nas_context& ctx, byte_view nas_bytes)
  {
    nas::message m;
    try {
      m = nas::decode(nas_bytes);
    } catch (const decode_error& e) {
      return {std::nullopt, false, true, std::string("malformed NAS dropped: ") + e.what()};
    }
    return on_uplink(ctx, m);
  }

  amf_reply on_uplink(const nas_context& ctx, const nas::message& m)
  {
    return std::visit([&](const auto& msg) { return handle(ctx, msg); }, m);
  }

  void close(std::uint64_t connection) { sessions_.erase(connection); }

private:
  identity_status check(const suci& s, std::optional<supi>& out) const
  {
    try {
      const supi id = deconceal_suci(s, hn_key_);
      const auto* r = find(id);
      if (!r) {
        return identity_status::unknown;
      }
      out = id;
      return r->allowed_5g ? identity_status::allowed : identity_status::not_allowed_5g;
    } catch (const deconceal_error&) {
      return identity_status::unknown;
    }
  }

  amf_session& open(const nas_context& ctx)
  {
    auto& s      = sessions_[ctx.connection];
    s            = amf_session{};
    s.connection = ctx.connection;
    return s;
  }

  amf_reply reject(const nas_context& ctx, identity_status st, const std::string& why)
  {
    sessions_.erase(ctx.connection);
    return {nas::registration_reject{*reject_cause(policy_, st)}, true, false, why};
  }

  amf_reply authenticate(amf_session& s, const std::string& why)
  {
    const auto* rec  = find(*s.subscriber);
    const auto  v    = aka::make_vector(rec->key, ++sqn_[*s.subscriber]);
    s.expected_res   = v.res;
    s.state          = amf_session_state::awaiting_auth;
    return {nas::authentication_request{v.rand, v.autn}, false, false, why};
  }

  amf_reply handle(const nas_context& ctx, const nas::registration_request& m)
  {
    if (const auto* t = std::get_if<tmsi48>(&m.id)) {
      auto& s                 = open(ctx);
      s.received_capabilities = m.capabilities;
      s.tmsi                  = *t;
      if (const auto* rec = find(*t)) {
        drop_other_sessions(*t, ctx.connection);
        s.subscriber = rec->id;
        return authenticate(s, "known tmsi");
      }
      s.state = amf_session_state::awaiting_identity;
      return {nas::identity_request{}, false, false, "unknown tmsi " + to_hex_u64(t->value)};
    }
    std::optional<supi> id;
    const auto          st = check(std::get<suci>(m.id), id);
    if (st != identity_status::allowed) {
      return reject(ctx, st, st == identity_status::unknown ? "suci not resolvable" : "subscriber not allowed 5G");
    }
    auto& s                 = open(ctx);
    s.received_capabilities = m.capabilities;
    s.subscriber            = id;
    return authenticate(s, "suci resolved");
  }

  amf_reply handle(const nas_context& ctx, const nas::service_request& m)
  {
    if (const auto* rec = find(m.s_tmsi)) {
      drop_other_sessions(m.s_tmsi, ctx.connection);
      auto& s      = open(ctx);
      s.tmsi       = m.s_tmsi;
      s.subscriber = rec->id;
      s.state      = amf_session_state::established;
      return {nas::service_accept{}, false, false, "session resumed"};
    }
    sessions_.erase(ctx.connection);
    return {nas::service_reject{nas::cause::ue_identity_cannot_be_derived}, true, false,
            "unknown s-tmsi " + to_hex_u64(m.s_tmsi.value)};
  }

  amf_reply handle(const nas_context& ctx, const nas::identity_response& m)
  {
    auto it = sessions_.find(ctx.connection);
    if (it == sessions_.end() || it->second.state != amf_session_state::awaiting_identity) {
      return {std::nullopt, false, true, "identity response without identity request"};
    }
    std::optional<supi> id;
    const auto          st = check(m.suci, id);
    if (st != identity_status::allowed) {
      return reject(ctx, st, "identity response not resolvable");
    }
    it->second.subscriber = id;
    return authenticate(it->second, "identity resolved");
  }

  amf_reply handle(const nas_context& ctx, const nas::authentication_response& m)
  {
    auto it = sessions_.find(ctx.connection);
    if (it == sessions_.end() || it->second.state != amf_session_state::awaiting_auth) {
      return {std::nullopt, false, true, "authentication response out of sequence"};
    }
    if (!constant_time_equal(m.res, it->second.expected_res)) {
      sessions_.erase(it);
      return {nas::authentication_reject{}, true, false, "res mismatch"};
    }
    it->second.state = amf_session_state::awaiting_security_mode;
    return {nas::security_mode_command{it->second.received_capabilities}, false, false, "res verified"};
  }

  amf_reply handle(const nas_context& ctx, const nas::authentication_failure& m)
  {
    auto it = sessions_.find(ctx.connection);
    if (it == sessions_.end() || it->second.state != amf_session_state::awaiting_auth) {
      return {std::nullopt, false, true, "authentication failure out of sequence"};
    }
    sessions_.erase(it);
    return {nas::authentication_reject{}, true, false, "authentication failure cause " + std::to_string(m.cause)};
  }

  amf_reply handle(const nas_context& ctx, const nas::security_mode_complete&)
  {
    auto it = sessions_.find(ctx.connection);
    if (it == sessions_.end() || it->second.state != amf_session_state::awaiting_security_mode) {
      return {std::nullopt, false, true, "security mode complete out of sequence"};
    }
    auto&        rec = by_supi_.at(*it->second.subscriber);
    const tmsi48 fresh = fresh_tmsi();
    rec.home_tmsi      = fresh;
    it->second.tmsi    = fresh;
    it->second.state   = amf_session_state::established;
    return {nas::registration_accept{fresh}, false, false, "tmsi rotated"};
  }

  amf_reply handle(const nas_context& ctx, const nas::security_mode_reject& m)
  {
    auto it = sessions_.find(ctx.connection);
    if (it == sessions_.end() || it->second.state != amf_session_state::awaiting_security_mode) {
      return {std::nullopt, false, true, "security mode reject out of sequence"};
    }
    sessions_.erase(it);
    return {std::nullopt, true, false, "security mode reject cause " + std::to_string(m.cause) + ", session closed"};
  }

  template <typename T>
  amf_reply handle(const nas_context&, const T& m)
  {
    return {std::nullopt, false, true, "unexpected uplink " + nas::name(nas::message{m})};
  }

  void drop_other_sessions(tmsi48 t, std::uint64_t keep)
  {
    std::erase_if(sessions_, [&](const auto& kv) { return kv.first != keep && kv.second.tmsi == t; });
  }

  tmsi48 fresh_tmsi()
  {
    for (;;) {
      const tmsi48 t{rng_.next_u64()};
      if (t.value != 0 && !find(t)) {
        return t;
      }
    }
  }

  home_network_key                     hn_key_;
  reject_policy                        policy_;
  sim_rng                              rng_;
  std::map<supi, subscriber_record>    by_supi_;
  std::map<std::uint64_t, amf_session> sessions_;
  std::map<supi, std::uint64_t>        sqn_;
};

} // namespace ovs

#pragma once

// Newline-delimited JSON event trace.

#include "ovs/airtime.hpp"
#include "ovs/codecs/stack.hpp"
#include "ovs/types.hpp"

#include <json.hpp>

#include <cstdint>
#include <map>
#include <ostream>
#include <string>
#include <vector>

namespace ovs::sim {

inline constexpr int trace_schema_version = 1;

enum class trace_kind { tx_ul, tx_dl, state_change, attack_decision, anomaly, kpi_tick };

inline std::string_view to_string(trace_kind k)
{
  switch (k) {
    case trace_kind::tx_ul:
      return "TxUL";
    case trace_kind::tx_dl:
      return "TxDL";
    case trace_kind::state_change:
      return "StateChange";
    case trace_kind::attack_decision:
      return "AttackDecision";
    case trace_kind::anomaly:
      return "Anomaly";
    case trace_kind::kpi_tick:
      return "KpiTick";
  }
  return "?";
}

/// Sink for trace lines. Lines go to an optional stream, can be kept in
/// memory, and always feed a running FNV-1a digest and per-kind counters.
class trace_log
{
public:
  trace_log() = default;
  explicit trace_log(std::ostream* out, bool keep = false) : out_(out), keep_(keep) {}

  void emit(sim_ns t, const entity_id& who, trace_kind kind, nlohmann::ordered_json detail)
  {
    const symbol_time at = symbol_time::from_ns(t);
    nlohmann::ordered_json line;
    line["v"]      = trace_schema_version;
    line["seq"]    = seq_;
    line["t_ns"]   = t;
    line["frame"]  = at.frame;
    line["slot"]   = at.slot_in_frame;
    line["sym"]    = at.symbol_in_slot;
    line["entity"] = who.str();
    line["kind"]   = to_string(kind);
    line["detail"] = std::move(detail);
    std::string text = line.dump();
    for (unsigned char c : text) {
      digest_ = (digest_ ^ c) * 0x100000001b3ULL;
    }
    digest_ = (digest_ ^ '\n') * 0x100000001b3ULL;
    ++seq_;
    ++counts_[{who.kind, kind}];
    if (out_) {
      *out_ << text << '\n';
    }
    if (keep_) {
      lines_.push_back(std::move(text));
    }
  }

  std::uint64_t lines() const { return seq_; }
  std::uint64_t digest() const { return digest_; }
  const std::vector<std::string>& kept() const { return lines_; }

  std::uint64_t count(entity_kind who, trace_kind kind) const
  {
    auto it = counts_.find({who, kind});
    return it == counts_.end() ? 0 : it->second;
  }

private:
  std::ostream*                                            out_  = nullptr;
  bool                                                     keep_ = false;
  std::uint64_t                                            seq_  = 0;
  std::uint64_t                                            digest_ = 0xcbf29ce484222325ULL;
  std::map<std::pair<entity_kind, trace_kind>, std::uint64_t> counts_;
  std::vector<std::string>                                 lines_;
};

/// Renders one trace line with the carried bytes decoded through the codecs.
inline std::string decode_trace_line(const std::string& text)
{
  const auto  j = nlohmann::json::parse(text);
  std::string out = std::to_string(j.at("t_ns").get<std::int64_t>()) + " " + std::to_string(j.at("frame").get<int>()) +
                    "." + std::to_string(j.at("slot").get<int>()) + "." + std::to_string(j.at("sym").get<int>()) + " " +
                    j.at("entity").get<std::string>() + " " + j.at("kind").get<std::string>();
  const auto& d = j.at("detail");
  if (d.contains("hex") && d.contains("layer")) {
    const auto layer = d.at("layer").get<std::string>();
    const auto bytes = from_hex(d.at("hex").get<std::string>());
    try {
      if (layer == "mac") {
        out += " " + describe_uplink(bytes);
      } else if (layer == "rrc") {
        const auto m = rrc::decode(bytes);
        out += " " + rrc::describe(m);
        if (const auto* dl = std::get_if<rrc::dl_information_transfer>(&m)) {
          out += " " + nas::describe(nas::decode(dl->nas_container));
        }
      } else if (layer == "nas") {
        out += " " + nas::describe(nas::decode(bytes));
      } else {
        out += " " + to_hex(bytes);
      }
    } catch (const decode_error& e) {
      out += std::string(" <undecodable: ") + e.what() + ">";
    }
  } else if (d.contains("summary")) {
    out += " " + d.at("summary").get<std::string>();
  } else if (d.contains("from") && d.contains("to")) {
    out += " " + d.at("from").get<std::string>() + " -> " + d.at("to").get<std::string>();
    if (d.contains("reason") && !d.at("reason").get<std::string>().empty()) {
      out += " (" + d.at("reason").get<std::string>() + ")";
    }
    return out;
  } else {
    auto rest = d;
    rest.erase("note");
    out += " " + rest.dump();
  }
  if (d.contains("note") && !d.at("note").get<std::string>().empty()) {
    out += " (" + d.at("note").get<std::string>() + ")";
  }
  return out;
}

} // namespace ovs::sim

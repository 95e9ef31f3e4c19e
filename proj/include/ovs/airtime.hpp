#pragma once

// Simulated air interface for FR1 numerology 1 (30 kHz SCS): slot clock,
// uplink grants, timing advance and power-capture resolution of overlapping
// uplink transmissions.

#include "ovs/bytes.hpp"
#include "ovs/types.hpp"

#include <cmath>
#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace ovs {

inline constexpr std::uint32_t slots_per_frame  = 20;
inline constexpr std::uint32_t symbols_per_slot = 14;
inline constexpr std::int64_t  slot_ns          = 500'000;
inline constexpr double        slot_us          = 500.0;
inline constexpr double        symbol_us        = slot_us / symbols_per_slot;

using sim_ns = std::int64_t;

inline constexpr sim_ns from_us(double us) { return static_cast<sim_ns>(std::llround(us * 1000.0)); }
inline constexpr sim_ns from_ms(double ms) { return static_cast<sim_ns>(std::llround(ms * 1'000'000.0)); }

/// (frame, slot, symbol) position on the numerology-1 grid.
struct symbol_time {
  std::uint64_t frame          = 0;
  std::uint32_t slot_in_frame  = 0;
  std::uint32_t symbol_in_slot = 0;

  friend auto operator<=>(const symbol_time&, const symbol_time&) = default;

  std::uint64_t slot_index() const { return frame * slots_per_frame + slot_in_frame; }

  double absolute_us() const
  {
    return static_cast<double>(frame) * 10'000.0 + slot_in_frame * slot_us + symbol_in_slot * symbol_us;
  }

  /// Integer nanoseconds; the symbol offset is truncated toward zero.
  sim_ns absolute_ns() const
  {
    return static_cast<sim_ns>(slot_index()) * slot_ns + static_cast<sim_ns>(symbol_in_slot) * slot_ns / symbols_per_slot;
  }

  static symbol_time from_slot_index(std::uint64_t slot, std::uint32_t symbol = 0)
  {
    return {slot / slots_per_frame, static_cast<std::uint32_t>(slot % slots_per_frame), symbol};
  }

  /// Symbol containing `ns`.
  static symbol_time from_ns(sim_ns ns)
  {
    const auto slot = static_cast<std::uint64_t>(ns / slot_ns);
    const auto rem  = ns % slot_ns;
    auto       sym  = static_cast<std::uint32_t>(rem * symbols_per_slot / slot_ns);
    // truncation in absolute_ns() can put a boundary one ns early
    while (sym + 1 < symbols_per_slot &&
           static_cast<sim_ns>(sym + 1) * slot_ns / symbols_per_slot <= rem) {
      ++sym;
    }
    return from_slot_index(slot, sym);
  }

  bool valid() const { return slot_in_frame < slots_per_frame && symbol_in_slot < symbols_per_slot; }
};

inline symbol_time advance_slots(const symbol_time& t, std::uint64_t n)
{
  return symbol_time::from_slot_index(t.slot_index() + n, t.symbol_in_slot);
}

/// First symbol of the slot at or after `ns`.
inline symbol_time next_slot_boundary(sim_ns ns)
{
  const auto slot = static_cast<std::uint64_t>((ns + slot_ns - 1) / slot_ns);
  return symbol_time::from_slot_index(slot);
}

struct uplink_grant {
  rnti          target;
  symbol_time   grant_slot;
  std::uint32_t k2            = 1;
  std::uint32_t tbs_bytes     = 1;
  std::uint64_t allocation_id = 0;

  bool valid() const { return k2 >= 1 && tbs_bytes >= 1 && grant_slot.valid(); }
};

/// Instant by which the uplink payload for `g` must be on air: symbol 0 of
/// slot grant_slot + k2.
inline symbol_time grant_deadline(const uplink_grant& g)
{
  return symbol_time::from_slot_index(g.grant_slot.slot_index() + g.k2);
}

struct transmission {
  std::uint64_t allocation_id      = 0;
  entity_id     sender;
  byte_buffer   payload;
  double        tx_power_dbm       = 0.0;
  double        timing_advance_us  = 0.0;
  double        sender_distance_us = 0.0;

  /// Offset of arrival at the gNB relative to the slot grid.
  double arrival_offset_us() const { return 2.0 * sender_distance_us - timing_advance_us; }
};

struct capture_config {
  double capture_margin_db = 3.0;
  double ta_tolerance_us   = 2.3;

  bool valid() const
  {
    return std::isfinite(capture_margin_db) && std::isfinite(ta_tolerance_us) && capture_margin_db >= 0.0 &&
           ta_tolerance_us >= 0.0;
  }
};

struct reception_result {
  /// Set when one transmission was captured; empty means collision.
  std::optional<transmission> decoded;
  /// Index of the decoded transmission in the input list.
  std::optional<std::size_t> decoded_index;
  std::size_t                misaligned = 0;

  bool collision() const { return !decoded.has_value(); }
};

/// Power-capture resolution of transmissions sharing one allocation.
/// Misaligned transmissions are discarded; the strongest survivor is decoded
/// only if it beats every other survivor by more than the capture margin.
inline reception_result resolve_reception(std::span<const transmission> txs, const capture_config& cfg)
{
  if (txs.empty()) {
    throw usage_error("resolve_reception: empty transmission list");
  }
  const std::uint64_t alloc = txs.front().allocation_id;
  for (const auto& tx : txs) {
    if (tx.allocation_id != alloc) {
      throw usage_error("resolve_reception: mixed allocation ids");
    }
  }

  reception_result         result;
  std::vector<std::size_t> survivors;
  for (std::size_t i = 0; i < txs.size(); ++i) {
    if (std::fabs(txs[i].arrival_offset_us()) > cfg.ta_tolerance_us) {
      ++result.misaligned;
    } else {
      survivors.push_back(i);
    }
  }
  if (survivors.empty()) {
    return result;
  }

  std::size_t best = survivors.front();
  for (std::size_t i : survivors) {
    if (txs[i].tx_power_dbm > txs[best].tx_power_dbm) {
      best = i;
    }
  }
  for (std::size_t i : survivors) {
    if (i == best) {
      continue;
    }
    // strict: a tie at exactly the margin is a collision
    if (!(txs[best].tx_power_dbm - txs[i].tx_power_dbm > cfg.capture_margin_db)) {
      return result;
    }
  }
  result.decoded       = txs[best];
  result.decoded_index = best;
  return result;
}

/// Round-trip compensation that makes the arrival offset zero.
inline double required_timing_advance(double distance_us)
{
  if (distance_us < 0.0) {
    throw usage_error("required_timing_advance: negative distance");
  }
  return 2.0 * distance_us;
}

} // namespace ovs

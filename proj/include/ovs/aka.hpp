#pragma once

// Abstract authentication and key agreement: a keyed PRF stands in for
// Milenage. RAND is derived from a per-subscriber counter, AUTN and RES from
// RAND. Sequence-number resynchronisation is not modelled.

#include "ovs/bytes.hpp"
#include "ovs/prf.hpp"

#include <cstdint>

namespace ovs::aka {

struct vector {
  block128 rand{};
  block128 autn{};
  block128 res{};
};

namespace detail {
inline constexpr std::uint8_t rand_label[] = {'r', 'a', 'n', 'd'};
inline constexpr std::uint8_t autn_label[] = {'a', 'u', 't', 'n'};
inline constexpr std::uint8_t res_label[]  = {'r', 'e', 's'};
} // namespace detail

inline block128 autn_of(const key128& key, const block128& rand) { return prf128(key, {detail::autn_label, rand}); }

inline block128 res_of(const key128& key, const block128& rand) { return prf128(key, {detail::res_label, rand}); }

inline vector make_vector(const key128& key, std::uint64_t sqn)
{
  byte_buffer counter;
  put_uint_be(counter, sqn, 8);
  vector v;
  v.rand = prf128(key, {detail::rand_label, counter});
  v.autn = autn_of(key, v.rand);
  v.res  = res_of(key, v.rand);
  return v;
}

} // namespace ovs::aka

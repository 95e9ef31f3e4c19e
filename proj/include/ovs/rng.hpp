#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace ovs {

// Seeded generator whose draws are identical on every platform. The engine
// (mt19937_64) is fully specified by the standard; the distributions in
// <random> are not, so the helpers below derive values directly from the raw
// 64-bit output.
class sim_rng
{
public:
  explicit sim_rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform integer in [lo, hi] by rejection sampling.
  std::uint64_t uniform(std::uint64_t lo, std::uint64_t hi)
  {
    const std::uint64_t span = hi - lo;
    if (span == UINT64_MAX) {
      return next_u64();
    }
    const std::uint64_t range = span + 1;
    const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % range);
    std::uint64_t       x;
    do {
      x = next_u64();
    } while (x >= limit);
    return lo + x % range;
  }

  /// Uniform double in [0, 1) with 53 bits of precision.
  double unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Gaussian draw via Box-Muller.
  double gaussian(double mean, double stddev)
  {
    double u1 = unit();
    while (u1 <= 0.0) {
      u1 = unit();
    }
    const double u2 = unit();
    return mean + stddev * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  /// Independent child stream, e.g. one per UE.
  sim_rng fork(std::uint64_t stream_id)
  {
    return sim_rng(next_u64() ^ (stream_id * 0x9e3779b97f4a7c15ULL));
  }

private:
  std::mt19937_64 engine_;
};

} // namespace ovs

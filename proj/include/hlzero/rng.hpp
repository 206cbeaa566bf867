#pragma once

#include <cstdint>
#include <limits>
#include <numbers>

namespace hlzero {

// SplitMix64 used as a counter-based generator: the i-th output of stream `seed`
// is mix(seed + (i + 1) * golden), so any position is addressable directly.
inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

constexpr std::uint64_t splitmix_mix(std::uint64_t x) noexcept {
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t counter_draw(std::uint64_t seed, std::uint64_t index) noexcept {
  return splitmix_mix(seed + (index + 1) * kGolden);
}

/// Uniform double in [0, 1) from the top 53 bits of a draw.
constexpr double to_unit_interval(std::uint64_t bits) noexcept {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

/// Seed of run `run_index` in an ensemble keyed by `master_seed`.
///
/// Two rounds of the SplitMix64 finaliser over (master, index) keep neighbouring
/// run indices and neighbouring master seeds decorrelated; the result depends
/// only on the pair, never on the order in which runs are scheduled.
constexpr std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t run_index) noexcept {
  return splitmix_mix(splitmix_mix(master_seed ^ 0x6A09E667F3BCC909ULL) + run_index * kGolden);
}

/// UniformRandomBitGenerator over the counter stream. Its full state is
/// (seed, position), which makes stream positions serialisable.
class CounterEngine {
 public:
  using result_type = std::uint64_t;

  constexpr explicit CounterEngine(std::uint64_t seed, std::uint64_t position = 0) noexcept
      : seed_(seed), position_(position) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  constexpr result_type operator()() noexcept { return counter_draw(seed_, position_++); }

  constexpr std::uint64_t seed() const noexcept { return seed_; }
  constexpr std::uint64_t position() const noexcept { return position_; }

 private:
  std::uint64_t seed_;
  std::uint64_t position_;
};

/// Angle in [-pi, pi) at stream position `index`.
inline double uniform_angle(std::uint64_t seed, std::uint64_t index) noexcept {
  const double u = to_unit_interval(counter_draw(seed, index));
  const double theta = (2.0 * u - 1.0) * std::numbers::pi;
  return theta < std::numbers::pi ? theta : -std::numbers::pi;
}

}  // namespace hlzero

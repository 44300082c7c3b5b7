#pragma once

#include <cstdint>
#include <initializer_list>

namespace uavplan {

/// SplitMix64 finalizer (Steele, Lea, Flood 2014).
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Derives a substream seed from a base seed and a list of coordinates.
///
/// Each coordinate is folded in as `h = splitmix64(h ^ splitmix64(c + i))`, where i is
/// the coordinate's position, so (1, 2) and (2, 1) map to different streams.
constexpr std::uint64_t mix_seed(std::uint64_t base, std::initializer_list<std::uint64_t> coords) noexcept {
  std::uint64_t h = splitmix64(base);
  std::uint64_t i = 0;
  for (std::uint64_t c : coords) {
    h = splitmix64(h ^ splitmix64(c + 0xA0761D6478BD642FULL * ++i));
  }
  return h;
}

}  // namespace uavplan

#pragma once

#include <cstdint>
#include <string_view>

namespace ddc::rng {

// splitmix64 finalizer; full-avalanche on 64-bit keys
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

constexpr std::uint64_t stream_tag(std::string_view tag) {
  std::uint64_t h = 1469598103934665603ull;  // FNV-1a
  for (char c : tag) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ull;
  }
  return h;
}

// Counter-based draw keyed by (seed, stream, index): reproducible independent
// of call order, so concurrent consumers see the same numbers.
constexpr std::uint64_t draw_u64(std::uint64_t seed, std::uint64_t stream,
                                 std::uint64_t index) {
  return mix64(mix64(seed ^ mix64(stream)) ^ index);
}

inline double uniform01(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  return static_cast<double>(draw_u64(seed, stream, index) >> 11) * 0x1.0p-53;
}

inline double uniform(std::uint64_t seed, std::uint64_t stream, std::uint64_t index,
                      double a, double b) {
  return a + (b - a) * uniform01(seed, stream, index);
}

// integer in [lo, hi] inclusive
inline int uniform_int(std::uint64_t seed, std::uint64_t stream, std::uint64_t index,
                       int lo, int hi) {
  const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
  return lo + static_cast<int>(draw_u64(seed, stream, index) % span);
}

}  // namespace ddc::rng

#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace mgl {

using Rng = std::mt19937_64;

// SplitMix64 finalizer; used to derive independent child seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Seed splitting rule: child = splitmix64(splitmix64(parent ^ stream) + index).
// Every replicate/stream seed in the project is derived this way.
constexpr std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t stream,
                                    std::uint64_t index = 0) noexcept {
  return splitmix64(splitmix64(parent ^ stream) + index);
}

// Stable 64-bit FNV-1a of a tag, for naming seed streams.
constexpr std::uint64_t stream_id(std::string_view tag) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : tag) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline double uniform01(Rng& rng) {
  // 53-bit mantissa draw in [0,1); independent of libstdc++ distribution details.
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Open interval (0,1).
inline double uniform_open01(Rng& rng) {
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

// Box-Muller with explicit uniforms so sequences are portable across std libs.
inline double standard_normal(Rng& rng) {
  const double u1 = uniform_open01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

}  // namespace mgl

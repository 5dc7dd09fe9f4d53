#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace rfim {

// Counter-based keyed randomness. Every random quantity that must be
// reproducible independently of draw order (per-site fields, coupling
// uniforms, cluster coins) is a pure function of a key tuple.

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t key_hash(std::initializer_list<std::uint64_t> parts) {
  std::uint64_t h = 0x243f6a8885a308d3ULL;
  for (auto p : parts) h = splitmix64(h ^ splitmix64(p));
  return h;
}

/// Uniform in [0,1) with 53 random bits.
constexpr double bits_to_unit(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

inline double keyed_uniform(std::initializer_list<std::uint64_t> parts) {
  return bits_to_unit(key_hash(parts));
}

// Domain separation tags for keyed streams.
namespace stream {
inline constexpr std::uint64_t kField = 0x11;
inline constexpr std::uint64_t kEdgeUniform = 0x21;
inline constexpr std::uint64_t kSiteUniform = 0x22;
inline constexpr std::uint64_t kClusterCoin = 0x23;
inline constexpr std::uint64_t kChain = 0x31;
inline constexpr std::uint64_t kCell = 0x41;
inline constexpr std::uint64_t kPercolation = 0x51;
}  // namespace stream

/// Sequential generator for Markov chains. Conversion to doubles is done here
/// rather than through std::uniform_real_distribution so that streams are
/// identical across standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

  double uniform() { return bits_to_unit(engine_()); }
  bool coin() { return (engine_() >> 63) != 0; }
  std::uint64_t next() { return engine_(); }
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) { return static_cast<std::uint64_t>(uniform() * static_cast<double>(n)); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace rfim

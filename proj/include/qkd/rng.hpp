#pragma once

#include <qkd/bits.hpp>

#include <cstdint>
#include <random>
#include <string_view>

namespace qkd {

/// splitmix64 finalizer; used to derive independent stream seeds.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
  return mix64(seed ^ mix64(stream + 0x632be59bd9b4e019ull));
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::string_view label) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ull;  // FNV-1a
  for (char c : label) h = (h ^ static_cast<unsigned char>(c)) * 0x100000001b3ull;
  return derive_seed(seed, h);
}

/// Reproducible generator. The engine is mt19937_64; all conversions to
/// doubles/ranges are done here rather than through <random> distributions,
/// whose output is implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next_u64() { return eng_(); }

  /// Uniform in [0, 1) with 53 bits of resolution.
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) { return uniform() < p; }

  bool bit() {
    if (nbits_ == 0) {
      buf_ = eng_();
      nbits_ = 64;
    }
    const bool b = buf_ & 1u;
    buf_ >>= 1;
    --nbits_;
    return b;
  }

  /// Uniform integer in [0, bound) (Lemire's nearly-divisionless method).
  std::uint64_t below(std::uint64_t bound) {
    if (bound <= 1) return 0;
    unsigned __int128 m = static_cast<unsigned __int128>(eng_()) * bound;
    auto lo = static_cast<std::uint64_t>(m);
    if (lo < bound) {
      const std::uint64_t t = (0 - bound) % bound;
      while (lo < t) {
        m = static_cast<unsigned __int128>(eng_()) * bound;
        lo = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  BitBlock bits(std::size_t n) {
    BitBlock b(n);
    for (auto& w : b.words()) w = eng_();
    b.mask_tail();
    return b;
  }

 private:
  std::mt19937_64 eng_;
  std::uint64_t buf_ = 0;
  int nbits_ = 0;
};

/// Software stand-in for the hardware TRNG: same seed, same stream.
inline BitBlock deterministic_rng(std::uint64_t seed, std::size_t n) { return Rng(seed).bits(n); }

}  // namespace qkd

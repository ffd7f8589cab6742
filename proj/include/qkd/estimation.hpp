#pragma once

// Error-rate estimation on a random disclosed sample, with a Hoeffding
// finite-size penalty and the abort rule.

#include <qkd/bits.hpp>
#include <qkd/errors.hpp>
#include <qkd/rng.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

namespace qkd {

struct QberEstimate {
  std::size_t sample_size = 0;
  std::size_t errors_found = 0;
  double qber_hat = 0.0;
  double delta = 0.0;
  double qber_bound = 0.0;
};

enum class Decision { proceed, abort };

/// Two-sided Hoeffding deviation for N Bernoulli samples at failure probability eps.
inline double hoeffding_delta(std::size_t n, double eps) {
  require(n > 0, ErrorKind::empty_sample, "hoeffding_delta: empty sample");
  require(eps > 0.0 && eps <= 1.0, ErrorKind::config, "epsilon must be in (0,1]");
  return std::sqrt(std::log(1.0 / eps) / (2.0 * static_cast<double>(n)));
}

/// floor(n * fraction) distinct positions, uniform, ascending.
inline std::vector<std::uint32_t> sample_indices(std::size_t n_sift, double fraction, std::uint64_t seed) {
  require(fraction > 0.0 && fraction < 1.0, ErrorKind::config, "sample fraction must be in (0,1)");
  require(n_sift <= 0xffffffffu, ErrorKind::size, "sifted key too long for u32 indices");
  // The nudge keeps e.g. 100 * 0.29 from flooring to 28.
  const auto k = static_cast<std::size_t>(std::floor(static_cast<double>(n_sift) * fraction * (1 + 1e-12)));
  std::vector<std::uint32_t> idx(n_sift);
  std::iota(idx.begin(), idx.end(), 0u);
  Rng rng(seed);
  for (std::size_t i = 0; i < k; ++i) {  // partial Fisher-Yates
    const auto j = i + rng.below(n_sift - i);
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

inline BitBlock select_bits(const BitBlock& key, std::span<const std::uint32_t> indices) {
  BitBlock out(indices.size(), key.index());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    require(indices[i] < key.size(), ErrorKind::size, "sample index out of range");
    if (key.get(indices[i])) out.set(i, true);
  }
  return out;
}

/// The key with the (ascending) sampled positions removed.
inline BitBlock remove_bits(const BitBlock& key, std::span<const std::uint32_t> indices) {
  require(indices.size() <= key.size(), ErrorKind::size, "more indices than bits");
  BitBlock out(key.size() - indices.size(), key.index());
  std::size_t k = 0, o = 0;
  for (std::size_t i = 0; i < key.size(); ++i) {
    if (k < indices.size() && indices[k] == i) {
      ++k;
      continue;
    }
    if (key.get(i)) out.set(o, true);
    ++o;
  }
  require(k == indices.size(), ErrorKind::size, "sample indices must be ascending and in range");
  return out;
}

inline QberEstimate estimate_qber(const BitBlock& alice_sample, const BitBlock& bob_sample, double epsilon_pe) {
  require(alice_sample.size() == bob_sample.size(), ErrorKind::size, "sample lengths differ");
  require(!alice_sample.empty(), ErrorKind::empty_sample, "empty estimation sample");
  QberEstimate e;
  e.sample_size = alice_sample.size();
  e.errors_found = hamming_distance(alice_sample, bob_sample);
  e.qber_hat = static_cast<double>(e.errors_found) / static_cast<double>(e.sample_size);
  e.delta = hoeffding_delta(e.sample_size, epsilon_pe);
  e.qber_bound = e.qber_hat + e.delta;
  return e;
}

/// Equality proceeds.
inline Decision abort_check(const QberEstimate& est, double threshold) {
  return est.qber_bound > threshold ? Decision::abort : Decision::proceed;
}

/// Disclosure payload: u32 count, u32 delta-encoded indices, packed sample bits.
inline std::vector<std::uint8_t> disclosure_message(std::span<const std::uint32_t> indices, const BitBlock& sample) {
  std::vector<std::uint8_t> out;
  auto put32 = [&](std::uint32_t v) {
    for (int k = 0; k < 4; ++k) out.push_back(static_cast<std::uint8_t>(v >> (8 * k)));
  };
  put32(static_cast<std::uint32_t>(indices.size()));
  std::uint32_t prev = 0;
  for (auto i : indices) {
    put32(i - prev);
    prev = i;
  }
  const auto bits = sample.to_bytes();
  out.insert(out.end(), bits.begin(), bits.end());
  return out;
}

struct Disclosure {
  std::vector<std::uint32_t> indices;
  BitBlock sample;
};

inline Disclosure parse_disclosure(std::span<const std::uint8_t> msg) {
  auto get32 = [&](std::size_t at) {
    require(at + 4 <= msg.size(), ErrorKind::io, "truncated disclosure");
    std::uint32_t v = 0;
    for (int k = 0; k < 4; ++k) v |= static_cast<std::uint32_t>(msg[at + k]) << (8 * k);
    return v;
  };
  Disclosure d;
  const auto n = get32(0);
  std::uint32_t acc = 0;
  for (std::uint32_t i = 0; i < n; ++i) {
    acc += get32(4 + 4 * std::size_t{i});
    d.indices.push_back(acc);
  }
  const std::size_t off = 4 + 4 * std::size_t{n};
  d.sample = BitBlock::from_bytes(msg.subspan(off), n);
  return d;
}

}  // namespace qkd

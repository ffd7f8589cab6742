#pragma once

// Privacy amplification: Toeplitz hashing (direct and FFT convolution), the
// split/shuffle/sub-hash/merge flow, and the output-length rule.

#include <qkd/bits.hpp>
#include <qkd/errors.hpp>
#include <qkd/ldpc.hpp>
#include <qkd/rng.hpp>

#include <fftw3.h>

#include <cmath>
#include <cstdint>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <vector>

namespace qkd::pa {

/// Diagonal values of an r x n Toeplitz matrix: T[i][j] = bits[i - j + n - 1].
struct ToeplitzSeed {
  BitBlock bits;
  std::size_t n = 0;
  std::size_t r = 0;

  static ToeplitzSeed random(std::size_t n, std::size_t r, std::uint64_t seed) {
    require(n >= 1 && r >= 1, ErrorKind::size, "Toeplitz dimensions must be positive");
    return {deterministic_rng(seed, n + r - 1), n, r};
  }

  void validate() const {
    require(n >= 1 && r >= 1, ErrorKind::size, "Toeplitz dimensions must be positive");
    require(bits.size() == n + r - 1, ErrorKind::size, "Toeplitz seed must have n + r - 1 bits");
  }
};

struct PaPolicy {
  double epsilon_pa = 1e-10;
  std::size_t leak_ec = 0;
  std::size_t leak_pe = 0;
  std::size_t verify_bits = 0;
};

/// r = floor(n (1 - h2(q)) - leak_ec - leak_pe - verify_bits - 2 log2(1/eps)),
/// clipped to [0, n - 1].
inline std::size_t output_length(std::size_t n, double qber_bound, const PaPolicy& p) {
  require(n > 0, ErrorKind::size, "output_length: n must be positive");
  require(p.epsilon_pa > 0.0 && p.epsilon_pa <= 1.0, ErrorKind::config, "epsilon_pa must be in (0,1]");
  if (qber_bound >= 0.5) return 0;
  const double h = ldpc::binary_entropy(std::max(0.0, qber_bound));
  const double raw = static_cast<double>(n) * (1.0 - h) - static_cast<double>(p.leak_ec) -
                     static_cast<double>(p.leak_pe) - static_cast<double>(p.verify_bits) -
                     2.0 * std::log2(1.0 / p.epsilon_pa);
  if (raw <= 0.0) return 0;
  return std::min(static_cast<std::size_t>(std::floor(raw)), n - 1);
}

/// O(n r / 64) reference product.
inline BitBlock toeplitz_hash_direct(const ToeplitzSeed& seed, const BitBlock& input) {
  seed.validate();
  require(input.size() == seed.n, ErrorKind::size, "Toeplitz input length != n");
  const std::size_t n = seed.n, r = seed.r, L = n + r - 1;
  // Row i runs backwards through the seed; after reversal it is the slice
  // starting at r - 1 - i.
  BitBlock rev(L);
  for (std::size_t k = 0; k < L; ++k) rev.set(k, seed.bits.get(L - 1 - k));
  BitBlock out(r, input.index());
  for (std::size_t i = 0; i < r; ++i) out.set(i, dot(rev.slice(r - 1 - i, n), input));
  return out;
}

inline constexpr std::size_t kMaxFftSpan = std::size_t{1} << 22;  // n + r - 1 per transform
inline constexpr double kRoundingGuard = 0.25;

namespace detail {

// FFTW's planner is not thread-safe; plans are created once per size under a
// lock and executed with the new-array interface, which is.
struct PlanPair {
  fftw_plan fwd = nullptr;
  fftw_plan inv = nullptr;
};

inline std::mutex& plan_mutex() {
  static std::mutex m;
  return m;
}

inline PlanPair plans_for(std::size_t N) {
  static std::map<std::size_t, PlanPair> cache;
  std::lock_guard lk(plan_mutex());
  auto it = cache.find(N);
  if (it != cache.end()) return it->second;
  auto* re = fftw_alloc_real(N);
  auto* co = fftw_alloc_complex(N / 2 + 1);
  PlanPair p;
  p.fwd = fftw_plan_dft_r2c_1d(static_cast<int>(N), re, co, FFTW_ESTIMATE);
  p.inv = fftw_plan_dft_c2r_1d(static_cast<int>(N), co, re, FFTW_ESTIMATE);
  fftw_free(re);
  fftw_free(co);
  require(p.fwd && p.inv, ErrorKind::numeric, "FFTW planning failed");
  cache.emplace(N, p);
  return p;
}

struct RealBuf {
  explicit RealBuf(std::size_t n) : p(fftw_alloc_real(n)) {}
  ~RealBuf() { fftw_free(p); }
  RealBuf(const RealBuf&) = delete;
  RealBuf& operator=(const RealBuf&) = delete;
  double* p;
};

struct ComplexBuf {
  explicit ComplexBuf(std::size_t n) : p(fftw_alloc_complex(n)) {}
  ~ComplexBuf() { fftw_free(p); }
  ComplexBuf(const ComplexBuf&) = delete;
  ComplexBuf& operator=(const ComplexBuf&) = delete;
  fftw_complex* p;
};

}  // namespace detail

/// out_i = sum_j seed[i - j + n - 1] x_j = (seed * x)[i + n - 1]. A cyclic
/// convolution of length N >= n + r - 1 leaves those entries alias-free.
inline BitBlock toeplitz_hash_fft(const ToeplitzSeed& seed, const BitBlock& input) {
  seed.validate();
  require(input.size() == seed.n, ErrorKind::size, "Toeplitz input length != n");
  const std::size_t n = seed.n, r = seed.r, L = n + r - 1;
  require(L <= kMaxFftSpan, ErrorKind::size, "n + r - 1 exceeds the FFT span cap; use split_shuffle_merge");
  std::size_t N = 1;
  while (N < L) N <<= 1;
  const auto plans = detail::plans_for(N);

  detail::RealBuf a(N), b(N);
  detail::ComplexBuf fa(N / 2 + 1), fb(N / 2 + 1);
  for (std::size_t k = 0; k < N; ++k) {
    a.p[k] = k < L && seed.bits.get(k) ? 1.0 : 0.0;
    b.p[k] = k < n && input.get(k) ? 1.0 : 0.0;
  }
  fftw_execute_dft_r2c(plans.fwd, a.p, fa.p);
  fftw_execute_dft_r2c(plans.fwd, b.p, fb.p);
  for (std::size_t k = 0; k <= N / 2; ++k) {
    const double re = fa.p[k][0] * fb.p[k][0] - fa.p[k][1] * fb.p[k][1];
    const double im = fa.p[k][0] * fb.p[k][1] + fa.p[k][1] * fb.p[k][0];
    fa.p[k][0] = re;
    fa.p[k][1] = im;
  }
  fftw_execute_dft_c2r(plans.inv, fa.p, a.p);

  const double scale = 1.0 / static_cast<double>(N);
  BitBlock out(r, input.index());
  for (std::size_t i = 0; i < r; ++i) {
    const double v = a.p[i + n - 1] * scale;
    const double rv = std::nearbyint(v);
    if (std::fabs(v - rv) > kRoundingGuard)
      fail(ErrorKind::numeric, "FFT rounding guard exceeded at output " + std::to_string(i));
    if (static_cast<std::uint64_t>(rv) & 1u) out.set(i, true);
  }
  return out;
}

struct SplitOptions {
  bool shuffle = true;
  std::uint64_t shuffle_seed = 0;
  std::size_t threads = 1;
};

/// Output length of sub-block k when r is split over `parts`.
inline std::size_t sub_length(std::size_t r, std::size_t parts, std::size_t k) {
  return r / parts + (k < r % parts ? 1 : 0);
}

/// Zero-pad to a multiple of `parts`, permute (seeded), hash each part with
/// consecutive slices of the seed, concatenate in part order.
inline BitBlock split_shuffle_merge(const BitBlock& input, const ToeplitzSeed& seed, std::size_t parts,
                                    const SplitOptions& opt = {}) {
  seed.validate();
  require(parts >= 1, ErrorKind::config, "parts must be >= 1");
  require(input.size() == seed.n, ErrorKind::size, "Toeplitz input length != n");
  const std::size_t n = seed.n, r = seed.r;
  const std::size_t np = (n + parts - 1) / parts * parts;
  const std::size_t per = np / parts;
  require(sub_length(r, parts, 0) <= per, ErrorKind::size, "sub-output longer than sub-input");

  BitBlock padded = input;
  padded.resize(np);
  BitBlock mixed(np, input.index());
  if (opt.shuffle) {
    std::vector<std::uint32_t> perm(np);
    for (std::size_t i = 0; i < np; ++i) perm[i] = static_cast<std::uint32_t>(i);
    Rng rng(opt.shuffle_seed);
    for (std::size_t i = np; i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);
    for (std::size_t i = 0; i < np; ++i)
      if (padded.get(perm[i])) mixed.set(i, true);
  } else {
    mixed = padded;
  }

  std::vector<ToeplitzSeed> seeds;
  std::size_t off = 0;
  for (std::size_t k = 0; k < parts; ++k) {
    const std::size_t rk = sub_length(r, parts, k);
    if (rk == 0) {
      seeds.push_back({});
      continue;
    }
    seeds.push_back({seed.bits.slice(off, per + rk - 1), per, rk});
    off += per + rk - 1;
  }

  std::vector<BitBlock> outs(parts);
  auto work = [&](std::size_t k) {
    if (seeds[k].r == 0) return;
    outs[k] = toeplitz_hash_fft(seeds[k], mixed.slice(k * per, per));
  };
  if (opt.threads <= 1 || parts == 1) {
    for (std::size_t k = 0; k < parts; ++k) work(k);
  } else {
    std::vector<std::future<void>> fs;
    for (std::size_t k = 0; k < parts; ++k) fs.push_back(std::async(std::launch::async, work, k));
    for (auto& f : fs) f.get();
  }
  BitBlock out(0, input.index());
  for (const auto& o : outs) out.append(o);
  return out;
}

/// Largest part count needed to respect the FFT span cap.
inline std::size_t parts_needed(std::size_t n, std::size_t r) {
  std::size_t parts = 1;
  while ((n + parts - 1) / parts + (r + parts - 1) / parts - 1 > kMaxFftSpan) ++parts;
  return parts;
}

// PA message: n u64, r u64, u64 seed length, packed seed bits.
inline std::vector<std::uint8_t> seed_message(const ToeplitzSeed& s) {
  std::vector<std::uint8_t> out;
  for (std::uint64_t v : {std::uint64_t{s.n}, std::uint64_t{s.r}, std::uint64_t{s.bits.size()}})
    for (int k = 0; k < 8; ++k) out.push_back(static_cast<std::uint8_t>(v >> (8 * k)));
  const auto b = s.bits.to_bytes();
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

inline ToeplitzSeed parse_seed_message(std::span<const std::uint8_t> msg) {
  require(msg.size() >= 24, ErrorKind::io, "truncated PA message");
  auto le = [&](std::size_t at) {
    std::uint64_t v = 0;
    for (int k = 7; k >= 0; --k) v = (v << 8) | msg[at + static_cast<std::size_t>(k)];
    return v;
  };
  ToeplitzSeed s;
  s.n = le(0);
  s.r = le(8);
  const auto len = le(16);
  s.bits = BitBlock::from_bytes(msg.subspan(24), len);
  s.validate();
  return s;
}

}  // namespace qkd::pa

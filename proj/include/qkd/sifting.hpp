#pragma once

// Clock alignment and basis sifting for BB84, BBM92 and COW.

#include <qkd/bits.hpp>
#include <qkd/chansim.hpp>
#include <qkd/errors.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

namespace qkd {

struct AlignmentResult {
  std::int64_t offset = 0;
  double correlation = 0.0;
  bool accepted = false;
};

namespace detail {

/// Pearson correlation between the 0/1 indicator sequences x[t] = [t in A]
/// and y[t] = [t + offset in B] over the frame t in [0, T), T = 1 + last
/// timestamp of either list. Both lists must be sorted and duplicate free.
class Correlator {
 public:
  Correlator(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b)
      : a_(a), b_(b), T_(static_cast<std::int64_t>(std::max(a.back(), b.back())) + 1), hit_(b.back() + 1, 0) {
    for (auto t : b) hit_[t] = 1;
  }

  double operator()(std::int64_t offset) const {
    const auto lo = std::lower_bound(b_.begin(), b_.end(), static_cast<std::uint64_t>(std::max<std::int64_t>(0, offset)));
    const auto hi = offset + T_ <= 0 ? b_.begin()
                                     : std::lower_bound(b_.begin(), b_.end(), static_cast<std::uint64_t>(offset + T_));
    const double nb = static_cast<double>(std::max<std::ptrdiff_t>(0, hi - lo));
    const auto limit = static_cast<std::int64_t>(hit_.size());
    std::size_t c = 0;
    for (auto t : a_) {
      const std::int64_t want = static_cast<std::int64_t>(t) + offset;
      if (want >= 0 && want < limit) c += hit_[static_cast<std::size_t>(want)];
    }
    const double na = static_cast<double>(a_.size());
    const double t = static_cast<double>(T_);
    const double cc = static_cast<double>(c);
    const double var = na * (t - na) * nb * (t - nb);
    if (var <= 0.0) return (cc == na && cc == nb) ? 1.0 : 0.0;  // constant sequences
    return (t * cc - na * nb) / std::sqrt(var);
  }

 private:
  std::span<const std::uint64_t> a_, b_;
  std::int64_t T_;
  std::vector<std::uint8_t> hit_;
};

inline void check_alignment_input(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b) {
  require(!a.empty() && !b.empty(), ErrorKind::alignment, "alignment needs nonempty lists");
  require(std::is_sorted(a.begin(), a.end()) && std::is_sorted(b.begin(), b.end()), ErrorKind::config,
          "alignment lists must be sorted");
}

}  // namespace detail

inline double alignment_correlation(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b,
                                    std::int64_t offset) {
  detail::check_alignment_input(a, b);
  return detail::Correlator(a, b)(offset);
}

/// Exhaustive scan over [-window, window]; the lowest offset wins ties.
inline AlignmentResult scan_alignment(std::span<const std::uint64_t> alice_slots, std::span<const std::uint64_t> bob_times,
                                      std::uint64_t window, double threshold) {
  detail::check_alignment_input(alice_slots, bob_times);
  const detail::Correlator corr(alice_slots, bob_times);
  AlignmentResult best;
  best.correlation = -2.0;
  const auto w = static_cast<std::int64_t>(window);
  for (std::int64_t d = -w; d <= w; ++d) {
    const double r = corr(d);
    if (r > best.correlation) {
      best.correlation = r;
      best.offset = d;
    }
  }
  best.accepted = best.correlation >= threshold;
  return best;
}

inline AlignmentResult align(std::span<const std::uint64_t> alice_slots, std::span<const std::uint64_t> bob_times,
                             std::uint64_t window, double threshold) {
  auto r = scan_alignment(alice_slots, bob_times, window, threshold);
  if (!r.accepted)
    fail(ErrorKind::alignment, "best correlation " + std::to_string(r.correlation) + " at offset " +
                                   std::to_string(r.offset) + " below threshold " + std::to_string(threshold));
  return r;
}

// ---------------------------------------------------------------------------

struct SiftedKey {
  BitBlock bits;
  std::size_t n_sift = 0;
  std::vector<std::uint64_t> slot_refs;

  void push(bool bit, std::uint64_t slot) {
    bits.push_back(bit);
    slot_refs.push_back(slot);
    ++n_sift;
  }
};

struct SiftStats {
  std::size_t n_q = 0;                 // Bob's detections
  std::size_t classical_bits_used = 0;
  std::size_t dropped = 0;             // mapped outside Alice's frame or onto no prepared state
  std::size_t inconclusive = 0;        // basis mismatch, monitoring click, decoy slot
};

struct SiftResult {
  SiftedKey alice;
  SiftedKey bob;
  SiftStats stats;
};

namespace detail {

// Bob's timestamp minus the offset, or -1 when it falls before Alice's frame.
inline std::int64_t to_alice_frame(std::uint64_t ts, std::int64_t offset) {
  const auto v = static_cast<std::int64_t>(ts) - offset;
  return v < 0 ? -1 : v;
}

}  // namespace detail

/// Bob announces his basis per detection; Alice answers with the match bit.
inline SiftResult sift_bb84(std::span<const PrepRecord> alice, std::span<const DetectionRecord> bob,
                            std::int64_t offset) {
  SiftResult res;
  res.stats.n_q = bob.size();
  res.stats.classical_bits_used = 2 * bob.size();
  std::size_t ai = 0;
  for (const auto& d : bob) {
    const auto slot = detail::to_alice_frame(d.timestamp, offset);
    if (slot < 0) {
      ++res.stats.dropped;
      continue;
    }
    while (ai < alice.size() && alice[ai].slot_index < static_cast<std::uint64_t>(slot)) ++ai;
    if (ai == alice.size() || alice[ai].slot_index != static_cast<std::uint64_t>(slot)) {
      ++res.stats.dropped;
      continue;
    }
    const auto& a = alice[ai];
    if (a.basis_or_decoy != d.meta_bit) {
      ++res.stats.inconclusive;
      continue;
    }
    res.alice.push(a.key_bit, a.slot_index);
    res.bob.push(d.outcome_bit, a.slot_index);
  }
  return res;
}

/// Both parties hold detections; coincidences first, then the basis rule.
/// Classical accounting follows BB84 (2 bits per Bob detection).
inline SiftResult sift_bbm92(std::span<const DetectionRecord> alice, std::span<const DetectionRecord> bob,
                             std::int64_t offset) {
  SiftResult res;
  res.stats.n_q = bob.size();
  res.stats.classical_bits_used = 2 * bob.size();
  std::size_t ai = 0;
  for (const auto& d : bob) {
    const auto t = detail::to_alice_frame(d.timestamp, offset);
    if (t < 0) {
      ++res.stats.dropped;
      continue;
    }
    while (ai < alice.size() && alice[ai].timestamp < static_cast<std::uint64_t>(t)) ++ai;
    if (ai == alice.size() || alice[ai].timestamp != static_cast<std::uint64_t>(t)) {
      ++res.stats.dropped;
      continue;
    }
    const auto& a = alice[ai];
    if (a.meta_bit != d.meta_bit) {
      ++res.stats.inconclusive;
      continue;
    }
    res.alice.push(a.outcome_bit, a.timestamp);
    res.bob.push(d.outcome_bit, a.timestamp);
  }
  return res;
}

/// Bob announces floor(t/2) and which detector clicked; Alice stays silent.
/// The key bit is the arrival bin. Decoy positions come from Alice's public
/// post-transmission disclosure and are dropped on both sides.
inline SiftResult sift_cow(std::span<const PrepRecord> alice, std::span<const DetectionRecord> bob,
                           std::int64_t offset) {
  SiftResult res;
  res.stats.n_q = bob.size();
  res.stats.classical_bits_used = bob.size();
  std::size_t ai = 0;
  for (const auto& d : bob) {
    const auto t = detail::to_alice_frame(d.timestamp, offset);
    if (t < 0) {
      ++res.stats.dropped;
      continue;
    }
    if (d.meta_bit) {
      ++res.stats.inconclusive;
      continue;
    }
    const auto slot = static_cast<std::uint64_t>(t) / 2;
    const bool bin = t & 1;
    while (ai < alice.size() && alice[ai].slot_index < slot) ++ai;
    if (ai == alice.size() || alice[ai].slot_index != slot) {
      ++res.stats.dropped;
      continue;
    }
    const auto& a = alice[ai];
    if (a.basis_or_decoy) {
      ++res.stats.inconclusive;
      continue;
    }
    res.alice.push(a.key_bit, slot);
    res.bob.push(bin, slot);
  }
  return res;
}

inline SiftResult sift(const TransmissionRecord& rec, std::int64_t offset) {
  switch (rec.protocol) {
    case ProtocolKind::BB84: return sift_bb84(rec.alice, rec.bob, offset);
    case ProtocolKind::BBM92: return sift_bbm92(rec.alice_det, rec.bob, offset);
    case ProtocolKind::COW: return sift_cow(rec.alice, rec.bob, offset);
  }
  fail(ErrorKind::config, "unknown protocol");
}

// ---------------------------------------------------------------------------
// Classical payloads.

/// Packed bit array ordered by detection index.
inline std::vector<std::uint8_t> basis_announcement(std::span<const DetectionRecord> bob) {
  BitBlock b(bob.size());
  for (std::size_t i = 0; i < bob.size(); ++i) b.set(i, bob[i].meta_bit);
  return b.to_bytes();
}

/// u64 floor(timestamp/2) values (little-endian) followed by packed detector bits.
inline std::vector<std::uint8_t> cow_announcement(std::span<const DetectionRecord> bob, std::int64_t offset) {
  std::vector<std::uint8_t> out;
  out.reserve(bob.size() * 8 + bob.size() / 8 + 1);
  BitBlock det(bob.size());
  for (std::size_t i = 0; i < bob.size(); ++i) {
    const auto t = detail::to_alice_frame(bob[i].timestamp, offset);
    const std::uint64_t v = t < 0 ? ~std::uint64_t{0} : static_cast<std::uint64_t>(t) / 2;
    for (int k = 0; k < 8; ++k) out.push_back(static_cast<std::uint8_t>(v >> (8 * k)));
    det.set(i, bob[i].meta_bit);
  }
  const auto packed = det.to_bytes();
  out.insert(out.end(), packed.begin(), packed.end());
  return out;
}

}  // namespace qkd

#include "oracles.hpp"

#include <qkd/chansim.hpp>
#include <qkd/sifting.hpp>

#include <gtest/gtest.h>

#include <set>

using namespace qkd;

namespace {

std::vector<std::uint64_t> random_times(std::mt19937_64& g, std::size_t k, std::uint64_t span) {
  std::set<std::uint64_t> s;
  while (s.size() < k) s.insert(g() % span);
  return {s.begin(), s.end()};
}

}  // namespace

TEST(Alignment, CorrelationMatchesDefinition) {
  std::mt19937_64 g(5);
  for (int trial = 0; trial < 40; ++trial) {
    const auto a = random_times(g, 20 + g() % 30, 400);
    const auto b = random_times(g, 20 + g() % 30, 400);
    for (std::int64_t d = -30; d <= 30; d += 7)
      ASSERT_NEAR(alignment_correlation(a, b, d), oracle::indicator_correlation(a, b, d), 1e-12);
  }
}

TEST(Alignment, ScanEqualsBruteForceArgmax) {
  std::mt19937_64 g(8);
  for (int trial = 0; trial < 20; ++trial) {
    const auto a = random_times(g, 40, 600);
    std::vector<std::uint64_t> b;
    const std::int64_t shift = static_cast<std::int64_t>(g() % 50);
    for (auto t : a)
      if (g() % 10 < 8) b.push_back(t + static_cast<std::uint64_t>(shift));
    const auto r = scan_alignment(a, b, 60, 0.5);
    double best = -2;
    std::int64_t arg = 0;
    for (std::int64_t d = -60; d <= 60; ++d) {
      const double c = oracle::indicator_correlation(a, b, d);
      if (c > best + 1e-12) best = c, arg = d;
    }
    EXPECT_EQ(r.offset, arg);
    EXPECT_NEAR(r.correlation, best, 1e-12);
  }
}

TEST(Alignment, RecoversSimulatedClockOffset) {
  ChannelParams p;
  p.clock_offset = 423;
  p.flip_probability = 0.03;
  for (auto proto : {ProtocolKind::BB84, ProtocolKind::BBM92, ProtocolKind::COW}) {
    const auto rec = simulate_session(proto, 200000, p);
    const auto r = align(rec.sync_slots, rec.sync_times, 1000, 0.8);
    EXPECT_EQ(r.offset, 423) << to_string(proto);
    EXPECT_GE(r.correlation, 0.8);
  }
}

TEST(Alignment, UncorrelatedListsFail) {
  std::mt19937_64 g(1);
  const auto a = random_times(g, 500, 100000), b = random_times(g, 500, 100000);
  try {
    align(a, b, 200, 0.8);
    FAIL() << "expected alignment failure";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::alignment);
  }
}

TEST(Sifting, Bb84KeepsMatchingBasesOnly) {
  const std::vector<PrepRecord> alice = {{0, 1, 0}, {1, 0, 1}, {2, 1, 1}, {3, 0, 0}, {4, 1, 0}};
  const std::vector<DetectionRecord> bob = {{0 + 5, 1, 0}, {2 + 5, 0, 0}, {3 + 5, 0, 0}, {4 + 5, 0, 0}};
  const auto s = sift_bb84(alice, bob, 5);
  EXPECT_EQ(s.alice.bits.to_string(), "101");
  EXPECT_EQ(s.bob.bits.to_string(), "100");
  EXPECT_EQ(s.alice.slot_refs, (std::vector<std::uint64_t>{0, 3, 4}));
  EXPECT_EQ(s.stats.n_q, 4u);
  EXPECT_EQ(s.stats.inconclusive, 1u);
  EXPECT_EQ(s.stats.classical_bits_used, 8u);  // 2 per detection
}

TEST(Sifting, CowDropsMonitorAndDecoy) {
  // slot 0: bit 1 (second bin), slot 1: decoy, slot 2: bit 0.
  const std::vector<PrepRecord> alice = {{0, 1, 0}, {1, 0, 1}, {2, 0, 0}, {3, 1, 0}};
  const std::vector<DetectionRecord> bob = {{1, 1, 0}, {2, 0, 0}, {4, 0, 0}, {7, 0, 1}};
  const auto s = sift_cow(alice, bob, 0);
  EXPECT_EQ(s.alice.bits.to_string(), "10");
  EXPECT_EQ(s.bob.bits.to_string(), "10");
  EXPECT_EQ(s.stats.inconclusive, 2u);
  EXPECT_EQ(s.stats.classical_bits_used, 4u);  // 1 per detection
}

TEST(Sifting, ClassicalCostRatios) {
  ChannelParams p;
  for (auto proto : {ProtocolKind::BB84, ProtocolKind::BBM92, ProtocolKind::COW}) {
    const auto rec = simulate_session(proto, 50000, p);
    const auto s = sift(rec, 0);
    const std::size_t per = proto == ProtocolKind::COW ? 1 : 2;
    EXPECT_EQ(s.stats.classical_bits_used, per * s.stats.n_q);
    EXPECT_EQ(s.stats.n_q, rec.bob.size());
    EXPECT_EQ(s.alice.bits.size(), s.bob.bits.size());
  }
}

TEST(Sifting, SiftYieldNearHalfForBb84) {
  ChannelParams p;
  p.transmissivity = 1.0;
  p.sync_fraction = 0.0;
  const auto rec = simulate_session(ProtocolKind::BB84, 100000, p);
  const auto s = sift(rec, 0);
  EXPECT_NEAR(static_cast<double>(s.alice.bits.size()) / 100000.0, 0.5, 0.01);
  EXPECT_EQ(s.alice.bits, s.bob.bits);
}

TEST(Sifting, AnnouncementSizes) {
  ChannelParams p;
  const auto rec = simulate_session(ProtocolKind::COW, 10000, p);
  EXPECT_EQ(basis_announcement(rec.bob).size(), (rec.bob.size() + 7) / 8);
  EXPECT_EQ(cow_announcement(rec.bob, 0).size(), rec.bob.size() * 8 + (rec.bob.size() + 7) / 8);
}

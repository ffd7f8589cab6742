#include <qkd/chansim.hpp>
#include <qkd/sifting.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

using namespace qkd;

namespace {

ChannelParams params(double flip, std::uint64_t seed = 7) {
  ChannelParams p;
  p.flip_probability = flip;
  p.seed = seed;
  return p;
}

double sifted_qber(const TransmissionRecord& rec) {
  const auto s = sift(rec, 0);
  return static_cast<double>(hamming_distance(s.alice.bits, s.bob.bits)) / static_cast<double>(s.alice.bits.size());
}

}  // namespace

TEST(Chansim, NoiselessChannelIsIdentity) {
  ChannelParams p = params(0.0);
  p.transmissivity = 1.0;
  const auto rec = simulate_session(ProtocolKind::BB84, 20000, p);
  std::size_t matched = 0;
  for (const auto& d : rec.bob) {
    const auto& a = rec.alice[static_cast<std::size_t>(
        std::lower_bound(rec.alice.begin(), rec.alice.end(), d.timestamp,
                         [](const PrepRecord& r, std::uint64_t t) { return r.slot_index < t; }) -
        rec.alice.begin())];
    ASSERT_EQ(a.slot_index, d.timestamp);
    if (a.basis_or_decoy == d.meta_bit) {
      EXPECT_EQ(a.key_bit, d.outcome_bit);
      ++matched;
    }
  }
  EXPECT_GT(matched, 9000u);
  EXPECT_EQ(rec.bob.size(), rec.alice.size());  // no loss at all
}

TEST(Chansim, DetectionCountNearBinomialMean) {
  const std::uint64_t n = 200000;
  const auto p = params(0.0);
  const auto rec = simulate_session(ProtocolKind::BB84, n, p);
  const double quantum = static_cast<double>(rec.alice.size());
  const double q = p.transmissivity * p.detector_efficiency;
  EXPECT_NEAR(static_cast<double>(rec.bob.size()), quantum * q, 4.0 * std::sqrt(quantum * q * (1 - q)));
}

TEST(Chansim, Bb84QberMatchesFlipProbability) {
  const auto rec = simulate_session(ProtocolKind::BB84, 1'000'000, params(0.0263));
  EXPECT_NEAR(sifted_qber(rec), 0.0263, 0.002);
}

TEST(Chansim, CowQberMatchesFlipProbability) {
  const auto rec = simulate_session(ProtocolKind::COW, 1'000'000, params(0.214));
  EXPECT_NEAR(sifted_qber(rec), 0.214, 0.005);
}

TEST(Chansim, Bbm92QberMatchesFlipProbability) {
  const auto rec = simulate_session(ProtocolKind::BBM92, 1'000'000, params(0.0903));
  EXPECT_NEAR(sifted_qber(rec), 0.0903, 0.003);
}

TEST(Chansim, QberConvergesAtFourSigma) {
  for (auto proto : {ProtocolKind::BB84, ProtocolKind::BBM92, ProtocolKind::COW}) {
    const double f = 0.05;
    const auto rec = simulate_session(proto, 400000, params(f, 31));
    const auto s = sift(rec, 0);
    const double n = static_cast<double>(s.alice.bits.size());
    EXPECT_NEAR(sifted_qber(rec), f, 4.0 * std::sqrt(f * (1 - f) / n)) << to_string(proto);
  }
}

TEST(Chansim, Reproducible) {
  for (auto proto : {ProtocolKind::BB84, ProtocolKind::BBM92, ProtocolKind::COW}) {
    EXPECT_EQ(simulate_session(proto, 5000, params(0.03)), simulate_session(proto, 5000, params(0.03)));
    EXPECT_NE(simulate_session(proto, 5000, params(0.03, 1)), simulate_session(proto, 5000, params(0.03, 2)));
  }
}

TEST(Chansim, DetectionsMonotoneInLoss) {
  std::size_t prev = SIZE_MAX;
  for (double t : {1.0, 0.9, 0.7, 0.5, 0.3, 0.1}) {
    auto p = params(0.02);
    p.transmissivity = t;
    p.dark_count = 1e-4;
    const auto n = simulate_session(ProtocolKind::BB84, 50000, p).bob.size();
    EXPECT_LE(n, prev) << "transmissivity " << t;
    prev = n;
  }
}

TEST(Chansim, ClockOffsetShiftsTimestamps) {
  auto p = params(0.0);
  const auto base = simulate_session(ProtocolKind::BB84, 3000, p);
  p.clock_offset = 137;
  const auto shifted = simulate_session(ProtocolKind::BB84, 3000, p);
  ASSERT_EQ(base.bob.size(), shifted.bob.size());
  for (std::size_t i = 0; i < base.bob.size(); ++i) EXPECT_EQ(shifted.bob[i].timestamp, base.bob[i].timestamp + 137);
  for (std::size_t i = 1; i < shifted.bob.size(); ++i) EXPECT_LT(shifted.bob[i - 1].timestamp, shifted.bob[i].timestamp);
}

TEST(Chansim, CowTimestampsCountTimeBins) {
  const auto rec = simulate_session(ProtocolKind::COW, 20000, params(0.0));
  for (const auto& d : rec.bob)
    if (d.meta_bit == 0) {
      EXPECT_EQ(d.outcome_bit, d.timestamp & 1);
    }
}

TEST(Chansim, InvalidParamsRejected) {
  auto bad = [](auto mutate) {
    ChannelParams p;
    mutate(p);
    try {
      simulate_session(ProtocolKind::BB84, 10, p);
    } catch (const Error& e) {
      return e.kind() == ErrorKind::config;
    }
    return false;
  };
  EXPECT_TRUE(bad([](ChannelParams& p) { p.transmissivity = 0.0; }));
  EXPECT_TRUE(bad([](ChannelParams& p) { p.transmissivity = 1.5; }));
  EXPECT_TRUE(bad([](ChannelParams& p) { p.detector_efficiency = 0.0; }));
  EXPECT_TRUE(bad([](ChannelParams& p) { p.flip_probability = 0.5; }));
  EXPECT_TRUE(bad([](ChannelParams& p) { p.flip_probability = -0.1; }));
  EXPECT_TRUE(bad([](ChannelParams& p) { p.clock_offset = -3; }));
  EXPECT_THROW(simulate_session(ProtocolKind::BB84, 0, ChannelParams{}), Error);
}

TEST(Chansim, SessionFileRoundTrip) {
  for (auto proto : {ProtocolKind::BB84, ProtocolKind::BBM92, ProtocolKind::COW}) {
    auto p = params(0.05);
    p.clock_offset = 12;
    const auto rec = simulate_session(proto, 4000, p);
    std::stringstream ss;
    write_session(ss, rec);
    EXPECT_EQ(read_session(ss), rec);
  }
  std::stringstream junk("QKDX....");
  EXPECT_THROW(read_session(junk), Error);
}

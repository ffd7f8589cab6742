#include "oracles.hpp"

#include <qkd/pipeline.hpp>

#include <gtest/gtest.h>

#include <atomic>

using namespace qkd;
using namespace qkd::pipeline;

namespace {

const ldpc::CodeEnsemble& ensemble() {
  static const ldpc::CodeEnsemble e = ldpc::CodeEnsemble::load(default_rate_table());
  return e;
}

SessionConfig small(ProtocolKind proto, double flip, std::uint64_t bits = 200'000) {
  SessionConfig c;
  c.protocol = proto;
  c.input_bits = bits;
  c.seed = 11;
  c.channel.flip_probability = flip;
  c.channel.transmissivity = 0.7;
  c.plan.pa_block = 100'000;
  return c;
}

}  // namespace

TEST(Split, MatchesSlicingOracle) {
  std::mt19937_64 g(1);
  const auto v = oracle::random_vec(10'007, g);
  const auto s = split(oracle::pack(v), 1000);
  ASSERT_EQ(s.blocks.size(), 10u);
  for (std::size_t i = 0; i < 10; ++i) {
    EXPECT_EQ(oracle::unpack(s.blocks[i]), oracle::Vec(v.begin() + 1000 * i, v.begin() + 1000 * (i + 1)));
    EXPECT_EQ(s.blocks[i].index(), i);
  }
  EXPECT_EQ(oracle::unpack(s.carry), oracle::Vec(v.begin() + 10'000, v.end()));
  EXPECT_THROW(split(BitBlock(10), 0), Error);
}

TEST(Combine, OrdersByIndexAndDropsFailures) {
  std::vector<BlockResult> rs;
  for (std::uint64_t i : {3u, 0u, 2u, 1u}) {
    BitBlock b(4, i);
    b.set(i, true);
    rs.push_back({i, b, i != 2, 1});
  }
  const auto out = oracle::unpack(combine(rs));
  EXPECT_EQ(out, (oracle::Vec{1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 0, 1}));
  for (auto& r : rs) r.passed = false;
  try {
    combine(rs);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::session);
  }
}

TEST(BoundedQueue, BlocksProducerWhenFull) {
  BoundedQueue<int> q(3);
  std::atomic<int> pushed{0};
  std::thread prod([&] {
    for (int i = 0; i < 10; ++i) {
      q.push(i);
      ++pushed;
    }
    q.close();
  });
  std::this_thread::sleep_for(std::chrono::milliseconds(100));
  EXPECT_EQ(pushed.load(), 3);
  std::vector<int> got;
  while (auto v = q.pop()) got.push_back(*v);
  prod.join();
  EXPECT_EQ(got.size(), 10u);
  EXPECT_TRUE(std::is_sorted(got.begin(), got.end()));
  EXPECT_LE(q.high_water(), 3u);
  EXPECT_FALSE(q.push(99));
}

TEST(Session, NoiselessChannelReconcilesEverything) {
  const auto r = run_session(small(ProtocolKind::BB84, 0.0), ensemble());
  const auto& m = r.metrics;
  EXPECT_EQ(m.qber, 0.0);
  EXPECT_EQ(m.blocks_failed, 0u);
  EXPECT_EQ(m.chunks_discarded, 0u);
  EXPECT_TRUE(m.keys_match);
  EXPECT_EQ(r.alice_key, r.bob_key);
  EXPECT_EQ(m.n_final, m.r_formula);
}

TEST(Session, BlockArithmeticAndKeyLength) {
  const auto r = run_session(small(ProtocolKind::BB84, 0.03), ensemble());
  const auto& m = r.metrics;
  const std::size_t payload = 8192 - m.punctured - m.shortened;
  EXPECT_EQ(m.input_bits, 200'000u);
  EXPECT_EQ(m.n_reconciled, m.input_bits - m.n_sample);
  EXPECT_EQ(m.blocks, m.n_reconciled / payload);
  EXPECT_EQ(m.carry_bits, m.n_reconciled % payload);
  EXPECT_EQ(m.windows, (m.blocks + 100'000 / payload - 1) / (100'000 / payload));
  EXPECT_EQ(m.verify_bits, 2048 * m.windows);
  EXPECT_EQ(m.n_final, m.r_formula);
  EXPECT_EQ(r.alice_key.size(), m.n_final);
  EXPECT_TRUE(m.keys_match);
  EXPECT_GT(m.f_ec, 1.0);
  EXPECT_GT(m.auth_messages, 0u);
}

TEST(Session, KeyIndependentOfInstanceCountAndTiming) {
  auto c = small(ProtocolKind::BB84, 0.03, 150'000);
  const auto base = run_session(c, ensemble());
  for (std::size_t p : {2u, 3u, 4u}) {
    c.plan.instances = p;
    c.plan.before_decode = [](std::uint64_t i) { std::this_thread::sleep_for(std::chrono::microseconds((i * 7919) % 3000)); };
    const auto r = run_session(c, ensemble());
    EXPECT_EQ(r.alice_key, base.alice_key) << p;
    EXPECT_EQ(r.bob_key, base.bob_key) << p;
    EXPECT_EQ(r.metrics.blocks_failed, base.metrics.blocks_failed);
  }
}

TEST(Session, OtherProtocolsProduceMatchingKeys) {
  for (auto [proto, q] : {std::pair{ProtocolKind::BBM92, 0.02}, std::pair{ProtocolKind::COW, 0.02}}) {
    const auto r = run_session(small(proto, q), ensemble());
    EXPECT_TRUE(r.metrics.keys_match) << to_string(proto);
    EXPECT_GT(r.metrics.n_final, 0u);
    EXPECT_NEAR(r.metrics.qber, q, 0.01);
  }
}

TEST(Session, HighQberAbortsAtEstimation) {
  try {
    run_session(small(ProtocolKind::BB84, 0.3, 100'000), ensemble());
    FAIL();
  } catch (const SessionAbort& a) {
    EXPECT_EQ(a.kind(), ErrorKind::estimation_abort);
    EXPECT_GT(a.metrics.qber_bound, 0.25);
    EXPECT_NE(std::string(a.what()).find("estimation"), std::string::npos);
  }
}

TEST(Session, TinyAuthPoolRunsOutOfKeys) {
  auto c = small(ProtocolKind::BB84, 0.02, 100'000);
  c.auth_pool = 2;
  try {
    run_session(c, ensemble());
    FAIL();
  } catch (const SessionAbort& a) {
    EXPECT_EQ(a.kind(), ErrorKind::key_exhaustion);
  }
}

TEST(Session, TooFewSiftedBitsIsSessionError) {
  auto c = small(ProtocolKind::BB84, 0.02, 100'000);
  c.pulses = 1000;
  EXPECT_THROW(run_session(c, ensemble()), SessionAbort);
}

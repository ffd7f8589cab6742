#include "oracles.hpp"

#include <qkd/estimation.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <set>

using namespace qkd;

TEST(Estimation, MatchesNaiveMismatchCount) {
  std::mt19937_64 g(2);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 1 + g() % 5000;
    const auto a = oracle::random_vec(n, g);
    auto b = a;
    const double q = (g() % 500) / 1000.0;
    std::bernoulli_distribution flip(q);
    for (auto& x : b)
      if (flip(g)) x ^= 1;
    const auto e = estimate_qber(oracle::pack(a), oracle::pack(b), 1e-10);
    const auto errs = oracle::mismatches(a, b);
    ASSERT_EQ(e.errors_found, errs);
    ASSERT_EQ(e.sample_size, n);
    ASSERT_EQ(e.qber_hat, static_cast<double>(errs) / static_cast<double>(n));
    ASSERT_EQ(e.delta, std::sqrt(std::log(1e10) / (2.0 * static_cast<double>(n))));
    ASSERT_EQ(e.qber_bound, e.qber_hat + e.delta);
  }
}

TEST(Estimation, AbortIffBoundAboveThreshold) {
  // Sweep bounds across the threshold, including exact equality.
  for (int k = -50; k <= 50; ++k) {
    QberEstimate e;
    e.qber_bound = 0.25 + k * 0.001;
    if (k == 0) e.qber_bound = 0.25;
    const auto d = abort_check(e, 0.25);
    EXPECT_EQ(d == Decision::abort, e.qber_bound > 0.25) << e.qber_bound;
  }
  QberEstimate eq;
  eq.qber_bound = 0.25;
  EXPECT_EQ(abort_check(eq, 0.25), Decision::proceed);
  eq.qber_bound = std::nextafter(0.25, 1.0);
  EXPECT_EQ(abort_check(eq, 0.25), Decision::abort);
}

TEST(Estimation, EmptySampleRejected) {
  try {
    estimate_qber(BitBlock(), BitBlock(), 1e-10);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::empty_sample);
  }
  EXPECT_THROW(estimate_qber(BitBlock(3), BitBlock(4), 1e-10), Error);
}

TEST(Estimation, SampleIndicesDistinctSortedExactCount) {
  for (double f : {0.05, 0.1, 0.29, 0.5}) {
    const auto idx = sample_indices(10000, f, 3);
    EXPECT_EQ(idx.size(), static_cast<std::size_t>(std::floor(10000 * f + 1e-6)));
    EXPECT_TRUE(std::is_sorted(idx.begin(), idx.end()));
    EXPECT_EQ(std::set<std::uint32_t>(idx.begin(), idx.end()).size(), idx.size());
    EXPECT_LT(idx.back(), 10000u);
  }
  EXPECT_EQ(sample_indices(100, 0.29, 1).size(), 29u);
  EXPECT_EQ(sample_indices(1000, 0.1, 9), sample_indices(1000, 0.1, 9));
}

TEST(Estimation, SelectAndRemovePartitionTheKey) {
  std::mt19937_64 g(4);
  const auto v = oracle::random_vec(3000, g);
  const auto key = oracle::pack(v);
  const auto idx = sample_indices(v.size(), 0.1, 77);
  const auto sel = oracle::unpack(select_bits(key, idx));
  const auto rest = oracle::unpack(remove_bits(key, idx));
  oracle::Vec want_sel, want_rest;
  std::set<std::uint32_t> s(idx.begin(), idx.end());
  for (std::uint32_t i = 0; i < v.size(); ++i) (s.count(i) ? want_sel : want_rest).push_back(v[i]);
  EXPECT_EQ(sel, want_sel);
  EXPECT_EQ(rest, want_rest);
}

TEST(Estimation, DisclosureRoundTrip) {
  std::mt19937_64 g(6);
  const auto key = oracle::pack(oracle::random_vec(5000, g));
  const auto idx = sample_indices(5000, 0.07, 1);
  const auto d = parse_disclosure(disclosure_message(idx, select_bits(key, idx)));
  EXPECT_EQ(d.indices, idx);
  EXPECT_EQ(d.sample, select_bits(key, idx));
  const std::vector<std::uint8_t> truncated = {5, 0, 0, 0, 1};
  EXPECT_THROW(parse_disclosure(truncated), Error);
}

TEST(Estimation, BoundCoversTrueRateAcrossSeeds) {
  // With delta from eps = 1e-10, the true error rate essentially never exceeds the bound.
  const double q = 0.05;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    std::mt19937_64 g(seed);
    std::bernoulli_distribution flip(q);
    oracle::Vec a = oracle::random_vec(2000, g), b = a;
    for (auto& x : b)
      if (flip(g)) x ^= 1;
    EXPECT_GE(estimate_qber(oracle::pack(a), oracle::pack(b), 1e-10).qber_bound, q);
  }
}

#include <cmath>
#include <set>
#include <vector>

#include <gtest/gtest.h>

#include "dslob/rng.hpp"

using namespace dslob;

TEST(Rng, SameKeySameSequence) {
  RngStream a(7, {3, 11, Purpose::orders});
  RngStream b(7, {3, 11, Purpose::orders});
  for (int i = 0; i < 1000; ++i) ASSERT_EQ(a.next_u64(), b.next_u64());
}

TEST(Rng, KeyComponentsSeparateStreams) {
  const StreamId base{3, 11, Purpose::orders};
  std::set<std::uint64_t> firsts;
  firsts.insert(RngStream(7, base).next_u64());
  firsts.insert(RngStream(8, base).next_u64());
  firsts.insert(RngStream(7, {4, 11, Purpose::orders}).next_u64());
  firsts.insert(RngStream(7, {3, 12, Purpose::orders}).next_u64());
  firsts.insert(RngStream(7, {3, 11, Purpose::arrivals}).next_u64());
  EXPECT_EQ(firsts.size(), 5U);
}

TEST(Rng, PhiloxKnownAnswer) {
  // Random123 known-answer vectors for philox4x32-10.
  using detail::philox4x32_10;
  EXPECT_EQ(philox4x32_10({0, 0, 0, 0}, {0, 0}),
            (std::array<std::uint32_t, 4>{0x6627e8d5U, 0xe169c58dU, 0xbc57ac4cU, 0x9b00dbd8U}));
  EXPECT_EQ(philox4x32_10({0xffffffffU, 0xffffffffU, 0xffffffffU, 0xffffffffU}, {0xffffffffU, 0xffffffffU}),
            (std::array<std::uint32_t, 4>{0x408f276dU, 0x41c83b0eU, 0xa20bc7c6U, 0x6d5451fdU}));
  EXPECT_EQ(philox4x32_10({0x243f6a88U, 0x85a308d3U, 0x13198a2eU, 0x03707344U}, {0xa4093822U, 0x299f31d0U}),
            (std::array<std::uint32_t, 4>{0xd16cfe09U, 0x94fdccebU, 0x5001e420U, 0x24126ea1U}));
}

TEST(Rng, UniformIntStaysInClosedRange) {
  RngStream r(1, {0, 0, Purpose::test});
  std::vector<int> seen(11, 0);
  for (int i = 0; i < 20000; ++i) {
    const auto v = r.uniform_int(-5, 5);
    ASSERT_GE(v, -5);
    ASSERT_LE(v, 5);
    ++seen[static_cast<std::size_t>(v + 5)];
  }
  for (const int c : seen) EXPECT_NEAR(c, 20000.0 / 11.0, 200.0);
  EXPECT_EQ(r.uniform_int(4, 4), 4);
}

TEST(Rng, Uniform01Moments) {
  RngStream r(2, {0, 0, Purpose::test});
  const int n = 200000;
  double s = 0, s2 = 0;
  for (int i = 0; i < n; ++i) {
    const double u = r.uniform01();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    s += u;
    s2 += u * u;
  }
  const double mean = s / n;
  EXPECT_NEAR(mean, 0.5, 4 * std::sqrt(1.0 / 12.0 / n));
  EXPECT_NEAR(s2 / n - mean * mean, 1.0 / 12.0, 2e-3);
}

TEST(Rng, NormalMoments) {
  RngStream r(3, {0, 0, Purpose::test});
  const int n = 200000;
  double s = 0, s2 = 0, s4 = 0;
  for (int i = 0; i < n; ++i) {
    const double z = r.normal(2.0, 3.0);
    s += z;
    s2 += (z - 2.0) * (z - 2.0);
    s4 += std::pow((z - 2.0) / 3.0, 4);
  }
  EXPECT_NEAR(s / n, 2.0, 4 * 3.0 / std::sqrt(n));
  EXPECT_NEAR(s2 / n, 9.0, 9.0 * 0.02);
  EXPECT_NEAR(s4 / n, 3.0, 0.1);  // Gaussian kurtosis
}

TEST(Rng, ExponentialMean) {
  RngStream r(4, {0, 0, Purpose::test});
  const int n = 200000;
  double s = 0;
  for (int i = 0; i < n; ++i) {
    const double x = r.exponential(0.25);
    ASSERT_GE(x, 0.0);
    s += x;
  }
  EXPECT_NEAR(s / n, 4.0, 4 * 4.0 / std::sqrt(n));
}

TEST(Rng, DrawsConsumedCountsOutputs) {
  RngStream r(5, {0, 0, Purpose::test});
  EXPECT_EQ(r.draws_consumed(), 0U);
  r.next_u64();
  EXPECT_EQ(r.draws_consumed(), 1U);
  r.next_u64();
  r.next_u64();
  EXPECT_EQ(r.draws_consumed(), 3U);
}

TEST(Rng, DaySeedsDiffer) {
  std::set<std::uint64_t> s;
  for (std::uint64_t d = 0; d < 365; ++d) s.insert(day_seed(1, d));
  EXPECT_EQ(s.size(), 365U);
}

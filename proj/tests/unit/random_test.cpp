#include <gtest/gtest.h>

#include <random>
#include <set>

#include "fracvolt/random.hpp"

using fracvolt::Philox4x32;

// Known-answer vectors for Philox-4x32-10.
TEST(Philox, KnownAnswerZero) {
  const auto out = Philox4x32::generate({0, 0, 0, 0}, {0, 0});
  EXPECT_EQ(out, (Philox4x32::block_type{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u}));
}

TEST(Philox, KnownAnswerOnes) {
  const auto out = Philox4x32::generate({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu});
  EXPECT_EQ(out, (Philox4x32::block_type{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu}));
}

TEST(Philox, KnownAnswerPi) {
  const auto out = Philox4x32::generate({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u});
  EXPECT_EQ(out, (Philox4x32::block_type{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u}));
}

TEST(Philox, SameSeedAndStreamRepeat) {
  Philox4x32 a(42, 3), b(42, 3);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a(), b());
}

TEST(Philox, StreamsDiffer) {
  Philox4x32 a(42, 0), b(42, 1);
  int same = 0;
  for (int i = 0; i < 100; ++i) same += a() == b() ? 1 : 0;
  EXPECT_EQ(same, 0);
}

TEST(Philox, NormalMoments) {
  Philox4x32 rng(7, 0);
  std::normal_distribution<double> normal;
  double s = 0.0, s2 = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double z = normal(rng);
    s += z;
    s2 += z * z;
  }
  EXPECT_NEAR(s / n, 0.0, 0.01);
  EXPECT_NEAR(s2 / n, 1.0, 0.01);
}

TEST(ReplicaSeed, DistinctAndStable) {
  std::set<std::uint64_t> seen;
  for (std::uint64_t r = 0; r < 1000; ++r) seen.insert(fracvolt::replica_seed(1, r));
  EXPECT_EQ(seen.size(), 1000u);
  EXPECT_EQ(fracvolt::replica_seed(5, 9), fracvolt::replica_seed(5, 9));
  EXPECT_NE(fracvolt::replica_seed(5, 9), fracvolt::replica_seed(6, 9));
}

#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "wearaug/random.hpp"

using namespace wearaug;

TEST(RngStream, SameSeedAndIndexGiveSameSequence) {
  RngStream a = derive_stream(42, 0);
  RngStream b = derive_stream(42, 0);
  for (int i = 0; i < 100; ++i) ASSERT_EQ(a.uniform(), b.uniform());
}

TEST(RngStream, DistinctIndicesDiffer) {
  RngStream a = derive_stream(42, 0);
  RngStream b = derive_stream(42, 1);
  int differing = 0;
  for (int i = 0; i < 100; ++i) differing += a.uniform() != b.uniform();
  EXPECT_GE(differing, 99);
}

TEST(RngStream, CreationOrderDoesNotMatter) {
  RngStream late = derive_stream(9, 3);
  RngStream first = derive_stream(9, 1);
  (void)first.next_u64();
  RngStream again = derive_stream(9, 3);
  EXPECT_EQ(late.next_u64(), again.next_u64());
}

TEST(RngStream, UniformMean) {
  RngStream s = derive_stream(42, 7);
  double sum = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const double u = s.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
  }
  EXPECT_NEAR(sum / 1e5, 0.5, 0.02);
}

TEST(RngStream, StateRoundTripContinuesIdentically) {
  RngStream s = derive_stream(5, 11);
  for (int i = 0; i < 17; ++i) s.next_u64();
  const StreamState saved = s.state();
  RngStream restored(saved);
  for (int i = 0; i < 50; ++i) ASSERT_EQ(s.next_u64(), restored.next_u64());
}

TEST(RngStream, BelowIsInRangeAndCoversValues) {
  RngStream s = derive_stream(3, 0);
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 1000; ++i) {
    const auto v = s.below(7);
    ASSERT_LT(v, 7u);
    seen.insert(v);
  }
  EXPECT_EQ(seen.size(), 7u);
  EXPECT_THROW(s.below(0), InvalidArgument);
}

TEST(Gauss, ZeroStdIsExact) {
  RngStream s = derive_stream(1, 0);
  EXPECT_EQ(gauss(s, 5.0, 0.0), 5.0);
  EXPECT_EQ(gauss(s, -0.125, 0.0), -0.125);
}

TEST(Gauss, NegativeStdThrows) {
  RngStream s = derive_stream(1, 0);
  EXPECT_THROW(gauss(s, 0.0, -1.0), InvalidArgument);
}

TEST(Gauss, Moments) {
  RngStream s = derive_stream(2024, 0);
  const int n = 100000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = gauss(s, 1.0, 0.1);
    sum += x;
    sq += x * x;
  }
  const double mean = sum / n;
  const double sd = std::sqrt(sq / n - mean * mean);
  EXPECT_GE(mean, 0.999);
  EXPECT_LE(mean, 1.001);
  EXPECT_GE(sd, 0.098);
  EXPECT_LE(sd, 0.102);
}

TEST(Gauss, ThreeSigmaTailMass) {
  RngStream s = derive_stream(77, 0);
  const int n = 100000;
  int tail = 0;
  for (int i = 0; i < n; ++i) tail += std::abs(gauss(s, 0.0, 0.03)) > 0.09;
  const double frac = static_cast<double>(tail) / n;
  EXPECT_GE(frac, 0.0022);
  EXPECT_LE(frac, 0.0032);
}

TEST(Shuffle, IsAPermutation) {
  RngStream s = derive_stream(8, 0);
  std::vector<int> v{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  shuffle(v, s);
  std::vector<int> sorted = v;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < 10; ++i) EXPECT_EQ(sorted[i], i);
}

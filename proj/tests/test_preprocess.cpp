#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "wearaug/preprocess.hpp"
#include "wearaug/random.hpp"

using namespace wearaug;

namespace {

Tensor recording(std::size_t n, const std::function<double(std::size_t, std::size_t)>& f) {
  Tensor t({n, 3});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < 3; ++c) t[i * 3 + c] = f(i, c);
  return t;
}

}  // namespace

TEST(Resample, OutputLength) {
  const Tensor x = recording(626, [](auto, auto) { return 0.0; });
  EXPECT_EQ(resample(x, 62.5, 120.0).dim(0), 1201u);  // floor(625 * 120 / 62.5) + 1
  EXPECT_EQ(resample(x, 62.5, 62.5).dim(0), 626u);
  EXPECT_EQ(resample(recording(10, [](auto, auto) { return 0.0; }), 100.0, 33.0).dim(0), 3u);
}

TEST(Resample, ConstantStaysConstant) {
  const Tensor x = recording(100, [](auto, std::size_t c) { return 0.3 * static_cast<double>(c) - 0.7; });
  const Tensor y = resample(x, 62.5, 120.0);
  for (std::size_t k = 0; k < y.dim(0); ++k)
    for (std::size_t c = 0; c < 3; ++c) ASSERT_EQ(y[k * 3 + c], x[c]);
}

TEST(Resample, AffineSignalIsReproduced) {
  const Tensor x = recording(626, [](std::size_t i, auto) { return static_cast<double>(i) / 62.5; });
  const Tensor y = resample(x, 62.5, 120.0);
  for (std::size_t k = 0; k < y.dim(0); ++k) ASSERT_NEAR(y[k * 3], static_cast<double>(k) / 120.0, 1e-12);
}

TEST(Resample, SinusoidAccuracy) {
  const std::size_t n = 626;  // 10 s at 62.5 Hz
  const Tensor x = recording(n, [](std::size_t i, std::size_t c) {
    return std::sin(2 * std::numbers::pi * static_cast<double>(i) / 62.5 + 0.5 * static_cast<double>(c));
  });
  const Tensor y = resample(x, 62.5, 120.0);
  double worst = 0.0;
  for (std::size_t k = 0; k < y.dim(0); ++k) {
    for (std::size_t c = 0; c < 3; ++c) {
      const double truth = std::sin(2 * std::numbers::pi * static_cast<double>(k) / 120.0 + 0.5 * static_cast<double>(c));
      worst = std::max(worst, std::abs(y[k * 3 + c] - truth));
    }
  }
  EXPECT_LT(worst, 1e-3);
}

TEST(Resample, SameRateIsIdentity) {
  RngStream rng(4, 0);
  const Tensor x = recording(57, [&](auto, auto) { return rng.standard_normal(); });
  EXPECT_EQ(resample(x, 120.0, 120.0), x);
}

TEST(Resample, StaysWithinChannelRange) {
  RngStream rng(5, 0);
  for (int trial = 0; trial < 20; ++trial) {
    const Tensor x = recording(80, [&](auto, auto) { return rng.standard_normal(); });
    const Tensor y = resample(x, 62.5, 120.0);
    for (std::size_t c = 0; c < 3; ++c) {
      double lo = 1e300, hi = -1e300;
      for (std::size_t i = 0; i < 80; ++i) lo = std::min(lo, x[i * 3 + c]), hi = std::max(hi, x[i * 3 + c]);
      for (std::size_t k = 0; k < y.dim(0); ++k) {
        ASSERT_GE(y[k * 3 + c], lo);
        ASSERT_LE(y[k * 3 + c], hi);
      }
    }
  }
}

TEST(Resample, IrregularTimestamps) {
  // Jittered timestamps over an affine signal: output follows the line.
  RngStream rng(6, 0);
  std::vector<double> ts;
  double t = 0.0;
  for (int i = 0; i < 200; ++i) {
    ts.push_back(t);
    t += (1.0 + 0.3 * (rng.uniform() - 0.5)) / 62.5;
  }
  Tensor x({ts.size(), 3});
  for (std::size_t i = 0; i < ts.size(); ++i)
    for (std::size_t c = 0; c < 3; ++c) x[i * 3 + c] = 2.0 * ts[i] + static_cast<double>(c);
  const Tensor y = resample(x, 62.5, 120.0, std::span<const double>(ts));
  EXPECT_EQ(y.dim(0), static_cast<std::size_t>(std::floor(ts.back() * 120.0)) + 1);
  for (std::size_t k = 0; k < y.dim(0); ++k)
    for (std::size_t c = 0; c < 3; ++c)
      ASSERT_NEAR(y[k * 3 + c], 2.0 * static_cast<double>(k) / 120.0 + static_cast<double>(c), 1e-9);

  std::vector<double> bad = ts;
  bad[5] = bad[4];
  EXPECT_THROW(resample(x, 62.5, 120.0, std::span<const double>(bad)), InvalidArgument);
}

TEST(Resample, RejectsNonFinite) {
  Tensor x = recording(10, [](auto, auto) { return 1.0; });
  x[4] = std::nan("");
  EXPECT_THROW(resample(x, 62.5, 120.0), InvalidArgument);
}

TEST(Segment, TenMinutes) {
  const Tensor x = recording(10 * 7200, [](std::size_t i, auto) { return static_cast<double>(i); });
  const auto ws = segment(x, 120.0, 6960);
  ASSERT_EQ(ws.size(), 10u);
  for (const auto& w : ws) {
    EXPECT_EQ(w.length(), 6960u);
    EXPECT_EQ(w.rate_hz(), 120.0);
  }
}

TEST(Segment, LessThanAMinuteIsEmpty) {
  const Tensor x = recording(59 * 120, [](auto, auto) { return 0.0; });
  EXPECT_TRUE(segment(x, 120.0, 6960).empty());
}

TEST(Segment, WindowStartsAtMinuteBoundaries) {
  const std::size_t n = 18000;  // 2.5 minutes
  const Tensor x = recording(n, [](std::size_t i, std::size_t c) { return static_cast<double>(i * 3 + c); });
  const auto ws = segment(x, 120.0, 6960);
  ASSERT_EQ(ws.size(), 2u);
  for (std::size_t k = 0; k < 2; ++k) {
    // Slice oracle: rows [k*7200, k*7200 + 6960).
    for (std::size_t t = 0; t < 6960; ++t)
      for (std::size_t c = 0; c < 3; ++c) ASSERT_EQ(ws[k](t, c), x[(k * 7200 + t) * 3 + c]);
  }
  EXPECT_THROW(segment(x, 120.0, 7201), InvalidArgument);
}

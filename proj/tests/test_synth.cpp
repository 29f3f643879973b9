#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "wearaug/synth.hpp"

using namespace wearaug;

namespace {

double channel_variance(const Window& w, std::size_t c) {
  double mean = 0.0;
  for (std::size_t t = 0; t < w.length(); ++t) mean += w(t, c) / static_cast<double>(w.length());
  double v = 0.0;
  for (std::size_t t = 0; t < w.length(); ++t) v += (w(t, c) - mean) * (w(t, c) - mean);
  return v / static_cast<double>(w.length());
}

// Naive DFT power of one channel at bins 0..n/2.
std::vector<double> power_spectrum(const Window& w, std::size_t c) {
  const std::size_t n = w.length();
  std::vector<double> p(n / 2 + 1);
  for (std::size_t k = 0; k < p.size(); ++k) {
    double re = 0.0, im = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      const double a = 2.0 * std::numbers::pi * static_cast<double>(k * t) / static_cast<double>(n);
      re += w(t, c) * std::cos(a);
      im -= w(t, c) * std::sin(a);
    }
    p[k] = re * re + im * im;
  }
  return p;
}

// Max-margin threshold on X-channel variance, fit on the first subject and
// scored on the rest.
double cross_subject_threshold_accuracy(const LabeledDataset& d) {
  const auto subjects = d.subjects();
  double brady_max = 0.0, dysk_min = 1e300;
  for (const auto& r : d.records) {
    if (r.subject != subjects[0]) continue;
    const double v = channel_variance(r.window, 0);
    if (r.label == kBrady) brady_max = std::max(brady_max, v);
    else dysk_min = std::min(dysk_min, v);
  }
  const double threshold = 0.5 * (brady_max + dysk_min);
  std::size_t hits = 0, total = 0;
  for (const auto& r : d.records) {
    if (r.subject == subjects[0]) continue;
    hits += (channel_variance(r.window, 0) > threshold ? kDysk : kBrady) == r.label;
    ++total;
  }
  return static_cast<double>(hits) / static_cast<double>(total);
}

}  // namespace

TEST(Synth, NoiselessBradyIsFlatComparedToDysk) {
  SynthConfig cfg;
  cfg.atypical_fraction = 0.0;
  cfg.noise_floor = 0.0;
  RngStream rng(1, 0);
  double dysk = 0.0, brady_max = 0.0;
  for (int i = 0; i < 20; ++i) {
    const RotationMatrix r = sample_rotation(rng);
    const Window b = gen_window(kBrady, r, rng, cfg);
    const Window d = gen_window(kDysk, r, rng, cfg);
    for (std::size_t c = 0; c < 3; ++c) {
      brady_max = std::max(brady_max, channel_variance(b, c));
      dysk += channel_variance(d, c) / 60.0;
    }
  }
  EXPECT_LT(brady_max, 1e-6 * dysk);
}

TEST(Synth, DyskPowerLiesInBand) {
  SynthConfig cfg;
  cfg.atypical_fraction = 0.0;
  RngStream rng(2, 0);
  const double df = cfg.rate_hz / static_cast<double>(cfg.window_len);
  for (int i = 0; i < 10; ++i) {
    const Window w = gen_window(kDysk, sample_rotation(rng), rng, cfg);
    double in_band = 0.0, total = 0.0;
    for (std::size_t c = 0; c < 3; ++c) {
      const auto p = power_spectrum(w, c);
      for (std::size_t k = 1; k < p.size(); ++k) {
        total += p[k];
        const double f = static_cast<double>(k) * df;
        if (f >= cfg.dyskinesia_band_hz.low && f <= cfg.dyskinesia_band_hz.high) in_band += p[k];
      }
    }
    EXPECT_GT(in_band / total, 0.5) << "window " << i;
  }
}

TEST(Synth, IdentityRotationBradyIsGravityOnZ) {
  SynthConfig cfg;
  cfg.atypical_fraction = 0.0;
  cfg.noise_floor = 0.0;
  RngStream rng(3, 0);
  const Window w = gen_window(kBrady, RotationMatrix::identity(), rng, cfg);
  EXPECT_EQ(w.length(), 696u);
  EXPECT_EQ(w.rate_hz(), 120.0);
  for (std::size_t t = 0; t < w.length(); ++t) {
    EXPECT_EQ(w(t, 0), 0.0);
    EXPECT_EQ(w(t, 1), 0.0);
    EXPECT_EQ(w(t, 2), 1.0);
  }
}

TEST(Synth, DatasetCounts) {
  SynthConfig cfg;
  cfg.n_subjects = 10;
  cfg.windows_per_subject = 20;
  RngStream rng(4, 0);
  const LabeledDataset d = gen_dataset(rng, cfg);
  EXPECT_EQ(d.size(), 200u);
  std::size_t dysk = 0;
  for (const auto& r : d.records) dysk += r.label == kDysk;
  EXPECT_EQ(dysk, 100u);
  EXPECT_EQ(d.subjects().size(), 10u);
  EXPECT_EQ(d.subjects().front(), "S01");
  EXPECT_EQ(d.subjects().back(), "S10");
  EXPECT_NO_THROW(d.validate());
}

TEST(Synth, GravityStaysOnZWithoutRotation) {
  SynthConfig cfg;
  cfg.n_subjects = 6;
  cfg.per_subject_rotation = false;
  RngStream rng(5, 0);
  for (const auto& r : gen_dataset(rng, cfg).records) {
    if (r.label != kBrady) continue;
    double e[3] = {0, 0, 0};
    for (std::size_t t = 0; t < r.window.length(); ++t)
      for (std::size_t c = 0; c < 3; ++c) e[c] += r.window(t, c) * r.window(t, c) / 696.0;
    EXPECT_NEAR(e[2], 1.0, 0.02);
    EXPECT_LT(e[0], 0.02);
    EXPECT_LT(e[1], 0.02);
  }
}

TEST(Synth, DeterministicPerSeed) {
  SynthConfig cfg;
  cfg.n_subjects = 5;
  RngStream a(6, 0), b(6, 0), c(7, 0);
  const LabeledDataset x = gen_dataset(a, cfg), y = gen_dataset(b, cfg), z = gen_dataset(c, cfg);
  ASSERT_EQ(x.size(), y.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    EXPECT_EQ(x.records[i].window, y.records[i].window);
    EXPECT_EQ(x.records[i].subject, y.records[i].subject);
  }
  EXPECT_NE(x.records[0].window, z.records[0].window);
}

TEST(Synth, RotationDoesNotChangeLabels) {
  SynthConfig on, off;
  off.per_subject_rotation = false;
  RngStream a(8, 0), b(8, 0);
  const LabeledDataset x = gen_dataset(a, on), y = gen_dataset(b, off);
  for (std::size_t i = 0; i < x.size(); ++i) {
    EXPECT_EQ(x.records[i].label, y.records[i].label);
    EXPECT_EQ(x.records[i].subject, y.records[i].subject);
  }
}

TEST(Synth, SolvableWithoutNuisanceAndHarderWithRotation) {
  SynthConfig clean;
  clean.per_subject_rotation = false;
  clean.atypical_fraction = 0.0;
  SynthConfig rotated = clean;
  rotated.per_subject_rotation = true;
  double acc_clean = 0.0, acc_rot = 0.0;
  const int reps = 100;
  for (int s = 0; s < reps; ++s) {
    RngStream a(1000 + s, 0), b(1000 + s, 0);
    acc_clean += cross_subject_threshold_accuracy(gen_dataset(a, clean)) / reps;
    acc_rot += cross_subject_threshold_accuracy(gen_dataset(b, rotated)) / reps;
  }
  RecordProperty("clean", std::to_string(acc_clean));
  RecordProperty("rotated", std::to_string(acc_rot));
  EXPECT_GE(acc_clean, 0.99);
  EXPECT_GE(acc_clean - acc_rot, 0.10);
}

TEST(Synth, ConfigValidation) {
  SynthConfig cfg;
  cfg.atypical_fraction = 1.5;
  RngStream rng(9, 0);
  EXPECT_THROW(gen_dataset(rng, cfg), ConfigError);
  cfg = {};
  cfg.tremor_freq_hz = {6.0, 4.0};
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = {};
  cfg.window_len = 1;
  EXPECT_THROW(cfg.validate(), ConfigError);
}

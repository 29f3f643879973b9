#pragma once

#include <array>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <string>
#include <vector>

#include "wearaug/augment.hpp"
#include "wearaug/dataset.hpp"

namespace wearaug {

struct Range {
  double low = 0.0;
  double high = 0.0;

  double draw(RngStream& rng) const { return rng.uniform(low, high); }
  bool valid() const { return low <= high; }
};

/// Synthetic tri-axial dataset parameters. Accelerations are in g.
struct SynthConfig {
  std::size_t n_subjects = 20;
  std::size_t windows_per_subject = 20;
  std::size_t window_len = 696;
  double rate_hz = 120.0;
  Range tremor_freq_hz{4.0, 6.0};
  Range dyskinesia_band_hz{0.5, 3.0};
  double noise_floor = 0.01;
  bool per_subject_rotation = true;
  double atypical_fraction = 0.15;

  // Dyskinetic movement: peak amplitude of the summed oscillation, and the
  // spread of each component's direction around the body-frame X axis.
  Range dyskinesia_amp{0.25, 0.35};
  double dyskinesia_direction_spread = 0.05;
  // Atypical cases: tremor bursts on bradykinesia, suppressed dyskinesia.
  Range tremor_amp{0.03, 0.10};
  Range tremor_burst_fraction{0.3, 1.0};
  Range suppression{0.03, 0.10};

  void validate() const {
    auto fail = [](const std::string& m) { throw ConfigError("synth config: " + m); };
    if (window_len < 2) fail("window_len must be >= 2");
    if (!(rate_hz > 0)) fail("rate_hz must be positive");
    for (const Range* r : {&tremor_freq_hz, &dyskinesia_band_hz, &dyskinesia_amp, &tremor_amp,
                           &tremor_burst_fraction, &suppression}) {
      if (!r->valid() || r->low < 0) fail("invalid range");
    }
    if (!(noise_floor >= 0)) fail("noise_floor must be >= 0");
    if (!(atypical_fraction >= 0 && atypical_fraction <= 1)) fail("atypical_fraction must be in [0,1]");
    if (tremor_burst_fraction.high > 1.0) fail("tremor burst fraction must be <= 1");
  }
};

namespace detail {

inline std::array<double, 3> random_unit(RngStream& rng) {
  std::array<double, 3> v{};
  double n = 0.0;
  do {
    for (double& x : v) x = rng.standard_normal();
    n = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
  } while (n < 1e-12);
  for (double& x : v) x /= n;
  return v;
}

}  // namespace detail

/// One synthetic window in the sensor frame.
///
/// brady: gravity (0, 0, 1) plus the noise floor; atypically, a tremor
/// burst along a random direction. dysk: gravity plus 3-6 sinusoids in the
/// dyskinesia band, directed around the body X axis; atypically, the
/// oscillation is strongly suppressed. The result is rotated by
/// `subject_rotation`.
inline Window gen_window(int label, const RotationMatrix& subject_rotation, RngStream& rng, const SynthConfig& cfg) {
  const std::size_t n = cfg.window_len;
  const double dt = 1.0 / cfg.rate_hz;
  const bool atypical = rng.uniform() < cfg.atypical_fraction;
  std::vector<std::array<double, 3>> v(n, std::array<double, 3>{0.0, 0.0, 1.0});

  if (label == kBrady) {
    if (atypical) {
      const double f = cfg.tremor_freq_hz.draw(rng);
      const double a = cfg.tremor_amp.draw(rng);
      const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
      const auto dir = detail::random_unit(rng);
      const auto len = static_cast<std::size_t>(std::ceil(cfg.tremor_burst_fraction.draw(rng) * static_cast<double>(n)));
      const std::size_t start = static_cast<std::size_t>(rng.below(n - std::min(len, n) + 1));
      for (std::size_t t = start; t < std::min(n, start + len); ++t) {
        const double s = a * std::sin(2.0 * std::numbers::pi * f * static_cast<double>(t) * dt + phase);
        for (int c = 0; c < 3; ++c) v[t][c] += s * dir[c];
      }
    }
  } else {
    const std::size_t k = 3 + static_cast<std::size_t>(rng.below(4));
    double amp = cfg.dyskinesia_amp.draw(rng) / static_cast<double>(k);
    if (atypical) amp *= cfg.suppression.draw(rng);
    for (std::size_t i = 0; i < k; ++i) {
      const double f = cfg.dyskinesia_band_hz.draw(rng);
      const double a = amp * rng.uniform(0.5, 1.5);
      const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
      std::array<double, 3> dir{1.0, 0.0, 0.0};
      for (double& x : dir) x += cfg.dyskinesia_direction_spread * rng.standard_normal();
      const double norm = std::sqrt(dir[0] * dir[0] + dir[1] * dir[1] + dir[2] * dir[2]);
      for (std::size_t t = 0; t < n; ++t) {
        const double s = a * std::sin(2.0 * std::numbers::pi * f * static_cast<double>(t) * dt + phase);
        for (int c = 0; c < 3; ++c) v[t][c] += s * dir[c] / norm;
      }
    }
  }

  Tensor out({n, kAxes});
  for (std::size_t t = 0; t < n; ++t) {
    std::array<double, 3> x = v[t];
    for (double& e : x) e += gauss(rng, 0.0, cfg.noise_floor);
    const auto r = subject_rotation.apply(x);
    for (std::size_t c = 0; c < kAxes; ++c) out[t * kAxes + c] = r[c];
  }
  return {std::move(out), cfg.rate_hz};
}

/// Balanced synthetic dataset; subjects are "S01", "S02", ... Each subject
/// gets one random sensor rotation when `per_subject_rotation` is set, and
/// every window is generated from its own derived stream.
inline LabeledDataset gen_dataset(RngStream& rng, const SynthConfig& cfg) {
  cfg.validate();
  const std::uint64_t master = rng.next_u64();
  LabeledDataset d;
  d.provenance = "synthetic: subjects=" + std::to_string(cfg.n_subjects) +
                 " per_subject=" + std::to_string(cfg.windows_per_subject) +
                 " window_len=" + std::to_string(cfg.window_len) +
                 " rotation=" + (cfg.per_subject_rotation ? "on" : "off");
  std::uint64_t ordinal = 0;
  for (std::size_t s = 0; s < cfg.n_subjects; ++s) {
    RngStream subject_rng = derive_stream(master, s);
    const RotationMatrix r = cfg.per_subject_rotation ? sample_rotation(subject_rng) : RotationMatrix::identity();
    char id[16];
    std::snprintf(id, sizeof id, "S%02zu", s + 1);
    for (std::size_t i = 0; i < cfg.windows_per_subject; ++i) {
      RngStream wr = derive_stream(master, (1ull << 32) + ordinal++);
      const int label = i % 2 == 0 ? kBrady : kDysk;
      d.records.push_back({gen_window(label, r, wr, cfg), label, id});
    }
  }
  return d;
}

}  // namespace wearaug

#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

#include "wearaug/preprocess.hpp"
#include "wearaug/random.hpp"
#include "wearaug/window.hpp"

namespace wearaug {

/// Parameter distributions for the seven transforms.
struct AugmentConfig {
  double jitter_sigma_of_sigma = 0.03;
  double scale_mean = 1.0;
  double scale_std = 0.1;
  double perm_seg_std = 5.0;
  std::size_t perm_max_segments = 5;
  double warp_amp_low = 0.05;
  double warp_amp_high = 0.20;
  double warp_freq_low = 1.0;   // cycles per window
  double warp_freq_high = 4.0;
  double crop_fraction = 1.0 / 3.0;

  void validate() const {
    auto fail = [](const std::string& m) { throw ConfigError("augment config: " + m); };
    if (!(jitter_sigma_of_sigma >= 0.0)) fail("jitter_sigma_of_sigma must be >= 0");
    if (!(scale_std >= 0.0)) fail("scale_std must be >= 0");
    if (!(perm_seg_std >= 0.0)) fail("perm_seg_std must be >= 0");
    if (perm_max_segments < 1) fail("perm_max_segments must be >= 1");
    if (!(warp_amp_low >= 0.0 && warp_amp_low <= warp_amp_high)) fail("need 0 <= warp_amp_low <= warp_amp_high");
    if (!(warp_amp_high < 1.0)) fail("warp_amp_high must be < 1 so warp curves stay positive");
    if (!(warp_freq_low >= 0.0 && warp_freq_low <= warp_freq_high)) fail("need 0 <= warp_freq_low <= warp_freq_high");
    if (!(crop_fraction > 0.0 && crop_fraction <= 1.0)) fail("crop_fraction must be in (0, 1]");
  }
};

/// 3x3 rotation, row-major.
struct RotationMatrix {
  std::array<double, 9> m{1, 0, 0, 0, 1, 0, 0, 0, 1};

  double operator()(std::size_t r, std::size_t c) const noexcept { return m[r * 3 + c]; }

  static RotationMatrix identity() { return {}; }

  /// Rotation by `angle` radians about the Z axis.
  static RotationMatrix about_z(double angle) {
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    return {{c, -s, 0, s, c, 0, 0, 0, 1}};
  }

  /// From a unit quaternion (w, x, y, z). The input is renormalized.
  static RotationMatrix from_quaternion(double w, double x, double y, double z) {
    const double n = std::sqrt(w * w + x * x + y * y + z * z);
    w /= n, x /= n, y /= n, z /= n;
    return {{1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
             2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
             2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)}};
  }

  double determinant() const {
    return m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6]) +
           m[2] * (m[3] * m[7] - m[4] * m[6]);
  }

  /// Rotation angle in [0, pi].
  double angle() const {
    return std::acos(std::clamp((m[0] + m[4] + m[8] - 1.0) / 2.0, -1.0, 1.0));
  }

  std::array<double, 3> apply(const std::array<double, 3>& v) const {
    return {m[0] * v[0] + m[1] * v[1] + m[2] * v[2], m[3] * v[0] + m[4] * v[1] + m[5] * v[2],
            m[6] * v[0] + m[7] * v[1] + m[8] * v[2]};
  }
};

/// Positive curve of per-sample factors around 1.
struct SmoothCurve {
  std::vector<double> values;
};

// ---------------------------------------------------------------------------
// Deterministic kernels. Each random transform below draws its parameters and
// then calls one of these, so tests can force any parameter value.

inline Window scale_by(const Window& w, double s) {
  Tensor out = w.samples();
  for (double& v : out.data()) v *= s;
  return {std::move(out), w.rate_hz()};
}

inline Window rotate_by(const Window& w, const RotationMatrix& r) {
  Tensor out = w.samples();
  auto d = out.data();
  for (std::size_t t = 0; t < w.length(); ++t) {
    const auto v = r.apply({d[t * 3], d[t * 3 + 1], d[t * 3 + 2]});
    d[t * 3] = v[0];
    d[t * 3 + 1] = v[1];
    d[t * 3 + 2] = v[2];
  }
  return {std::move(out), w.rate_hz()};
}

/// Start offsets of `n` contiguous segments covering [0, length); segment
/// lengths differ by at most one. Returns n + 1 boundaries.
inline std::vector<std::size_t> segment_bounds(std::size_t length, std::size_t n) {
  if (n < 1 || n > length) throw InvalidArgument("segment_bounds: need 1 <= n <= length");
  std::vector<std::size_t> b(n + 1);
  for (std::size_t k = 0; k <= n; ++k) b[k] = k * length / n;
  return b;
}

/// Concatenate the near-equal segments of `w` in the given order
/// (order[i] = index of the segment placed i-th).
inline Window permute_segments(const Window& w, const std::vector<std::size_t>& order) {
  const auto bounds = segment_bounds(w.length(), order.size());
  std::vector<double> out;
  out.reserve(w.samples().size());
  const auto src = w.samples().data();
  for (std::size_t seg : order) {
    if (seg >= order.size()) throw InvalidArgument("permute_segments: bad segment index");
    out.insert(out.end(), src.begin() + static_cast<std::ptrdiff_t>(bounds[seg] * kAxes),
               src.begin() + static_cast<std::ptrdiff_t>(bounds[seg + 1] * kAxes));
  }
  if (out.size() != src.size()) throw InvalidArgument("permute_segments: order is not a permutation");
  return {Tensor(w.samples().shape(), std::move(out)), w.rate_hz()};
}

/// curve[t] = 1 + amplitude * sin(2 pi f t / length + phase)
inline SmoothCurve sinusoid_curve(std::size_t length, double amplitude, double cycles, double phase) {
  SmoothCurve c;
  c.values.resize(length);
  const double n = static_cast<double>(length);
  for (std::size_t t = 0; t < length; ++t) {
    c.values[t] =
        1.0 + amplitude * std::sin(2.0 * std::numbers::pi * cycles * static_cast<double>(t) / n + phase);
  }
  return c;
}

inline Window magnitude_warp_with(const Window& w, const std::array<SmoothCurve, 3>& curves) {
  for (const auto& c : curves) {
    if (c.values.size() != w.length()) throw InvalidArgument("magnitude_warp: curve length mismatch");
  }
  Tensor out = w.samples();
  auto d = out.data();
  for (std::size_t t = 0; t < w.length(); ++t) {
    for (std::size_t c = 0; c < kAxes; ++c) d[t * 3 + c] *= curves[c].values[t];
  }
  return {std::move(out), w.rate_hz()};
}

/// Warped sample coordinates for a time-warp curve: the cumulative sum of
/// `g`, shifted and scaled so the first entry is 0 and the last is T-1.
inline std::vector<double> warped_grid(const SmoothCurve& g) {
  const std::size_t n = g.values.size();
  if (n < 2) throw InvalidArgument("warped_grid: curve too short");
  std::vector<double> cum(n);
  double acc = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    if (!(g.values[t] > 0.0)) throw InvalidArgument("warped_grid: curve must be positive");
    acc += g.values[t];
    cum[t] = acc;
  }
  const double last = static_cast<double>(n - 1);
  const double span = cum[n - 1] - cum[0];
  std::vector<double> grid(n);
  for (std::size_t t = 0; t < n; ++t) grid[t] = std::clamp((cum[t] - cum[0]) * last / span, 0.0, last);
  grid.front() = 0.0;
  grid.back() = last;
  return grid;
}

inline Window resample_at(const Window& w, const std::vector<double>& positions) {
  Tensor out({positions.size(), kAxes});
  for (std::size_t t = 0; t < positions.size(); ++t) {
    for (std::size_t c = 0; c < kAxes; ++c) out[t * 3 + c] = detail::sample_at(w.samples(), positions[t], c);
  }
  return {std::move(out), w.rate_hz()};
}

inline Window time_warp_with(const Window& w, const SmoothCurve& g) {
  if (g.values.size() != w.length()) throw InvalidArgument("time_warp: curve length mismatch");
  return resample_at(w, warped_grid(g));
}

struct CropDraw {
  std::size_t start = 0;
  std::size_t length = 0;
};

inline Window crop_slice(const Window& w, CropDraw d) {
  if (d.length < 2 || d.start + d.length > w.length()) throw InvalidArgument("crop: slice out of range");
  const auto src = w.samples().data();
  std::vector<double> v(src.begin() + static_cast<std::ptrdiff_t>(d.start * kAxes),
                        src.begin() + static_cast<std::ptrdiff_t>((d.start + d.length) * kAxes));
  return {Tensor({d.length, kAxes}, std::move(v)), w.rate_hz()};
}

/// Linear stretch of `w` to `length` samples; endpoints map to endpoints.
inline Window stretch(const Window& w, std::size_t length) {
  if (length < 2) throw InvalidArgument("stretch: target too short");
  std::vector<double> pos(length);
  const double src_last = static_cast<double>(w.length() - 1);
  const double dst_last = static_cast<double>(length - 1);
  for (std::size_t k = 0; k < length; ++k) pos[k] = static_cast<double>(k) * src_last / dst_last;
  return resample_at(w, pos);
}

// ---------------------------------------------------------------------------
// Random transforms.

inline Window jitter(const Window& w, RngStream& rng, const AugmentConfig& cfg) {
  const double sigma = std::abs(gauss(rng, 0.0, cfg.jitter_sigma_of_sigma));
  Tensor out = w.samples();
  for (double& v : out.data()) v += gauss(rng, 0.0, sigma);
  return {std::move(out), w.rate_hz()};
}

inline double draw_scale(RngStream& rng, const AugmentConfig& cfg) {
  return gauss(rng, cfg.scale_mean, cfg.scale_std);
}

inline Window scale(const Window& w, RngStream& rng, const AugmentConfig& cfg) {
  return scale_by(w, draw_scale(rng, cfg));
}

/// Haar-uniform rotation from a uniform unit quaternion (Shoemake's method).
inline RotationMatrix sample_rotation(RngStream& rng) {
  const double u1 = rng.uniform();
  const double u2 = rng.uniform() * 2.0 * std::numbers::pi;
  const double u3 = rng.uniform() * 2.0 * std::numbers::pi;
  const double a = std::sqrt(1.0 - u1);
  const double b = std::sqrt(u1);
  return RotationMatrix::from_quaternion(b * std::cos(u3), a * std::sin(u2), a * std::cos(u2),
                                         b * std::sin(u3));
}

inline Window rotate(const Window& w, RngStream& rng) { return rotate_by(w, sample_rotation(rng)); }

/// Segment count: round(|N(0, perm_seg_std)|) clamped to [1, perm_max_segments].
inline std::size_t draw_segment_count(RngStream& rng, const AugmentConfig& cfg) {
  const double x = std::round(std::abs(gauss(rng, 0.0, cfg.perm_seg_std)));
  const double hi = static_cast<double>(cfg.perm_max_segments);
  return static_cast<std::size_t>(std::clamp(x, 1.0, hi));
}

inline Window permute(const Window& w, RngStream& rng, const AugmentConfig& cfg) {
  if (w.length() < cfg.perm_max_segments) throw InvalidArgument("permute: window shorter than perm_max_segments");
  std::vector<std::size_t> order(draw_segment_count(rng, cfg));
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  shuffle(order, rng);
  return permute_segments(w, order);
}

inline SmoothCurve random_curve(RngStream& rng, std::size_t length, const AugmentConfig& cfg) {
  if (length < 2) throw InvalidArgument("random_curve: length must be >= 2");
  if (!(cfg.warp_amp_high < 1.0)) throw ConfigError("random_curve: warp amplitude range allows A >= 1");
  const double amp = rng.uniform(cfg.warp_amp_low, cfg.warp_amp_high);
  const double freq = rng.uniform(cfg.warp_freq_low, cfg.warp_freq_high);
  const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
  return sinusoid_curve(length, amp, freq, phase);
}

inline Window magnitude_warp(const Window& w, RngStream& rng, const AugmentConfig& cfg) {
  std::array<SmoothCurve, 3> curves;
  for (auto& c : curves) c = random_curve(rng, w.length(), cfg);
  return magnitude_warp_with(w, curves);
}

inline Window time_warp(const Window& w, RngStream& rng, const AugmentConfig& cfg) {
  return time_warp_with(w, random_curve(rng, w.length(), cfg));
}

inline CropDraw draw_crop(RngStream& rng, std::size_t length, const AugmentConfig& cfg) {
  if (!(cfg.crop_fraction > 0.0 && cfg.crop_fraction <= 1.0)) {
    throw ConfigError("crop: crop_fraction must be in (0, 1]");
  }
  const auto crop_len = static_cast<std::size_t>(std::llround(static_cast<double>(length) * cfg.crop_fraction));
  if (crop_len < 2) throw InvalidArgument("crop: cropped length below 2 samples");
  return {static_cast<std::size_t>(rng.below(length - crop_len + 1)), crop_len};
}

inline Window crop(const Window& w, RngStream& rng, const AugmentConfig& cfg) {
  const CropDraw d = draw_crop(rng, w.length(), cfg);
  if (d.length == w.length()) return w;
  return stretch(crop_slice(w, d), w.length());
}

// ---------------------------------------------------------------------------
// Pipelines.

enum class Transform { Jitter, Scale, Rot, Perm, MagW, TimeW, Crop };

inline constexpr std::array<std::pair<Transform, std::string_view>, 7> kTransformNames{{
    {Transform::Jitter, "jitter"},
    {Transform::Scale, "scale"},
    {Transform::Rot, "rot"},
    {Transform::Perm, "perm"},
    {Transform::MagW, "magw"},
    {Transform::TimeW, "timew"},
    {Transform::Crop, "crop"},
}};

inline std::string_view to_string(Transform t) {
  for (const auto& [id, name] : kTransformNames) {
    if (id == t) return name;
  }
  return "?";
}

inline Window apply_transform(Transform t, const Window& w, RngStream& rng, const AugmentConfig& cfg) {
  switch (t) {
    case Transform::Jitter: return jitter(w, rng, cfg);
    case Transform::Scale: return scale(w, rng, cfg);
    case Transform::Rot: return rotate(w, rng);
    case Transform::Perm: return permute(w, rng, cfg);
    case Transform::MagW: return magnitude_warp(w, rng, cfg);
    case Transform::TimeW: return time_warp(w, rng, cfg);
    case Transform::Crop: return crop(w, rng, cfg);
  }
  throw InvalidArgument("unknown transform");
}

/// Ordered, duplicate-free list of transforms applied left to right.
class AugmentPipeline {
 public:
  AugmentPipeline() = default;

  explicit AugmentPipeline(std::vector<Transform> steps, AugmentConfig cfg = {})
      : steps_(std::move(steps)), cfg_(cfg) {
    for (std::size_t i = 0; i < steps_.size(); ++i) {
      for (std::size_t j = 0; j < i; ++j) {
        if (steps_[i] == steps_[j]) {
          throw ConfigError("pipeline: duplicate transform '" + std::string(to_string(steps_[i])) + "'");
        }
      }
    }
    cfg_.validate();
  }

  /// Parses "rot+perm+timew" (case-insensitive). "" and "none" are the
  /// empty pipeline.
  static AugmentPipeline parse(std::string_view spec, AugmentConfig cfg = {}) {
    std::string lower;
    for (char ch : spec) {
      if (!std::isspace(static_cast<unsigned char>(ch))) {
        lower += static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
      }
    }
    std::vector<Transform> steps;
    if (lower.empty() || lower == "none") return AugmentPipeline(steps, cfg);
    std::size_t pos = 0;
    while (true) {
      const std::size_t end = lower.find('+', pos);
      const std::string token = lower.substr(pos, end == std::string::npos ? std::string::npos : end - pos);
      bool found = false;
      for (const auto& [id, name] : kTransformNames) {
        if (token == name) {
          steps.push_back(id);
          found = true;
        }
      }
      if (!found) throw ConfigError("pipeline: unknown transform '" + token + "'");
      if (end == std::string::npos) break;
      pos = end + 1;
    }
    return AugmentPipeline(std::move(steps), cfg);
  }

  const std::vector<Transform>& steps() const noexcept { return steps_; }
  const AugmentConfig& config() const noexcept { return cfg_; }
  bool empty() const noexcept { return steps_.empty(); }

  /// Canonical name, e.g. "rot+perm"; "none" when empty.
  std::string name() const {
    if (steps_.empty()) return "none";
    std::string s;
    for (std::size_t i = 0; i < steps_.size(); ++i) {
      if (i) s += "+";
      s += to_string(steps_[i]);
    }
    return s;
  }

  Window apply(const Window& w, RngStream& rng) const {
    Window out = w;
    for (Transform t : steps_) out = apply_transform(t, out, rng, cfg_);
    return out;
  }

 private:
  std::vector<Transform> steps_;
  AugmentConfig cfg_;
};

inline Window apply_pipeline(const AugmentPipeline& p, const Window& w, RngStream& rng) {
  return p.apply(w, rng);
}

}  // namespace wearaug

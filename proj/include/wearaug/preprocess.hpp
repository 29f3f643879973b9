#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "wearaug/window.hpp"

namespace wearaug {

namespace detail {

inline void check_recording(const Tensor& samples) {
  if (samples.rank() != 2 || samples.dim(1) != kAxes) {
    throw InvalidArgument("expected [N,3] recording, got " + shape_string(samples.shape()));
  }
  for (double v : samples.data()) {
    if (!std::isfinite(v)) throw InvalidArgument("recording contains non-finite values");
  }
}

// Sample channel `c` of `x` ([N,3]) at fractional index `pos` in [0, N-1].
// std::lerp is exact at the endpoints and bounded by them.
inline double sample_at(const Tensor& x, double pos, std::size_t c) {
  const std::size_t n = x.dim(0);
  if (pos <= 0.0) return x[c];
  if (pos >= static_cast<double>(n - 1)) return x[(n - 1) * kAxes + c];
  auto i = static_cast<std::size_t>(pos);
  if (i >= n - 1) i = n - 2;
  const double frac = pos - static_cast<double>(i);
  return std::lerp(x[i * kAxes + c], x[(i + 1) * kAxes + c], frac);
}

}  // namespace detail

namespace detail {

// Second-order finite-difference slopes of `x` (channel c) on the grid `t`.
inline std::vector<double> hermite_slopes(const Tensor& x, std::size_t c, const std::vector<double>& t) {
  const std::size_t n = t.size();
  auto v = [&](std::size_t i) { return x[i * kAxes + c]; };
  std::vector<double> d(n);
  if (n == 2) {
    d[0] = d[1] = (v(1) - v(0)) / (t[1] - t[0]);
    return d;
  }
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double h0 = t[i] - t[i - 1], h1 = t[i + 1] - t[i];
    d[i] = (h0 * h0 * v(i + 1) - h1 * h1 * v(i - 1) + (h1 * h1 - h0 * h0) * v(i)) / (h0 * h1 * (h0 + h1));
  }
  {
    const double h0 = t[1] - t[0], h1 = t[2] - t[1];
    d[0] = -(2 * h0 + h1) / (h0 * (h0 + h1)) * v(0) + (h0 + h1) / (h0 * h1) * v(1) - h0 / (h1 * (h0 + h1)) * v(2);
  }
  {
    const double h0 = t[n - 2] - t[n - 3], h1 = t[n - 1] - t[n - 2];
    d[n - 1] = h1 / (h0 * (h0 + h1)) * v(n - 3) - (h0 + h1) / (h0 * h1) * v(n - 2) +
               (2 * h1 + h0) / (h1 * (h0 + h1)) * v(n - 1);
  }
  return d;
}

// Evaluates the clamped cubic Hermite interpolant of every channel at
// `queries` (same units as `grid`, non-decreasing).
inline Tensor hermite_resample(const Tensor& x, const std::vector<double>& grid, const std::vector<double>& queries) {
  const std::size_t n = grid.size();
  Tensor out({queries.size(), kAxes});
  for (std::size_t c = 0; c < kAxes; ++c) {
    const std::vector<double> d = hermite_slopes(x, c, grid);
    double lo = x[c], hi = x[c];
    for (std::size_t i = 0; i < n; ++i) {
      lo = std::min(lo, x[i * kAxes + c]);
      hi = std::max(hi, x[i * kAxes + c]);
    }
    std::size_t seg = 0;
    for (std::size_t k = 0; k < queries.size(); ++k) {
      const double q = std::clamp(queries[k], grid[0], grid[n - 1]);
      while (seg + 2 < n && grid[seg + 1] <= q) ++seg;
      const double h = grid[seg + 1] - grid[seg];
      const double f = std::clamp((q - grid[seg]) / h, 0.0, 1.0);
      const double f2 = f * f, f3 = f2 * f;
      const double y = (2 * f3 - 3 * f2 + 1) * x[seg * kAxes + c] + (f3 - 2 * f2 + f) * h * d[seg] +
                       (3 * f2 - 2 * f3) * x[(seg + 1) * kAxes + c] + (f3 - f2) * h * d[seg + 1];
      out[k * kAxes + c] = std::clamp(y, lo, hi);
    }
  }
  return out;
}

}  // namespace detail

/// Resample a [N,3] recording from src_hz to dst_hz over the same time span.
///
/// Each channel is interpolated by a cubic Hermite spline whose knot slopes
/// are second-order finite differences, clamped to the channel's input
/// range: exact on constants and on aligned grids, exact up to rounding on
/// affine signals, and never outside [min, max] of the input.
///
/// Without `timestamps` the input is taken as uniformly spaced at src_hz and
/// the output has floor((N-1) * dst/src) + 1 rows. With `timestamps` (one per
/// row, strictly increasing, seconds) the output grid starts at timestamps[0]
/// and steps 1/dst_hz until the last timestamp; src_hz is then unused.
inline Tensor resample(const Tensor& samples, double src_hz, double dst_hz,
                       std::optional<std::span<const double>> timestamps = std::nullopt) {
  detail::check_recording(samples);
  const std::size_t n = samples.dim(0);
  if (n < 2) throw InvalidArgument("resample: need at least 2 samples");
  if (!(src_hz > 0.0) || !(dst_hz > 0.0)) throw InvalidArgument("resample: rates must be positive");

  std::vector<double> grid(n), queries;
  if (!timestamps) {
    // Index units, so aligned queries hit knots exactly.
    for (std::size_t i = 0; i < n; ++i) grid[i] = static_cast<double>(i);
    const auto m = static_cast<std::size_t>(std::floor(static_cast<double>(n - 1) * dst_hz / src_hz + 1e-9)) + 1;
    queries.resize(m);
    for (std::size_t k = 0; k < m; ++k) queries[k] = static_cast<double>(k) * src_hz / dst_hz;
    return detail::hermite_resample(samples, grid, queries);
  }

  const auto ts = *timestamps;
  if (ts.size() != n) throw InvalidArgument("resample: timestamp count does not match samples");
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(ts[i])) throw InvalidArgument("resample: non-finite timestamp");
    if (i > 0 && !(ts[i] > ts[i - 1])) throw InvalidArgument("resample: timestamps must increase");
    grid[i] = ts[i];
  }
  const auto m = static_cast<std::size_t>(std::floor((ts[n - 1] - ts[0]) * dst_hz + 1e-9)) + 1;
  queries.resize(m);
  for (std::size_t k = 0; k < m; ++k) queries[k] = ts[0] + static_cast<double>(k) / dst_hz;
  return detail::hermite_resample(samples, grid, queries);
}

/// Cut a recording into one-minute blocks and keep the first `window_len`
/// samples of each full block. Trailing partial minutes are dropped.
inline std::vector<Window> segment(const Tensor& samples, double rate_hz, std::size_t window_len) {
  detail::check_recording(samples);
  if (!(rate_hz > 0.0)) throw InvalidArgument("segment: rate must be positive");
  const auto per_minute = static_cast<std::size_t>(std::llround(60.0 * rate_hz));
  if (window_len < 2 || window_len > per_minute) {
    throw InvalidArgument("segment: window length " + std::to_string(window_len) +
                          " outside [2, " + std::to_string(per_minute) + "]");
  }
  std::vector<Window> windows;
  const std::size_t blocks = samples.dim(0) / per_minute;
  windows.reserve(blocks);
  const auto src = samples.data();
  for (std::size_t b = 0; b < blocks; ++b) {
    const auto first = src.begin() + static_cast<std::ptrdiff_t>(b * per_minute * kAxes);
    std::vector<double> values(first, first + static_cast<std::ptrdiff_t>(window_len * kAxes));
    windows.emplace_back(Tensor({window_len, kAxes}, std::move(values)), rate_hz);
  }
  return windows;
}

}  // namespace wearaug

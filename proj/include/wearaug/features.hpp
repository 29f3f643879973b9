#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "wearaug/window.hpp"

namespace wearaug {

inline constexpr std::size_t kFeatureWindowLength = 6960;
inline constexpr double kFeatureRateHz = 120.0;
inline constexpr std::size_t kStatsPerChannel = 5;  // mean, variance, skewness, kurtosis, max
inline constexpr std::size_t kFeatureDim = 540;

/// Moments of one channel of one sub-window.
struct ChannelStats {
  double mean = 0.0;
  double variance = 0.0;  // population
  double skewness = 0.0;  // m3 / m2^1.5
  double kurtosis = 0.0;  // m4 / m2^2, no excess correction
  double maximum = 0.0;
};

/// Sub-window moments; skewness and kurtosis are 0 when the variance
/// vanishes (relative to the mean's magnitude).
inline ChannelStats channel_stats(const Window& w, std::size_t begin, std::size_t end, std::size_t c) {
  const double n = static_cast<double>(end - begin);
  ChannelStats s;
  s.maximum = w(begin, c);
  double sum = 0.0;
  for (std::size_t t = begin; t < end; ++t) {
    sum += w(t, c);
    s.maximum = std::max(s.maximum, w(t, c));
  }
  s.mean = sum / n;
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (std::size_t t = begin; t < end; ++t) {
    const double d = w(t, c) - s.mean;
    const double d2 = d * d;
    m2 += d2;
    m3 += d2 * d;
    m4 += d2 * d2;
  }
  m2 /= n, m3 /= n, m4 /= n;
  if (m2 <= 1e-24 * (1.0 + s.mean * s.mean)) return s;
  s.variance = m2;
  s.skewness = m3 / std::pow(m2, 1.5);
  s.kurtosis = m4 / (m2 * m2);
  return s;
}

/// Sliding sub-window layout: for every size, offsets 0, stride, 2*stride,
/// ... while offset < T, with stride = size/2 and tails truncated at T.
struct SubWindow {
  std::size_t begin = 0;
  std::size_t end = 0;
};

inline std::vector<SubWindow> feature_subwindows(std::size_t length, const std::vector<std::size_t>& sizes) {
  std::vector<SubWindow> out;
  for (std::size_t size : sizes) {
    const std::size_t stride = std::max<std::size_t>(1, size / 2);
    for (std::size_t off = 0; off < length; off += stride) out.push_back({off, std::min(off + size, length)});
  }
  return out;
}

/// Statistical features in (sub-window size, sub-window index, channel,
/// statistic) order. Sub-window sizes are 5 s and 10 s at the window's rate.
inline std::vector<double> statistical_features(const Window& w) {
  const auto five = static_cast<std::size_t>(std::llround(5.0 * w.rate_hz()));
  const auto ten = static_cast<std::size_t>(std::llround(10.0 * w.rate_hz()));
  std::vector<double> f;
  for (const SubWindow& sw : feature_subwindows(w.length(), {five, ten})) {
    for (std::size_t c = 0; c < kAxes; ++c) {
      const ChannelStats s = channel_stats(w, sw.begin, sw.end, c);
      f.insert(f.end(), {s.mean, s.variance, s.skewness, s.kurtosis, s.maximum});
    }
  }
  return f;
}

/// The 540-dimensional baseline feature vector; requires a 6960-sample
/// window at 120 Hz (24 five-second and 12 ten-second sub-windows).
inline Tensor extract_features(const Window& w) {
  if (w.length() != kFeatureWindowLength || w.rate_hz() != kFeatureRateHz) {
    throw InvalidArgument("extract_features: expected 6960 samples at 120 Hz, got " +
                          std::to_string(w.length()) + " at " + std::to_string(w.rate_hz()) + " Hz");
  }
  return Tensor({kFeatureDim}, statistical_features(w));
}

// ---------------------------------------------------------------------------
// Baseline classifier: standardized features + L2 logistic regression.

inline double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

struct BaselineModel {
  std::vector<double> weights;
  double bias = 0.0;
  double l2 = 0.0;
  std::vector<double> feature_mean;
  std::vector<double> feature_std;  // floored at 1e-8

  std::size_t dim() const noexcept { return weights.size(); }

  double score(std::span<const double> f) const {
    if (f.size() != weights.size()) throw InvalidArgument("baseline: feature dimension mismatch");
    double z = bias;
    for (std::size_t j = 0; j < f.size(); ++j) z += weights[j] * (f[j] - feature_mean[j]) / feature_std[j];
    return z;
  }
};

struct BaselineFit {
  double loss = 0.0;
  double gradient_norm = 0.0;
};

namespace detail {

// Regularized mean log-loss and its gradient on standardized features z.
inline BaselineFit logistic_loss_grad(const std::vector<std::vector<double>>& z, const std::vector<int>& y,
                                      const std::vector<double>& w, double b, double l2,
                                      std::vector<double>& gw, double& gb) {
  const std::size_t n = z.size();
  const std::size_t d = w.size();
  gw.assign(d, 0.0);
  gb = 0.0;
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double s = b;
    for (std::size_t j = 0; j < d; ++j) s += w[j] * z[i][j];
    // log(1 + e^s) - y s, computed stably
    loss += (s > 0 ? s + std::log1p(std::exp(-s)) : std::log1p(std::exp(s))) - y[i] * s;
    const double r = sigmoid(s) - y[i];
    for (std::size_t j = 0; j < d; ++j) gw[j] += r * z[i][j];
    gb += r;
  }
  double norm2 = 0.0, wsq = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    gw[j] = gw[j] / static_cast<double>(n) + l2 * w[j];
    norm2 += gw[j] * gw[j];
    wsq += w[j] * w[j];
  }
  gb /= static_cast<double>(n);
  norm2 += gb * gb;
  return {loss / static_cast<double>(n) + 0.5 * l2 * wsq, std::sqrt(norm2)};
}

}  // namespace detail

/// Fits the baseline by full-batch gradient descent on
/// mean log-loss + (l2 / 2) * |w|^2 over standardized features.
inline BaselineModel train_baseline(const std::vector<std::vector<double>>& features, const std::vector<int>& labels,
                                    double l2, int epochs, double lr, BaselineFit* fit = nullptr) {
  if (features.size() != labels.size() || features.size() < 2) {
    throw InvalidArgument("train_baseline: need >= 2 feature vectors with matching labels");
  }
  const bool has0 = std::find(labels.begin(), labels.end(), 0) != labels.end();
  const bool has1 = std::find(labels.begin(), labels.end(), 1) != labels.end();
  if (!has0 || !has1) throw InvalidArgument("train_baseline: both classes must be present");
  for (int y : labels) {
    if (y != 0 && y != 1) throw InvalidArgument("train_baseline: labels must be 0 or 1");
  }
  if (!(l2 >= 0.0)) throw InvalidArgument("train_baseline: l2 must be >= 0");

  const std::size_t n = features.size();
  const std::size_t d = features[0].size();
  BaselineModel m;
  m.l2 = l2;
  m.feature_mean.assign(d, 0.0);
  m.feature_std.assign(d, 0.0);
  for (const auto& f : features) {
    if (f.size() != d) throw InvalidArgument("train_baseline: ragged feature vectors");
    for (std::size_t j = 0; j < d; ++j) m.feature_mean[j] += f[j];
  }
  for (double& v : m.feature_mean) v /= static_cast<double>(n);
  for (const auto& f : features) {
    for (std::size_t j = 0; j < d; ++j) m.feature_std[j] += (f[j] - m.feature_mean[j]) * (f[j] - m.feature_mean[j]);
  }
  for (double& v : m.feature_std) v = std::max(std::sqrt(v / static_cast<double>(n)), 1e-8);

  std::vector<std::vector<double>> z(n, std::vector<double>(d));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) z[i][j] = (features[i][j] - m.feature_mean[j]) / m.feature_std[j];
  }

  m.weights.assign(d, 0.0);
  std::vector<double> gw;
  double gb = 0.0;
  for (int e = 0; e < epochs; ++e) {
    detail::logistic_loss_grad(z, labels, m.weights, m.bias, l2, gw, gb);
    for (std::size_t j = 0; j < d; ++j) m.weights[j] -= lr * gw[j];
    m.bias -= lr * gb;
  }
  if (fit) *fit = detail::logistic_loss_grad(z, labels, m.weights, m.bias, l2, gw, gb);
  return m;
}

/// P(label = 1 | f).
inline double predict_baseline(const BaselineModel& m, std::span<const double> f) { return sigmoid(m.score(f)); }

}  // namespace wearaug

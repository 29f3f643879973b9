#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "wearaug/tensor.hpp"

namespace wearaug::cnn {

using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMajorMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMajorMatrix>;

/// One strided 2-D convolution over (time, axis) feature maps.
struct LayerSpec {
  std::size_t in_maps = 1;
  std::size_t out_maps = 1;
  std::array<std::size_t, 2> kernel{1, 1};  // (time, axis)
  std::array<std::size_t, 2> stride{1, 1};
  std::array<std::size_t, 2> pad{0, 0};

  /// floor((L + 2p - k) / s) + 1, or 0 when the kernel does not fit.
  std::size_t out_len(std::size_t in_len, std::size_t axis) const {
    const std::size_t padded = in_len + 2 * pad[axis];
    if (padded < kernel[axis] || stride[axis] == 0) return 0;
    return (padded - kernel[axis]) / stride[axis] + 1;
  }

  std::size_t fan_in() const noexcept { return in_maps * kernel[0] * kernel[1]; }

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

/// State kept from conv_forward for the backward pass: the unfolded input
/// (one K x P block per sample) and the input geometry.
struct ConvCache {
  std::vector<double> cols;
  Shape input_shape;
  std::size_t out_t = 0;
  std::size_t out_c = 0;
};

namespace detail {

inline void check_conv_input(const Tensor& x, const LayerSpec& spec, const Tensor& w, const Tensor& b) {
  if (x.rank() != 4 || x.dim(1) != spec.in_maps) {
    throw InvalidArgument("conv: input " + shape_string(x.shape()) + " incompatible with " +
                          std::to_string(spec.in_maps) + " input maps");
  }
  const Shape ws{spec.out_maps, spec.in_maps, spec.kernel[0], spec.kernel[1]};
  if (w.shape() != ws) throw InvalidArgument("conv: weight shape " + shape_string(w.shape()) + ", expected " + shape_string(ws));
  if (b.shape() != Shape{spec.out_maps}) throw InvalidArgument("conv: bias shape mismatch");
  if (spec.out_len(x.dim(2), 0) == 0 || spec.out_len(x.dim(3), 1) == 0) {
    throw InvalidArgument("conv: kernel larger than padded input " + shape_string(x.shape()));
  }
}

// Unfold one sample [Cin, Lt, Lc] into a K x P matrix (zero padding).
inline void im2col(const double* x, std::size_t lt, std::size_t lc, const LayerSpec& s, std::size_t ot,
                   std::size_t oc, double* col) {
  const std::size_t p = ot * oc;
  for (std::size_t ci = 0; ci < s.in_maps; ++ci) {
    for (std::size_t dt = 0; dt < s.kernel[0]; ++dt) {
      for (std::size_t dc = 0; dc < s.kernel[1]; ++dc) {
        double* row = col + ((ci * s.kernel[0] + dt) * s.kernel[1] + dc) * p;
        for (std::size_t t = 0; t < ot; ++t) {
          const auto it = static_cast<std::ptrdiff_t>(t * s.stride[0] + dt) - static_cast<std::ptrdiff_t>(s.pad[0]);
          for (std::size_t c = 0; c < oc; ++c) {
            const auto ic = static_cast<std::ptrdiff_t>(c * s.stride[1] + dc) - static_cast<std::ptrdiff_t>(s.pad[1]);
            const bool inside = it >= 0 && it < static_cast<std::ptrdiff_t>(lt) && ic >= 0 &&
                                ic < static_cast<std::ptrdiff_t>(lc);
            row[t * oc + c] = inside ? x[(ci * lt + static_cast<std::size_t>(it)) * lc + static_cast<std::size_t>(ic)] : 0.0;
          }
        }
      }
    }
  }
}

// Scatter-add a K x P matrix back into one sample [Cin, Lt, Lc]. A nonzero
// `stride_skew` deliberately mis-addresses the time axis (negative control
// for gradient checking).
inline void col2im(const double* col, std::size_t lt, std::size_t lc, const LayerSpec& s, std::size_t ot,
                   std::size_t oc, double* dx, int stride_skew) {
  const std::size_t p = ot * oc;
  const auto st = static_cast<std::ptrdiff_t>(s.stride[0]) + stride_skew;
  for (std::size_t ci = 0; ci < s.in_maps; ++ci) {
    for (std::size_t dt = 0; dt < s.kernel[0]; ++dt) {
      for (std::size_t dc = 0; dc < s.kernel[1]; ++dc) {
        const double* row = col + ((ci * s.kernel[0] + dt) * s.kernel[1] + dc) * p;
        for (std::size_t t = 0; t < ot; ++t) {
          const auto it = static_cast<std::ptrdiff_t>(t) * st + static_cast<std::ptrdiff_t>(dt) -
                          static_cast<std::ptrdiff_t>(s.pad[0]);
          if (it < 0 || it >= static_cast<std::ptrdiff_t>(lt)) continue;
          for (std::size_t c = 0; c < oc; ++c) {
            const auto ic = static_cast<std::ptrdiff_t>(c * s.stride[1] + dc) - static_cast<std::ptrdiff_t>(s.pad[1]);
            if (ic < 0 || ic >= static_cast<std::ptrdiff_t>(lc)) continue;
            dx[(ci * lt + static_cast<std::size_t>(it)) * lc + static_cast<std::size_t>(ic)] += row[t * oc + c];
          }
        }
      }
    }
  }
}

}  // namespace detail

/// Cross-correlation with zero padding plus per-map bias.
/// x: [B, in_maps, Lt, Lc], w: [out_maps, in_maps, kt, kc], b: [out_maps].
inline Tensor conv_forward(const Tensor& x, const LayerSpec& spec, const Tensor& w, const Tensor& b,
                           ConvCache* cache = nullptr) {
  detail::check_conv_input(x, spec, w, b);
  const std::size_t batch = x.dim(0), lt = x.dim(2), lc = x.dim(3);
  const std::size_t ot = spec.out_len(lt, 0), oc = spec.out_len(lc, 1);
  const std::size_t k = spec.fan_in(), p = ot * oc;
  Tensor y({batch, spec.out_maps, ot, oc});

  std::vector<double> local;
  std::vector<double>& cols = cache ? cache->cols : local;
  cols.resize(cache ? batch * k * p : k * p);

  const ConstMatrixMap wm(w.data().data(), static_cast<Eigen::Index>(spec.out_maps), static_cast<Eigen::Index>(k));
  const Eigen::Map<const Eigen::VectorXd> bv(b.data().data(), static_cast<Eigen::Index>(spec.out_maps));
  const std::size_t in_stride = spec.in_maps * lt * lc;
  for (std::size_t n = 0; n < batch; ++n) {
    double* col = cols.data() + (cache ? n * k * p : 0);
    detail::im2col(x.data().data() + n * in_stride, lt, lc, spec, ot, oc, col);
    const ConstMatrixMap cm(col, static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(p));
    MatrixMap ym(y.data().data() + n * spec.out_maps * p, static_cast<Eigen::Index>(spec.out_maps),
                 static_cast<Eigen::Index>(p));
    ym.noalias() = wm * cm;
    ym.colwise() += bv;
  }
  if (cache) {
    cache->input_shape = x.shape();
    cache->out_t = ot;
    cache->out_c = oc;
  }
  return y;
}

struct ConvGrads {
  Tensor dx;
  Tensor dw;
  Tensor db;
};

/// Exact gradients of conv_forward given the upstream gradient dy.
inline ConvGrads conv_backward(const Tensor& dy, const ConvCache& cache, const LayerSpec& spec, const Tensor& w,
                               int stride_skew = 0) {
  const std::size_t batch = cache.input_shape.at(0), lt = cache.input_shape.at(2), lc = cache.input_shape.at(3);
  const std::size_t ot = cache.out_t, oc = cache.out_c;
  const std::size_t k = spec.fan_in(), p = ot * oc;
  if (dy.shape() != Shape{batch, spec.out_maps, ot, oc}) {
    throw InvalidArgument("conv_backward: upstream gradient shape " + shape_string(dy.shape()));
  }
  ConvGrads g{Tensor(cache.input_shape), Tensor(w.shape()), Tensor({spec.out_maps})};
  const ConstMatrixMap wm(w.data().data(), static_cast<Eigen::Index>(spec.out_maps), static_cast<Eigen::Index>(k));
  MatrixMap dwm(g.dw.data().data(), static_cast<Eigen::Index>(spec.out_maps), static_cast<Eigen::Index>(k));
  RowMajorMatrix dcol(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(p));
  const std::size_t in_stride = spec.in_maps * lt * lc;
  for (std::size_t n = 0; n < batch; ++n) {
    const ConstMatrixMap dym(dy.data().data() + n * spec.out_maps * p, static_cast<Eigen::Index>(spec.out_maps),
                             static_cast<Eigen::Index>(p));
    const ConstMatrixMap cm(cache.cols.data() + n * k * p, static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(p));
    dwm.noalias() += dym * cm.transpose();
    // Plain loop: Eigen's vectorized row sums depend on buffer alignment, and
    // these sums are pure rounding noise when a batch norm follows.
    for (std::size_t o = 0; o < spec.out_maps; ++o) {
      const double* row = dy.data().data() + (n * spec.out_maps + o) * p;
      double acc = 0.0;
      for (std::size_t i = 0; i < p; ++i) acc += row[i];
      g.db[o] += acc;
    }
    dcol.noalias() = wm.transpose() * dym;
    detail::col2im(dcol.data(), lt, lc, spec, ot, oc, g.dx.data().data() + n * in_stride, stride_skew);
  }
  return g;
}

// ---------------------------------------------------------------------------
// Batch normalization over (batch, time, axis) positions of each map.

enum class Mode { Train, Eval };

struct BatchNormSettings {
  double momentum = 0.1;
  double eps = 1e-5;
};

struct BatchNormCache {
  Tensor x_hat;
  std::vector<double> inv_std;
};

struct BatchNormState {
  Tensor gamma, beta, running_mean, running_var;
};

/// Eval-mode batch norm: y = gamma * (x - running_mean) / sqrt(running_var + eps) + beta.
inline Tensor batchnorm_eval(const Tensor& x, const BatchNormState& st, const BatchNormSettings& cfg) {
  if (x.rank() != 4 || x.dim(1) != st.gamma.size()) throw InvalidArgument("batchnorm: input/map mismatch");
  const std::size_t batch = x.dim(0), maps = x.dim(1), pos = x.dim(2) * x.dim(3);
  Tensor y(x.shape());
  const auto xs = x.data();
  auto ys = y.data();
  for (std::size_t m = 0; m < maps; ++m) {
    const double inv = 1.0 / std::sqrt(st.running_var[m] + cfg.eps);
    const double a = st.gamma[m] * inv;
    const double c = st.beta[m] - a * st.running_mean[m];
    for (std::size_t n = 0; n < batch; ++n) {
      const std::size_t base = (n * maps + m) * pos;
      for (std::size_t i = 0; i < pos; ++i) ys[base + i] = a * xs[base + i] + c;
    }
  }
  return y;
}

/// Train mode normalizes with batch statistics (population variance) and
/// moves the running statistics by `momentum` (unbiased variance); eval
/// mode is the fixed affine map given by the running statistics.
inline Tensor batchnorm_forward(const Tensor& x, BatchNormState& st, Mode mode, const BatchNormSettings& cfg,
                                BatchNormCache* cache = nullptr) {
  if (x.rank() != 4 || x.dim(1) != st.gamma.size()) throw InvalidArgument("batchnorm: input/map mismatch");
  const std::size_t batch = x.dim(0), maps = x.dim(1), pos = x.dim(2) * x.dim(3);
  const std::size_t count = batch * pos;
  if (mode == Mode::Eval) return batchnorm_eval(x, st, cfg);
  Tensor y(x.shape());
  const auto xs = x.data();
  auto ys = y.data();
  if (batch < 2) throw InvalidArgument("batchnorm: train mode needs a batch of at least 2");
  if (cache) {
    cache->x_hat = Tensor(x.shape());
    cache->inv_std.assign(maps, 0.0);
  }
  for (std::size_t m = 0; m < maps; ++m) {
    double sum = 0.0;
    for (std::size_t n = 0; n < batch; ++n) {
      const std::size_t base = (n * maps + m) * pos;
      for (std::size_t i = 0; i < pos; ++i) sum += xs[base + i];
    }
    const double mean = sum / static_cast<double>(count);
    double ss = 0.0;
    for (std::size_t n = 0; n < batch; ++n) {
      const std::size_t base = (n * maps + m) * pos;
      for (std::size_t i = 0; i < pos; ++i) {
        const double d = xs[base + i] - mean;
        ss += d * d;
      }
    }
    const double var = ss / static_cast<double>(count);
    const double inv = 1.0 / std::sqrt(var + cfg.eps);
    for (std::size_t n = 0; n < batch; ++n) {
      const std::size_t base = (n * maps + m) * pos;
      for (std::size_t i = 0; i < pos; ++i) {
        const double xh = (xs[base + i] - mean) * inv;
        if (cache) cache->x_hat[base + i] = xh;
        ys[base + i] = st.gamma[m] * xh + st.beta[m];
      }
    }
    if (cache) cache->inv_std[m] = inv;
    const double unbiased = count > 1 ? ss / static_cast<double>(count - 1) : var;
    st.running_mean[m] = (1.0 - cfg.momentum) * st.running_mean[m] + cfg.momentum * mean;
    st.running_var[m] = (1.0 - cfg.momentum) * st.running_var[m] + cfg.momentum * unbiased;
  }
  return y;
}

struct BatchNormGrads {
  Tensor dx;
  Tensor dgamma;
  Tensor dbeta;
};

inline BatchNormGrads batchnorm_backward(const Tensor& dy, const BatchNormCache& cache, const Tensor& gamma) {
  const std::size_t batch = dy.dim(0), maps = dy.dim(1), pos = dy.dim(2) * dy.dim(3);
  const auto count = static_cast<double>(batch * pos);
  BatchNormGrads g{Tensor(dy.shape()), Tensor({maps}), Tensor({maps})};
  const auto d = dy.data();
  const auto xh = cache.x_hat.data();
  auto dx = g.dx.data();
  for (std::size_t m = 0; m < maps; ++m) {
    double sdy = 0.0, sdyx = 0.0;
    for (std::size_t n = 0; n < batch; ++n) {
      const std::size_t base = (n * maps + m) * pos;
      for (std::size_t i = 0; i < pos; ++i) {
        sdy += d[base + i];
        sdyx += d[base + i] * xh[base + i];
      }
    }
    g.dgamma[m] = sdyx;
    g.dbeta[m] = sdy;
    const double scale = gamma[m] * cache.inv_std[m] / count;
    for (std::size_t n = 0; n < batch; ++n) {
      const std::size_t base = (n * maps + m) * pos;
      for (std::size_t i = 0; i < pos; ++i) dx[base + i] = scale * (count * d[base + i] - sdy - xh[base + i] * sdyx);
    }
  }
  return g;
}

// ---------------------------------------------------------------------------

inline Tensor relu(const Tensor& x) {
  Tensor y = x;
  for (double& v : y.data()) v = v > 0.0 ? v : 0.0;
  return y;
}

/// Gradient mask is 1 where x > 0 (the subgradient at 0 is taken as 0).
inline Tensor relu_backward(const Tensor& dy, const Tensor& x) {
  Tensor g = dy;
  const auto xs = x.data();
  auto gs = g.data();
  for (std::size_t i = 0; i < gs.size(); ++i) {
    if (!(xs[i] > 0.0)) gs[i] = 0.0;
  }
  return g;
}

/// Global average pooling: [B, M, Lt, Lc] -> [B, M].
inline Tensor gap_forward(const Tensor& x) {
  if (x.rank() != 4) throw InvalidArgument("gap: expected a rank-4 input");
  const std::size_t batch = x.dim(0), maps = x.dim(1), pos = x.dim(2) * x.dim(3);
  Tensor y({batch, maps});
  for (std::size_t i = 0; i < batch * maps; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < pos; ++j) s += x[i * pos + j];
    y[i] = s / static_cast<double>(pos);
  }
  return y;
}

inline Tensor gap_backward(const Tensor& dy, const Shape& input_shape) {
  Tensor dx(input_shape);
  const std::size_t pos = input_shape.at(2) * input_shape.at(3);
  for (std::size_t i = 0; i < dy.size(); ++i) {
    const double v = dy[i] / static_cast<double>(pos);
    for (std::size_t j = 0; j < pos; ++j) dx[i * pos + j] = v;
  }
  return dx;
}

/// Affine head: logits[B, C] = g[B, F] * W^T + b, with W: [C, F].
inline Tensor head_forward(const Tensor& g, const Tensor& w, const Tensor& b) {
  if (g.rank() != 2 || w.rank() != 2 || g.dim(1) != w.dim(1) || b.size() != w.dim(0)) {
    throw InvalidArgument("head: shape mismatch");
  }
  const std::size_t batch = g.dim(0), classes = w.dim(0), feat = w.dim(1);
  Tensor y({batch, classes});
  for (std::size_t n = 0; n < batch; ++n) {
    for (std::size_t c = 0; c < classes; ++c) {
      double s = b[c];
      for (std::size_t f = 0; f < feat; ++f) s += g[n * feat + f] * w[c * feat + f];
      y[n * classes + c] = s;
    }
  }
  return y;
}

struct HeadGrads {
  Tensor dg;
  Tensor dw;
  Tensor db;
};

inline HeadGrads head_backward(const Tensor& dlogits, const Tensor& g, const Tensor& w) {
  const std::size_t batch = g.dim(0), classes = w.dim(0), feat = w.dim(1);
  HeadGrads out{Tensor(g.shape()), Tensor(w.shape()), Tensor({classes})};
  for (std::size_t n = 0; n < batch; ++n) {
    for (std::size_t c = 0; c < classes; ++c) {
      const double d = dlogits[n * classes + c];
      out.db[c] += d;
      for (std::size_t f = 0; f < feat; ++f) {
        out.dw[c * feat + f] += d * g[n * feat + f];
        out.dg[n * feat + f] += d * w[c * feat + f];
      }
    }
  }
  return out;
}

struct SoftmaxXent {
  double loss = 0.0;   // mean over the batch
  Tensor probs;        // [B, C]
  Tensor dlogits;      // (softmax - onehot) / B
};

inline SoftmaxXent softmax_xent(const Tensor& logits, std::span<const int> labels) {
  if (logits.rank() != 2 || logits.dim(0) != labels.size()) throw InvalidArgument("softmax_xent: batch mismatch");
  const std::size_t batch = logits.dim(0), classes = logits.dim(1);
  SoftmaxXent r{0.0, Tensor(logits.shape()), Tensor(logits.shape())};
  for (std::size_t n = 0; n < batch; ++n) {
    const int y = labels[n];
    if (y < 0 || static_cast<std::size_t>(y) >= classes) throw InvalidArgument("softmax_xent: label out of range");
    const double* z = logits.data().data() + n * classes;
    const double zmax = *std::max_element(z, z + classes);
    double denom = 0.0;
    for (std::size_t c = 0; c < classes; ++c) denom += std::exp(z[c] - zmax);
    const double log_denom = std::log(denom);
    r.loss += -(z[y] - zmax - log_denom);
    for (std::size_t c = 0; c < classes; ++c) {
      const double p = std::exp(z[c] - zmax - log_denom);
      r.probs[n * classes + c] = p;
      r.dlogits[n * classes + c] = (p - (static_cast<std::size_t>(y) == c ? 1.0 : 0.0)) / static_cast<double>(batch);
    }
  }
  r.loss /= static_cast<double>(batch);
  return r;
}

}  // namespace wearaug::cnn

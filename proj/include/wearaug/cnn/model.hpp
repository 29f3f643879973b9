#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "wearaug/cnn/layers.hpp"
#include "wearaug/random.hpp"
#include "wearaug/window.hpp"

namespace wearaug::cnn {

inline constexpr std::size_t kClasses = 2;

/// Layer table plus input geometry.
struct Architecture {
  std::vector<LayerSpec> layers;
  std::size_t input_len = 6960;
  std::size_t input_axes = 3;
  std::size_t classes = kClasses;

  /// Seven strided conv layers with 16-32-64-64-64-64-64 maps (divided by
  /// `width_divisor`, floored at 1). Kernels (time x axis): 4x1, 4x1, 3x1,
  /// 3x3, 2x3, 2x3, 2x3. Strides and paddings reproduce the cascade
  /// 6960x3 -> 2319x3 -> 772x3 -> 385x3 -> 193x3 -> 97x3 -> 49x3 -> 48x1.
  static Architecture standard(std::size_t input_len = 6960, std::size_t width_divisor = 1) {
    if (width_divisor == 0) throw InvalidArgument("architecture: width divisor must be >= 1");
    constexpr std::size_t maps[7] = {16, 32, 64, 64, 64, 64, 64};
    constexpr std::array<std::size_t, 2> kernel[7] = {{4, 1}, {4, 1}, {3, 1}, {3, 3}, {2, 3}, {2, 3}, {2, 3}};
    constexpr std::array<std::size_t, 2> stride[7] = {{3, 1}, {3, 1}, {2, 1}, {2, 1}, {2, 1}, {2, 1}, {1, 1}};
    constexpr std::array<std::size_t, 2> pad[7] = {{0, 0}, {0, 0}, {0, 0}, {1, 1}, {1, 1}, {1, 1}, {0, 0}};
    Architecture a;
    a.input_len = input_len;
    std::size_t in = 1;
    for (int l = 0; l < 7; ++l) {
      const std::size_t out = std::max<std::size_t>(1, maps[l] / width_divisor);
      a.layers.push_back({in, out, kernel[l], stride[l], pad[l]});
      in = out;
    }
    a.shape_trace();  // validates
    return a;
  }

  /// Output (time, axis) extent of every layer; throws if any collapses.
  std::vector<std::pair<std::size_t, std::size_t>> shape_trace() const {
    std::vector<std::pair<std::size_t, std::size_t>> trace;
    std::size_t t = input_len, c = input_axes;
    for (std::size_t l = 0; l < layers.size(); ++l) {
      t = layers[l].out_len(t, 0);
      c = layers[l].out_len(c, 1);
      if (t == 0 || c == 0) {
        throw InvalidArgument("architecture: layer " + std::to_string(l + 1) + " has empty output for input length " +
                              std::to_string(input_len));
      }
      trace.emplace_back(t, c);
    }
    return trace;
  }

  std::size_t feature_maps() const { return layers.empty() ? 1 : layers.back().out_maps; }

  friend bool operator==(const Architecture&, const Architecture&) = default;
};

struct LayerParams {
  Tensor weight;  // [out, in, kt, kc]
  Tensor bias;    // [out]
  BatchNormState bn;
};

/// All learnable tensors plus batch-norm running statistics.
struct ModelParams {
  std::vector<LayerParams> layers;
  Tensor head_weight;  // [classes, maps]
  Tensor head_bias;    // [classes]

  /// Zero-filled parameters shaped for `arch` (gamma = 1, running var = 1).
  static ModelParams shaped_for(const Architecture& arch) {
    ModelParams p;
    for (const auto& s : arch.layers) {
      LayerParams lp;
      lp.weight = Tensor({s.out_maps, s.in_maps, s.kernel[0], s.kernel[1]});
      lp.bias = Tensor({s.out_maps});
      lp.bn = {Tensor({s.out_maps}, 1.0), Tensor({s.out_maps}), Tensor({s.out_maps}), Tensor({s.out_maps}, 1.0)};
      p.layers.push_back(std::move(lp));
    }
    p.head_weight = Tensor({arch.classes, arch.feature_maps()});
    p.head_bias = Tensor({arch.classes});
    return p;
  }

  /// Learnable tensors in declaration order, named "conv<i>.weight",
  /// "conv<i>.bias", "bn<i>.gamma", "bn<i>.beta", "head.weight", "head.bias".
  std::vector<std::pair<std::string, Tensor*>> learnable() {
    std::vector<std::pair<std::string, Tensor*>> out;
    for (std::size_t l = 0; l < layers.size(); ++l) {
      const std::string i = std::to_string(l + 1);
      out.emplace_back("conv" + i + ".weight", &layers[l].weight);
      out.emplace_back("conv" + i + ".bias", &layers[l].bias);
      out.emplace_back("bn" + i + ".gamma", &layers[l].bn.gamma);
      out.emplace_back("bn" + i + ".beta", &layers[l].bn.beta);
    }
    out.emplace_back("head.weight", &head_weight);
    out.emplace_back("head.bias", &head_bias);
    return out;
  }

  /// Every tensor in checkpoint order: per layer weight, bias, gamma, beta,
  /// running mean, running variance; then head weight and bias.
  std::vector<const Tensor*> all_tensors() const {
    std::vector<const Tensor*> out;
    for (const auto& lp : layers) {
      out.insert(out.end(), {&lp.weight, &lp.bias, &lp.bn.gamma, &lp.bn.beta, &lp.bn.running_mean, &lp.bn.running_var});
    }
    out.push_back(&head_weight);
    out.push_back(&head_bias);
    return out;
  }

  std::vector<Tensor*> all_tensors() {
    std::vector<Tensor*> out;
    for (const Tensor* t : std::as_const(*this).all_tensors()) out.push_back(const_cast<Tensor*>(t));
    return out;
  }
};

/// He-uniform weights, zero biases, unit gains, zero shifts.
inline ModelParams init_params(const Architecture& arch, RngStream& rng) {
  ModelParams p = ModelParams::shaped_for(arch);
  for (std::size_t l = 0; l < arch.layers.size(); ++l) {
    const double bound = std::sqrt(6.0 / static_cast<double>(arch.layers[l].fan_in()));
    for (double& v : p.layers[l].weight.data()) v = rng.uniform(-bound, bound);
  }
  const double bound = std::sqrt(6.0 / static_cast<double>(arch.feature_maps()));
  for (double& v : p.head_weight.data()) v = rng.uniform(-bound, bound);
  return p;
}

struct ForwardCache {
  struct Layer {
    ConvCache conv;
    BatchNormCache bn;
    Tensor normalized;  // batch-norm output, i.e. the ReLU input
  };
  std::vector<Layer> layers;
  Shape last_shape;
  Tensor pooled;
};

/// Stack windows into a [B, 1, T, 3] batch.
inline Tensor make_batch(const std::vector<const Window*>& windows) {
  if (windows.empty()) throw InvalidArgument("make_batch: empty batch");
  const std::size_t t = windows.front()->length();
  Tensor x({windows.size(), 1, t, kAxes});
  auto d = x.data();
  for (std::size_t n = 0; n < windows.size(); ++n) {
    if (windows[n]->length() != t) throw InvalidArgument("make_batch: windows differ in length");
    const auto s = windows[n]->samples().data();
    std::copy(s.begin(), s.end(), d.begin() + static_cast<std::ptrdiff_t>(n * t * kAxes));
  }
  return x;
}

/// The strided CNN: (conv -> batch norm -> ReLU) x L -> GAP -> affine head.
class Cnn {
 public:
  Cnn(Architecture arch, ModelParams params, BatchNormSettings bn = {})
      : arch_(std::move(arch)), params_(std::move(params)), bn_(bn) {
    arch_.shape_trace();
    const ModelParams ref = ModelParams::shaped_for(arch_);
    const auto want = ref.all_tensors();
    const auto have = std::as_const(params_).all_tensors();
    if (want.size() != have.size()) throw InvalidArgument("cnn: parameter count does not match architecture");
    for (std::size_t i = 0; i < want.size(); ++i) {
      if (want[i]->shape() != have[i]->shape()) {
        throw InvalidArgument("cnn: parameter " + std::to_string(i) + " has shape " + shape_string(have[i]->shape()) +
                              ", expected " + shape_string(want[i]->shape()));
      }
    }
  }

  static Cnn initialize(const Architecture& arch, RngStream& rng, BatchNormSettings bn = {}) {
    return Cnn(arch, init_params(arch, rng), bn);
  }

  const Architecture& architecture() const noexcept { return arch_; }
  const ModelParams& params() const noexcept { return params_; }
  ModelParams& params() noexcept { return params_; }
  const BatchNormSettings& batchnorm_settings() const noexcept { return bn_; }

  /// Negative-control hook: skews the time stride used when scattering
  /// input gradients in every conv backward. Zero in normal operation.
  void set_backward_stride_skew(int skew) noexcept { stride_skew_ = skew; }

  /// Logits [B, classes]. Train mode uses batch statistics and updates the
  /// running statistics; pass a cache to enable backward().
  Tensor forward(const Tensor& x, Mode mode, ForwardCache* cache = nullptr) {
    check_input(x);
    if (mode == Mode::Eval) return predict_logits(x);
    if (cache) cache->layers.assign(arch_.layers.size(), {});
    Tensor h = x;
    for (std::size_t l = 0; l < arch_.layers.size(); ++l) {
      auto& lp = params_.layers[l];
      ForwardCache::Layer* lc = cache ? &cache->layers[l] : nullptr;
      h = conv_forward(h, arch_.layers[l], lp.weight, lp.bias, lc ? &lc->conv : nullptr);
      h = batchnorm_forward(h, lp.bn, Mode::Train, bn_, lc ? &lc->bn : nullptr);
      if (lc) lc->normalized = h;
      h = relu(h);
    }
    Tensor pooled = gap_forward(h);
    if (cache) {
      cache->last_shape = h.shape();
      cache->pooled = pooled;
    }
    return head_forward(pooled, params_.head_weight, params_.head_bias);
  }

  /// Eval-mode logits; every sample is processed independently.
  Tensor predict_logits(const Tensor& x) const {
    check_input(x);
    Tensor h = x;
    for (std::size_t l = 0; l < arch_.layers.size(); ++l) {
      const auto& lp = params_.layers[l];
      h = relu(batchnorm_eval(conv_forward(h, arch_.layers[l], lp.weight, lp.bias), lp.bn, bn_));
    }
    return head_forward(gap_forward(h), params_.head_weight, params_.head_bias);
  }

  /// Gradients of every learnable tensor (ModelParams layout; running
  /// statistics fields are left zero).
  ModelParams backward(const ForwardCache& cache, const Tensor& dlogits) const {
    if (cache.layers.size() != arch_.layers.size()) throw InvalidArgument("cnn: backward needs a train-mode cache");
    ModelParams g = ModelParams::shaped_for(arch_);
    for (auto& lp : g.layers) {
      lp.bn.gamma.fill(0.0);
      lp.bn.running_var.fill(0.0);
    }
    HeadGrads hg = head_backward(dlogits, cache.pooled, params_.head_weight);
    g.head_weight = std::move(hg.dw);
    g.head_bias = std::move(hg.db);
    Tensor d = gap_backward(hg.dg, cache.last_shape);
    for (std::size_t l = arch_.layers.size(); l-- > 0;) {
      const auto& lc = cache.layers[l];
      d = relu_backward(d, lc.normalized);
      BatchNormGrads bg = batchnorm_backward(d, lc.bn, params_.layers[l].bn.gamma);
      g.layers[l].bn.gamma = std::move(bg.dgamma);
      g.layers[l].bn.beta = std::move(bg.dbeta);
      ConvGrads cg = conv_backward(bg.dx, lc.conv, arch_.layers[l], params_.layers[l].weight, stride_skew_);
      g.layers[l].weight = std::move(cg.dw);
      g.layers[l].bias = std::move(cg.db);
      d = std::move(cg.dx);
    }
    return g;
  }

 private:
  void check_input(const Tensor& x) const {
    if (x.rank() != 4 || x.dim(1) != 1 || x.dim(2) != arch_.input_len || x.dim(3) != arch_.input_axes) {
      throw InvalidArgument("cnn: input " + shape_string(x.shape()) + ", expected [B,1," +
                            std::to_string(arch_.input_len) + "," + std::to_string(arch_.input_axes) + "]");
    }
  }

  Architecture arch_;
  ModelParams params_;
  BatchNormSettings bn_;
  int stride_skew_ = 0;
};

}  // namespace wearaug::cnn

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "wearaug/cnn/model.hpp"

namespace wearaug::cnn {

struct GradCheckOptions {
  double h = 1e-5;
  std::size_t coords_per_tensor = 200;  // all coordinates when the tensor is smaller
  // Gradients smaller than this are compared absolutely: the relative error
  // is |a - n| / max(|a|, |n|, abs_floor).
  double abs_floor = 1e-6;
  std::uint64_t seed = 0;
};

struct TensorCheck {
  std::string name;
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  std::size_t skipped = 0;  // coordinates whose +-h probe crossed a ReLU kink
};

/// Loss value plus a fingerprint of the piecewise-linear region it was
/// evaluated in (0 for smooth functions).
struct LossProbe {
  double loss = 0.0;
  std::uint64_t region = 0;
};

inline double relative_error(double analytic, double numeric, double floor) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

/// Central-difference check of one tensor against its analytic gradient.
/// Coordinates are sampled without replacement; probes that change the
/// region fingerprint are skipped and replaced by further samples.
inline TensorCheck check_tensor(const std::string& name, Tensor& param, const Tensor& analytic,
                                const std::function<LossProbe()>& loss, const GradCheckOptions& opt, RngStream& rng) {
  if (param.shape() != analytic.shape()) throw InvalidArgument("gradcheck: gradient shape mismatch for " + name);
  TensorCheck r{name};
  std::vector<std::size_t> order(param.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  shuffle(order, rng);
  const std::uint64_t base_region = loss().region;
  for (std::size_t idx : order) {
    if (r.checked >= opt.coords_per_tensor) break;
    const double saved = param[idx];
    param[idx] = saved + opt.h;
    const LossProbe plus = loss();
    param[idx] = saved - opt.h;
    const LossProbe minus = loss();
    param[idx] = saved;
    if (plus.region != base_region || minus.region != base_region) {
      ++r.skipped;
      continue;
    }
    const double numeric = (plus.loss - minus.loss) / (2.0 * opt.h);
    r.max_rel_error = std::max(r.max_rel_error, relative_error(analytic[idx], numeric, opt.abs_floor));
    ++r.checked;
  }
  return r;
}

/// FNV-1a over the sign pattern of every ReLU input in a train-mode cache.
inline std::uint64_t relu_region(const ForwardCache& cache) {
  std::uint64_t h = 1469598103934665603ull;
  for (const auto& l : cache.layers) {
    for (double v : l.normalized.data()) {
      h ^= v > 0.0 ? 1u : 0u;
      h *= 1099511628211ull;
    }
  }
  return h;
}

struct GradCheckReport {
  std::vector<TensorCheck> tensors;

  double max_error() const {
    double m = 0.0;
    for (const auto& t : tensors) m = std::max(m, t.max_rel_error);
    return m;
  }

  /// Max error grouped by layer prefix ("conv1", "bn1", ..., "head") in
  /// first-appearance order.
  std::vector<std::pair<std::string, double>> by_layer() const {
    std::vector<std::pair<std::string, double>> out;
    for (const auto& t : tensors) {
      const std::string layer = t.name.substr(0, t.name.find('.'));
      auto it = std::find_if(out.begin(), out.end(), [&](const auto& e) { return e.first == layer; });
      if (it == out.end()) {
        out.emplace_back(layer, t.max_rel_error);
      } else {
        it->second = std::max(it->second, t.max_rel_error);
      }
    }
    return out;
  }
};

/// Checks every learnable tensor of `model` on the train-mode mean
/// cross-entropy of (x, labels). The model itself is left unchanged.
inline GradCheckReport grad_check(const Cnn& model, const Tensor& x, const std::vector<int>& labels,
                                  const GradCheckOptions& opt = {}) {
  Cnn work = model;
  ForwardCache cache;
  const ModelParams snapshot = work.params();
  const Tensor logits = work.forward(x, Mode::Train, &cache);
  const SoftmaxXent base = softmax_xent(logits, labels);
  ModelParams grads = work.backward(cache, base.dlogits);

  auto probe = [&]() {
    // Running statistics do not affect the train-mode loss; restore them so
    // repeated probes see identical state.
    ForwardCache c;
    const Tensor z = work.forward(x, Mode::Train, &c);
    for (std::size_t l = 0; l < snapshot.layers.size(); ++l) {
      work.params().layers[l].bn.running_mean = snapshot.layers[l].bn.running_mean;
      work.params().layers[l].bn.running_var = snapshot.layers[l].bn.running_var;
    }
    return LossProbe{softmax_xent(z, labels).loss, relu_region(c)};
  };

  GradCheckReport report;
  auto params = work.params().learnable();
  auto gradients = grads.learnable();
  RngStream rng(opt.seed, 0x6772616463686bull);
  for (std::size_t i = 0; i < params.size(); ++i) {
    report.tensors.push_back(check_tensor(params[i].first, *params[i].second, *gradients[i].second, probe, opt, rng));
  }
  return report;
}

}  // namespace wearaug::cnn

#pragma once

#include <cmath>
#include <string>

#include "wearaug/tensor.hpp"

namespace wearaug {

inline constexpr std::size_t kAxes = 3;

/// One tri-axial acceleration segment: samples [T, 3] in g, plus its rate.
class Window {
 public:
  Window(Tensor samples, double rate_hz) : samples_(std::move(samples)), rate_hz_(rate_hz) {
    if (samples_.rank() != 2 || samples_.dim(1) != kAxes) {
      throw InvalidArgument("window: expected [T,3] samples, got " + shape_string(samples_.shape()));
    }
    if (samples_.dim(0) < 2) throw InvalidArgument("window: need at least 2 samples");
    if (!(rate_hz_ > 0.0) || !std::isfinite(rate_hz_)) {
      throw InvalidArgument("window: rate must be positive");
    }
    for (double v : samples_.data()) {
      if (!std::isfinite(v)) throw InvalidArgument("window: non-finite sample value");
    }
  }

  std::size_t length() const noexcept { return samples_.dim(0); }
  double rate_hz() const noexcept { return rate_hz_; }
  const Tensor& samples() const noexcept { return samples_; }

  double operator()(std::size_t t, std::size_t c) const noexcept {
    return samples_[t * kAxes + c];
  }

  friend bool operator==(const Window& a, const Window& b) {
    return a.rate_hz_ == b.rate_hz_ && a.samples_ == b.samples_;
  }

 private:
  Tensor samples_;
  double rate_hz_;
};

}  // namespace wearaug

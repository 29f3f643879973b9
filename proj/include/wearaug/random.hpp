#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>

#include "wearaug/error.hpp"

namespace wearaug {

namespace detail {

// Philox4x32-10 block function (Salmon et al., Random123).
inline std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                               std::array<std::uint32_t, 2> key) {
  constexpr std::uint32_t kMul0 = 0xD2511F53u;
  constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = std::uint64_t{kMul0} * ctr[0];
    const std::uint64_t p1 = std::uint64_t{kMul1} * ctr[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const auto lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const auto lo1 = static_cast<std::uint32_t>(p1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kWeyl0;
    key[1] += kWeyl1;
  }
  return ctr;
}

}  // namespace detail

/// Serializable position of an RngStream.
struct StreamState {
  std::uint64_t master_seed = 0;
  std::uint64_t stream_index = 0;
  std::uint64_t counter = 0;

  friend bool operator==(const StreamState&, const StreamState&) = default;
};

/// Counter-based random stream.
///
/// Draw `n` of stream (seed, index) is Philox4x32-10 with key = seed and
/// counter = (n, index), so any stream can be created or resumed in any order
/// without touching the others. Each 64-bit draw consumes one block.
class RngStream {
 public:
  RngStream(std::uint64_t master_seed, std::uint64_t stream_index)
      : state_{master_seed, stream_index, 0} {}

  explicit RngStream(const StreamState& state) : state_(state) {}

  const StreamState& state() const noexcept { return state_; }

  std::uint64_t next_u64() {
    const std::uint64_t n = state_.counter++;
    const std::uint64_t s = state_.stream_index;
    const auto out = detail::philox4x32(
        {static_cast<std::uint32_t>(n), static_cast<std::uint32_t>(n >> 32),
         static_cast<std::uint32_t>(s), static_cast<std::uint32_t>(s >> 32)},
        {static_cast<std::uint32_t>(state_.master_seed),
         static_cast<std::uint32_t>(state_.master_seed >> 32)});
    return (std::uint64_t{out[0]} << 32) | out[1];
  }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n). Rejection sampling, no modulo bias.
  std::uint64_t below(std::uint64_t n) {
    if (n == 0) throw InvalidArgument("rng: below(0)");
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x = 0;
    do {
      x = next_u64();
    } while (x >= limit);
    return x % n;
  }

  /// Standard normal via Box-Muller (cosine branch only; each call uses
  /// exactly two uniforms, so stream positions never depend on parity).
  double standard_normal() {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  StreamState state_;
};

/// SplitMix64 finalizer over (seed, tag): derives independent master seeds
/// for sub-experiments (folds, purposes) from one user seed.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t tag) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (tag + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

inline RngStream derive_stream(std::uint64_t master_seed, std::uint64_t stream_index) {
  return RngStream(master_seed, stream_index);
}

/// One draw from Normal(mean, std^2). std == 0 yields `mean` exactly; the
/// stream advances by the same amount regardless of std.
inline double gauss(RngStream& rng, double mean, double std) {
  if (!(std >= 0.0)) throw InvalidArgument("gauss: std must be >= 0, got " + std::to_string(std));
  const double z = rng.standard_normal();
  if (std == 0.0) return mean;
  return mean + std * z;
}

/// Fisher-Yates shuffle of any random-access range.
template <typename Range>
void shuffle(Range& range, RngStream& rng) {
  const auto n = static_cast<std::uint64_t>(std::size(range));
  for (std::uint64_t i = n; i > 1; --i) {
    const std::uint64_t j = rng.below(i);
    using std::swap;
    swap(range[i - 1], range[j]);
  }
}

}  // namespace wearaug

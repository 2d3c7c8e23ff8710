#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <span>
#include <vector>

namespace ckm {

namespace detail {

inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

}  // namespace detail

/// Counter-based random stream keyed by (seed, path). The i-th output is a
/// pure function of the key and i, so a stream for any tree node can be
/// rebuilt from its path alone regardless of which thread visits it.
class RngStream {
 public:
  using result_type = std::uint64_t;

  explicit RngStream(std::uint64_t seed) : key_(detail::mix64(seed ^ 0x5bd1e9955bd1e995ULL)) {}

  RngStream(std::uint64_t seed, std::span<const std::uint64_t> path) : RngStream(seed) {
    for (auto p : path) {
      key_ = derive(key_, p);
    }
  }

  RngStream(std::uint64_t seed, std::initializer_list<std::uint64_t> path)
      : RngStream(seed, std::span<const std::uint64_t>(path.begin(), path.size())) {}

  RngStream child(std::uint64_t index) const {
    RngStream s(*this);
    s.key_ = derive(key_, index);
    s.counter_ = 0;
    return s;
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    ++counter_;
    return detail::mix64(key_ + counter_ * detail::kGolden);
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, bound), unbiased (Lemire's multiply-shift).
  std::uint64_t below(std::uint64_t bound) {
    unsigned __int128 m = static_cast<unsigned __int128>((*this)()) * bound;
    auto low = static_cast<std::uint64_t>(m);
    if (low < bound) {
      const std::uint64_t threshold = (0 - bound) % bound;
      while (low < threshold) {
        m = static_cast<unsigned __int128>((*this)()) * bound;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  /// Standard normal via Box-Muller (one value per call).
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) {
      u1 = uniform();
    }
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

  std::uint64_t key() const { return key_; }

 private:
  static std::uint64_t derive(std::uint64_t key, std::uint64_t index) {
    return detail::mix64(key ^ detail::mix64(index + detail::kGolden));
  }

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace ckm

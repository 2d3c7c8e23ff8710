#pragma once

#include <algorithm>
#include <cstddef>
#include <iterator>
#include <span>
#include <vector>

#include "ckm/geometry.hpp"
#include "ckm/rng.hpp"

namespace ckm {

/// D^2-sampling weighs a point by its squared distance to the nearest
/// center; D-sampling by the plain distance.
enum class SamplingMode { squared, linear };

/// Per-point minimum distance (squared or linear) to the current center set.
/// With no centers, or when every point sits on a center, sampling falls
/// back to uniform.
struct SamplerState {
  std::vector<double> min_dists;
  double total = 0.0;
  SamplingMode mode = SamplingMode::squared;
  bool has_centers = false;

  bool uniform_fallback() const { return !has_centers || !(total > 0.0); }

  /// Exact probability of drawing each index.
  std::vector<double> probabilities() const {
    const std::size_t n = min_dists.size();
    std::vector<double> p(n, 1.0 / static_cast<double>(n));
    if (!uniform_fallback()) {
      for (std::size_t i = 0; i < n; ++i) {
        p[i] = min_dists[i] / total;
      }
    }
    return p;
  }
};

inline SamplerState init_state(const Dataset& data, SamplingMode mode) {
  SamplerState s;
  s.min_dists.assign(data.size(), 0.0);
  s.mode = mode;
  return s;
}

/// Folds one more center into the state in O(nd).
inline void add_center_inplace(SamplerState& state, std::span<const double> center, const Dataset& data) {
  double total = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    double d = squared_distance(data.row(i), center);
    if (state.mode == SamplingMode::linear) {
      d = std::sqrt(d);
    }
    double& slot = state.min_dists[i];
    if (!state.has_centers || d < slot) {
      slot = d;
    }
    total += slot;
  }
  state.total = total;
  state.has_centers = true;
}

inline SamplerState add_center(SamplerState state, std::span<const double> center, const Dataset& data) {
  add_center_inplace(state, center, data);
  return state;
}

/// `count` independent draws with replacement, Pr[i] = min_dists[i] / total.
inline std::vector<std::size_t> sample(const SamplerState& state, std::size_t count, RngStream& rng) {
  const std::size_t n = state.min_dists.size();
  std::vector<std::size_t> out(count);
  if (state.uniform_fallback()) {
    for (auto& o : out) {
      o = static_cast<std::size_t>(rng.below(n));
    }
    return out;
  }
  std::vector<double> prefix(n);
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    acc += state.min_dists[i];
    prefix[i] = acc;
  }
  for (auto& o : out) {
    const double u = rng.uniform() * acc;
    auto it = std::upper_bound(prefix.begin(), prefix.end(), u);
    if (it == prefix.end()) {
      // u rounded up to acc; take the last index with positive weight.
      it = std::prev(it);
      while (it != prefix.begin() && *std::prev(it) == *it) {
        --it;
      }
    }
    o = static_cast<std::size_t>(it - prefix.begin());
  }
  return out;
}

}  // namespace ckm

#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ckm/candidate_tree.hpp"
#include "ckm/geometry.hpp"
#include "ckm/rng.hpp"

namespace ckm {

enum class ListMode { exact, practical };

/// Ceiling that ignores floating-point noise just above an integer, so
/// 409343999.99999994 and 409344000.00000006 both give 409344000.
inline std::uint64_t stable_ceil(double x) {
  const double r = std::round(x);
  if (std::abs(x - r) <= 1e-9 * std::max(1.0, std::abs(x))) {
    return static_cast<std::uint64_t>(r);
  }
  return static_cast<std::uint64_t>(std::ceil(x));
}

/// Parameters of List-k-means. Exact mode pins N = ceil(136448 k / eps^3),
/// M = ceil(100 / eps), repeats = 2^k and enumerates every subset; practical
/// mode takes any positive values and an optional per-node subset budget.
struct ListParams {
  std::size_t k = 1;
  double epsilon = 1.0;
  std::uint64_t N = 1;
  std::uint64_t M = 1;
  std::uint64_t repeats = 1;
  std::optional<std::uint64_t> subset_budget;
  ListMode mode = ListMode::practical;

  TreeShape shape(SamplingMode sampling = SamplingMode::squared) const {
    TreeShape s;
    s.k = k;
    s.sample_size = N;
    s.subset_size = M;
    s.repeats = repeats;
    s.subset_budget = subset_budget;
    s.sampling = sampling;
    return s;
  }
};

inline void check_k_epsilon(std::size_t k, double epsilon) {
  if (k < 1) {
    throw InvalidArgument("k must be at least 1");
  }
  if (!(epsilon > 0.0) || epsilon > 1.0) {
    throw InvalidArgument("epsilon must lie in (0, 1]");
  }
}

inline ListParams paper_params(std::size_t k, double epsilon) {
  check_k_epsilon(k, epsilon);
  if (k > 62) {
    throw InvalidArgument("k too large for 2^k repeats");
  }
  ListParams p;
  p.k = k;
  p.epsilon = epsilon;
  p.N = stable_ceil(136448.0 * static_cast<double>(k) / (epsilon * epsilon * epsilon));
  p.M = stable_ceil(100.0 / epsilon);
  p.repeats = std::uint64_t{1} << k;
  p.subset_budget = std::nullopt;
  p.mode = ListMode::exact;
  return p;
}

inline ListParams practical_params(std::size_t k, double epsilon, std::uint64_t n_samples, std::uint64_t subset_size,
                                   std::uint64_t repeats, std::optional<std::uint64_t> budget) {
  check_k_epsilon(k, epsilon);
  ListParams p;
  p.k = k;
  p.epsilon = epsilon;
  p.N = n_samples;
  p.M = subset_size;
  p.repeats = repeats;
  p.subset_budget = budget;
  p.mode = ListMode::practical;
  return p;
}

inline void validate(const ListParams& p) {
  check_k_epsilon(p.k, p.epsilon);
  if (p.mode == ListMode::exact) {
    const ListParams want = paper_params(p.k, p.epsilon);
    if (p.N != want.N || p.M != want.M || p.repeats != want.repeats || p.subset_budget) {
      throw InvalidArgument("exact mode requires the closed-form N, M, repeats and no subset budget");
    }
  }
  validate_shape(p.shape());
}

/// The output list L plus provenance.
struct CandidateList {
  std::vector<CenterSet> entries;
  ListParams params;
  std::uint64_t seed = 0;
  TreeStats stats;
  std::string problem = "k-means";

  std::size_t size() const { return entries.size(); }
};

namespace detail {

// Gathers leaves per (repeat, task) so the final order is canonical no matter
// how tasks were scheduled.
class LeafCollector {
 public:
  bool operator()(const LeafId& id, const CenterSet& c) {
    std::lock_guard lock(mutex_);
    buckets_[{id.repeat, id.task}].push_back(c);
    return true;
  }

  std::vector<CenterSet> take() {
    std::vector<CenterSet> out;
    for (auto& [key, bucket] : buckets_) {
      for (auto& c : bucket) {
        out.push_back(std::move(c));
      }
    }
    buckets_.clear();
    return out;
  }

 private:
  std::mutex mutex_;
  std::map<std::pair<std::uint64_t, std::uint64_t>, std::vector<CenterSet>> buckets_;
};

}  // namespace detail

/// List-k-means: the union over `repeats` independent root calls of the
/// depth-k D^2-sampling tree. Deterministic in (params, seed) for any
/// thread count.
inline CandidateList list_k_means(const Dataset& data, const ListParams& params, std::uint64_t seed,
                                  unsigned threads = 1) {
  validate(params);
  CandidateList list;
  list.params = params;
  list.seed = seed;
  detail::LeafCollector collector;
  list.stats = walk_candidate_tree(data, params.shape(SamplingMode::squared), CentroidCandidate{}, seed, threads,
                                   collector);
  list.entries = collector.take();
  return list;
}

/// One Sample-centers call: explores the subtree below `centers` with node
/// path `path` and hands each completed center set to `sink`.
template <class Sink>
TreeStats sample_centers(const Dataset& data, const ListParams& params, const CenterSet& centers,
                         std::vector<std::uint64_t> path, std::uint64_t seed, Sink&& sink) {
  validate(params);
  return sample_subtree(data, params.shape(SamplingMode::squared), CentroidCandidate{}, seed, centers,
                        std::move(path), std::forward<Sink>(sink));
}

struct InabaReport {
  std::size_t trials = 0;
  std::size_t successes = 0;
  double threshold_factor = 0.0;  // 1 + 1/(delta M)
  double rate() const { return trials == 0 ? 0.0 : static_cast<double>(successes) / static_cast<double>(trials); }
};

/// Empirical check of subset-mean concentration: how often the mean of M uniform
/// draws (with replacement) serves X within (1 + 1/(delta M)) * Delta(X).
inline InabaReport inaba_check(const Dataset& data, std::size_t m, double delta_param, std::size_t trials,
                               std::uint64_t seed) {
  if (m < 1) {
    throw InvalidArgument("M must be at least 1");
  }
  if (!(delta_param > 0.0 && delta_param < 1.0)) {
    throw InvalidArgument("delta must lie in (0, 1)");
  }
  InabaReport rep;
  rep.trials = trials;
  rep.threshold_factor = 1.0 + 1.0 / (delta_param * static_cast<double>(m));
  const std::vector<std::size_t> all = [&] {
    std::vector<std::size_t> v(data.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = i;
    return v;
  }();
  const double base = delta(IndexedPoints(data, all));
  const double bound = rep.threshold_factor * base;
  RngStream rng(seed);
  std::vector<std::size_t> picks(m);
  for (std::size_t t = 0; t < trials; ++t) {
    for (auto& p : picks) {
      p = static_cast<std::size_t>(rng.below(data.size()));
    }
    const Point mean = centroid(IndexedPoints(data, picks));
    const double served = phi(std::span<const double>(mean), data);
    if (served <= bound + kAbsTol + kRelTol * bound) {
      ++rep.successes;
    }
  }
  return rep;
}

}  // namespace ckm

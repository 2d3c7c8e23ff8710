#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "ckm/candidate_tree.hpp"
#include "ckm/error.hpp"
#include "ckm/geometry.hpp"
#include "ckm/list_kmeans.hpp"

namespace ckm {

/// Sum over points of the Euclidean distance to the nearest center.
template <PointRange R>
double phi_median(const CenterSet& centers, const R& points) {
  return phi(centers, points, Objective::linear);
}

struct MedianResult {
  Point median;
  double value = 0.0;
  std::size_t iterations = 0;
  bool approximate = true;  // the 1-median has no closed form
};

/// Geometric median by Weiszfeld iteration from the centroid. When an
/// iterate lands on a data point, the subgradient test decides optimality
/// and otherwise the Vardi-Zhang step moves it off. Stops once a step is
/// below `rel_tol` times the spread of the points.
template <PointRange R>
MedianResult weiszfeld(const R& points, double rel_tol = 1e-9, std::size_t max_iterations = 10000) {
  if (points.size() == 0) {
    throw InvalidArgument("median of an empty set");
  }
  const std::size_t d = points.dim();
  MedianResult res;
  res.median = centroid(points);
  double spread = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    spread = std::max(spread, distance(points.row(i), res.median));
  }
  auto value_at = [&](std::span<const double> y) {
    double s = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      s += distance(points.row(i), y);
    }
    return s;
  };
  if (spread == 0.0) {
    res.value = 0.0;
    return res;
  }
  const double coincide = 1e-14 * spread;
  Point y = res.median;
  Point weighted(d), pull(d), next(d);
  for (std::size_t it = 0; it < max_iterations; ++it) {
    res.iterations = it + 1;
    std::fill(weighted.begin(), weighted.end(), 0.0);
    std::fill(pull.begin(), pull.end(), 0.0);
    double inv_sum = 0.0;
    double on_point = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      const auto x = points.row(i);
      const double di = distance(x, y);
      if (di <= coincide) {
        on_point += 1.0;
        continue;
      }
      inv_sum += 1.0 / di;
      for (std::size_t j = 0; j < d; ++j) {
        weighted[j] += x[j] / di;
        pull[j] += (x[j] - y[j]) / di;
      }
    }
    if (inv_sum == 0.0) {
      break;  // every point coincides with y
    }
    if (on_point > 0.0) {
      double pull_norm = 0.0;
      for (double v : pull) pull_norm += v * v;
      pull_norm = std::sqrt(pull_norm);
      if (pull_norm <= on_point) {
        break;  // zero is in the subdifferential: y is optimal
      }
      const double keep = std::min(1.0, on_point / pull_norm);
      for (std::size_t j = 0; j < d; ++j) {
        next[j] = (1.0 - on_point / pull_norm) * weighted[j] / inv_sum + keep * y[j];
      }
    } else {
      for (std::size_t j = 0; j < d; ++j) {
        next[j] = weighted[j] / inv_sum;
      }
    }
    const double step = distance(next, y);
    y.swap(next);
    if (step <= rel_tol * spread) {
      break;
    }
  }
  res.median = y;
  res.value = value_at(y);
  // A data point is never worse than a poorly converged iterate.
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double v = value_at(points.row(i));
    if (v < res.value) {
      res.value = v;
      res.median.assign(points.row(i).begin(), points.row(i).end());
    }
  }
  return res;
}

/// Optimal 1-median cost, approximated by Weiszfeld.
template <PointRange R>
MedianResult delta_median(const R& points) {
  return weiszfeld(points);
}

namespace detail {

inline bool nearly_same_point(std::span<const double> a, std::span<const double> b) {
  double norm = 0.0;
  for (double v : a) norm += v * v;
  return distance(a, b) <= 1e-12 * (1.0 + std::sqrt(norm));
}

inline void push_distinct(std::vector<Point>& out, std::span<const double> p) {
  for (const auto& q : out) {
    if (nearly_same_point(q, p)) {
      return;
    }
  }
  out.emplace_back(p.begin(), p.end());
}

}  // namespace detail

/// Candidate 1-median centers for a sample T: its distinct points, its
/// centroid and its Weiszfeld median. The best distinct point is within
/// a factor 2 of the optimal 1-median cost of T.
template <PointRange R>
std::vector<Point> default_core(const R& t) {
  if (t.size() == 0) {
    throw InvalidArgument("core of an empty sample");
  }
  std::vector<Point> out;
  for (std::size_t i = 0; i < t.size(); ++i) {
    detail::push_distinct(out, t.row(i));
  }
  detail::push_distinct(out, centroid(t));
  detail::push_distinct(out, weiszfeld(t).median);
  return out;
}

/// Pluggable replacement for the core(T) construction. `budget` caps the
/// candidates taken per subset (first ones win).
struct CoreGenerator {
  std::string id = "default";
  std::optional<std::size_t> budget;
  std::function<std::vector<Point>(const PointBlock&)> build;

  void operator()(const PointBlock& t, std::vector<double>& out) const {
    const auto cands = build(t);
    if (cands.empty()) {
      throw Error("core generator '" + id + "' returned no candidates");
    }
    const std::size_t take = budget ? std::min(*budget, cands.size()) : cands.size();
    for (std::size_t i = 0; i < take; ++i) {
      out.insert(out.end(), cands[i].begin(), cands[i].end());
    }
  }
};

/// Known generators: "default" (distinct points + centroid + median),
/// "centroid" (the mean only), "subset-points" (distinct points of T).
inline CoreGenerator make_core_generator(const std::string& id, std::optional<std::size_t> budget = std::nullopt) {
  if (budget && *budget == 0) {
    throw InvalidArgument("core generator budget must be positive");
  }
  CoreGenerator g;
  g.id = id;
  g.budget = budget;
  if (id == "default") {
    g.build = [](const PointBlock& t) { return default_core(t); };
  } else if (id == "centroid") {
    g.build = [](const PointBlock& t) { return std::vector<Point>{centroid(t)}; };
  } else if (id == "subset-points") {
    g.build = [](const PointBlock& t) {
      std::vector<Point> out;
      for (std::size_t i = 0; i < t.size(); ++i) {
        detail::push_distinct(out, t.row(i));
      }
      return out;
    };
  } else {
    throw InvalidArgument("unknown core generator '" + id + "'");
  }
  return g;
}

/// List-k-median parameters: the shared tree parameters plus the constants
/// of N = ceil(alpha k / eps^6), M = ceil(beta / eps^4) and the generator.
struct MedianParams {
  ListParams list;
  double alpha = 1.0;
  double beta = 1.0;
  std::string generator = "default";
  std::optional<std::size_t> generator_budget;
};

inline MedianParams exact_median_params(std::size_t k, double epsilon, double alpha = 1.0, double beta = 1.0) {
  check_k_epsilon(k, epsilon);
  if (!(alpha > 0.0) || !(beta > 0.0)) {
    throw InvalidArgument("alpha and beta must be positive");
  }
  if (k > 62) {
    throw InvalidArgument("k too large for 2^k repeats");
  }
  MedianParams p;
  p.alpha = alpha;
  p.beta = beta;
  p.list.k = k;
  p.list.epsilon = epsilon;
  const double e2 = epsilon * epsilon;
  p.list.N = stable_ceil(alpha * static_cast<double>(k) / (e2 * e2 * e2));
  p.list.M = stable_ceil(beta / (e2 * e2));
  p.list.repeats = std::uint64_t{1} << k;
  p.list.mode = ListMode::exact;
  return p;
}

inline void validate(const MedianParams& p) {
  check_k_epsilon(p.list.k, p.list.epsilon);
  if (p.list.mode == ListMode::exact) {
    const MedianParams want = exact_median_params(p.list.k, p.list.epsilon, p.alpha, p.beta);
    if (p.list.N != want.list.N || p.list.M != want.list.M || p.list.repeats != want.list.repeats ||
        p.list.subset_budget) {
      throw InvalidArgument("exact mode requires the closed-form N, M, repeats and no subset budget");
    }
  }
  validate_shape(p.list.shape(SamplingMode::linear));
}

/// List-k-median: the k-means tree with D-sampling, branching on every
/// candidate the core generator proposes for each subset.
inline CandidateList list_k_median(const Dataset& data, const MedianParams& params, std::uint64_t seed,
                                   unsigned threads = 1) {
  validate(params);
  const CoreGenerator gen = make_core_generator(params.generator, params.generator_budget);
  CandidateList list;
  list.params = params.list;
  list.seed = seed;
  list.problem = "k-median";
  detail::LeafCollector collector;
  list.stats = walk_candidate_tree(data, params.list.shape(SamplingMode::linear), gen, seed, threads, collector);
  list.entries = collector.take();
  return list;
}

}  // namespace ckm

#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "ckm/error.hpp"
#include "ckm/geometry.hpp"
#include "ckm/list_kmeans.hpp"
#include "ckm/min_cost_flow.hpp"
#include "ckm/parallel.hpp"

namespace ckm {

/// The family of admissible clusterings, expressed as per-cluster size
/// bounds.
struct ConstraintFamily {
  enum class Kind { unconstrained, r_gather, r_capacity, exact_sizes };

  Kind kind = Kind::unconstrained;
  std::size_t r = 0;    // r-gather: every cluster has at least r points
  std::size_t cap = 0;  // r-capacity: every cluster has at most cap points
  std::vector<std::size_t> sizes;

  static ConstraintFamily unconstrained() { return {}; }
  static ConstraintFamily r_gather(std::size_t r) {
    ConstraintFamily f;
    f.kind = Kind::r_gather;
    f.r = r;
    return f;
  }
  static ConstraintFamily r_capacity(std::size_t cap) {
    ConstraintFamily f;
    f.kind = Kind::r_capacity;
    f.cap = cap;
    return f;
  }
  static ConstraintFamily exact(std::vector<std::size_t> sizes) {
    ConstraintFamily f;
    f.kind = Kind::exact_sizes;
    f.sizes = std::move(sizes);
    return f;
  }

  std::string name() const {
    switch (kind) {
      case Kind::unconstrained:
        return "unconstrained";
      case Kind::r_gather:
        return "r-gather";
      case Kind::r_capacity:
        return "r-capacity";
      case Kind::exact_sizes:
        return "exact-sizes";
    }
    return "unknown";
  }

  /// Throws InvalidArgument for malformed parameters and Infeasible when no
  /// clustering of n points into k clusters satisfies the family.
  void check(std::size_t n, std::size_t k) const {
    if (k == 0) {
      throw InvalidArgument("k must be at least 1");
    }
    switch (kind) {
      case Kind::unconstrained:
        return;
      case Kind::r_gather:
        if (r < 1) {
          throw InvalidArgument("r-gather needs r >= 1");
        }
        if (k * r > n) {
          throw Infeasible("r-gather infeasible: k*r = " + std::to_string(k * r) + " exceeds n = " +
                           std::to_string(n));
        }
        return;
      case Kind::r_capacity:
        if (cap < 1) {
          throw InvalidArgument("r-capacity needs cap >= 1");
        }
        if (k * cap < n) {
          throw Infeasible("r-capacity infeasible: k*cap = " + std::to_string(k * cap) + " is below n = " +
                           std::to_string(n));
        }
        return;
      case Kind::exact_sizes: {
        if (sizes.size() != k) {
          throw InvalidArgument("exact-sizes needs one size per cluster");
        }
        for (auto s : sizes) {
          if (s < 1) {
            throw InvalidArgument("exact sizes must be positive");
          }
        }
        const auto sum = std::accumulate(sizes.begin(), sizes.end(), std::size_t{0});
        if (sum != n) {
          throw Infeasible("exact sizes sum to " + std::to_string(sum) + " but n = " + std::to_string(n));
        }
        return;
      }
    }
  }

  std::vector<std::size_t> lower(std::size_t n, std::size_t k) const {
    switch (kind) {
      case Kind::r_gather:
        return std::vector<std::size_t>(k, r);
      case Kind::exact_sizes:
        return sizes;
      default:
        (void)n;
        return std::vector<std::size_t>(k, 0);
    }
  }

  std::vector<std::size_t> upper(std::size_t n, std::size_t k) const {
    switch (kind) {
      case Kind::r_capacity:
        return std::vector<std::size_t>(k, cap);
      case Kind::exact_sizes:
        return sizes;
      default:
        return std::vector<std::size_t>(k, n);
    }
  }

  /// True when every cluster carries the same bounds, so relabelling
  /// clusters maps the family onto itself.
  bool symmetric() const {
    if (kind != Kind::exact_sizes) {
      return true;
    }
    for (auto s : sizes) {
      if (s != sizes.front()) {
        return false;
      }
    }
    return true;
  }

  bool satisfied_by(const Clustering& c) const {
    const auto s = c.sizes();
    const auto lo = lower(c.size(), c.k);
    const auto hi = upper(c.size(), c.k);
    if (lo.size() != c.k) {
      return false;
    }
    for (std::size_t i = 0; i < c.k; ++i) {
      if (s[i] < lo[i] || s[i] > hi[i]) {
        return false;
      }
    }
    return true;
  }

  bool operator==(const ConstraintFamily&) const = default;
};

/// Nearest-center assignment; ties go to the lowest center index.
inline Clustering voronoi_partition(const CenterSet& centers, const Dataset& data) {
  if (centers.empty()) {
    throw InvalidArgument("voronoi partition needs at least one center");
  }
  if (centers.dim() != data.dim()) {
    throw InvalidArgument("center dimension differs from dataset dimension");
  }
  std::vector<std::uint32_t> labels(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    std::uint32_t arg = 0;
    for (std::size_t c = 0; c < centers.size(); ++c) {
      const double d = squared_distance(data.row(i), centers.row(c));
      if (d < best) {
        best = d;
        arg = static_cast<std::uint32_t>(c);
      }
    }
    labels[i] = arg;
  }
  return Clustering(std::move(labels), centers.size());
}

/// Node layout of the assignment network: source, n point nodes, k center
/// nodes, sink.
struct AssignmentNetwork {
  FlowNetwork network;
  std::size_t points = 0;
  std::size_t centers = 0;
  std::size_t first_point_arc = 0;  // arcs point i -> center c at first + i*k + c

  std::size_t point_node(std::size_t i) const { return 1 + i; }
  std::size_t center_node(std::size_t c) const { return 1 + points + c; }
};

/// Bipartite transportation network: source -> point (cap 1), point ->
/// center (cap 1, cost = point cost), center -> sink with the per-center
/// lower and upper bounds.
inline AssignmentNetwork build_assignment_network(const Dataset& data, const CenterSet& centers,
                                                  const std::vector<std::size_t>& lower,
                                                  const std::vector<std::size_t>& upper,
                                                  Objective obj = Objective::squared) {
  const std::size_t n = data.size();
  const std::size_t k = centers.size();
  if (k == 0 || lower.size() != k || upper.size() != k) {
    throw InvalidArgument("need one lower and one upper bound per center");
  }
  if (centers.dim() != data.dim()) {
    throw InvalidArgument("center dimension differs from dataset dimension");
  }
  std::size_t lo_sum = 0, hi_sum = 0;
  for (std::size_t c = 0; c < k; ++c) {
    if (lower[c] > upper[c]) {
      throw Infeasible("center " + std::to_string(c) + " has lower bound above its capacity");
    }
    lo_sum += lower[c];
    hi_sum += std::min(upper[c], n);
  }
  if (lo_sum > n) {
    throw Infeasible("lower bounds sum to " + std::to_string(lo_sum) + " but only " + std::to_string(n) +
                     " points exist");
  }
  if (hi_sum < n) {
    throw Infeasible("capacities sum to " + std::to_string(hi_sum) + ", fewer than the " + std::to_string(n) +
                     " points");
  }
  AssignmentNetwork an;
  an.points = n;
  an.centers = k;
  FlowNetwork& net = an.network;
  net.nodes = n + k + 2;
  net.source = 0;
  net.sink = n + k + 1;
  net.flow_value = static_cast<std::int64_t>(n);
  for (std::size_t i = 0; i < n; ++i) {
    net.add_arc(net.source, an.point_node(i), 1, 0.0);
  }
  an.first_point_arc = net.arcs.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < k; ++c) {
      net.add_arc(an.point_node(i), an.center_node(c), 1, point_cost(data.row(i), centers.row(c), obj));
    }
  }
  for (std::size_t c = 0; c < k; ++c) {
    net.add_arc(an.center_node(c), net.sink, static_cast<std::int64_t>(std::min(upper[c], n)), 0.0,
                static_cast<std::int64_t>(lower[c]));
  }
  return an;
}

/// Reads the clustering off an integral flow on an assignment network.
inline Clustering clustering_from_flow(const AssignmentNetwork& an, const FlowSolution& sol) {
  std::vector<std::uint32_t> labels(an.points);
  for (std::size_t i = 0; i < an.points; ++i) {
    int units = 0;
    for (std::size_t c = 0; c < an.centers; ++c) {
      const auto f = sol.flow[an.first_point_arc + i * an.centers + c];
      if (f != 0 && f != 1) {
        throw Error("non-integral assignment flow");
      }
      if (f == 1) {
        labels[i] = static_cast<std::uint32_t>(c);
        ++units;
      }
    }
    if (units != 1) {
      throw Error("point " + std::to_string(i) + " is not assigned exactly once");
    }
  }
  return Clustering(std::move(labels), an.centers);
}

/// The partition algorithm: the clustering in `family` minimizing the cost
/// with cluster i served by center i.
inline Clustering partition(const CenterSet& centers, const Dataset& data, const ConstraintFamily& family,
                            Objective obj = Objective::squared) {
  family.check(data.size(), centers.size());
  if (family.kind == ConstraintFamily::Kind::unconstrained) {
    return voronoi_partition(centers, data);
  }
  const auto an = build_assignment_network(data, centers, family.lower(data.size(), centers.size()),
                                           family.upper(data.size(), centers.size()), obj);
  return clustering_from_flow(an, solve_min_cost_flow(an.network));
}

/// A center set, the clustering it induces, and its cost. Centers are
/// stored so that cluster i is served by centers.row(i).
struct Solution {
  CenterSet centers;
  Clustering clustering;
  double cost = 0.0;
  ConstraintFamily constraint;
  Objective objective = Objective::squared;
};

inline Solution evaluate(const CenterSet& centers, const Dataset& data, const ConstraintFamily& family,
                         Objective obj = Objective::squared) {
  Solution s;
  s.clustering = partition(centers, data, family, obj);
  const auto report = cost_of_clustering(centers, s.clustering, data, obj);
  s.centers = CenterSet(centers.dim());
  for (std::size_t a = 0; a < centers.size(); ++a) {
    s.centers.push_back(centers.row(report.permutation[a]));
  }
  s.cost = report.total;
  s.constraint = family;
  s.objective = obj;
  return s;
}

/// Runs the partition algorithm on every candidate and keeps the cheapest;
/// ties go to the earliest candidate.
inline Solution select_best(const std::vector<CenterSet>& candidates, const Dataset& data,
                            const ConstraintFamily& family, Objective obj = Objective::squared,
                            unsigned threads = 1) {
  if (candidates.empty()) {
    throw InvalidArgument("candidate list is empty");
  }
  family.check(data.size(), candidates.front().size());
  std::vector<double> costs(candidates.size(), std::numeric_limits<double>::infinity());
  // The unconstrained cost bounds the constrained one from below, so a
  // candidate whose Voronoi cost is strictly above the best so far cannot
  // win or tie and skips the flow solve.
  std::atomic<double> best_so_far{std::numeric_limits<double>::infinity()};
  parallel_for(candidates.size(), threads, [&](std::size_t i) {
    if (family.kind != ConstraintFamily::Kind::unconstrained) {
      const double floor = phi(candidates[i], data, obj);
      if (floor > best_so_far.load() * (1.0 + 1e-12)) {
        return;
      }
    }
    const Clustering c = partition(candidates[i], data, family, obj);
    costs[i] = cost_of_clustering(candidates[i], c, data, obj).total;
    double seen = best_so_far.load();
    while (costs[i] < seen && !best_so_far.compare_exchange_weak(seen, costs[i])) {
    }
  });
  std::size_t best = 0;
  for (std::size_t i = 1; i < costs.size(); ++i) {
    if (costs[i] < costs[best]) {
      best = i;
    }
  }
  return evaluate(candidates[best], data, family, obj);
}

inline Solution select_best(const CandidateList& list, const Dataset& data, const ConstraintFamily& family,
                            unsigned threads = 1) {
  const Objective obj = list.problem == "k-median" ? Objective::linear : Objective::squared;
  return select_best(list.entries, data, family, obj, threads);
}

}  // namespace ckm

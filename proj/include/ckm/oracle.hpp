#pragma once

#include <algorithm>
#include <atomic>
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
#include "ckm/partition.hpp"
#include "ckm/stats.hpp"
#include "ckm/subsets.hpp"

namespace ckm {

inline constexpr std::size_t kMaxOracleN = 14;

struct EnumerationSpec {
  std::size_t n = 0;
  std::size_t k = 1;
  ConstraintFamily family;
  std::uint64_t cap = 50'000'000;  // maximum clusterings visited
  std::size_t max_n = kMaxOracleN;  // may be lowered, never raised above 14
  bool labeled = false;             // keep label-symmetric duplicates
};

/// Upper bound on the number of clusterings the enumeration may visit:
/// k^n when labelled, else the number of partitions into at most k blocks.
inline std::uint64_t enumeration_bound(std::size_t n, std::size_t k, bool canonical) {
  auto sat_mul = [](std::uint64_t a, std::uint64_t b) {
    const unsigned __int128 p = static_cast<unsigned __int128>(a) * b;
    return p > kSaturated ? kSaturated : static_cast<std::uint64_t>(p);
  };
  if (!canonical) {
    std::uint64_t b = 1;
    for (std::size_t i = 0; i < n; ++i) {
      b = sat_mul(b, k);
    }
    return b;
  }
  // Stirling numbers of the second kind, S(i, j) for j <= k.
  std::vector<std::uint64_t> row(k + 1, 0);
  row[0] = 1;
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = std::min(i, k); j >= 1; --j) {
      const std::uint64_t a = sat_mul(j, row[j]);
      row[j] = (a > kSaturated - row[j - 1]) ? kSaturated : a + row[j - 1];
    }
    row[0] = 0;
  }
  std::uint64_t total = 0;
  for (std::size_t j = 0; j <= k; ++j) {
    total = (row[j] > kSaturated - total) ? kSaturated : total + row[j];
  }
  return total;
}

namespace detail {

class ClusteringEnumerator {
 public:
  ClusteringEnumerator(const EnumerationSpec& spec, const std::function<bool(const Clustering&)>& visit)
      : spec_(spec), visit_(visit), canonical_(spec.family.symmetric() && !spec.labeled),
        lower_(spec.family.lower(spec.n, spec.k)), upper_(spec.family.upper(spec.n, spec.k)),
        sizes_(spec.k, 0), current_(std::vector<std::uint32_t>(spec.n, 0), spec.k) {
    for (auto l : lower_) {
      deficit_ += l;
    }
  }

  std::uint64_t run() {
    recurse(0, 0);
    return visited_;
  }

 private:
  bool recurse(std::size_t i, std::size_t opened) {
    if (deficit_ > spec_.n - i) {
      return true;
    }
    if (i == spec_.n) {
      if (++visited_ > spec_.cap) {
        throw InvalidArgument("clustering enumeration exceeded cap of " + std::to_string(spec_.cap) +
                              " (count bound " +
                              std::to_string(enumeration_bound(spec_.n, spec_.k, canonical_)) + ")");
      }
      return visit_(current_);
    }
    // Canonical form: a point may join an opened cluster or open the next one.
    const std::size_t limit = canonical_ ? std::min(opened + 1, spec_.k) : spec_.k;
    for (std::size_t a = 0; a < limit; ++a) {
      if (sizes_[a] >= upper_[a]) {
        continue;
      }
      const bool helps = sizes_[a] < lower_[a];
      ++sizes_[a];
      deficit_ -= helps ? 1 : 0;
      current_.assignment[i] = static_cast<std::uint32_t>(a);
      const bool go_on = recurse(i + 1, std::max(opened, a + 1));
      deficit_ += helps ? 1 : 0;
      --sizes_[a];
      if (!go_on) {
        return false;
      }
    }
    return true;
  }

  const EnumerationSpec& spec_;
  const std::function<bool(const Clustering&)>& visit_;
  bool canonical_;
  std::vector<std::size_t> lower_;
  std::vector<std::size_t> upper_;
  std::vector<std::size_t> sizes_;
  std::size_t deficit_ = 0;
  Clustering current_;
  std::uint64_t visited_ = 0;
};

inline void check_spec(const EnumerationSpec& spec) {
  if (spec.max_n > kMaxOracleN) {
    throw InvalidArgument("enumeration size guard cannot be raised above 14");
  }
  if (spec.n > spec.max_n) {
    throw InvalidArgument("brute-force enumeration limited to n <= " + std::to_string(spec.max_n));
  }
  if (spec.k == 0) {
    throw InvalidArgument("k must be at least 1");
  }
}

}  // namespace detail

/// Visits every clustering of n points into k clusters allowed by the
/// family. For symmetric families, label permutations are collapsed: the
/// lowest-index point of each cluster fixes the label order. `visit`
/// returns false to stop. Returns the number visited. An infeasible family
/// simply yields nothing.
inline std::uint64_t enumerate_clusterings(const EnumerationSpec& spec,
                                           const std::function<bool(const Clustering&)>& visit) {
  detail::check_spec(spec);
  if (spec.family.kind == ConstraintFamily::Kind::exact_sizes && spec.family.sizes.size() != spec.k) {
    throw InvalidArgument("exact-sizes needs one size per cluster");
  }
  detail::ClusteringEnumerator e(spec, visit);
  return e.run();
}

inline std::vector<Clustering> collect_clusterings(const EnumerationSpec& spec) {
  std::vector<Clustering> out;
  enumerate_clusterings(spec, [&](const Clustering& c) {
    out.push_back(c);
    return true;
  });
  return out;
}

struct BruteForceResult {
  Clustering clustering;
  double cost = 0.0;
};

/// Exhaustive constrained k-means optimum: minimum opt_k over the family.
inline BruteForceResult brute_force_opt(const Dataset& data, std::size_t k, const ConstraintFamily& family,
                                        std::uint64_t cap = 50'000'000) {
  family.check(data.size(), k);
  EnumerationSpec spec;
  spec.n = data.size();
  spec.k = k;
  spec.family = family;
  spec.cap = cap;
  BruteForceResult best;
  best.cost = std::numeric_limits<double>::infinity();
  enumerate_clusterings(spec, [&](const Clustering& c) {
    const double v = opt_k(c, data);
    if (v < best.cost) {
      best.cost = v;
      best.clustering = c;
    }
    return true;
  });
  if (best.clustering.k == 0) {
    throw Infeasible("no clustering satisfies the constraint family");
  }
  return best;
}

/// Exhaustive minimum of the identity-matched cost for fixed centers: what
/// the partition algorithm must achieve.
inline BruteForceResult brute_force_partition(const Dataset& data, const CenterSet& centers,
                                              const ConstraintFamily& family, Objective obj = Objective::squared) {
  family.check(data.size(), centers.size());
  EnumerationSpec spec;
  spec.n = data.size();
  spec.k = centers.size();
  spec.family = family;
  spec.labeled = true;
  BruteForceResult best;
  best.cost = std::numeric_limits<double>::infinity();
  enumerate_clusterings(spec, [&](const Clustering& c) {
    const double v = identity_cost(centers, c, data, obj);
    if (v < best.cost) {
      best.cost = v;
      best.clustering = c;
    }
    return true;
  });
  if (best.clustering.k == 0) {
    throw Infeasible("no clustering satisfies the constraint family");
  }
  return best;
}

struct ListQualityReport {
  std::vector<std::uint64_t> seeds;
  std::vector<bool> success;
  std::size_t successes = 0;
  double rate = 0.0;
  double lower_bound_99 = 0.0;  // one-sided Clopper-Pearson
  double target_opt = 0.0;
  double epsilon = 0.0;
  bool contract_applies = false;  // the 1/2 guarantee holds only in exact mode
};

/// For each seed, builds the candidate tree and checks whether some center
/// set serves the target clustering within (1 + epsilon) of its optimum.
/// The target defaults to the brute-force optimum of the family.
inline ListQualityReport verify_list_quality(const Dataset& data, std::size_t k, double epsilon,
                                             const ConstraintFamily& family, const ListParams& params,
                                             const std::vector<std::uint64_t>& seeds, unsigned threads = 1,
                                             std::optional<Clustering> target = std::nullopt) {
  validate(params);
  if (params.k != k) {
    throw InvalidArgument("list parameters were built for a different k");
  }
  const Clustering goal = target ? *target : brute_force_opt(data, k, family).clustering;
  if (goal.k != k || goal.size() != data.size()) {
    throw InvalidArgument("target clustering does not match the dataset and k");
  }
  const ClusteringProfile profile(goal, data);
  ListQualityReport rep;
  rep.seeds = seeds;
  rep.target_opt = profile.opt();
  rep.epsilon = epsilon;
  rep.contract_applies = params.mode == ListMode::exact;
  const double bound = (1.0 + epsilon) * profile.opt();
  const double slack = kAbsTol + kRelTol * bound;
  const TreeShape shape = params.shape(SamplingMode::squared);
  for (auto seed : seeds) {
    std::atomic<bool> found{false};
    walk_candidate_tree(data, shape, CentroidCandidate{}, seed, threads, [&](const LeafId&, const CenterSet& c) {
      if (profile.min_cost(c) <= bound + slack) {
        found.store(true);
        return false;
      }
      return true;
    });
    rep.success.push_back(found.load());
    rep.successes += found.load() ? 1 : 0;
  }
  rep.rate = seeds.empty() ? 0.0 : static_cast<double>(rep.successes) / static_cast<double>(seeds.size());
  rep.lower_bound_99 = binomial_lower_bound(rep.successes, seeds.size(), 0.99);
  return rep;
}

}  // namespace ckm

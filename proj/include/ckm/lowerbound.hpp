#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "ckm/error.hpp"
#include "ckm/geometry.hpp"
#include "ckm/list_kmeans.hpp"
#include "ckm/partition.hpp"
#include "ckm/oracle.hpp"
#include "ckm/rng.hpp"

namespace ckm {

using BigInt = boost::multiprecision::cpp_int;

/// The hard instance: the d = k*m standard basis vectors of R^d, with the
/// admissible clusterings being all partitions into k clusters of exactly
/// m points.
struct LowerBoundInstance {
  std::size_t k = 0;
  std::size_t m = 0;
  Dataset data;

  std::size_t dim() const { return k * m; }
  ConstraintFamily family() const { return ConstraintFamily::exact(std::vector<std::size_t>(k, m)); }
};

/// m = ceil(1 / sqrt(epsilon)), tolerant of rounding noise at perfect squares.
inline std::size_t lower_bound_m(double epsilon) {
  if (!(epsilon > 0.0)) {
    throw InvalidArgument("epsilon must be positive");
  }
  return static_cast<std::size_t>(stable_ceil(1.0 / std::sqrt(epsilon)));
}

inline LowerBoundInstance build_instance_m(std::size_t k, std::size_t m) {
  if (k < 1) {
    throw InvalidArgument("k must be at least 1");
  }
  if (m < 1) {
    throw InvalidArgument("m must be at least 1");
  }
  const std::size_t d = k * m;
  std::vector<double> coords(d * d, 0.0);
  for (std::size_t i = 0; i < d; ++i) {
    coords[i * d + i] = 1.0;
  }
  return LowerBoundInstance{k, m, Dataset(d, std::move(coords))};
}

inline LowerBoundInstance build_instance(std::size_t k, double epsilon) {
  const std::size_t m = lower_bound_m(epsilon);
  if (m < 2) {
    throw InvalidArgument("epsilon too large: m = ceil(1/sqrt(epsilon)) must be at least 2");
  }
  return build_instance_m(k, m);
}

/// Closed-form optimum of any equal-size clustering of the instance.
inline double opt_equal_partition(std::size_t k, std::size_t m) {
  if (m < 1) {
    throw InvalidArgument("m must be at least 1");
  }
  return static_cast<double>(k * (m - 1));
}

struct ResidualDecomposition {
  std::vector<Point> residuals;  // v_r
  double cost = 0.0;              // cluster r served by center r
  double opt = 0.0;
  double residual_norm_sum = 0.0;  // sum_r ||v_r||^2
  double identity_residual = 0.0;  // |cost - opt - m * sum_r ||v_r||^2|
};

/// Splits the identity-matched cost of C on an equal-size clustering into
/// opt plus m times the squared norms of the per-center deviations v_r,
/// where (v_r)_j = (c_r)_j - 1/m if e_j is in O_r and (c_r)_j otherwise.
inline ResidualDecomposition residual_decomposition(const CenterSet& centers, const Clustering& clustering,
                                                    const LowerBoundInstance& inst) {
  const std::size_t d = inst.dim();
  if (centers.size() != inst.k || clustering.k != inst.k || clustering.size() != d || centers.dim() != d) {
    throw InvalidArgument("centers and clustering must match the instance shape");
  }
  for (auto s : clustering.sizes()) {
    if (s != inst.m) {
      throw InvalidArgument("clustering must put exactly m points in every cluster");
    }
  }
  ResidualDecomposition out;
  const double inv_m = 1.0 / static_cast<double>(inst.m);
  out.residuals.assign(inst.k, Point(d, 0.0));
  for (std::size_t r = 0; r < inst.k; ++r) {
    const auto c = centers.row(r);
    for (std::size_t j = 0; j < d; ++j) {
      out.residuals[r][j] = c[j] - (clustering.assignment[j] == r ? inv_m : 0.0);
    }
    for (double v : out.residuals[r]) {
      out.residual_norm_sum += v * v;
    }
  }
  out.cost = identity_cost(centers, clustering, inst.data);
  out.opt = opt_k(clustering, inst.data);
  out.identity_residual =
      std::abs(out.cost - out.opt - static_cast<double>(inst.m) * out.residual_norm_sum);
  return out;
}

/// Bound on sum_r ||v_r||^2 for any C that serves O within (1 + eps).
inline double residual_budget(std::size_t k, std::size_t m) {
  return static_cast<double>(k) / (static_cast<double>(m) * static_cast<double>(m - 1));
}

/// Number of indices where two clusterings (both matched to the same
/// centers by label) disagree.
inline std::size_t assignment_disagreement(const Clustering& a, const Clustering& b) {
  if (a.size() != b.size()) {
    throw InvalidArgument("clusterings cover different point counts");
  }
  std::size_t diff = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += a.assignment[i] != b.assignment[i] ? 1 : 0;
  }
  return diff;
}

inline BigInt factorial(std::size_t n) {
  BigInt f = 1;
  for (std::size_t i = 2; i <= n; ++i) {
    f *= i;
  }
  return f;
}

inline BigInt big_binomial(std::size_t n, std::size_t r) {
  if (r > n) {
    return 0;
  }
  return factorial(n) / (factorial(r) * factorial(n - r));
}

inline double log2_big(const BigInt& v) {
  if (v <= 0) {
    return -std::numeric_limits<double>::infinity();
  }
  const std::size_t bits = boost::multiprecision::msb(v) + 1;
  if (bits <= 60) {
    return std::log2(v.convert_to<double>());
  }
  const BigInt top = v >> (bits - 60);
  return std::log2(top.convert_to<double>()) + static_cast<double>(bits - 60);
}

struct CountingReport {
  std::size_t k = 0;
  std::size_t m = 0;
  BigInt family_size;                   // (km)! / (m!)^k
  std::optional<BigInt> coverage_bound;  // C(km, km/2) (km/2)! / ((m/2)!)^k, m even
  std::optional<double> list_bound;     // family_size / coverage_bound
  double log2_family_size = 0.0;
  std::optional<double> log2_coverage_bound;
  std::optional<double> log2_list_bound;
};

/// Exact counts for the equal-size family and the number of its members
/// one center set can serve well, plus the implied minimum list size.
inline CountingReport counting_report(std::size_t k, std::size_t m) {
  if (k < 1 || m < 1) {
    throw InvalidArgument("k and m must be at least 1");
  }
  CountingReport rep;
  rep.k = k;
  rep.m = m;
  const std::size_t d = k * m;
  BigInt denom = 1;
  const BigInt fm = factorial(m);
  for (std::size_t r = 0; r < k; ++r) {
    denom *= fm;
  }
  rep.family_size = factorial(d) / denom;
  rep.log2_family_size = log2_big(rep.family_size);
  if (m % 2 == 0) {
    BigInt half_denom = 1;
    const BigInt fh = factorial(m / 2);
    for (std::size_t r = 0; r < k; ++r) {
      half_denom *= fh;
    }
    // (km/2)! / ((m/2)!)^k is an integer multinomial since k * (m/2) = km/2.
    rep.coverage_bound = big_binomial(d, d / 2) * (factorial(d / 2) / half_denom);
    rep.log2_coverage_bound = log2_big(*rep.coverage_bound);
    rep.log2_list_bound = rep.log2_family_size - *rep.log2_coverage_bound;
    rep.list_bound = std::exp2(*rep.log2_list_bound);
  }
  return rep;
}

/// Uniformly random clustering of the instance into k groups of m points.
inline Clustering random_equal_partition(std::size_t k, std::size_t m, RngStream& rng) {
  const std::size_t d = k * m;
  std::vector<std::uint32_t> labels(d);
  for (std::size_t i = 0; i < d; ++i) {
    labels[i] = static_cast<std::uint32_t>(i / m);
  }
  for (std::size_t i = d; i > 1; --i) {
    std::swap(labels[i - 1], labels[static_cast<std::size_t>(rng.below(i))]);
  }
  return Clustering(std::move(labels), k);
}

struct IdentityChecks {
  std::size_t trials = 0;
  double epsilon = 0.0;
  bool opt_exact = true;          // every sampled O has opt_k = k(m-1) to 1e-12
  double max_opt_error = 0.0;
  double max_residual = 0.0;      // max relative identity residual
  std::size_t served_trials = 0;  // C within (1+eps) opt of O
  double max_served_norm_sum = 0.0;
  double residual_budget = 0.0;
  bool residual_bound_holds = true;
  // Pairs (O, O') of equal partitions both served within (1+eps) by the
  // centroids of O; only scanned when the family has at most 200000
  // members up to relabelling.
  bool disagreement_scanned = false;
  bool disagreement_asserted = false;  // m >= 8
  std::size_t served_pairs = 0;
  std::size_t max_disagreement = 0;
  std::size_t disagreement_bound = 0;  // d / 2
  bool disagreement_holds = true;
};

/// Random-trial checks of the instance identities: opt of equal partitions,
/// the residual decomposition of the cost, the residual-norm bound for
/// near-optimal centers, and the disagreement bound between two equal
/// partitions served by the same centers.
inline IdentityChecks identity_checks(const LowerBoundInstance& inst, double epsilon, std::size_t trials,
                                      std::uint64_t seed) {
  IdentityChecks rep;
  rep.trials = trials;
  rep.epsilon = epsilon;
  rep.residual_budget = residual_budget(inst.k, inst.m);
  const std::size_t d = inst.dim();
  const double opt = opt_equal_partition(inst.k, inst.m);
  RngStream rng(seed);
  for (std::size_t t = 0; t < trials; ++t) {
    RngStream trial = rng.child(t);
    const Clustering o = random_equal_partition(inst.k, inst.m, trial);
    const double got = opt_k(o, inst.data);
    rep.max_opt_error = std::max(rep.max_opt_error, std::abs(got - opt));
    // Centroids of O moved by a random offset whose scale ranges from
    // tiny to well past the (1+eps) budget.
    CenterSet c = cluster_centroids(o, inst.data);
    const double scale = std::sqrt(epsilon * opt / static_cast<double>(inst.m * inst.k * d)) * 4.0 * trial.uniform();
    CenterSet moved(d);
    Point row(d);
    for (std::size_t r = 0; r < inst.k; ++r) {
      for (std::size_t j = 0; j < d; ++j) {
        row[j] = c.row(r)[j] + scale * trial.normal();
      }
      moved.push_back(row);
    }
    const ResidualDecomposition dec = residual_decomposition(moved, o, inst);
    rep.max_residual = std::max(rep.max_residual, dec.identity_residual / std::max(1.0, dec.cost));
    if (dec.cost <= (1.0 + epsilon) * opt) {
      ++rep.served_trials;
      rep.max_served_norm_sum = std::max(rep.max_served_norm_sum, dec.residual_norm_sum);
      if (dec.residual_norm_sum > rep.residual_budget + 1e-9) {
        rep.residual_bound_holds = false;
      }
    }
  }
  rep.opt_exact = rep.max_opt_error <= 1e-12;
  rep.disagreement_bound = d / 2;
  rep.disagreement_asserted = inst.m >= 8;
  if (counting_report(inst.k, inst.m).family_size / factorial(inst.k) <= 200000) {
    rep.disagreement_scanned = true;
    std::vector<std::uint32_t> base(d);
    for (std::size_t i = 0; i < d; ++i) {
      base[i] = static_cast<std::uint32_t>(i / inst.m);
    }
    const Clustering o(base, inst.k);
    const CenterSet c = cluster_centroids(o, inst.data);
    EnumerationSpec spec;
    spec.n = d;
    spec.k = inst.k;
    spec.family = inst.family();
    const double bound = (1.0 + epsilon) * opt;
    auto visit = [&](const Clustering& other) {
      const CostReport cr = cost_of_clustering(c, other, inst.data);
      if (cr.total <= bound + kAbsTol + kRelTol * bound) {
        ++rep.served_pairs;
        std::size_t diff = 0;
        for (std::size_t i = 0; i < d; ++i) {
          diff += cr.permutation[other.assignment[i]] != o.assignment[i] ? 1 : 0;
        }
        rep.max_disagreement = std::max(rep.max_disagreement, diff);
      }
      return true;
    };
    const std::function<bool(const Clustering&)> fn = visit;
    detail::ClusteringEnumerator e(spec, fn);
    e.run();
    if (rep.disagreement_asserted && rep.max_disagreement > rep.disagreement_bound) {
      rep.disagreement_holds = false;
    }
  }
  return rep;
}

}  // namespace ckm

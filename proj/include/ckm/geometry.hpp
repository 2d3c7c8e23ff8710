#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ckm/assignment.hpp"
#include "ckm/error.hpp"

namespace ckm {

using Point = std::vector<double>;

/// Squared Euclidean (k-means) or plain Euclidean (k-median) point cost.
enum class Objective { squared, linear };

inline constexpr double kRelTol = 1e-9;
inline constexpr double kAbsTol = 1e-12;

inline bool approx_equal(double a, double b, double rel = kRelTol, double abs = kAbsTol) {
  return std::abs(a - b) <= std::max(abs, rel * std::max(std::abs(a), std::abs(b)));
}

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double t = a[j] - b[j];
    s += t * t;
  }
  return s;
}

inline double distance(std::span<const double> a, std::span<const double> b) {
  return std::sqrt(squared_distance(a, b));
}

inline double point_cost(std::span<const double> a, std::span<const double> b, Objective obj) {
  const double sq = squared_distance(a, b);
  return obj == Objective::squared ? sq : std::sqrt(sq);
}

/// Anything that exposes n points of a common dimension as row spans.
template <class R>
concept PointRange = requires(const R& r, std::size_t i) {
  { r.size() } -> std::convertible_to<std::size_t>;
  { r.dim() } -> std::convertible_to<std::size_t>;
  { r.row(i) } -> std::convertible_to<std::span<const double>>;
};

/// Non-owning view over a row-major block of points.
class PointBlock {
 public:
  PointBlock(std::span<const double> coords, std::size_t dim) : coords_(coords), dim_(dim) {}

  std::size_t size() const { return dim_ == 0 ? 0 : coords_.size() / dim_; }
  std::size_t dim() const { return dim_; }
  std::span<const double> row(std::size_t i) const { return coords_.subspan(i * dim_, dim_); }

 private:
  std::span<const double> coords_;
  std::size_t dim_;
};

/// The input point set X: n >= 1 finite points in R^d, stored row-major.
class Dataset {
 public:
  Dataset(std::size_t dim, std::vector<double> coords) : dim_(dim), coords_(std::move(coords)) {
    if (dim_ == 0) {
      throw InvalidArgument("dataset dimension must be at least 1");
    }
    if (coords_.empty() || coords_.size() % dim_ != 0) {
      throw InvalidArgument("dataset must hold at least one complete point");
    }
    for (double v : coords_) {
      if (!std::isfinite(v)) {
        throw InvalidArgument("dataset coordinates must be finite");
      }
    }
  }

  static Dataset from_rows(const std::vector<Point>& rows) {
    if (rows.empty()) {
      throw InvalidArgument("dataset must hold at least one point");
    }
    const std::size_t dim = rows.front().size();
    std::vector<double> coords;
    coords.reserve(rows.size() * dim);
    for (const auto& r : rows) {
      if (r.size() != dim) {
        throw InvalidArgument("all points must share one dimension");
      }
      coords.insert(coords.end(), r.begin(), r.end());
    }
    return Dataset(dim, std::move(coords));
  }

  std::size_t size() const { return coords_.size() / dim_; }
  std::size_t dim() const { return dim_; }
  std::span<const double> row(std::size_t i) const {
    return std::span<const double>(coords_).subspan(i * dim_, dim_);
  }
  const std::vector<double>& coords() const { return coords_; }

 private:
  std::size_t dim_;
  std::vector<double> coords_;
};

/// A subset of a dataset selected by index (repeats allowed).
class IndexedPoints {
 public:
  IndexedPoints(const Dataset& data, std::span<const std::size_t> indices)
      : data_(&data), indices_(indices) {}

  std::size_t size() const { return indices_.size(); }
  std::size_t dim() const { return data_->dim(); }
  std::span<const double> row(std::size_t i) const { return data_->row(indices_[i]); }

 private:
  const Dataset* data_;
  std::span<const std::size_t> indices_;
};

/// An ordered list of centers sharing one dimension.
class CenterSet {
 public:
  CenterSet() = default;
  explicit CenterSet(std::size_t dim) : dim_(dim) {}

  static CenterSet from_rows(const std::vector<Point>& rows) {
    if (rows.empty()) {
      throw InvalidArgument("center set from rows needs at least one center");
    }
    CenterSet c(rows.front().size());
    for (const auto& r : rows) {
      c.push_back(r);
    }
    return c;
  }

  void push_back(std::span<const double> center) {
    if (center.size() != dim_) {
      throw InvalidArgument("center dimension mismatch");
    }
    for (double v : center) {
      if (!std::isfinite(v)) {
        throw InvalidArgument("centers must be finite");
      }
    }
    coords_.insert(coords_.end(), center.begin(), center.end());
  }
  void pop_back() { coords_.resize(coords_.size() - dim_); }

  std::size_t size() const { return dim_ == 0 ? 0 : coords_.size() / dim_; }
  bool empty() const { return coords_.empty(); }
  std::size_t dim() const { return dim_; }
  std::span<const double> row(std::size_t i) const {
    return std::span<const double>(coords_).subspan(i * dim_, dim_);
  }
  const std::vector<double>& coords() const { return coords_; }

  bool operator==(const CenterSet&) const = default;

 private:
  std::size_t dim_ = 0;
  std::vector<double> coords_;
};

/// A labelling of n points into k clusters (labels 0..k-1). Empty clusters
/// are allowed here; constraint families decide whether they are acceptable.
struct Clustering {
  std::vector<std::uint32_t> assignment;
  std::size_t k = 0;

  Clustering() = default;
  Clustering(std::vector<std::uint32_t> labels, std::size_t clusters)
      : assignment(std::move(labels)), k(clusters) {
    for (auto a : assignment) {
      if (a >= k) {
        throw InvalidArgument("cluster label out of range");
      }
    }
  }

  std::size_t size() const { return assignment.size(); }

  std::vector<std::size_t> sizes() const {
    std::vector<std::size_t> s(k, 0);
    for (auto a : assignment) {
      ++s[a];
    }
    return s;
  }

  std::vector<std::size_t> members(std::size_t cluster) const {
    std::vector<std::size_t> m;
    for (std::size_t i = 0; i < assignment.size(); ++i) {
      if (assignment[i] == cluster) {
        m.push_back(i);
      }
    }
    return m;
  }

  bool operator==(const Clustering&) const = default;
};

template <PointRange R>
Point centroid(const R& points) {
  if (points.size() == 0) {
    throw InvalidArgument("empty cluster has no centroid");
  }
  Point c(points.dim(), 0.0);
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto r = points.row(i);
    for (std::size_t j = 0; j < c.size(); ++j) {
      c[j] += r[j];
    }
  }
  for (double& v : c) {
    v /= static_cast<double>(points.size());
  }
  return c;
}

/// 1-means cost: sum of squared distances to the centroid.
template <PointRange R>
double delta(const R& points) {
  const Point c = centroid(points);
  double s = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    s += squared_distance(points.row(i), c);
  }
  return s;
}

/// Sum over points of the cost to the nearest center.
template <PointRange R>
double phi(const CenterSet& centers, const R& points, Objective obj = Objective::squared) {
  if (centers.empty()) {
    throw InvalidArgument("phi needs at least one center");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    double best = squared_distance(points.row(i), centers.row(0));
    for (std::size_t c = 1; c < centers.size(); ++c) {
      best = std::min(best, squared_distance(points.row(i), centers.row(c)));
    }
    s += obj == Objective::squared ? best : std::sqrt(best);
  }
  return s;
}

template <PointRange R>
double phi(std::span<const double> center, const R& points, Objective obj = Objective::squared) {
  double s = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    s += point_cost(points.row(i), center, obj);
  }
  return s;
}

struct CostReport {
  double total = 0.0;
  std::vector<std::size_t> permutation;  // cluster index -> center index
  std::vector<double> per_cluster;
};

namespace detail {

inline CostReport report_from_matrix(const std::vector<double>& m, std::size_t k) {
  const auto match = solve_assignment(m, k);
  CostReport r;
  r.permutation = match.column_of_row;
  r.per_cluster.resize(k);
  for (std::size_t i = 0; i < k; ++i) {
    r.per_cluster[i] = m[i * k + r.permutation[i]];
    r.total += r.per_cluster[i];
  }
  return r;
}

inline void check_shapes(const CenterSet& centers, const Clustering& clustering, const Dataset& data) {
  if (centers.size() != clustering.k) {
    throw InvalidArgument("center count must equal cluster count");
  }
  if (clustering.size() != data.size()) {
    throw InvalidArgument("clustering does not cover the dataset");
  }
  if (centers.dim() != data.dim()) {
    throw InvalidArgument("center dimension differs from dataset dimension");
  }
}

}  // namespace detail

/// Cost of serving clustering O by centers C under the best bijection
/// between clusters and centers.
inline CostReport cost_of_clustering(const CenterSet& centers, const Clustering& clustering,
                                     const Dataset& data, Objective obj = Objective::squared) {
  detail::check_shapes(centers, clustering, data);
  const std::size_t k = clustering.k;
  std::vector<double> m(k * k, 0.0);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const std::size_t a = clustering.assignment[i];
    for (std::size_t c = 0; c < k; ++c) {
      m[a * k + c] += point_cost(data.row(i), centers.row(c), obj);
    }
  }
  return detail::report_from_matrix(m, k);
}

/// Cost of the clustering with cluster i served by center i.
inline double identity_cost(const CenterSet& centers, const Clustering& clustering, const Dataset& data,
                            Objective obj = Objective::squared) {
  detail::check_shapes(centers, clustering, data);
  double s = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    s += point_cost(data.row(i), centers.row(clustering.assignment[i]), obj);
  }
  return s;
}

/// Per-cluster sufficient statistics (size, centroid, 1-means cost). Lets
/// the cost of many center sets against one fixed clustering be evaluated
/// in O(k^2 d) each, via the centroid identity.
class ClusteringProfile {
 public:
  ClusteringProfile(const Clustering& clustering, const Dataset& data)
      : k_(clustering.k), dim_(data.dim()), sizes_(clustering.sizes()), centroids_(k_ * dim_, 0.0),
        deltas_(k_, 0.0) {
    if (clustering.size() != data.size()) {
      throw InvalidArgument("clustering does not cover the dataset");
    }
    for (std::size_t i = 0; i < data.size(); ++i) {
      const auto r = data.row(i);
      double* c = &centroids_[clustering.assignment[i] * dim_];
      for (std::size_t j = 0; j < dim_; ++j) {
        c[j] += r[j];
      }
    }
    for (std::size_t a = 0; a < k_; ++a) {
      if (sizes_[a] == 0) {
        continue;
      }
      for (std::size_t j = 0; j < dim_; ++j) {
        centroids_[a * dim_ + j] /= static_cast<double>(sizes_[a]);
      }
    }
    for (std::size_t i = 0; i < data.size(); ++i) {
      const auto a = clustering.assignment[i];
      deltas_[a] += squared_distance(data.row(i), centroid(a));
    }
    for (double d : deltas_) {
      opt_ += d;
    }
  }

  std::size_t k() const { return k_; }
  std::span<const double> centroid(std::size_t a) const {
    return std::span<const double>(centroids_).subspan(a * dim_, dim_);
  }
  const std::vector<std::size_t>& sizes() const { return sizes_; }
  const std::vector<double>& deltas() const { return deltas_; }
  double opt() const { return opt_; }

  /// Matrix entry M[a][c] = delta(O_a) + |O_a| * ||c - centroid(O_a)||^2.
  std::vector<double> cost_matrix(const CenterSet& centers) const {
    if (centers.size() != k_ || centers.dim() != dim_) {
      throw InvalidArgument("center set shape does not match clustering");
    }
    std::vector<double> m(k_ * k_, 0.0);
    for (std::size_t a = 0; a < k_; ++a) {
      if (sizes_[a] == 0) {
        continue;
      }
      for (std::size_t c = 0; c < k_; ++c) {
        m[a * k_ + c] = deltas_[a] + static_cast<double>(sizes_[a]) * squared_distance(centers.row(c), centroid(a));
      }
    }
    return m;
  }

  CostReport cost_against(const CenterSet& centers) const {
    return detail::report_from_matrix(cost_matrix(centers), k_);
  }

  /// Faster than cost_against for k <= 2 and skips building the report.
  double min_cost(const CenterSet& centers) const {
    const auto m = cost_matrix(centers);
    if (k_ == 1) {
      return m[0];
    }
    if (k_ == 2) {
      return std::min(m[0] + m[3], m[1] + m[2]);
    }
    return solve_assignment(m, k_).total;
  }

 private:
  std::size_t k_;
  std::size_t dim_;
  std::vector<std::size_t> sizes_;
  std::vector<double> centroids_;
  std::vector<double> deltas_;
  double opt_ = 0.0;
};

/// Optimal k-means cost of a fixed clustering: sum of per-cluster deltas.
/// Empty clusters contribute 0.
inline double opt_k(const Clustering& clustering, const Dataset& data) {
  return ClusteringProfile(clustering, data).opt();
}

/// Cluster centroids as a center set; an empty cluster gets the origin.
inline CenterSet cluster_centroids(const Clustering& clustering, const Dataset& data) {
  const ClusteringProfile profile(clustering, data);
  CenterSet c(data.dim());
  for (std::size_t a = 0; a < clustering.k; ++a) {
    c.push_back(profile.centroid(a));
  }
  return c;
}

}  // namespace ckm

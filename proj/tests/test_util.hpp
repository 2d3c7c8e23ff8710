#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

#include "ckm/geometry.hpp"

namespace ckm_test {

inline ckm::Dataset random_dataset(std::mt19937_64& gen, std::size_t n, std::size_t d, double spread = 10.0) {
  std::uniform_real_distribution<double> u(-spread, spread);
  std::vector<double> coords(n * d);
  for (auto& v : coords) v = u(gen);
  return ckm::Dataset(d, std::move(coords));
}

inline ckm::Dataset gaussian_dataset(std::mt19937_64& gen, std::size_t n, std::size_t d) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> coords(n * d);
  for (auto& v : coords) v = g(gen);
  return ckm::Dataset(d, std::move(coords));
}

inline ckm::CenterSet random_centers(std::mt19937_64& gen, std::size_t k, std::size_t d, double spread = 10.0) {
  std::uniform_real_distribution<double> u(-spread, spread);
  ckm::CenterSet c(d);
  std::vector<double> row(d);
  for (std::size_t i = 0; i < k; ++i) {
    for (auto& v : row) v = u(gen);
    c.push_back(row);
  }
  return c;
}

inline ckm::Clustering random_clustering(std::mt19937_64& gen, std::size_t n, std::size_t k) {
  std::uniform_int_distribution<std::uint32_t> lab(0, static_cast<std::uint32_t>(k - 1));
  std::vector<std::uint32_t> a(n);
  for (auto& v : a) v = lab(gen);
  return ckm::Clustering(std::move(a), k);
}

// Plain double loops, deliberately not sharing code with the library.
inline double sq(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0;
  for (std::size_t j = 0; j < a.size(); ++j) s += (a[j] - b[j]) * (a[j] - b[j]);
  return s;
}

inline std::vector<double> row_of(const ckm::Dataset& X, std::size_t i) {
  auto r = X.row(i);
  return {r.begin(), r.end()};
}

inline std::vector<double> row_of(const ckm::CenterSet& C, std::size_t i) {
  auto r = C.row(i);
  return {r.begin(), r.end()};
}

// Cost of serving cluster a by center perm[a], summed, by explicit loops.
inline double cost_under(const ckm::CenterSet& C, const ckm::Clustering& O, const ckm::Dataset& X,
                         const std::vector<std::size_t>& perm, bool linear = false) {
  double s = 0;
  for (std::size_t i = 0; i < X.size(); ++i) {
    const double d2 = sq(row_of(X, i), row_of(C, perm[O.assignment[i]]));
    s += linear ? std::sqrt(d2) : d2;
  }
  return s;
}

// min over all k! permutations.
inline double permutation_brute_force(const ckm::CenterSet& C, const ckm::Clustering& O, const ckm::Dataset& X,
                                      bool linear = false) {
  std::vector<std::size_t> perm(O.k);
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    best = std::min(best, cost_under(C, O, X, perm, linear));
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

// Sum over clusters of squared distance to the cluster mean, by loops.
inline double direct_opt(const ckm::Clustering& O, const ckm::Dataset& X) {
  double total = 0;
  for (std::size_t a = 0; a < O.k; ++a) {
    std::vector<double> mean(X.dim(), 0.0);
    std::size_t cnt = 0;
    for (std::size_t i = 0; i < X.size(); ++i) {
      if (O.assignment[i] != a) continue;
      ++cnt;
      for (std::size_t j = 0; j < X.dim(); ++j) mean[j] += X.row(i)[j];
    }
    if (cnt == 0) continue;
    for (auto& v : mean) v /= static_cast<double>(cnt);
    for (std::size_t i = 0; i < X.size(); ++i) {
      if (O.assignment[i] == a) total += sq(row_of(X, i), mean);
    }
  }
  return total;
}

// Every labelled assignment of n points into k clusters (k^n of them).
template <class Fn>
void for_each_labeling(std::size_t n, std::size_t k, Fn&& fn) {
  std::vector<std::uint32_t> a(n, 0);
  for (;;) {
    fn(ckm::Clustering(a, k));
    std::size_t i = 0;
    while (i < n && a[i] + 1 == k) a[i++] = 0;
    if (i == n) return;
    ++a[i];
  }
}

inline bool near(double a, double b, double rel = 1e-9) {
  return std::abs(a - b) <= rel * std::max(1.0, std::max(std::abs(a), std::abs(b)));
}

}  // namespace ckm_test

#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "ckm/assignment.hpp"

using namespace ckm;

namespace {

double brute(const std::vector<double>& m, std::size_t n) {
  std::vector<std::size_t> p(n);
  std::iota(p.begin(), p.end(), 0);
  double best = 1e300;
  do {
    double s = 0;
    for (std::size_t i = 0; i < n; ++i) s += m[i * n + p[i]];
    best = std::min(best, s);
  } while (std::next_permutation(p.begin(), p.end()));
  return best;
}

}  // namespace

TEST(Hungarian, TwoByTwo) {
  auto a = solve_assignment({1, 5, 5, 1}, 2);
  EXPECT_DOUBLE_EQ(a.total, 2.0);
  EXPECT_EQ(a.column_of_row, (std::vector<std::size_t>{0, 1}));
  auto b = solve_assignment({5, 1, 1, 5}, 2);
  EXPECT_DOUBLE_EQ(b.total, 2.0);
  EXPECT_EQ(b.column_of_row, (std::vector<std::size_t>{1, 0}));
}

TEST(Hungarian, MatchesBruteForce) {
  std::mt19937_64 gen(21);
  std::uniform_real_distribution<double> u(0, 100);
  for (int t = 0; t < 300; ++t) {
    const std::size_t n = 1 + t % 7;
    std::vector<double> m(n * n);
    for (auto& v : m) v = (t % 3 == 0) ? std::floor(u(gen) / 20) : u(gen);  // ties on some
    auto r = solve_assignment(m, n);
    EXPECT_NEAR(r.total, brute(m, n), 1e-9 * std::max(1.0, r.total));
    double s = 0;
    std::vector<bool> used(n, false);
    for (std::size_t i = 0; i < n; ++i) {
      ASSERT_LT(r.column_of_row[i], n);
      EXPECT_FALSE(used[r.column_of_row[i]]);
      used[r.column_of_row[i]] = true;
      s += m[i * n + r.column_of_row[i]];
    }
    EXPECT_NEAR(s, r.total, 1e-9 * std::max(1.0, s));
  }
}

TEST(Hungarian, SizeMismatchThrows) {
  EXPECT_THROW(solve_assignment({1, 2, 3}, 2), InvalidArgument);
}

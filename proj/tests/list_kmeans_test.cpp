#include <gtest/gtest.h>

#include <set>

#include "ckm/list_kmeans.hpp"
#include "ckm/subsets.hpp"
#include "test_util.hpp"

using namespace ckm;

TEST(ExactParams, Values) {
  auto a = paper_params(2, 0.5);
  EXPECT_EQ(a.N, 2183168u);
  EXPECT_EQ(a.M, 200u);
  EXPECT_EQ(a.repeats, 4u);
  EXPECT_EQ(a.mode, ListMode::exact);
  EXPECT_FALSE(a.subset_budget);
  auto b = paper_params(1, 1.0);
  EXPECT_EQ(b.N, 136448u);
  EXPECT_EQ(b.M, 100u);
  EXPECT_EQ(b.repeats, 2u);
  auto c = paper_params(3, 0.1);
  EXPECT_EQ(c.N, 409344000u);
  EXPECT_EQ(c.M, 1000u);
  EXPECT_EQ(c.repeats, 8u);
  auto d = paper_params(1, 0.3);  // non-integral: 136448/0.027 and 100/0.3 round up
  EXPECT_EQ(d.N, 5053630u);
  EXPECT_EQ(d.M, 334u);
}

TEST(ExactParams, Rejects) {
  EXPECT_THROW(paper_params(2, 0.0), InvalidArgument);
  EXPECT_THROW(paper_params(2, -1.0), InvalidArgument);
  EXPECT_THROW(paper_params(2, 1.5), InvalidArgument);
  EXPECT_THROW(paper_params(0, 0.5), InvalidArgument);
  auto p = paper_params(2, 0.5);
  p.N = 10;
  EXPECT_THROW(validate(p), InvalidArgument);
  EXPECT_THROW(validate(practical_params(2, 0.5, 8, 4, 1, 0)), InvalidArgument);
  EXPECT_THROW(validate(practical_params(2, 0.5, 2, 4, 1, 5)), InvalidArgument);  // N < M
}

TEST(ListKMeans, KOneIsCentroidsOfRootSubsets) {
  std::mt19937_64 gen(1);
  auto X = ckm_test::random_dataset(gen, 12, 2);
  auto p = practical_params(1, 0.5, 6, 3, 1, std::nullopt);
  auto L = list_k_means(X, p, 5);
  EXPECT_EQ(L.entries.size(), binomial(6, 3));
  EXPECT_EQ(L.stats.leaves, L.entries.size());
  // Every entry is the mean of 3 dataset rows.
  for (const auto& c : L.entries) {
    ASSERT_EQ(c.size(), 1u);
    bool found = false;
    for (std::size_t a = 0; a < X.size() && !found; ++a)
      for (std::size_t b = a; b < X.size() && !found; ++b)
        for (std::size_t e = b; e < X.size() && !found; ++e) {
          double err = 0;
          for (std::size_t j = 0; j < 2; ++j) {
            const double m = (X.row(a)[j] + X.row(b)[j] + X.row(e)[j]) / 3.0;
            err = std::max(err, std::abs(m - c.row(0)[j]));
          }
          found = err < 1e-9;
        }
    EXPECT_TRUE(found);
  }
}

TEST(ListKMeans, RepeatedPointGivesThatPoint) {
  auto X = Dataset::from_rows({{3, -1}, {3, -1}, {3, -1}});
  auto L = list_k_means(X, practical_params(1, 1.0, 4, 2, 2, std::nullopt), 0);
  for (const auto& c : L.entries) {
    EXPECT_DOUBLE_EQ(c.row(0)[0], 3.0);
    EXPECT_DOUBLE_EQ(c.row(0)[1], -1.0);
  }
}

TEST(ListKMeans, EntryCountsAndShape) {
  std::mt19937_64 gen(2);
  auto X = ckm_test::random_dataset(gen, 10, 2);
  // depth 0 pool N = 5, depth 1 pool N + M = 7; budget 4 per node
  auto p = practical_params(2, 0.5, 5, 2, 1, 4);
  auto L = list_k_means(X, p, 1);
  EXPECT_EQ(L.entries.size(), 16u);
  for (const auto& c : L.entries) EXPECT_EQ(c.size(), 2u);
  p.repeats = 2;
  EXPECT_EQ(list_k_means(X, p, 1).entries.size(), 32u);
  // exhaustive: C(5,2) * C(7,2)
  auto q = practical_params(2, 0.5, 5, 2, 1, std::nullopt);
  auto full = list_k_means(X, q, 1);
  EXPECT_EQ(full.entries.size(), 10u * 21u);
  EXPECT_EQ(full.stats.subsets_enumerated, 10u + 10u * 21u);
}

TEST(ListKMeans, DeterministicAcrossRunsAndThreads) {
  std::mt19937_64 gen(3);
  auto X = ckm_test::random_dataset(gen, 20, 3);
  auto p = practical_params(3, 0.5, 8, 3, 2, 5);
  auto a = list_k_means(X, p, 17, 1);
  auto b = list_k_means(X, p, 17, 1);
  auto c = list_k_means(X, p, 17, 4);
  EXPECT_EQ(a.entries, b.entries);
  EXPECT_EQ(a.entries, c.entries);
  auto d = list_k_means(X, p, 18, 1);
  EXPECT_NE(a.entries, d.entries);
}

TEST(ListKMeans, SecondCenterUsesCopiesOfFirst) {
  // With N = 1 and M = 1 the depth-1 pool is the sample plus one copy of
  // the first center, so the second center is either a sampled data point
  // or the first center itself.
  std::mt19937_64 gen(4);
  auto X = ckm_test::random_dataset(gen, 6, 2);
  auto L = list_k_means(X, practical_params(2, 1.0, 1, 1, 3, std::nullopt), 2);
  EXPECT_EQ(L.entries.size(), 3u * 2u);
  std::size_t copies = 0;
  for (const auto& c : L.entries) {
    if (c.row(0)[0] == c.row(1)[0] && c.row(0)[1] == c.row(1)[1]) ++copies;
  }
  EXPECT_EQ(copies, 3u);
}

TEST(SampleCenters, SubtreeMatchesListAtRoot) {
  std::mt19937_64 gen(5);
  auto X = ckm_test::random_dataset(gen, 10, 2);
  auto p = practical_params(2, 0.5, 5, 2, 1, 3);
  std::vector<CenterSet> got;
  sample_centers(X, p, CenterSet(2), {0}, 11, [&](const CenterSet& c) { got.push_back(c); });
  EXPECT_EQ(got, list_k_means(X, p, 11).entries);
  // a full center set is emitted unchanged
  std::vector<CenterSet> leaf;
  auto full = CenterSet::from_rows({{1, 1}, {2, 2}});
  sample_centers(X, p, full, {0}, 11, [&](const CenterSet& c) { leaf.push_back(c); });
  ASSERT_EQ(leaf.size(), 1u);
  EXPECT_EQ(leaf[0], full);
}

TEST(ListKMeans, SmallInstanceFindsGoodCenters) {
  // Two tight groups of 4; some entry should be within 1.5x of the
  // optimal k-means cost in most runs.
  auto X = Dataset::from_rows({{0, 0}, {0.3, 0.1}, {0.1, 0.4}, {0.2, 0.2}, {5, 5}, {5.2, 5.1}, {4.9, 5.3}, {5.1, 4.8}});
  double opt = 1e300;
  ckm_test::for_each_labeling(8, 2, [&](const Clustering& O) {
    opt = std::min(opt, ckm_test::direct_opt(O, X));
  });
  auto p = practical_params(2, 0.5, 32, 4, 4, 500);
  int ok = 0;
  for (std::uint64_t s = 0; s < 100; ++s) {
    auto L = list_k_means(X, p, s);
    double best = 1e300;
    for (const auto& c : L.entries) best = std::min(best, phi(c, X));
    ok += best <= 1.5 * opt ? 1 : 0;
  }
  EXPECT_GE(ok, 50);
}

TEST(Inaba, Examples) {
  std::mt19937_64 gen(6);
  auto X = ckm_test::gaussian_dataset(gen, 100, 3);
  auto r = inaba_check(X, 4, 0.5, 10000, 1);
  EXPECT_DOUBLE_EQ(r.threshold_factor, 1.5);
  EXPECT_GE(r.rate(), 0.5 - 0.05);
  auto same = Dataset::from_rows({{1, 2}, {1, 2}, {1, 2}});
  EXPECT_DOUBLE_EQ(inaba_check(same, 3, 0.5, 200, 2).rate(), 1.0);
  EXPECT_THROW(inaba_check(X, 0, 0.5, 10, 1), InvalidArgument);
  EXPECT_THROW(inaba_check(X, 2, 1.0, 10, 1), InvalidArgument);
}

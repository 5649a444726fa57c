#include <gtest/gtest.h>

#include "mol/oracle.hpp"
#include "mol/topk.hpp"
#include "support.hpp"

using namespace mol;
using moltest::TinyExample;

TEST(BruteForce, TinyTopOne) {
  TinyExample tiny;
  auto result = brute_force_topk(tiny.query, tiny.index, UniformGate{}, 1);
  ASSERT_EQ(result.item_ids.size(), 1u);
  EXPECT_EQ(result.item_ids[0], 0u);
  EXPECT_NEAR(result.scores[0], 0.7, 1e-6);
  EXPECT_EQ(result.candidates_scored, 3);
}

TEST(BruteForce, KLargerThanCorpus) {
  TinyExample tiny;
  auto result = brute_force_topk(tiny.query, tiny.index, UniformGate{}, 10);
  ASSERT_EQ(result.item_ids.size(), 3u);
  EXPECT_EQ(result.item_ids, (std::vector<std::uint64_t>{0, 1, 2}));
  EXPECT_TRUE(std::is_sorted(result.scores.rbegin(), result.scores.rend()));
}

TEST(BruteForce, KZeroThrows) {
  TinyExample tiny;
  EXPECT_THROW(brute_force_topk(tiny.query, tiny.index, UniformGate{}, 0),
               ArgumentError);
}

TEST(BruteForce, MatchesFullSortOracle) {
  auto inst = moltest::random_instance(123, 10000, 2, 2, 8, false, 1);
  const auto& query = inst.queries[0];
  GatingFunction gate = SoftmaxDotsGate{0.5};

  std::vector<moltest::RankedRow> all;
  for (std::int64_t row = 0; row < inst.index.n_items; ++row) {
    all.push_back({mol_score(query, inst.index, row, gate),
                   inst.index.item_ids[size_t(row)]});
  }
  auto expected = moltest::full_sort_topk(std::move(all), 100);

  auto result = brute_force_topk(query, inst.index, gate, 100);
  ASSERT_EQ(result.item_ids.size(), expected.size());
  for (size_t i = 0; i < expected.size(); ++i) {
    EXPECT_EQ(result.item_ids[i], expected[i].key) << "rank " << i;
    EXPECT_EQ(result.scores[i], expected[i].score) << "rank " << i;
  }
}

TEST(TopKDotProduct, Tiny) {
  std::vector<float> rows = {0.5f, 0.8f, 0.2f};
  std::vector<double> query = {1.0};
  auto top = topk_dot_product(query, rows.data(), 3, 1, 2);
  EXPECT_EQ(top.rows, (std::vector<std::int64_t>{1, 0}));
  ASSERT_EQ(top.dots.size(), 2u);
  EXPECT_DOUBLE_EQ(top.dots[0], double(0.8f));
  EXPECT_DOUBLE_EQ(top.dots[1], 0.5);
}

TEST(TopKDotProduct, TieTakesLowestRow) {
  std::vector<float> rows = {0.5f, 0.5f, 0.5f};
  std::vector<double> query = {1.0};
  auto top = topk_dot_product(query, rows.data(), 3, 1, 1);
  EXPECT_EQ(top.rows, (std::vector<std::int64_t>{0}));
}

TEST(TopKDotProduct, MatchesFullSortOnRandomMatrix) {
  SplitMix64 rng(9);
  const std::int64_t n = 5000;
  const int dim = 64;
  std::vector<float> data(size_t(n) * dim);
  for (auto& x : data) x = float(rng.gaussian());
  std::vector<double> query(dim);
  for (auto& x : query) x = rng.gaussian();

  auto top = topk_dot_product(std::span<const double>(query), data.data(), n,
                              dim, 50);

  std::vector<moltest::RankedRow> all;
  for (std::int64_t r = 0; r < n; ++r) {
    double dot = 0.0;
    for (int t = 0; t < dim; ++t) dot += query[size_t(t)] * double(data[size_t(r) * dim + size_t(t)]);
    all.push_back({dot, std::uint64_t(r)});
  }
  auto expected = moltest::full_sort_topk(std::move(all), 50);
  ASSERT_EQ(top.rows.size(), expected.size());
  for (size_t i = 0; i < expected.size(); ++i) {
    EXPECT_EQ(top.rows[i], std::int64_t(expected[i].key));
    EXPECT_EQ(top.dots[i], expected[i].score);
  }
}

TEST(TopKDotProduct, FullKIsSortingPermutation) {
  SplitMix64 rng(10);
  const std::int64_t n = 200;
  std::vector<float> data(size_t(n) * 4);
  for (auto& x : data) x = float(rng.gaussian());
  std::vector<double> query = {0.3, -1.2, 0.7, 0.1};
  auto top = topk_dot_product(std::span<const double>(query), data.data(), n, 4, n);
  ASSERT_EQ(top.rows.size(), size_t(n));
  EXPECT_TRUE(std::is_sorted(top.dots.rbegin(), top.dots.rend()));
  auto rows = top.rows;
  std::sort(rows.begin(), rows.end());
  for (std::int64_t r = 0; r < n; ++r) EXPECT_EQ(rows[size_t(r)], r);
}

TEST(RangeDotProduct, Tiny) {
  std::vector<float> rows = {0.5f, 0.8f, 0.2f};
  std::vector<double> query = {1.0};
  auto hits = range_dot_product(std::span<const double>(query), rows.data(), 3,
                                1, 0.45);
  EXPECT_EQ(hits, (std::vector<std::int64_t>{0, 1}));
}

TEST(RangeDotProduct, MinusInfinityKeepsEverything) {
  std::vector<float> rows = {0.5f, 0.8f, 0.2f};
  std::vector<double> query = {1.0};
  auto hits = range_dot_product(std::span<const double>(query), rows.data(), 3,
                                1, -std::numeric_limits<double>::infinity());
  EXPECT_EQ(hits, (std::vector<std::int64_t>{0, 1, 2}));
}

TEST(RangeDotProduct, ThresholdIsInclusive) {
  std::vector<float> rows = {0.5f, 0.8f, 0.2f};
  std::vector<double> query = {1.0};
  auto hits = range_dot_product(std::span<const double>(query), rows.data(), 3,
                                1, double(0.8f));
  EXPECT_EQ(hits, (std::vector<std::int64_t>{1}));
}

TEST(RangeDotProduct, SupersetOfTopK) {
  SplitMix64 rng(77);
  const std::int64_t n = 500;
  const int dim = 8;
  std::vector<float> data(size_t(n) * dim);
  for (auto& x : data) x = float(rng.gaussian());
  std::vector<double> query(dim);
  for (auto& x : query) x = rng.gaussian();

  auto top = topk_dot_product(std::span<const double>(query), data.data(), n,
                              dim, 25);
  auto hits = range_dot_product(std::span<const double>(query), data.data(), n,
                                dim, top.dots.back());
  for (std::int64_t row : top.rows) {
    EXPECT_TRUE(std::find(hits.begin(), hits.end(), row) != hits.end());
  }
}

TEST(TopKDotProduct, DimensionMismatchThrows) {
  std::vector<float> rows = {0.5f, 0.8f};
  std::vector<double> query = {1.0, 2.0};
  EXPECT_THROW(topk_dot_product(std::span<const double>(query), rows.data(), 2,
                                1, 1),
               ConfigError);
}

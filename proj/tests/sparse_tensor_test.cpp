#include "stc/sparse_tensor.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include "gtest/gtest.h"

using stc::MultiIndex;
using stc::SparseCounts;

namespace {

MultiIndex mi(std::initializer_list<stc::Index> v) { return MultiIndex(std::vector<stc::Index>(v)); }

}  // namespace

TEST(MultiIndex, OrdersLexicographically) {
  EXPECT_LT(mi({0, 5}), mi({1, 0}));
  EXPECT_LT(mi({1, 0}), mi({1, 1}));
  EXPECT_EQ(mi({2, 3}), mi({2, 3}));
  EXPECT_LT(mi({}), mi({0}));
}

TEST(MultiIndex, SelectAndWithout) {
  auto j = mi({4, 7, 9});
  std::vector<std::size_t> keep{0, 2};
  EXPECT_EQ(j.select(keep), mi({4, 9}));
  EXPECT_EQ(j.without(1), mi({4, 9}));
  EXPECT_EQ(j.without(0), mi({7, 9}));
  EXPECT_FALSE(j.has_unknown());
  EXPECT_TRUE(mi({1, stc::kUnknownIndex}).has_unknown());
}

TEST(SparseCounts, AddAndLookup) {
  SparseCounts c(1, 2);
  c.add(mi({0}), mi({1, 2}), 3.0);
  c.add(mi({0}), mi({1, 2}), 2.0);
  c.add(mi({1}), mi({0, 0}), 1.0);
  EXPECT_DOUBLE_EQ(c.weight(mi({0}), mi({1, 2})), 5.0);
  EXPECT_DOUBLE_EQ(c.weight(mi({1}), mi({1, 2})), 0.0);
  EXPECT_EQ(c.nnz(), 2u);
  EXPECT_DOUBLE_EQ(c.total_weight(), 6.0);
}

TEST(SparseCounts, ZeroWeightIsNoOp) {
  SparseCounts c(1, 1);
  c.add(mi({0}), mi({0}), 0.0);
  EXPECT_TRUE(c.empty());
}

TEST(SparseCounts, RejectsNegativeAndNonFinite) {
  SparseCounts c(1, 1);
  EXPECT_THROW(c.add(mi({0}), mi({0}), -1.0), std::invalid_argument);
  EXPECT_THROW(c.add(mi({0}), mi({0}), std::numeric_limits<double>::quiet_NaN()), std::invalid_argument);
  EXPECT_THROW(c.add(mi({0}), mi({0}), std::numeric_limits<double>::infinity()), std::invalid_argument);
}

TEST(SparseCounts, ShapeMismatchThrows) {
  SparseCounts c(1, 2);
  EXPECT_THROW(c.add(mi({0}), mi({0}), 1.0), stc::ShapeError);
  EXPECT_THROW(c.add(mi({0, 1}), mi({0, 0}), 1.0), stc::ShapeError);
  SparseCounts other(1, 1);
  EXPECT_THROW(c.accumulate(other), stc::ShapeError);
  EXPECT_THROW(SparseCounts(0, 1), stc::ShapeError);
}

TEST(SparseCounts, AccumulateIsEntrywiseSum) {
  SparseCounts a(1, 1), b(1, 1);
  a.add(mi({0}), mi({0}), 1.0);
  a.add(mi({1}), mi({2}), 2.0);
  b.add(mi({0}), mi({0}), 4.0);
  b.add(mi({2}), mi({1}), 8.0);
  auto s = stc::accumulate(a, b);
  EXPECT_DOUBLE_EQ(s.weight(mi({0}), mi({0})), 5.0);
  EXPECT_DOUBLE_EQ(s.weight(mi({1}), mi({2})), 2.0);
  EXPECT_DOUBLE_EQ(s.weight(mi({2}), mi({1})), 8.0);
  EXPECT_EQ(s.nnz(), 3u);
}

TEST(SparseCounts, ContractFeatureDimension) {
  SparseCounts c(1, 2);
  c.add(mi({0}), mi({0, 0}), 1.0);
  c.add(mi({0}), mi({0, 1}), 2.0);
  c.add(mi({1}), mi({1, 1}), 4.0);
  auto drop_second = stc::contract_feature_dim(c, 1);
  EXPECT_EQ(drop_second.feature_dims(), 1u);
  EXPECT_DOUBLE_EQ(drop_second.weight(mi({0}), mi({0})), 3.0);
  EXPECT_DOUBLE_EQ(drop_second.weight(mi({1}), mi({1})), 4.0);
  auto drop_first = stc::contract_feature_dim(c, 0);
  EXPECT_DOUBLE_EQ(drop_first.weight(mi({0}), mi({0})), 1.0);
  EXPECT_DOUBLE_EQ(drop_first.weight(mi({0}), mi({1})), 2.0);
  EXPECT_THROW(stc::contract_feature_dim(c, 2), stc::ShapeError);
}

TEST(SparseCounts, ContractAllFeaturesGivesTargetMarginal) {
  SparseCounts c(1, 2);
  c.add(mi({0}), mi({0, 0}), 1.0);
  c.add(mi({0}), mi({3, 1}), 2.0);
  c.add(mi({1}), mi({1, 1}), 4.0);
  auto none = stc::contract_features(c, std::vector<std::size_t>{});
  EXPECT_EQ(none.feature_dims(), 0u);
  EXPECT_DOUBLE_EQ(none.weight(mi({0}), mi({})), 3.0);
  EXPECT_DOUBLE_EQ(none.weight(mi({1}), mi({})), 4.0);
}

TEST(SparseCounts, Marginals) {
  SparseCounts c(1, 1);
  c.add(mi({0}), mi({0}), 1.0);
  c.add(mi({1}), mi({0}), 2.0);
  c.add(mi({1}), mi({1}), 4.0);
  auto by_feature = stc::marginal_over_targets(c);
  auto by_target = stc::marginal_over_features(c);
  EXPECT_DOUBLE_EQ(by_feature.at(mi({0})), 3.0);
  EXPECT_DOUBLE_EQ(by_feature.at(mi({1})), 4.0);
  EXPECT_DOUBLE_EQ(by_target.at(mi({0})), 1.0);
  EXPECT_DOUBLE_EQ(by_target.at(mi({1})), 6.0);
}

TEST(SparseCounts, ScaleAndEquality) {
  SparseCounts a(1, 1), b(1, 1);
  a.add(mi({0}), mi({0}), 2.0);
  b.add(mi({0}), mi({0}), 1.0);
  EXPECT_FALSE(a == b);
  b.scale(2.0);
  EXPECT_TRUE(a == b);
}

TEST(SparseCounts, ForEachVisitsFeatureThenTargetOrder) {
  SparseCounts c(1, 1);
  c.add(mi({1}), mi({0}), 1.0);
  c.add(mi({0}), mi({1}), 1.0);
  c.add(mi({0}), mi({0}), 1.0);
  std::vector<std::pair<MultiIndex, MultiIndex>> seen;
  c.for_each([&](const MultiIndex& i, const MultiIndex& j, double) { seen.emplace_back(j, i); });
  ASSERT_EQ(seen.size(), 3u);
  EXPECT_EQ(seen[0], std::make_pair(mi({0}), mi({0})));
  EXPECT_EQ(seen[1], std::make_pair(mi({0}), mi({1})));
  EXPECT_EQ(seen[2], std::make_pair(mi({1}), mi({0})));
}

TEST(WeightMap, ContractWeights) {
  stc::WeightMap x{{mi({0, 1}), 1.0}, {mi({0, 2}), 2.0}, {mi({1, 2}), 4.0}};
  auto r = stc::contract_weights(x, std::vector<std::size_t>{0});
  EXPECT_DOUBLE_EQ(r.at(mi({0})), 3.0);
  EXPECT_DOUBLE_EQ(r.at(mi({1})), 4.0);
  EXPECT_DOUBLE_EQ(stc::total_of(x), 7.0);
}

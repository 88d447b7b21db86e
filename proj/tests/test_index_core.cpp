#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "test_support.hpp"

using namespace tensorsplit;

namespace {

IndexVector random_index(std::mt19937_64& g, Coord coords, Level max_level) {
  IndexVector j;
  for (Coord k = 1; k <= coords; ++k) j.set(k, static_cast<Level>(g() % (max_level + 1)));
  return j;
}

// all i with i <= j, by explicit enumeration of the level box
std::set<std::string> brute_lower(const IndexVector& j) {
  std::set<std::string> out;
  std::vector<std::pair<Coord, Level>> e(j.begin(), j.end());
  std::vector<Level> cur(e.size(), 0);
  for (;;) {
    IndexVector i;
    for (std::size_t t = 0; t < e.size(); ++t) i.set(e[t].first, cur[t]);
    out.insert(i.to_string());
    std::size_t t = 0;
    while (t < e.size() && ++cur[t] > e[t].second) cur[t++] = 0;
    if (t == e.size()) break;
  }
  return out;
}

}  // namespace

TEST(Support, ZeroIndexHasEmptySupport) { EXPECT_TRUE(support(IndexVector{}).empty()); }

TEST(Support, ListsNonzeroCoordinates) {
  EXPECT_EQ(support(IndexVector{{1, 2}, {3, 1}}), (SupportSet{1, 3}));
  EXPECT_EQ(support(IndexVector{{5, 7}}), (SupportSet{5}));
}

TEST(IndexVector, LevelZeroIsNeverStored) {
  IndexVector j{{2, 3}};
  j.set(2, 0);
  EXPECT_TRUE(j.is_zero());
  EXPECT_EQ(j.l0(), 0u);
  j.set(4, 0);
  EXPECT_TRUE(j.entries().empty());
}

TEST(IndexVector, NormsAndFormatting) {
  const IndexVector j{{3, 1}, {1, 2}};
  EXPECT_EQ(j.l0(), 2u);
  EXPECT_EQ(j.l1(), 3u);
  EXPECT_EQ(j[1], 2u);
  EXPECT_EQ(j[2], 0u);
  EXPECT_EQ(j.to_string(), "{1:2,3:1}");
  EXPECT_EQ(j.max_coord(), 3u);
}

TEST(IndexVector, CoordinateZeroRejected) {
  EXPECT_THROW(IndexVector::unit(0), Error);
  EXPECT_THROW(SupportSet({0, 1}), Error);
}

TEST(Leq, Examples) {
  EXPECT_TRUE(leq(IndexVector{}, IndexVector{{1, 3}}));
  EXPECT_FALSE(leq(IndexVector{{1, 2}}, IndexVector{{1, 1}}));
  EXPECT_FALSE(leq(IndexVector{{1, 1}, {2, 1}}, IndexVector{{1, 2}}));
}

TEST(Leq, IsAPartialOrder) {
  auto g = tstest::rng(1);
  for (int it = 0; it < 400; ++it) {
    const auto i = random_index(g, 3, 2), j = random_index(g, 3, 2), k = random_index(g, 3, 2);
    EXPECT_TRUE(leq(i, i));
    if (leq(i, j) && leq(j, i)) {
      EXPECT_EQ(i, j);
    }
    if (leq(i, j) && leq(j, k)) {
      EXPECT_TRUE(leq(i, k));
    }
  }
}

TEST(IndexVector, L1DominatesL0) {
  auto g = tstest::rng(2);
  for (int it = 0; it < 300; ++it) {
    const auto j = random_index(g, 5, 3);
    EXPECT_GE(j.l1(), j.l0());
    const bool all_one = std::all_of(j.begin(), j.end(), [](const auto& e) { return e.second == 1; });
    EXPECT_EQ(j.l1() == j.l0(), all_one);
  }
}

TEST(DownwardClosure, ChainBelowSingleIndex) {
  IndexSet s;
  s.insert(IndexVector{{1, 2}});
  const IndexSet c = downward_closure(s);
  IndexSet expect;
  expect.insert(IndexVector{});
  expect.insert(IndexVector{{1, 1}});
  expect.insert(IndexVector{{1, 2}});
  EXPECT_TRUE(c == expect);
}

TEST(DownwardClosure, EmptyStaysEmpty) { EXPECT_EQ(downward_closure(IndexSet{}).size(), 0u); }

TEST(DownwardClosure, TwoCoordinateBox) {
  IndexSet s;
  s.insert(IndexVector{{1, 1}, {2, 1}});
  const IndexSet c = downward_closure(s);
  EXPECT_EQ(c.size(), 4u);
  for (const auto& j : {IndexVector{}, IndexVector{{1, 1}}, IndexVector{{2, 1}}, IndexVector{{1, 1}, {2, 1}}})
    EXPECT_TRUE(c.contains(j)) << j.to_string();
}

TEST(DownwardClosure, MatchesBruteForceAndIsIdempotent) {
  auto g = tstest::rng(3);
  for (int it = 0; it < 60; ++it) {
    IndexSet s;
    std::set<std::string> expect;
    const int m = 1 + static_cast<int>(g() % 4);
    for (int t = 0; t < m; ++t) {
      const auto j = random_index(g, 3, 2);
      s.insert(j);
      for (const auto& str : brute_lower(j)) expect.insert(str);
    }
    const IndexSet c = downward_closure(s);
    std::set<std::string> got;
    for (const auto& j : c) got.insert(j.to_string());
    EXPECT_EQ(got, expect);
    EXPECT_TRUE(downward_closure(c) == c);
    EXPECT_TRUE(is_monotone(c));
  }
}

TEST(IsMonotone, Examples) {
  IndexSet zero;
  zero.insert(IndexVector{});
  EXPECT_TRUE(is_monotone(zero));
  IndexSet unit;
  unit.insert(IndexVector{{1, 1}});
  EXPECT_FALSE(is_monotone(unit));
}

TEST(IsMonotone, CacheInvalidatedByInsert) {
  IndexSet s;
  s.insert(IndexVector{});
  EXPECT_TRUE(s.is_monotone());
  s.insert(IndexVector{{2, 2}});
  EXPECT_FALSE(s.is_monotone());
  s.insert(IndexVector{{2, 1}});
  EXPECT_TRUE(s.is_monotone());
}

TEST(IndexSet, CanonicalIterationOrder) {
  IndexSet s;
  for (const auto& j : {IndexVector{{2, 1}}, IndexVector{{1, 2}}, IndexVector{}, IndexVector{{1, 1}}, IndexVector{{1, 1}, {2, 1}}})
    s.insert(j);
  std::vector<std::string> got;
  for (const auto& j : s) got.push_back(j.to_string());
  EXPECT_EQ(got, (std::vector<std::string>{"{}", "{1:1}", "{2:1}", "{1:2}", "{1:1,2:1}"}));
}

TEST(SupportSet, SubsetsInSizeThenLexOrder) {
  const auto s = subsets_of(SupportSet{1, 2, 3});
  std::vector<std::string> got;
  for (const auto& w : s) got.push_back(w.to_string());
  EXPECT_EQ(got, (std::vector<std::string>{"{}", "{1}", "{2}", "{3}", "{1,2}", "{1,3}", "{2,3}", "{1,2,3}"}));
  EXPECT_EQ(all_subsets(4).size(), 16u);
}

TEST(SupportSet, SubsetRelation) {
  EXPECT_TRUE(SupportSet{}.is_subset_of(SupportSet{2}));
  EXPECT_TRUE((SupportSet{1, 3}).is_subset_of(SupportSet{1, 2, 3}));
  EXPECT_FALSE((SupportSet{1, 4}).is_subset_of(SupportSet{1, 2, 3}));
}

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "errloc/error.hpp"
#include "errloc/hypergeom.hpp"
#include "errloc/rng.hpp"
#include "errloc/slicing.hpp"
#include "fixtures.hpp"

using namespace errloc;

namespace {

Dataset age_planted(std::uint64_t seed, std::size_t n) {
  Rng rng(seed);
  std::vector<double> age(n), noise(n);
  std::vector<std::string> shade(n);
  std::vector<int> correct(n);
  for (std::size_t r = 0; r < n; ++r) {
    age[r] = static_cast<double>(18 + rng.below(73));
    noise[r] = std::floor(rng.uniform() * 100.0);
    shade[r] = rng.below(2) ? "dark" : "light";
    correct[r] = rng.uniform() >= (age[r] >= 60 ? 0.5 : 0.05);
  }
  std::vector<FeatureColumn> f;
  f.push_back(FeatureColumn::make_numeric("age", std::move(age)));
  f.push_back(FeatureColumn::make_numeric("noise", std::move(noise)));
  f.push_back(FeatureColumn::make_categorical("shade", shade));
  return fixture::with_correctness(std::move(f), correct);
}

Slice made(std::size_t support, std::size_t errors) {
  Slice s;
  s.predicates.push_back(Predicate::interval("x", static_cast<double>(support), 1e9));
  s.support = support;
  s.errors = errors;
  return s;
}

}  // namespace

TEST(SliceSearch, RecoversPlantedAgeRegion) {
  const Dataset d = age_planted(11, 3000);
  const auto res = search_slices(d);
  ASSERT_FALSE(res.slices.empty());
  bool found = false;
  for (const auto& s : res.slices) {
    if (s.predicates.size() != 1 || s.predicates[0].feature != "age") continue;
    const auto& p = s.predicates[0];
    if (p.lo >= 55 && p.lo <= 65 && s.error_rate() > 0.3) found = true;
  }
  EXPECT_TRUE(found);
}

TEST(SliceSearch, NoErrorsNoSlices) {
  std::vector<int> correct(500, 1);
  std::vector<double> x(500);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<double>(i);
  std::vector<FeatureColumn> f;
  f.push_back(FeatureColumn::make_numeric("x", x));
  const auto res = search_slices(fixture::with_correctness(std::move(f), correct));
  EXPECT_TRUE(res.slices.empty());
}

TEST(SliceSearch, OneTreePerCombination) {
  const Dataset d = age_planted(2, 600);
  EXPECT_EQ(search_slices(d).trees_grown, 6u);
  SliceConfig c;
  c.max_combo = 1;
  EXPECT_EQ(search_slices(d, c).trees_grown, 3u);
  c.max_combo = 3;
  EXPECT_EQ(search_slices(d, c).trees_grown, 7u);
  c.max_combo = 4;
  EXPECT_THROW(search_slices(d, c), InvalidArgument);
}

TEST(SliceSearch, CombinationOrder) {
  const auto c = feature_combinations(3, 2);
  const std::vector<std::vector<std::size_t>> want{{0}, {1}, {2}, {0, 1}, {0, 2}, {1, 2}};
  EXPECT_EQ(c, want);
}

TEST(SliceSearch, DefaultThresholds) {
  EXPECT_EQ(default_min_support(1000), 20u);
  EXPECT_EQ(default_min_support(4001), 21u);
  EXPECT_EQ(default_min_support(7326), 37u);
  const Dataset t = fixture::table1_dataset();
  const double acc = 0.95;
  EXPECT_NEAR(default_accuracy_threshold(t), acc - 2 * std::sqrt(acc * (1 - acc) / 1000), 1e-12);
}

// Every returned slice satisfies the filters, and its stored counts match a
// re-measurement by predicate membership.
TEST(SliceSearch, FilterInvariants) {
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    const Dataset d = fixture::synthetic(seed, {.rows = 1500});
    const auto res = search_slices(d);
    const std::size_t n = d.size(), m = d.error_count();
    for (std::size_t i = 0; i < res.slices.size(); ++i) {
      const auto& s = res.slices[i];
      const auto rows = slice_members(s, d);
      ASSERT_EQ(rows.size(), s.support);
      ASSERT_EQ(d.error_count(rows), s.errors);
      EXPECT_GE(s.support, res.min_support);
      EXPECT_LE(s.accuracy, res.accuracy_threshold);
      EXPECT_LT(s.p_value, 0.01);
      EXPECT_NEAR(s.p_value, hypergeom_p(n, n - m, s.support, s.support - s.errors), 1e-12);
      EXPECT_GE(s.rank, 0.0);
      EXPECT_LE(s.rank, 1.0);
      for (std::size_t j = 0; j < i; ++j) EXPECT_NE(res.slices[j].predicates, s.predicates);
      for (std::size_t a = 0; a < s.predicates.size(); ++a)
        for (std::size_t b = 0; b < a; ++b)
          EXPECT_NE(s.predicates[a].feature, s.predicates[b].feature);
    }
  }
}

TEST(SliceSearch, MissingValuesAreNonMembers) {
  const Dataset d = fixture::synthetic(9, {.rows = 1500});
  for (const auto& s : find_slices(d)) {
    const auto mask = slice_mask(s, d);
    for (const auto& p : s.predicates) {
      const auto col = *d.find_feature(p.feature);
      for (std::size_t r = 0; r < d.size(); ++r)
        if (d.feature(col).is_missing(r)) EXPECT_EQ(mask[r], 0);
    }
  }
}

TEST(SliceSearch, Deterministic) {
  const Dataset d = fixture::synthetic(4, {.rows = 1200});
  SliceConfig a, b;
  a.workers = 1;
  b.workers = 4;
  const auto x = find_slices(d, a), y = find_slices(d, b);
  ASSERT_EQ(x.size(), y.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    EXPECT_EQ(x[i].predicates, y[i].predicates);
    EXPECT_EQ(x[i].rank, y[i].rank);
  }
}

TEST(SliceMembers, SchemaMismatch) {
  const Dataset d = fixture::synthetic(1, {.rows = 50});
  Slice s;
  s.predicates.push_back(Predicate::interval("nope", 0, 1));
  EXPECT_THROW(slice_members(s, d), SchemaError);
  s.predicates = {Predicate::category_set("age", {"x"})};
  EXPECT_THROW(slice_members(s, d), SchemaError);
}

TEST(RankSlices, SingleSliceInRange) {
  const auto r = rank_slices({made(50, 10)});
  ASSERT_EQ(r.size(), 1u);
  EXPECT_GE(r[0].rank, 0.0);
  EXPECT_LE(r[0].rank, 1.0);
}

TEST(RankSlices, HigherErrorRateRanksHigherAtEqualSupport) {
  const auto r = rank_slices({made(100, 20), made(100, 90), made(300, 60), made(40, 10)});
  EXPECT_GT(r[1].rank, r[0].rank);
}

TEST(RankSlices, OrderIndependent) {
  std::vector<Slice> s{made(30, 20), made(100, 40), made(500, 90), made(60, 30), made(45, 9)};
  const auto base = rank_slices(s);
  std::vector<std::size_t> perm{0, 1, 2, 3, 4};
  Rng rng(3);
  for (int t = 0; t < 10; ++t) {
    rng.shuffle(std::span<std::size_t>(perm));
    std::vector<Slice> shuffled;
    for (auto i : perm) shuffled.push_back(s[i]);
    const auto r = rank_slices(shuffled);
    for (std::size_t i = 0; i < perm.size(); ++i) EXPECT_NEAR(r[i].rank, base[perm[i]].rank, 1e-12);
  }
}

TEST(Render, Formats) {
  Slice s;
  s.predicates.push_back(Predicate::category_set("RACE", {"White", "Black"}));
  s.predicates.push_back(Predicate::interval("EXPERIENCE", 10, 13));
  EXPECT_EQ(render(s), "(RACE ∈ {Black, White}) & (10 ≤ EXPERIENCE ≤ 13)");
  const double inf = std::numeric_limits<double>::infinity();
  EXPECT_EQ(render(Predicate::interval("age", 60, inf)), "(age ≥ 60)");
  EXPECT_EQ(render(Predicate::interval("age", -inf, 2.5)), "(age ≤ 2.5)");
}

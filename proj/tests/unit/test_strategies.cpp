#include <gtest/gtest.h>

#include <set>

#include "errloc/error.hpp"
#include "errloc/strategies.hpp"
#include "fixtures.hpp"

using namespace errloc;
using fixture::set_instance;

namespace {

const SliceUnionRule& union_body(const FitResult& r) {
  return std::get<SliceUnionRule>(std::get<AttentionRule>(r).body);
}

std::vector<std::string> names(const SliceUnionRule& b) {
  std::vector<std::string> out;
  for (const auto& s : b.slices) out.push_back(s.predicates[0].feature);
  return out;
}

Dataset with_labels_and_conf(std::vector<std::string> labels, std::vector<int> correct,
                             std::optional<std::vector<double>> conf = std::nullopt) {
  const std::size_t n = labels.size();
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = static_cast<double>(i);
  DatasetParts p;
  p.features.push_back(FeatureColumn::make_numeric("x", x));
  std::vector<std::string> preds(labels);
  for (std::size_t i = 0; i < n; ++i)
    if (!correct[i]) preds[i] = labels[i] + "_wrong";
  p.labels = std::move(labels);
  p.predictions = std::move(preds);
  p.confidence = std::move(conf);
  return derive_z(Dataset(std::move(p)));
}

}  // namespace

TEST(Budget, Capacity) {
  EXPECT_EQ(budget_capacity(0.2, 10), 2u);
  EXPECT_EQ(budget_capacity(0.07, 100), 7u);  // 0.07*100 is 7.000000000000001
  EXPECT_EQ(budget_capacity(0.3, 10), 3u);    // 0.3*10 is 2.9999999999999996
  const auto g = BudgetGrid::uniform(0.2, 0.05);
  ASSERT_EQ(g.size(), 4u);
  EXPECT_DOUBLE_EQ(g.budgets[1], 0.1);
  EXPECT_EQ(g.max_budget(), 0.2);
  EXPECT_THROW(BudgetGrid::uniform(0.2, 0.0), InvalidArgument);
}

TEST(Strategy, NamesRoundTrip) {
  for (auto s : kAllStrategies) EXPECT_EQ(strategy_from_string(to_string(s)), s);
  EXPECT_THROW(strategy_from_string("best"), InvalidArgument);
}

TEST(SetCover, RatioOrder) {
  // rows 0..6, errors 0,1,2; A = {0,3}, B = {1,2,4}, C = {0,1,3,4,5}
  const auto inst = set_instance({0, 0, 0, 1, 1, 1, 1}, {{0, 3}, {1, 2, 4}, {0, 1, 3, 4, 5}});
  const auto r = fit_set_cover(inst.data, inst.slices, 1.0);
  ASSERT_TRUE(fitted(r));
  EXPECT_EQ(names(union_body(r)), (std::vector<std::string>{"s1", "s0"}));
  EXPECT_EQ(union_body(r).cumulative_union, (std::vector<std::size_t>{3, 5}));
}

TEST(SetCover, PureErrorSliceFirst) {
  std::vector<int> correct(20, 1);
  correct[3] = correct[4] = 0;
  const auto inst = set_instance(correct, {{3, 4}});
  const auto r = fit_set_cover(inst.data, inst.slices, 0.2);
  ASSERT_TRUE(fitted(r));
  EXPECT_EQ(union_body(r).slices.size(), 1u);
}

TEST(SetCover, EverySliceTooLargeFails) {
  std::vector<int> correct(20, 1);
  correct[0] = 0;
  const auto inst = set_instance(correct, {{0, 1, 2, 3, 4}, {0, 5, 6, 7, 8, 9}});
  const auto r = fit_set_cover(inst.data, inst.slices, 0.2);
  ASSERT_FALSE(fitted(r));
  EXPECT_EQ(std::get<FitFailure>(r).strategy, Strategy::set_cover);
  EXPECT_FALSE(fitted(fit_set_cover(inst.data, {}, 0.2)));
}

TEST(SetCover, StopsAtFirstOverflow) {
  // second choice overflows even though a later small slice would fit
  std::vector<int> correct(20, 1);
  for (int r : {0, 1, 2, 3, 4}) correct[r] = 0;
  const auto inst = set_instance(correct, {{0, 1, 2}, {3, 4, 10}, {3, 11}});
  const auto r = fit_set_cover(inst.data, inst.slices, 0.2);  // capacity 4
  ASSERT_TRUE(fitted(r));
  EXPECT_EQ(names(union_body(r)), (std::vector<std::string>{"s0"}));
}

TEST(RankOrder, DescendingRank) {
  std::vector<int> correct(30, 1);
  correct[0] = correct[5] = correct[9] = 0;
  auto inst = set_instance(correct, {{0, 1}, {5, 6}, {9, 10}});
  inst.slices[0].rank = 0.1;
  inst.slices[1].rank = 0.9;
  inst.slices[2].rank = 0.5;
  const auto r = fit_rank_order(inst.data, inst.slices, 0.2);
  ASSERT_TRUE(fitted(r));
  EXPECT_EQ(names(union_body(r)), (std::vector<std::string>{"s1", "s2", "s0"}));
}

TEST(RankOrder, TopSliceTooLargeFails) {
  std::vector<int> correct(10, 1);
  correct[0] = 0;
  auto inst = set_instance(correct, {{0, 1, 2, 3}, {0}});
  inst.slices[0].rank = 1.0;
  EXPECT_FALSE(fitted(fit_rank_order(inst.data, inst.slices, 0.2)));
}

TEST(RankOrder, PrefixUsesUnionSize) {
  // sizes 2+2+2 = 6 > capacity 4, but the union is 4
  std::vector<int> correct(20, 1);
  correct[0] = 0;
  auto inst = set_instance(correct, {{0, 1}, {1, 2}, {2, 3}});
  inst.slices[0].rank = 0.9;
  inst.slices[1].rank = 0.8;
  inst.slices[2].rank = 0.7;
  const auto r = fit_rank_order(inst.data, inst.slices, 0.2);
  ASSERT_TRUE(fitted(r));
  EXPECT_EQ(union_body(r).slices.size(), 3u);
  EXPECT_EQ(union_body(r).cumulative_union.back(), 4u);
}

TEST(RandomOrder, SeededPermutation) {
  std::vector<int> correct(200, 1);
  std::vector<std::vector<std::size_t>> members;
  for (std::size_t k = 0; k < 8; ++k) {
    members.push_back({k * 3, k * 3 + 1});
    correct[k * 3] = 0;
  }
  const auto inst = set_instance(correct, members);
  const auto a = fit_random_order(inst.data, inst.slices, 0.2, 7);
  const auto b = fit_random_order(inst.data, inst.slices, 0.2, 7);
  EXPECT_EQ(names(union_body(a)), names(union_body(b)));
  std::set<std::vector<std::string>> orders;
  for (std::uint64_t s = 0; s < 10; ++s)
    orders.insert(names(union_body(fit_random_order(inst.data, inst.slices, 0.2, s))));
  EXPECT_GT(orders.size(), 1u);
}

TEST(WorstLabel, BinaryLabelsFail) {
  std::vector<std::string> y;
  std::vector<int> c;
  for (int i = 0; i < 100; ++i) {
    y.push_back(i % 2 ? "pos" : "neg");
    c.push_back(i % 7 != 0);
  }
  const auto r = fit_worst_label(with_labels_and_conf(y, c), 0.2);
  EXPECT_FALSE(fitted(r));
}

TEST(WorstLabel, RareWorstLabelChosen) {
  std::vector<std::string> y;
  std::vector<int> c;
  for (int i = 0; i < 1200; ++i) {
    const int lab = i < 50 ? 11 : i % 11;
    y.push_back("L" + std::to_string(lab));
    c.push_back(lab == 11 ? i % 2 : i % 13 != 0);
  }
  const auto r = fit_worst_label(with_labels_and_conf(y, c), 0.2);
  ASSERT_TRUE(fitted(r));
  const auto& body = std::get<LabelRule>(std::get<AttentionRule>(r).body);
  EXPECT_EQ(body.labels.front(), "L11");
  EXPECT_LE(body.cumulative_count.back(), 240u);
}

TEST(WorstLabel, TiesLexicographic) {
  std::vector<std::string> y;
  std::vector<int> c;
  for (int i = 0; i < 100; ++i) {
    y.push_back(std::string(1, static_cast<char>('a' + (9 - i % 10))));
    c.push_back(1);
  }
  const auto r = fit_worst_label(with_labels_and_conf(y, c), 0.2);
  const auto& body = std::get<LabelRule>(std::get<AttentionRule>(r).body);
  EXPECT_EQ(body.labels, (std::vector<std::string>{"a", "b"}));
}

TEST(Confidence, ExactQuantile) {
  std::vector<double> conf;
  for (int i = 1; i <= 10; ++i) conf.push_back(i / 10.0);
  const Dataset d = with_labels_and_conf(std::vector<std::string>(10, "a"),
                                         {0, 1, 1, 1, 1, 1, 1, 1, 1, 1}, conf);
  const auto r = fit_confidence(d, 0.2);
  ASSERT_TRUE(fitted(r));
  const auto set = materialize(std::get<AttentionRule>(r), d, 0.2);
  ASSERT_TRUE(set);
  EXPECT_EQ(set->indices, (std::vector<std::size_t>{0, 1}));
  const auto& body = std::get<ConfidenceRule>(std::get<AttentionRule>(r).body);
  EXPECT_DOUBLE_EQ(body.thresholds.back(), 0.2);
}

TEST(Confidence, LowTieFails) {
  std::vector<double> conf(10, 0.9);
  conf[0] = conf[1] = conf[2] = 0.1;
  const Dataset d = with_labels_and_conf(std::vector<std::string>(10, "a"),
                                         std::vector<int>(10, 1), conf);
  EXPECT_FALSE(fitted(fit_confidence(d, 0.2)));
  const Dataset equal = with_labels_and_conf(std::vector<std::string>(10, "a"),
                                             std::vector<int>(10, 1), std::vector<double>(10, 0.5));
  EXPECT_FALSE(fitted(fit_confidence(equal, 0.2)));
  const Dataset none = with_labels_and_conf(std::vector<std::string>(10, "a"), std::vector<int>(10, 1));
  EXPECT_THROW(fit_confidence(none, 0.2), DataError);
}

TEST(Confidence, EvalMayExceedBudget) {
  std::vector<double> conf;
  for (int i = 1; i <= 10; ++i) conf.push_back(i / 10.0);
  const Dataset build = with_labels_and_conf(std::vector<std::string>(10, "a"),
                                             std::vector<int>(10, 1), conf);
  const Dataset eval = with_labels_and_conf(std::vector<std::string>(10, "a"),
                                            std::vector<int>(10, 1), std::vector<double>(10, 0.1));
  const auto rule = std::get<AttentionRule>(fit_confidence(build, 0.2));
  EXPECT_EQ(materialize(rule, eval, 0.2)->size(), 10u);
}

TEST(RandomSubset, SizeAndSeed) {
  const Dataset d = fixture::synthetic(1, {.rows = 333});
  const auto rule = std::get<AttentionRule>(fit_random_subset(d, 0.2, 5));
  const auto a = materialize(rule, d, 0.1), b = materialize(rule, d, 0.1);
  ASSERT_TRUE(a);
  EXPECT_EQ(a->size(), 33u);
  EXPECT_EQ(a->indices, b->indices);
  EXPECT_EQ(materialize(rule, d, 0.2)->size(), 66u);
  const auto other = std::get<AttentionRule>(fit_random_subset(d, 0.2, 6));
  EXPECT_NE(materialize(other, d, 0.1)->indices, a->indices);
}

TEST(Materialize, BuildAtMaxBudgetMatchesFit) {
  const Dataset d = fixture::synthetic(2, {.rows = 1000});
  const auto slices = find_slices(d);
  ASSERT_FALSE(slices.empty());
  for (auto s : {Strategy::set_cover, Strategy::rank_order, Strategy::random_order}) {
    const auto r = fit_strategy(s, d, slices, 0.2, 3);
    if (!fitted(r)) continue;
    const auto& rule = std::get<AttentionRule>(r);
    const auto set = materialize(rule, d, 0.2);
    ASSERT_TRUE(set);
    EXPECT_EQ(set->size(), std::get<SliceUnionRule>(rule.body).cumulative_union.back());
    EXPECT_LE(set->size(), budget_capacity(0.2, d.size()));
  }
}

TEST(Materialize, EmptyOnTargetWithoutMatches) {
  std::vector<int> correct(50, 1);
  for (int r = 40; r < 45; ++r) correct[r] = 0;
  std::vector<double> age(50);
  for (int r = 0; r < 50; ++r) age[r] = r + 20;
  std::vector<FeatureColumn> f;
  f.push_back(FeatureColumn::make_numeric("age", age));
  const Dataset build = fixture::with_correctness(std::move(f), correct);
  Slice s;
  s.predicates.push_back(Predicate::interval("age", 60, std::numeric_limits<double>::infinity()));
  const auto rule = std::get<AttentionRule>(fit_rank_order(build, std::vector<Slice>{s}, 0.2));

  std::vector<FeatureColumn> g;
  g.push_back(FeatureColumn::make_numeric("age", {20, 30, 40}));
  const Dataset eval = fixture::with_correctness(std::move(g), {1, 0, 1});
  const auto set = materialize(rule, eval, 0.2);
  ASSERT_TRUE(set);
  EXPECT_EQ(set->size(), 0u);
}

TEST(Materialize, PrefixFollowsBuildCounts) {
  // 37 rows at b = 0.05 and 99 rows at b = 0.10 on a 1000-row build
  const Dataset d = fixture::table1_dataset();
  Slice a, b;
  a.predicates.push_back(Predicate::interval("id", 0, 36));
  b.predicates.push_back(Predicate::interval("id", 37, 98));
  a.rank = 1.0;
  const auto rule = std::get<AttentionRule>(fit_rank_order(d, std::vector<Slice>{a, b}, 0.1));
  EXPECT_EQ(materialize(rule, d, 0.05)->size(), 37u);
  EXPECT_EQ(materialize(rule, d, 0.1)->size(), 99u);
  EXPECT_FALSE(materialize(rule, d, 0.03));
  EXPECT_THROW(materialize(rule, d, 0.2), InvalidArgument);
  EXPECT_THROW(materialize(rule, d, 0.0), InvalidArgument);
}

TEST(Materialize, WorstLabelNeedsLabels) {
  std::vector<std::string> y;
  std::vector<int> c;
  for (int i = 0; i < 100; ++i) {
    y.push_back("L" + std::to_string(i % 10));
    c.push_back(i % 10 != 3);
  }
  const auto rule = std::get<AttentionRule>(fit_worst_label(with_labels_and_conf(y, c), 0.2));
  DatasetParts p;
  p.features.push_back(FeatureColumn::make_numeric("x", {1, 2}));
  EXPECT_THROW(materialize(rule, Dataset(std::move(p)), 0.2), DataError);
}

#include <gtest/gtest.h>

#include <cmath>

#include "errloc/error.hpp"
#include "errloc/forest.hpp"
#include "errloc/rng.hpp"
#include "fixtures.hpp"

using namespace errloc;

namespace {

Dataset toy(std::uint64_t seed, std::size_t n) {
  Rng rng(seed);
  std::vector<double> a(n), b(n);
  std::vector<std::string> c(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    a[i] = rng.uniform() * 10.0;
    b[i] = rng.uniform();
    c[i] = rng.below(2) ? "u" : "v";
    y[i] = a[i] > 5.0 ? "hi" : "lo";
  }
  DatasetParts p;
  p.features.push_back(FeatureColumn::make_numeric("a", a));
  p.features.push_back(FeatureColumn::make_numeric("b", b));
  p.features.push_back(FeatureColumn::make_categorical("c", c));
  p.labels = std::move(y);
  return Dataset(std::move(p));
}

double accuracy(const Predictions& p, const Dataset& d) {
  std::size_t ok = 0;
  for (std::size_t i = 0; i < d.size(); ++i) ok += p.labels[i] == d.labels()[i];
  return static_cast<double>(ok) / static_cast<double>(d.size());
}

}  // namespace

TEST(RandomForest, SeparableToyGeneralizes) {
  ForestParams fp;
  fp.n_trees = 30;
  fp.seed = 1;
  const auto f = RandomForest::fit(toy(1, 600), fp);
  const Dataset test = toy(2, 400);
  EXPECT_GT(accuracy(f.predict(test), test), 0.95);
  EXPECT_EQ(f.classes(), (std::vector<std::string>{"hi", "lo"}));
  EXPECT_EQ(f.size(), 30u);
}

TEST(RandomForest, SingleTreeMemorizes) {
  ForestParams fp;
  fp.n_trees = 1;
  fp.min_leaf = 1;
  fp.bootstrap = false;
  fp.max_bins = 0;
  fp.features_per_split = 3;
  const Dataset d = fixture::synthetic(3, {.rows = 300});
  const auto f = RandomForest::fit(d, fp);
  // income has distinct values for almost all rows; duplicate feature rows
  // with different labels are the only way to miss
  EXPECT_GT(accuracy(f.predict(d), d), 0.99);
}

TEST(RandomForest, ConfidenceIsVoteFraction) {
  ForestParams fp;
  fp.n_trees = 7;
  fp.seed = 4;
  const Dataset d = fixture::synthetic(4, {.rows = 300});
  const auto p = RandomForest::fit(d, fp).predict(d);
  for (double c : p.confidence) {
    const double k = c * 7.0;
    EXPECT_NEAR(k, std::round(k), 1e-9);
    EXPECT_GE(c, 0.5 - 1e-12);  // two classes: winner has at least half
    EXPECT_LE(c, 1.0);
  }
}

TEST(RandomForest, SingleClass) {
  DatasetParts p;
  p.features.push_back(FeatureColumn::make_numeric("x", {1, 2, 3, 4}));
  p.labels = std::vector<std::string>(4, "only");
  const Dataset d(std::move(p));
  const auto pred = RandomForest::fit(d, {.n_trees = 5}).predict(d);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(pred.labels[i], "only");
    EXPECT_DOUBLE_EQ(pred.confidence[i], 1.0);
  }
}

TEST(RandomForest, SeedDeterminismAndUnseenLevels) {
  ForestParams fp;
  fp.n_trees = 10;
  fp.seed = 9;
  const Dataset d = fixture::synthetic(5, {.rows = 400});
  const auto a = RandomForest::fit(d, fp).predict(d);
  const auto b = RandomForest::fit(d, fp).predict(d);
  EXPECT_EQ(a.labels, b.labels);
  EXPECT_EQ(a.confidence, b.confidence);

  // same schema, a color level never seen in training
  DatasetParts q;
  q.features.push_back(FeatureColumn::make_numeric("age", {70, 20}));
  q.features.push_back(FeatureColumn::make_numeric("income", {10, std::nan("")}));
  q.features.push_back(FeatureColumn::make_categorical("color", {"purple", ""}));
  q.features.push_back(FeatureColumn::make_categorical("shape", {"circle", "square"}));
  const auto pr = RandomForest::fit(d, fp).predict(Dataset(std::move(q)));
  EXPECT_EQ(pr.labels.size(), 2u);
}

TEST(RandomForest, MissingFeatureRejected) {
  const auto f = RandomForest::fit(fixture::synthetic(5, {.rows = 100}), {.n_trees = 2});
  DatasetParts q;
  q.features.push_back(FeatureColumn::make_numeric("age", {70}));
  EXPECT_THROW(f.predict(Dataset(std::move(q))), SchemaError);
}

#include <benchmark/benchmark.h>

#include <cmath>
#include <numeric>

#include "errloc/forest.hpp"
#include "errloc/rng.hpp"
#include "errloc/slicing.hpp"
#include "errloc/strategies.hpp"

using namespace errloc;

namespace {

// Four numeric and two categorical columns, errors concentrated in one corner.
Dataset make_data(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::vector<double>> num(4, std::vector<double>(n));
  std::vector<std::string> cat_a(n), cat_b(n), y(n), yhat(n);
  const char* a_levels[] = {"north", "south", "east", "west", "center"};
  for (std::size_t i = 0; i < n; ++i) {
    for (auto& col : num) col[i] = std::round(rng.uniform() * 1000.0) / 10.0;
    cat_a[i] = a_levels[rng.below(5)];
    cat_b[i] = rng.below(3) ? "std" : "premium";
    y[i] = num[0][i] + num[1][i] > 100.0 ? "yes" : "no";
    const bool hard = num[2][i] > 80.0 && cat_a[i] == "east";
    const bool wrong = rng.uniform() < (hard ? 0.6 : 0.07);
    yhat[i] = wrong ? (y[i] == "yes" ? "no" : "yes") : y[i];
  }
  DatasetParts p;
  for (std::size_t c = 0; c < num.size(); ++c)
    p.features.push_back(FeatureColumn::make_numeric("x" + std::to_string(c), num[c]));
  p.features.push_back(FeatureColumn::make_categorical("region", cat_a));
  p.features.push_back(FeatureColumn::make_categorical("tier", cat_b));
  p.labels = std::move(y);
  p.predictions = std::move(yhat);
  return derive_z(Dataset(std::move(p)));
}

void BM_TreeFit(benchmark::State& state) {
  const Dataset d = make_data(static_cast<std::size_t>(state.range(0)), 1);
  const std::vector<std::size_t> cols{0, 1, 2, 3, 4, 5};
  const auto enc = encode_features(d, cols);
  std::vector<std::uint32_t> target(d.correct().begin(), d.correct().end());
  std::vector<std::size_t> rows(d.size());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  TreeParams tp;
  tp.min_leaf = 20;
  for (auto _ : state) {
    benchmark::DoNotOptimize(DecisionTree::fit(enc, target, 2, rows, tp));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_TreeFit)->Arg(2000)->Arg(8000);

void BM_SliceSearch(benchmark::State& state) {
  const Dataset d = make_data(static_cast<std::size_t>(state.range(0)), 2);
  SliceConfig cfg;
  cfg.workers = 1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(search_slices(d, cfg));
  }
}
BENCHMARK(BM_SliceSearch)->Arg(2000)->Arg(7500)->Unit(benchmark::kMillisecond);

void BM_SetCover(benchmark::State& state) {
  const Dataset d = make_data(7500, 3);
  const auto slices = find_slices(d);
  for (auto _ : state) {
    benchmark::DoNotOptimize(fit_set_cover(d, slices, 0.2));
  }
  state.counters["slices"] = static_cast<double>(slices.size());
}
BENCHMARK(BM_SetCover)->Unit(benchmark::kMillisecond);

void BM_ForestFit(benchmark::State& state) {
  const Dataset d = make_data(static_cast<std::size_t>(state.range(0)), 4);
  ForestParams fp;
  fp.n_trees = 20;
  for (auto _ : state) {
    benchmark::DoNotOptimize(RandomForest::fit(d, fp));
  }
}
BENCHMARK(BM_ForestFit)->Arg(5000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();

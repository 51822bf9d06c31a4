#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>

#include "errloc/csv.hpp"
#include "errloc/error.hpp"
#include "errloc/harness.hpp"
#include "fixtures.hpp"

using namespace errloc;

namespace {

ExperimentConfig small_config() {
  ExperimentConfig cfg;
  cfg.data_path = "in-memory";
  cfg.q = 2;
  cfg.delta = 0.05;
  cfg.predictions.forest.n_trees = 10;
  cfg.workers = 2;
  return cfg;
}

Dataset source() { return fixture::synthetic(21, {.rows = 3000, .n_labels = 4}); }

}  // namespace

TEST(Config, ParsesAndValidates) {
  const auto cfg = config_from_json(json::parse(R"({
    "dataset": {"path": "x.csv", "schema": {"a": "numeric", "b": "categorical"}, "label_col": "y"},
    "splits": {"q": 3, "fractions": [0.6, 0.2, 0.2]},
    "grid": {"max_budget": 0.2, "delta": 0.05},
    "strategies": ["set_cover", "confidence"],
    "seed": 7
  })"));
  EXPECT_EQ(cfg.q, 3u);
  EXPECT_EQ(cfg.label_col, "y");
  EXPECT_EQ(cfg.schema.at("b"), ColumnKind::categorical);
  EXPECT_EQ(cfg.strategies.size(), 2u);
  EXPECT_EQ(cfg.seed, 7u);
  EXPECT_EQ(cfg.grid().size(), 4u);
  EXPECT_NO_THROW(cfg.validate());
  // canonical form parses back to the same canonical form
  EXPECT_EQ(to_json(config_from_json(to_json(cfg))).dump(), to_json(cfg).dump());
}

TEST(Config, Errors) {
  const char* bad[] = {
      R"({"dataset": {"path": "x"}, "extra": 1})",
      R"({"dataset": {"path": "x"}, "splits": {"q": 1}})",
      R"({"dataset": {"path": "x"}, "splits": {"fractions": [0.5, 0.2, 0.2]}})",
      R"({"dataset": {"path": "x"}, "strategies": ["best"]})",
      R"({"dataset": {"path": "x"}, "strategies": ["set_cover", "set_cover"]})",
      R"({"dataset": {"path": "x"}, "grid": {"max_budget": 1.5}})",
      R"({"dataset": {"path": "x"}, "grid": {"delta": 0.5, "max_budget": 0.2}})",
      R"({"dataset": {"path": "x"}, "splits": {"q": 2}, "predictions": {"source": "external", "files": ["a"]}})",
      R"({"dataset": {"path": "x", "schema": {"a": "text"}}})",
      R"({"dataset": {}})",
      R"([1, 2])",
  };
  for (const char* text : bad) {
    EXPECT_THROW(config_from_json(json::parse(text)).validate(), ConfigError) << text;
  }
  EXPECT_THROW(load_config("/nonexistent/config.json"), ConfigError);
}

TEST(Experiment, BinaryWorstLabelIsUnranked) {
  auto cfg = small_config();
  const auto r = run_experiment(cfg, fixture::synthetic(22, {.rows = 2000}));
  ASSERT_EQ(r.scorecards.size(), 6u);
  const auto& wl = r.scorecards[3];
  EXPECT_EQ(wl.strategy, Strategy::worst_label);
  EXPECT_EQ(wl.fit_failures, 2u);
  EXPECT_FALSE(wl.topsis);
  EXPECT_NE(std::find(r.unranked.begin(), r.unranked.end(), Strategy::worst_label), r.unranked.end());
  for (const auto& c : r.scorecards) {
    if (c.topsis) {
      EXPECT_GE(*c.topsis, 0.0);
      EXPECT_LE(*c.topsis, 1.0);
    }
  }
}

TEST(Experiment, SameSeedSameReport) {
  auto cfg = small_config();
  const Dataset src = source();
  const auto a = report_json(run_experiment(cfg, src)).dump();
  cfg.workers = 1;
  const auto b = report_json(run_experiment(cfg, src)).dump();
  EXPECT_EQ(a, b);
  cfg.seed = 99;
  EXPECT_NE(report_json(run_experiment(cfg, src)).dump(), a);
}

// Fitting only looks at build: shuffling eval leaves every rule unchanged.
TEST(Experiment, EvalRowsDoNotInfluenceRules) {
  const auto cfg = small_config();
  const Dataset src = source();
  const auto splits = make_splits(src, cfg.fractions, cfg.q, cfg.seed);
  auto [build, eval] = prepare_split(cfg, src, splits[0]);
  std::vector<std::size_t> perm(eval.size());
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = perm.size() - 1 - i;
  const Dataset shuffled = eval.subset(perm);
  std::vector<std::size_t> half(eval.size() / 2);
  for (std::size_t i = 0; i < half.size(); ++i) half[i] = 2 * i;
  const Dataset smaller = eval.subset(half);
  const auto a = run_split(cfg, cfg.grid(), splits[0], build, eval);
  const auto b = run_split(cfg, cfg.grid(), splits[0], build, shuffled);
  const auto c = run_split(cfg, cfg.grid(), splits[0], build, smaller);
  for (std::size_t k = 0; k < a.strategies.size(); ++k) {
    const auto ja = to_json(a.strategies[k].fit).dump();
    EXPECT_EQ(ja, to_json(b.strategies[k].fit).dump());
    EXPECT_EQ(ja, to_json(c.strategies[k].fit).dump());
  }
}

TEST(Experiment, StoredRowsReproduceStats) {
  const auto cfg = small_config();
  const auto r = run_experiment(cfg, source());
  const json rep = report_json(r);
  for (std::size_t j = 0; j < r.splits.size(); ++j) {
    const auto& split = r.splits[j];
    for (const auto& sr : rep["splits"][j]["strategies"]) {
      for (const auto& b : sr["budgets"]) {
        for (const char* side : {"build", "eval"}) {
          if (b[side].is_null()) continue;
          const auto rows = b[side]["rows"].get<std::vector<std::size_t>>();
          const Dataset& d = std::string(side) == "build" ? split.build : split.eval;
          const json again = to_json(attention_stats(d, rows));
          for (const auto& [key, value] : again.items()) EXPECT_EQ(b[side][key], value) << key;
        }
      }
    }
  }
}

TEST(Experiment, BuildSetsRespectBudget) {
  const auto r = run_experiment(small_config(), source());
  for (const auto& split : r.splits)
    for (const auto& sr : split.strategies)
      for (const auto& b : sr.budgets)
        if (b.build_set) {
          EXPECT_LE(b.build_set->size(), budget_capacity(b.budget, split.build.size()));
        }
}

TEST(Experiment, ExternalPredictions) {
  fixture::TempDir dir;
  const Dataset src = source();
  auto cfg = small_config();
  cfg.predictions.kind = PredictionSource::Kind::external;
  for (std::size_t q = 1; q <= cfg.q; ++q) {
    const auto path = dir.file("pred_" + std::to_string(q) + ".csv");
    std::ofstream out(path);
    out << "row_id,prediction,confidence\n";
    for (std::size_t i = 0; i < src.size(); ++i) {
      out << i << "," << src.predictions()[i] << "," << csv::format_number(src.confidence()[i])
          << "\n";
    }
    cfg.predictions.files.push_back(path);
  }
  const auto r = run_experiment(cfg, src);
  for (const auto& split : r.splits) {
    ASSERT_TRUE(split.build.has_confidence());
    for (std::size_t i = 0; i < split.build.size(); ++i) {
      EXPECT_EQ(split.build.predictions()[i], src.predictions()[split.build.row_ids()[i]]);
    }
  }

  // a file missing rows is a data error
  fixture::write_text(cfg.predictions.files[1], "row_id,prediction\n0,L0\n");
  EXPECT_THROW(run_experiment(cfg, src), DataError);
  cfg.predictions.files[1] = dir.file("absent.csv");
  EXPECT_THROW(run_experiment(cfg, src), DataError);
}

TEST(Experiment, WritesArtifacts) {
  fixture::TempDir dir;
  const auto r = run_experiment(small_config(), source());
  write_report(r, dir.path().string());
  for (const char* f : {"report.json", "splits.json", "slices_1.json", "rules_2.json",
                        "steps_set_cover_1_build.csv", "steps_random_subset_2_eval.csv"}) {
    EXPECT_TRUE(std::filesystem::exists(dir.path() / f)) << f;
  }
  EXPECT_EQ(read_json_file(dir.file("report.json")).dump(), report_json(r).dump());
}

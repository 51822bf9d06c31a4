#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "errloc/dataset.hpp"
#include "errloc/forest.hpp"
#include "errloc/io.hpp"
#include "errloc/metrics.hpp"
#include "errloc/slicing.hpp"
#include "errloc/strategies.hpp"

namespace errloc {

inline constexpr std::uint64_t kDefaultSeed = 1729;

struct PredictionSource {
  enum class Kind { builtin_forest, external };
  Kind kind = Kind::builtin_forest;
  ForestParams forest;
  /// One CSV per split (row_id, prediction[, confidence]); row_id is the
  /// 0-based data row of the source file.
  std::vector<std::string> files;
};

struct ExperimentConfig {
  std::string data_path;
  std::map<std::string, ColumnKind> schema;
  std::string label_col = "label";
  std::size_t q = 10;
  SplitFractions fractions;
  double max_budget = 0.20;
  double delta = 0.01;
  SliceConfig slicing;
  std::vector<Strategy> strategies{kAllStrategies.begin(), kAllStrategies.end()};
  std::uint64_t seed = kDefaultSeed;
  PredictionSource predictions;
  /// Threads over splits; 0 = hardware concurrency. Never affects results.
  std::size_t workers = 0;

  /// Throws ConfigError.
  void validate() const;
  BudgetGrid grid() const { return BudgetGrid::uniform(max_budget, delta); }
};

/// Parses the JSON config. Unknown keys are rejected; a string "schema" is
/// a path to a schema file. Throws ConfigError.
ExperimentConfig config_from_json(const json& j);
ExperimentConfig load_config(const std::string& path);
/// Canonical form of the result-affecting fields (workers excluded).
json to_json(const ExperimentConfig& cfg);

struct BudgetRun {
  double budget = 0.0;
  std::optional<AttentionSet> build_set;
  std::optional<AttentionSet> eval_set;
  std::optional<AttentionStats> build_stats;
  std::optional<AttentionStats> eval_stats;
};

struct StrategyRun {
  Strategy strategy = Strategy::set_cover;
  FitResult fit;
  std::vector<BudgetRun> budgets;
  StepFunction build_steps;
  StepFunction eval_steps;
  std::optional<double> auc_build;
  std::optional<double> auc_eval;
  std::optional<double> generalizability;
};

struct SplitRun {
  SplitSet split;
  Dataset build;
  Dataset eval;
  SliceSearch slices;
  std::vector<StrategyRun> strategies;

  /// M / N over build and eval together (the rows not used for training).
  double test_mcr() const;
};

struct ExperimentResult {
  ExperimentConfig config;
  BudgetGrid grid;
  std::size_t source_rows = 0;
  std::vector<SplitRun> splits;
  std::vector<StrategyScorecard> scorecards;
  std::vector<Strategy> unranked;
};

/// Build and eval datasets of one split with predictions and z.
std::pair<Dataset, Dataset> prepare_split(const ExperimentConfig& cfg, const Dataset& source,
                                          const SplitSet& split);

/// Slices, rules and metrics for one split. Only `build` influences fitting.
SplitRun run_split(const ExperimentConfig& cfg, const BudgetGrid& grid, SplitSet split,
                   Dataset build, Dataset eval);

ExperimentResult run_experiment(const ExperimentConfig& cfg);
ExperimentResult run_experiment(const ExperimentConfig& cfg, const Dataset& source);

/// Deterministic report: no timestamps, stable key order. Attention-set rows
/// are positions in the split's build / eval dataset.
json report_json(const ExperimentResult& result);
/// Writes report.json, splits.json, slices_<q>.json, rules_<q>.json and
/// steps_<strategy>_<q>_<build|eval>.csv into `out_dir`.
void write_report(const ExperimentResult& result, const std::string& out_dir);

}  // namespace errloc

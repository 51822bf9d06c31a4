#include "errloc/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <set>
#include <sstream>
#include <unordered_map>

#include "errloc/csv.hpp"
#include "errloc/error.hpp"
#include "errloc/parallel.hpp"
#include "errloc/rng.hpp"

namespace errloc {

namespace {

void check_keys(const json& j, const char* where, std::initializer_list<std::string_view> allowed) {
  if (!j.is_object()) throw ConfigError(std::string(where) + ": expected an object");
  for (const auto& [key, value] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw ConfigError(std::string(where) + ": unknown key '" + key + "'");
    }
  }
}

template <class T>
void read_opt(const json& j, const char* key, T& out) {
  if (j.contains(key) && !j.at(key).is_null()) out = j.at(key).get<T>();
}

std::map<std::string, ColumnKind> schema_from_object(const json& j) {
  std::map<std::string, ColumnKind> out;
  for (const auto& [name, kind] : j.items()) {
    out[name] = column_kind_from_string(kind.get<std::string>());
  }
  return out;
}

ForestParams forest_from_json(const json& j) {
  check_keys(j, "forest",
             {"n_trees", "max_depth", "min_leaf", "features_per_split", "bootstrap", "max_bins"});
  ForestParams p;
  read_opt(j, "n_trees", p.n_trees);
  read_opt(j, "max_depth", p.max_depth);
  read_opt(j, "min_leaf", p.min_leaf);
  read_opt(j, "features_per_split", p.features_per_split);
  read_opt(j, "bootstrap", p.bootstrap);
  read_opt(j, "max_bins", p.max_bins);
  return p;
}

json opt_size(const std::optional<std::size_t>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

void ExperimentConfig::validate() const {
  if (data_path.empty()) throw ConfigError("dataset path is required");
  if (label_col.empty()) throw ConfigError("label column is required");
  if (q < 2) throw ConfigError("at least two splits are needed for stability");
  const double sum = fractions.train + fractions.build + fractions.eval;
  if (!(fractions.train > 0 && fractions.build > 0 && fractions.eval > 0) ||
      std::abs(sum - 1.0) > 1e-9) {
    throw ConfigError("split fractions must be positive and sum to 1");
  }
  if (!(max_budget > 0.0 && max_budget <= 1.0)) throw ConfigError("max budget must be in (0, 1]");
  if (!(delta > 0.0 && delta <= max_budget)) throw ConfigError("delta must be in (0, max budget]");
  if (slicing.max_combo < 1 || slicing.max_combo > 3) throw ConfigError("max_combo must be 1..3");
  if (!(slicing.alpha > 0.0 && slicing.alpha < 1.0)) throw ConfigError("alpha must be in (0, 1)");
  if (strategies.empty()) throw ConfigError("no strategies");
  std::set<Strategy> seen(strategies.begin(), strategies.end());
  if (seen.size() != strategies.size()) throw ConfigError("duplicate strategy");
  if (predictions.kind == PredictionSource::Kind::builtin_forest) {
    if (predictions.forest.n_trees == 0) throw ConfigError("forest needs at least one tree");
  } else if (predictions.files.size() < q) {
    throw ConfigError("external predictions: " + std::to_string(predictions.files.size()) +
                      " files for " + std::to_string(q) + " splits");
  }
}

ExperimentConfig config_from_json(const json& j) {
  try {
    check_keys(j, "config",
               {"dataset", "splits", "grid", "slicing", "strategies", "seed", "predictions", "workers"});
    ExperimentConfig cfg;
    const json& ds = j.at("dataset");
    check_keys(ds, "dataset", {"path", "schema", "label_col"});
    cfg.data_path = ds.at("path").get<std::string>();
    read_opt(ds, "label_col", cfg.label_col);
    if (ds.contains("schema")) {
      const json& s = ds.at("schema");
      if (s.is_string()) {
        cfg.schema = load_schema(s.get<std::string>());
      } else if (s.is_object()) {
        cfg.schema = schema_from_object(s);
      } else if (!s.is_null()) {
        throw ConfigError("dataset.schema must be a path or an object");
      }
    }
    if (j.contains("splits")) {
      const json& s = j.at("splits");
      check_keys(s, "splits", {"q", "fractions"});
      read_opt(s, "q", cfg.q);
      if (s.contains("fractions")) {
        const auto f = s.at("fractions").get<std::vector<double>>();
        if (f.size() != 3) throw ConfigError("splits.fractions needs three values");
        cfg.fractions = {f[0], f[1], f[2]};
      }
    }
    if (j.contains("grid")) {
      const json& g = j.at("grid");
      check_keys(g, "grid", {"max_budget", "delta"});
      read_opt(g, "max_budget", cfg.max_budget);
      read_opt(g, "delta", cfg.delta);
    }
    if (j.contains("slicing")) {
      const json& s = j.at("slicing");
      check_keys(s, "slicing",
                 {"max_combo", "min_support", "accuracy_threshold", "alpha", "tree_max_depth",
                  "tree_min_leaf"});
      read_opt(s, "max_combo", cfg.slicing.max_combo);
      if (s.contains("min_support") && !s.at("min_support").is_null()) {
        cfg.slicing.min_support = s.at("min_support").get<std::size_t>();
      }
      if (s.contains("accuracy_threshold") && !s.at("accuracy_threshold").is_null()) {
        cfg.slicing.accuracy_threshold = s.at("accuracy_threshold").get<double>();
      }
      read_opt(s, "alpha", cfg.slicing.alpha);
      read_opt(s, "tree_max_depth", cfg.slicing.tree.max_depth);
      if (s.contains("tree_min_leaf") && !s.at("tree_min_leaf").is_null()) {
        cfg.slicing.tree.min_leaf = s.at("tree_min_leaf").get<std::size_t>();
      }
    }
    if (j.contains("strategies")) {
      cfg.strategies.clear();
      for (const auto& name : j.at("strategies")) {
        try {
          cfg.strategies.push_back(strategy_from_string(name.get<std::string>()));
        } catch (const InvalidArgument& e) {
          throw ConfigError(e.what());
        }
      }
    }
    read_opt(j, "seed", cfg.seed);
    read_opt(j, "workers", cfg.workers);
    if (j.contains("predictions")) {
      const json& p = j.at("predictions");
      check_keys(p, "predictions", {"source", "forest", "files"});
      const auto source = p.value("source", std::string("builtin_forest"));
      if (source == "builtin_forest") {
        cfg.predictions.kind = PredictionSource::Kind::builtin_forest;
        if (p.contains("forest")) cfg.predictions.forest = forest_from_json(p.at("forest"));
        if (p.contains("files")) throw ConfigError("predictions.files needs source 'external'");
      } else if (source == "external") {
        cfg.predictions.kind = PredictionSource::Kind::external;
        cfg.predictions.files = p.at("files").get<std::vector<std::string>>();
      } else {
        throw ConfigError("predictions.source must be 'builtin_forest' or 'external'");
      }
    }
    cfg.validate();
    return cfg;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  } catch (const SchemaError& e) {
    throw ConfigError(std::string("config: ") + e.what());
  } catch (const DataError& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

ExperimentConfig load_config(const std::string& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  } catch (const DataError& e) {
    throw ConfigError(e.what());
  }
  return config_from_json(j);
}

json to_json(const ExperimentConfig& cfg) {
  json j;
  json schema = json::object();
  for (const auto& [name, kind] : cfg.schema) schema[name] = std::string(to_string(kind));
  j["dataset"] = {{"path", cfg.data_path}, {"schema", schema}, {"label_col", cfg.label_col}};
  j["splits"] = {{"q", cfg.q},
                 {"fractions", {cfg.fractions.train, cfg.fractions.build, cfg.fractions.eval}}};
  j["grid"] = {{"max_budget", cfg.max_budget}, {"delta", cfg.delta}};
  j["slicing"] = {{"max_combo", cfg.slicing.max_combo},
                  {"min_support", opt_size(cfg.slicing.min_support)},
                  {"accuracy_threshold", optional_json(cfg.slicing.accuracy_threshold)},
                  {"alpha", cfg.slicing.alpha},
                  {"tree_max_depth", cfg.slicing.tree.max_depth},
                  {"tree_min_leaf", opt_size(cfg.slicing.tree.min_leaf)}};
  json names = json::array();
  for (Strategy s : cfg.strategies) names.push_back(std::string(to_string(s)));
  j["strategies"] = names;
  j["seed"] = cfg.seed;
  if (cfg.predictions.kind == PredictionSource::Kind::builtin_forest) {
    const auto& f = cfg.predictions.forest;
    j["predictions"] = {{"source", "builtin_forest"},
                        {"forest",
                         {{"n_trees", f.n_trees},
                          {"max_depth", f.max_depth},
                          {"min_leaf", f.min_leaf},
                          {"features_per_split", f.features_per_split},
                          {"bootstrap", f.bootstrap},
                          {"max_bins", f.max_bins}}}};
  } else {
    j["predictions"] = {{"source", "external"}, {"files", cfg.predictions.files}};
  }
  return j;
}

double SplitRun::test_mcr() const {
  const double errors = static_cast<double>(build.error_count() + eval.error_count());
  return errors / static_cast<double>(build.size() + eval.size());
}

namespace {

struct ExternalPrediction {
  std::string label;
  std::optional<double> confidence;
};

std::unordered_map<std::size_t, ExternalPrediction> load_external(const std::string& path) {
  const std::string text = read_file(path);
  std::istringstream in(text);
  const auto records = csv::read_records(in);
  if (records.empty()) throw DataError(path + ": empty prediction file");
  const auto& header = records.front();
  auto col = [&](std::string_view name) -> std::optional<std::size_t> {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (csv::trim(header[i]) == name) return i;
    }
    return std::nullopt;
  };
  const auto id_col = col("row_id");
  const auto pred_col = col("prediction");
  const auto conf_col = col("confidence");
  if (!id_col || !pred_col) throw SchemaError(path + ": needs row_id and prediction columns");
  std::unordered_map<std::size_t, ExternalPrediction> out;
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    if (rec.size() != header.size()) throw ParseError(r, path + ": wrong number of fields");
    const auto id_text = csv::trim(rec[*id_col]);
    std::size_t id = 0;
    const auto [ptr, ec] = std::from_chars(id_text.data(), id_text.data() + id_text.size(), id);
    if (ec != std::errc() || ptr != id_text.data() + id_text.size()) {
      throw ParseError(r, path + ": bad row_id '" + std::string(id_text) + "'");
    }
    ExternalPrediction p{std::string(csv::trim(rec[*pred_col])), std::nullopt};
    if (p.label.empty()) throw ParseError(r, path + ": empty prediction");
    if (conf_col) {
      const std::string c(csv::trim(rec[*conf_col]));
      try {
        std::size_t used = 0;
        const double v = std::stod(c, &used);
        if (used != c.size() || !(v >= 0.0 && v <= 1.0)) throw std::invalid_argument(c);
        p.confidence = v;
      } catch (const std::exception&) {
        throw ParseError(r, path + ": confidence must be a number in [0,1]");
      }
    }
    if (!out.emplace(id, std::move(p)).second) {
      throw ParseError(r, path + ": duplicate row_id " + std::to_string(id));
    }
  }
  return out;
}

Dataset attach_external(const Dataset& d,
                        const std::unordered_map<std::size_t, ExternalPrediction>& preds,
                        const std::string& path) {
  std::vector<std::string> labels(d.size());
  std::vector<double> conf(d.size());
  bool all_conf = true;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const auto it = preds.find(d.row_ids()[i]);
    if (it == preds.end()) {
      throw DataError(path + ": no prediction for row_id " + std::to_string(d.row_ids()[i]));
    }
    labels[i] = it->second.label;
    if (it->second.confidence) {
      conf[i] = *it->second.confidence;
    } else {
      all_conf = false;
    }
  }
  std::optional<std::vector<double>> c;
  if (all_conf) c = std::move(conf);
  return derive_z(d.with_predictions(std::move(labels), std::move(c)));
}

}  // namespace

std::pair<Dataset, Dataset> prepare_split(const ExperimentConfig& cfg, const Dataset& source,
                                          const SplitSet& split) {
  Dataset build = source.subset(split.build);
  Dataset eval = source.subset(split.eval);
  if (cfg.predictions.kind == PredictionSource::Kind::external) {
    const std::string& path = cfg.predictions.files.at(split.q - 1);
    const auto preds = load_external(path);
    return {attach_external(build, preds, path), attach_external(eval, preds, path)};
  }
  ForestParams params = cfg.predictions.forest;
  params.seed = derive_seed(cfg.seed, "forest", split.q);
  const auto rf = RandomForest::fit(source.subset(split.train), params);
  auto with = [&](const Dataset& d) {
    auto p = rf.predict(d);
    return derive_z(d.with_predictions(std::move(p.labels), std::move(p.confidence)));
  };
  return {with(build), with(eval)};
}

SplitRun run_split(const ExperimentConfig& cfg, const BudgetGrid& grid, SplitSet split,
                   Dataset build, Dataset eval) {
  SliceConfig sc = cfg.slicing;
  SliceSearch search = search_slices(build, sc);
  SplitRun run{std::move(split), std::move(build), std::move(eval), std::move(search), {}};

  for (Strategy s : cfg.strategies) {
    const std::uint64_t seed =
        derive_seed(cfg.seed, "strategy/" + std::string(to_string(s)), run.split.q);
    StrategyRun sr;
    sr.strategy = s;
    sr.fit = fit_strategy(s, run.build, run.slices.slices, cfg.max_budget, seed);
    sr.build_steps = undefined_step_function(grid);
    sr.eval_steps = undefined_step_function(grid);
    if (const auto* rule = std::get_if<AttentionRule>(&sr.fit)) {
      for (std::size_t i = 0; i < grid.size(); ++i) {
        BudgetRun br;
        br.budget = grid.budgets[i];
        br.build_set = materialize(*rule, run.build, br.budget);
        br.eval_set = materialize(*rule, run.eval, br.budget);
        if (br.build_set) {
          br.build_stats = attention_stats(run.build, *br.build_set);
          if (br.build_stats->mc) sr.build_steps.points[i] = StepPoint{br.build_stats->n_frac, *br.build_stats->mc};
        }
        if (br.eval_set) {
          br.eval_stats = attention_stats(run.eval, *br.eval_set);
          if (br.eval_stats->mc) sr.eval_steps.points[i] = StepPoint{br.eval_stats->n_frac, *br.eval_stats->mc};
        }
        sr.budgets.push_back(std::move(br));
      }
      sr.auc_build = auc(sr.build_steps);
      sr.auc_eval = auc(sr.eval_steps);
      sr.generalizability = generalizability(sr.build_steps, sr.eval_steps);
    } else {
      for (double b : grid.budgets) sr.budgets.push_back(BudgetRun{b, {}, {}, {}, {}});
    }
    run.strategies.push_back(std::move(sr));
  }
  return run;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  LoadOptions opts;
  opts.schema = cfg.schema;
  opts.label_col = cfg.label_col;
  return run_experiment(cfg, load_csv(cfg.data_path, opts));
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, const Dataset& source) {
  cfg.validate();
  ExperimentResult result;
  result.config = cfg;
  result.grid = cfg.grid();
  result.source_rows = source.size();

  const auto splits = make_splits(source, cfg.fractions, cfg.q, cfg.seed);
  std::vector<std::optional<SplitRun>> runs(splits.size());
  parallel_for(
      splits.size(),
      [&](std::size_t j) {
        auto [build, eval] = prepare_split(cfg, source, splits[j]);
        runs[j].emplace(run_split(cfg, result.grid, splits[j], std::move(build), std::move(eval)));
      },
      cfg.workers);
  for (auto& r : runs) result.splits.push_back(std::move(*r));

  for (std::size_t k = 0; k < cfg.strategies.size(); ++k) {
    StrategyScorecard card;
    card.strategy = cfg.strategies[k];
    std::vector<std::optional<double>> ab, ae, g;
    std::vector<StepFunction> steps;
    for (const auto& split : result.splits) {
      const StrategyRun& sr = split.strategies[k];
      ab.push_back(sr.auc_build);
      ae.push_back(sr.auc_eval);
      g.push_back(sr.generalizability);
      steps.push_back(sr.build_steps);
      if (!fitted(sr.fit)) ++card.fit_failures;
    }
    card.auc_build = mean_defined(ab);
    card.auc_eval = mean_defined(ae);
    card.generalizability = mean_defined(g);
    card.stability = stability(steps);
    result.scorecards.push_back(std::move(card));
  }
  score_strategies(result.scorecards);
  for (const auto& c : result.scorecards) {
    if (!c.topsis) result.unranked.push_back(c.strategy);
  }
  return result;
}

namespace {

json mean_json(const MeanValue& m) {
  return {{"mean", optional_json(m.value)}, {"undefined", m.undefined}};
}

json set_json(const std::optional<AttentionSet>& set, const std::optional<AttentionStats>& stats) {
  if (!set) return nullptr;
  json j = to_json(*stats);
  j["prefix"] = set->prefix;
  j["rows"] = set->indices;
  return j;
}

}  // namespace

json report_json(const ExperimentResult& result) {
  json j;
  j["config"] = to_json(result.config);
  j["source_rows"] = result.source_rows;
  j["grid"] = result.grid.budgets;

  json splits = json::array();
  for (const auto& split : result.splits) {
    json s;
    s["split"] = split.split.q;
    s["seed"] = split.split.seed;
    s["sizes"] = {{"train", split.split.train.size()},
                  {"build", split.build.size()},
                  {"eval", split.eval.size()}};
    s["mcr"] = {{"build", split.build.error_rate()},
                {"eval", split.eval.error_rate()},
                {"test", split.test_mcr()}};
    s["slices"] = {{"count", split.slices.slices.size()},
                   {"trees_grown", split.slices.trees_grown},
                   {"leaves_examined", split.slices.leaves_examined},
                   {"min_support", split.slices.min_support},
                   {"accuracy_threshold", split.slices.accuracy_threshold}};
    json strategies = json::array();
    for (const auto& sr : split.strategies) {
      json st;
      st["strategy"] = std::string(to_string(sr.strategy));
      st["fitted"] = fitted(sr.fit);
      if (const auto* f = std::get_if<FitFailure>(&sr.fit)) {
        st["fit_failure"] = f->reason;
      } else {
        st["fit_failure"] = nullptr;
      }
      st["auc_build"] = optional_json(sr.auc_build);
      st["auc_eval"] = optional_json(sr.auc_eval);
      st["generalizability"] = optional_json(sr.generalizability);
      json budgets = json::array();
      for (const auto& br : sr.budgets) {
        budgets.push_back({{"budget", br.budget},
                           {"build", set_json(br.build_set, br.build_stats)},
                           {"eval", set_json(br.eval_set, br.eval_stats)}});
      }
      st["budgets"] = std::move(budgets);
      strategies.push_back(std::move(st));
    }
    s["strategies"] = std::move(strategies);
    splits.push_back(std::move(s));
  }
  j["splits"] = std::move(splits);

  json cards = json::array();
  for (const auto& c : result.scorecards) {
    cards.push_back({{"strategy", std::string(to_string(c.strategy))},
                     {"auc_build", mean_json(c.auc_build)},
                     {"auc_eval", mean_json(c.auc_eval)},
                     {"generalizability", mean_json(c.generalizability)},
                     {"stability", optional_json(c.stability)},
                     {"topsis", optional_json(c.topsis)},
                     {"fit_failures", c.fit_failures}});
  }
  j["scorecards"] = std::move(cards);
  json unranked = json::array();
  for (Strategy s : result.unranked) unranked.push_back(std::string(to_string(s)));
  j["unranked"] = std::move(unranked);
  return j;
}

void write_report(const ExperimentResult& result, const std::string& out_dir) {
  namespace fs = std::filesystem;
  const fs::path dir(out_dir);
  fs::create_directories(dir);
  auto put = [&](const std::string& name, const std::string& text) {
    write_file_atomic((dir / name).string(), text);
  };

  json manifest = json::array();
  for (const auto& split : result.splits) {
    const std::string q = std::to_string(split.split.q);
    manifest.push_back({{"split", split.split.q},
                        {"seed", split.split.seed},
                        {"train", split.split.train},
                        {"build", split.split.build},
                        {"eval", split.split.eval}});
    put("slices_" + q + ".json", slices_to_json(split.slices.slices).dump(2) + "\n");
    json rules = json::array();
    for (const auto& sr : split.strategies) {
      rules.push_back(to_json(sr.fit));
      for (const char* side : {"build", "eval"}) {
        std::ostringstream csv_out;
        write_step_csv(side[0] == 'b' ? sr.build_steps : sr.eval_steps, csv_out);
        put("steps_" + std::string(to_string(sr.strategy)) + "_" + q + "_" + side + ".csv",
            csv_out.str());
      }
    }
    put("rules_" + q + ".json", rules.dump(2) + "\n");
  }
  put("splits.json", manifest.dump() + "\n");
  put("report.json", report_json(result).dump(2) + "\n");
}

}  // namespace errloc

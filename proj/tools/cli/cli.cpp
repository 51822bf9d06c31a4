#include "cli.hpp"

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "errloc/csv.hpp"
#include "errloc/dataset.hpp"
#include "errloc/error.hpp"
#include "errloc/harness.hpp"
#include "errloc/io.hpp"
#include "errloc/metrics.hpp"
#include "errloc/slicing.hpp"
#include "errloc/strategies.hpp"

namespace errloc::cli {

namespace {

namespace fs = std::filesystem;

struct DataFlags {
  std::string data;
  std::string schema;
  std::string label_col = "label";
  std::string pred_col;
  std::string conf_col;

  void add_to(CLI::App* app, bool data_required = true) {
    auto* d = app->add_option("--data", data, "CSV file");
    if (data_required) d->required();
    app->add_option("--schema", schema, "JSON map of column -> numeric|categorical");
    app->add_option("--label-col", label_col, "label column")->capture_default_str();
    app->add_option("--pred-col", pred_col, "prediction column");
    app->add_option("--conf-col", conf_col, "confidence column");
  }

  Dataset load(bool require_label = true) const {
    LoadOptions opts;
    if (!schema.empty()) opts.schema = load_schema(schema);
    opts.label_col = label_col;
    opts.require_label = require_label;
    if (!pred_col.empty()) opts.pred_col = pred_col;
    if (!conf_col.empty()) opts.conf_col = conf_col;
    Dataset d = load_csv(data, opts);
    if (d.has_labels() && d.has_predictions()) d = derive_z(d);
    return d;
  }
};

struct SliceFlags {
  int max_combo = 2;
  std::optional<std::size_t> min_support;
  double alpha = 0.01;
  int tree_depth = -1;

  void add_to(CLI::App* app) {
    app->add_option("--max-combo", max_combo, "largest feature combination (1..3)")
        ->check(CLI::Range(1, 3))
        ->capture_default_str();
    app->add_option("--min-support", min_support, "minimum slice support");
    app->add_option("--alpha", alpha, "significance level")->capture_default_str();
    app->add_option("--tree-depth", tree_depth, "error tree depth (-1 = unlimited)")->capture_default_str();
  }

  SliceConfig config() const {
    SliceConfig cfg;
    cfg.max_combo = max_combo;
    cfg.min_support = min_support;
    cfg.alpha = alpha;
    cfg.tree.max_depth = tree_depth;
    return cfg;
  }
};

void emit(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
  } else {
    write_file_atomic(path, text);
  }
}

Dataset require_z(Dataset d) {
  if (!d.has_correctness()) {
    throw DataError("dataset needs label and prediction columns");
  }
  return d;
}

std::string stem_of(const std::string& path) { return fs::path(path).stem().string(); }

int cmd_slices(const DataFlags& df, const SliceFlags& sf, const std::string& name,
               const std::string& out_dir, std::ostream& out) {
  const Dataset build = require_z(df.load());
  const auto search = search_slices(build, sf.config());
  json j;
  j["rows"] = build.size();
  j["errors"] = build.error_count();
  j["min_support"] = search.min_support;
  j["accuracy_threshold"] = search.accuracy_threshold;
  j["slices"] = slices_to_json(search.slices);
  const std::string file =
      (fs::path(out_dir) / ("slices_" + (name.empty() ? stem_of(df.data) : name) + ".json")).string();
  write_file_atomic(file, j.dump(2) + "\n");

  std::vector<const Slice*> order;
  for (const auto& s : search.slices) order.push_back(&s);
  std::stable_sort(order.begin(), order.end(),
                   [](const Slice* a, const Slice* b) { return a->rank > b->rank; });
  out << "slices: " << search.slices.size() << "  (" << file << ")\n";
  for (std::size_t i = 0; i < order.size() && i < 10; ++i) {
    const Slice& s = *order[i];
    out << "  " << i + 1 << ". " << render(s) << "  support=" << s.support << " errors=" << s.errors
        << " rank=" << csv::format_number(s.rank) << "\n";
  }
  return ok;
}

int cmd_fit(const DataFlags& df, const SliceFlags& sf, const std::string& strategy_name,
            double budget, std::uint64_t seed, const std::string& slices_path,
            const std::string& out_path, std::ostream& out) {
  const Strategy strategy = strategy_from_string(strategy_name);
  if (!(budget > 0.0 && budget <= 1.0)) throw InvalidArgument("--budget must be in (0, 1]");
  const Dataset build = df.load();
  std::vector<Slice> slices;
  if (uses_slices(strategy)) {
    slices = slices_path.empty() ? find_slices(require_z(build), sf.config())
                                 : slices_from_json(read_json_file(slices_path));
  }
  if (strategy != Strategy::random_subset && strategy != Strategy::confidence) require_z(build);
  const FitResult result = fit_strategy(strategy, build, slices, budget, seed);
  if (const auto* failure = std::get_if<FitFailure>(&result)) {
    out << to_json(*failure).dump() << "\n";
    return fit_failure;
  }
  emit(out_path, to_json(result).dump(2) + "\n", out);
  return ok;
}

std::string provenance(const AttentionRule& rule, const AttentionSet& set, const Dataset& d,
                       std::size_t row, const std::vector<std::vector<std::uint8_t>>& masks) {
  return std::visit(
      [&](const auto& body) -> std::string {
        using T = std::decay_t<decltype(body)>;
        if constexpr (std::is_same_v<T, SliceUnionRule>) {
          std::string s;
          for (std::size_t i = 0; i < masks.size(); ++i) {
            if (!masks[i][row]) continue;
            if (!s.empty()) s += ";";
            s += "slice" + std::to_string(i) + ":" + render(body.slices[i]);
          }
          return s;
        } else if constexpr (std::is_same_v<T, LabelRule>) {
          return "label=" + d.labels()[row];
        } else if constexpr (std::is_same_v<T, ConfidenceRule>) {
          return "confidence<=" + csv::format_number(body.thresholds[set.prefix - 1]);
        } else {
          return "random";
        }
      },
      rule.body);
}

int cmd_apply(const DataFlags& df, const std::string& rule_path, std::optional<double> budget,
              const std::string& out_path, std::ostream& out) {
  const AttentionRule rule = rule_from_json(read_json_file(rule_path));
  const double b = budget.value_or(rule.max_budget);
  const Dataset target = df.load(false);
  const auto set = materialize(rule, target, b);
  if (!set) throw InvalidArgument("rule is undefined at budget " + csv::format_number(b));

  std::vector<std::vector<std::uint8_t>> masks;
  if (const auto* body = std::get_if<SliceUnionRule>(&rule.body)) {
    for (std::size_t i = 0; i < set->prefix; ++i) masks.push_back(slice_mask(body->slices[i], target));
  }
  std::ostringstream text;
  csv::write_record(text, {"row", "row_id", "provenance"});
  for (std::size_t r : set->indices) {
    csv::write_record(text, {std::to_string(r), std::to_string(target.row_ids()[r]),
                             provenance(rule, *set, target, r, masks)});
  }
  emit(out_path, text.str(), out);
  return ok;
}

std::vector<std::size_t> read_rows(const std::string& path, std::size_t n) {
  std::istringstream in(read_file(path));
  const auto records = csv::read_records(in);
  if (records.empty()) throw DataError(path + ": empty file");
  const auto& header = records.front();
  const auto it = std::find(header.begin(), header.end(), "row");
  if (it == header.end()) throw SchemaError(path + ": needs a 'row' column");
  const auto col = static_cast<std::size_t>(it - header.begin());
  std::vector<std::size_t> rows;
  for (std::size_t r = 1; r < records.size(); ++r) {
    const std::string cell(csv::trim(records[r].at(col)));
    std::size_t used = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(cell, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != cell.size() || v >= n) throw ParseError(r, path + ": bad row '" + cell + "'");
    rows.push_back(static_cast<std::size_t>(v));
  }
  std::sort(rows.begin(), rows.end());
  if (std::adjacent_find(rows.begin(), rows.end()) != rows.end()) throw DataError(path + ": duplicate rows");
  return rows;
}

int cmd_stats(const DataFlags& df, const std::string& rule_path, const std::string& rows_path,
              std::optional<double> budget, const std::string& out_path, std::ostream& out) {
  if (rule_path.empty() == rows_path.empty()) throw InvalidArgument("give exactly one of --rule or --rows");
  const Dataset d = require_z(df.load());
  json j;
  j["dataset_rows"] = d.size();
  j["dataset_errors"] = d.error_count();
  j["dataset_mcr"] = d.error_rate();
  if (!rule_path.empty()) {
    const AttentionRule rule = rule_from_json(read_json_file(rule_path));
    const double b = budget.value_or(rule.max_budget);
    const auto set = materialize(rule, d, b);
    j["strategy"] = std::string(to_string(rule.strategy));
    j["budget"] = b;
    j["stats"] = set ? to_json(attention_stats(d, *set)) : json(nullptr);
  } else {
    j["stats"] = to_json(attention_stats(d, read_rows(rows_path, d.size())));
  }
  emit(out_path, j.dump(2) + "\n", out);
  return ok;
}

int cmd_experiment(const std::string& config_path, bool dry_run, std::optional<std::uint64_t> seed,
                   std::optional<double> max_budget, std::optional<double> delta,
                   const std::string& out_dir, std::ostream& out) {
  ExperimentConfig cfg = load_config(config_path);
  if (seed) cfg.seed = *seed;
  if (max_budget) cfg.max_budget = *max_budget;
  if (delta) cfg.delta = *delta;
  cfg.validate();
  if (!fs::exists(cfg.data_path)) throw ConfigError("dataset '" + cfg.data_path + "' not found");
  if (dry_run) {
    out << "config ok\n" << to_json(cfg).dump(2) << "\n";
    return ok;
  }
  const auto result = run_experiment(cfg);
  write_report(result, out_dir);
  out << "report: " << (fs::path(out_dir) / "report.json").string() << "\n";
  for (const auto& c : result.scorecards) {
    out << "  " << to_string(c.strategy) << "  auc_build="
        << (c.auc_build.value ? csv::format_number(*c.auc_build.value) : "undefined")
        << "  topsis=" << (c.topsis ? csv::format_number(*c.topsis) : "unranked")
        << "  fit_failures=" << c.fit_failures << "\n";
  }
  return ok;
}

json point_or_null(const json& set) {
  if (set.is_null() || set.at("MC").is_null()) return nullptr;
  return {{"n", set.at("N_frac")}, {"m", set.at("MC")}, {"H", set.at("H")}};
}

int cmd_plot_data(const std::string& report_path, std::size_t samples, const std::string& out_path,
                  std::ostream& out) {
  const json report = read_json_file(report_path);
  json series = json::object();
  double mcr_sum = 0.0;
  std::size_t n_splits = 0;
  try {
    for (const auto& split : report.at("splits")) {
      mcr_sum += split.at("mcr").at("build").get<double>();
      ++n_splits;
      for (const auto& st : split.at("strategies")) {
        const auto name = st.at("strategy").get<std::string>();
        json build = json::array(), eval = json::array();
        for (const auto& b : st.at("budgets")) {
          json pb = point_or_null(b.at("build"));
          json pe = point_or_null(b.at("eval"));
          if (!pb.is_null()) pb["budget"] = b.at("budget");
          if (!pe.is_null()) pe["budget"] = b.at("budget");
          build.push_back(std::move(pb));
          eval.push_back(std::move(pe));
        }
        series[name].push_back({{"split", split.at("split")}, {"build", build}, {"eval", eval}});
      }
    }
  } catch (const json::exception& e) {
    throw DataError(report_path + ": not a report (" + e.what() + ")");
  }
  if (n_splits == 0) throw DataError(report_path + ": report has no splits");
  const double mcr = mcr_sum / static_cast<double>(n_splits);
  const double max_budget = report.at("grid").back().get<double>();
  const double x_max = std::max(max_budget, 2.0 * mcr);
  std::vector<double> xs;
  for (std::size_t i = 1; i <= samples; ++i) xs.push_back(x_max * static_cast<double>(i) / static_cast<double>(samples));
  xs.push_back(mcr);
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  json best = json::array();
  for (double x : xs) best.push_back({{"n", x}, {"H", best_harmonic(x, mcr)}});

  json j;
  j["mcr"] = mcr;
  j["series"] = std::move(series);
  j["best_h"] = std::move(best);
  emit(out_path, j.dump(2) + "\n", out);
  return ok;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Error localization: slices, attention sets and strategy scoring"};
  app.require_subcommand(1);

  DataFlags df;
  SliceFlags sf;
  std::string name, out_dir = ".", strategy, slices_path, out_path, rule_path, rows_path, config;
  std::string report_path;
  double budget = 0.20;
  std::optional<double> opt_budget, max_budget, delta;
  std::uint64_t seed = kDefaultSeed;
  std::optional<std::uint64_t> opt_seed;
  bool dry_run = false;
  std::size_t samples = 200;

  auto* slices = app.add_subcommand("slices", "find error-concentrated slices on a build CSV");
  df.add_to(slices);
  slices->get_option("--pred-col")->required();
  sf.add_to(slices);
  slices->add_option("--name", name, "output name (default: data file stem)");
  slices->add_option("--out-dir", out_dir, "output directory")->capture_default_str();

  auto* fit = app.add_subcommand("fit", "fit one strategy's attention rule");
  df.add_to(fit);
  sf.add_to(fit);
  fit->add_option("--strategy", strategy, "set_cover|rank_order|random_order|worst_label|confidence|random_subset")
      ->required();
  fit->add_option("--budget", budget, "maximum budget B")->capture_default_str();
  fit->add_option("--seed", seed, "seed for random strategies")->capture_default_str();
  fit->add_option("--slices", slices_path, "slices JSON (default: found on --data)");
  fit->add_option("--out", out_path, "rule JSON path (default: stdout)");

  auto* apply = app.add_subcommand("apply", "materialize a rule on a dataset");
  df.add_to(apply);
  apply->add_option("--rule", rule_path, "rule JSON")->required();
  apply->add_option("--budget", opt_budget, "budget (default: the rule's B)");
  apply->add_option("--out", out_path, "CSV path (default: stdout)");

  auto* stats = app.add_subcommand("stats", "attention-set statistics");
  df.add_to(stats);
  stats->add_option("--rule", rule_path, "rule JSON");
  stats->add_option("--rows", rows_path, "CSV with a 'row' column, as written by apply");
  stats->add_option("--budget", opt_budget, "budget for --rule (default: the rule's B)");
  stats->add_option("--out", out_path, "JSON path (default: stdout)");

  auto* experiment = app.add_subcommand("experiment", "run a full experiment from a JSON config");
  experiment->add_option("--config", config, "experiment config")->required();
  experiment->add_flag("--dry-run", dry_run, "validate the config only");
  experiment->add_option("--seed", opt_seed, "override the master seed");
  experiment->add_option("--max-budget", max_budget, "override B");
  experiment->add_option("--delta", delta, "override the grid step");
  experiment->add_option("--out-dir", out_dir, "report directory")->capture_default_str();

  auto* plot = app.add_subcommand("plot-data", "per-strategy (n, m) series and the best-H curve");
  plot->add_option("--report", report_path, "report.json")->required();
  plot->add_option("--samples", samples, "points on the best-H curve")->capture_default_str();
  plot->add_option("--out", out_path, "JSON path (default: stdout)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? ok : usage;
  }

  try {
    if (*slices) return cmd_slices(df, sf, name, out_dir, out);
    if (*fit) return cmd_fit(df, sf, strategy, budget, seed, slices_path, out_path, out);
    if (*apply) return cmd_apply(df, rule_path, opt_budget, out_path, out);
    if (*stats) return cmd_stats(df, rule_path, rows_path, opt_budget, out_path, out);
    if (*experiment) return cmd_experiment(config, dry_run, opt_seed, max_budget, delta, out_dir, out);
    if (*plot) return cmd_plot_data(report_path, samples, out_path, out);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return usage;
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << "\n";
    return usage;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return data_error;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return data_error;
  }
  return usage;
}

}  // namespace errloc::cli

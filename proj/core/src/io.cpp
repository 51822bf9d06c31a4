#include "errloc/io.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>

#include "errloc/csv.hpp"
#include "errloc/error.hpp"

namespace errloc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

template <class F>
auto guarded(const char* what, F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw DataError(std::string(what) + ": " + e.what());
  }
}

}  // namespace

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json to_json(const Predicate& p) {
  json j;
  j["feature"] = p.feature;
  j["kind"] = std::string(to_string(p.kind));
  if (p.kind == ColumnKind::numeric) {
    j["lo"] = finite_or_null(p.lo);
    j["hi"] = finite_or_null(p.hi);
  } else {
    j["values"] = p.values;
  }
  return j;
}

Predicate predicate_from_json(const json& j) {
  return guarded("predicate", [&] {
    const auto kind = column_kind_from_string(j.at("kind").get<std::string>());
    auto feature = j.at("feature").get<std::string>();
    if (kind == ColumnKind::categorical) {
      return Predicate::category_set(std::move(feature), j.at("values").get<std::vector<std::string>>());
    }
    const double lo = j.at("lo").is_null() ? -kInf : j.at("lo").get<double>();
    const double hi = j.at("hi").is_null() ? kInf : j.at("hi").get<double>();
    return Predicate::interval(std::move(feature), lo, hi);
  });
}

json to_json(const Slice& s) {
  json preds = json::array();
  for (const auto& p : s.predicates) preds.push_back(to_json(p));
  json j;
  j["description"] = render(s);
  j["predicates"] = std::move(preds);
  j["support"] = s.support;
  j["errors"] = s.errors;
  j["accuracy"] = s.accuracy;
  j["p_value"] = s.p_value;
  j["rank"] = s.rank;
  return j;
}

Slice slice_from_json(const json& j) {
  return guarded("slice", [&] {
    Slice s;
    for (const auto& p : j.at("predicates")) s.predicates.push_back(predicate_from_json(p));
    s.support = j.at("support").get<std::size_t>();
    s.errors = j.at("errors").get<std::size_t>();
    s.accuracy = j.at("accuracy").get<double>();
    s.p_value = j.at("p_value").get<double>();
    s.rank = j.at("rank").get<double>();
    return s;
  });
}

json slices_to_json(const std::vector<Slice>& slices) {
  json arr = json::array();
  for (const auto& s : slices) arr.push_back(to_json(s));
  return arr;
}

std::vector<Slice> slices_from_json(const json& j) {
  const json& arr = j.is_object() && j.contains("slices") ? j.at("slices") : j;
  if (!arr.is_array()) throw DataError("slices: expected an array");
  std::vector<Slice> out;
  for (const auto& s : arr) out.push_back(slice_from_json(s));
  return out;
}

json to_json(const AttentionRule& rule) {
  json j;
  j["strategy"] = std::string(to_string(rule.strategy));
  j["max_budget"] = rule.max_budget;
  j["build_rows"] = rule.build_rows;
  j["build_fingerprint"] = rule.build_fingerprint;
  json body;
  std::visit(
      [&](const auto& b) {
        using T = std::decay_t<decltype(b)>;
        if constexpr (std::is_same_v<T, SliceUnionRule>) {
          body["slices"] = slices_to_json(b.slices);
          body["cumulative_union"] = b.cumulative_union;
        } else if constexpr (std::is_same_v<T, LabelRule>) {
          body["labels"] = b.labels;
          body["error_rates"] = b.error_rates;
          body["cumulative_count"] = b.cumulative_count;
        } else if constexpr (std::is_same_v<T, ConfidenceRule>) {
          body["thresholds"] = b.thresholds;
          body["cumulative_count"] = b.cumulative_count;
        } else {
          body["seed"] = b.seed;
        }
      },
      rule.body);
  j["body"] = std::move(body);
  return j;
}

AttentionRule rule_from_json(const json& j) {
  return guarded("rule", [&] {
    AttentionRule rule;
    try {
      rule.strategy = strategy_from_string(j.at("strategy").get<std::string>());
    } catch (const InvalidArgument& e) {
      throw DataError(e.what());
    }
    rule.max_budget = j.at("max_budget").get<double>();
    rule.build_rows = j.at("build_rows").get<std::size_t>();
    rule.build_fingerprint = j.at("build_fingerprint").get<std::uint64_t>();
    const json& body = j.at("body");
    std::size_t elements = 0;
    std::size_t counts = 0;
    switch (rule.strategy) {
      case Strategy::set_cover:
      case Strategy::rank_order:
      case Strategy::random_order: {
        SliceUnionRule b;
        b.slices = slices_from_json(body.at("slices"));
        b.cumulative_union = body.at("cumulative_union").get<std::vector<std::size_t>>();
        elements = b.slices.size();
        counts = b.cumulative_union.size();
        rule.body = std::move(b);
        break;
      }
      case Strategy::worst_label: {
        LabelRule b;
        b.labels = body.at("labels").get<std::vector<std::string>>();
        b.error_rates = body.at("error_rates").get<std::vector<double>>();
        b.cumulative_count = body.at("cumulative_count").get<std::vector<std::size_t>>();
        elements = b.labels.size();
        counts = b.cumulative_count.size();
        if (b.error_rates.size() != elements) throw DataError("rule: label arrays differ in length");
        rule.body = std::move(b);
        break;
      }
      case Strategy::confidence: {
        ConfidenceRule b;
        b.thresholds = body.at("thresholds").get<std::vector<double>>();
        b.cumulative_count = body.at("cumulative_count").get<std::vector<std::size_t>>();
        elements = b.thresholds.size();
        counts = b.cumulative_count.size();
        rule.body = std::move(b);
        break;
      }
      case Strategy::random_subset:
        rule.body = RandomSubsetRule{body.at("seed").get<std::uint64_t>()};
        elements = counts = 1;
        break;
    }
    if (elements == 0 || elements != counts) throw DataError("rule: malformed body");
    if (!(rule.max_budget > 0.0 && rule.max_budget <= 1.0)) throw DataError("rule: bad max_budget");
    return rule;
  });
}

json to_json(const FitFailure& failure) {
  json j;
  j["strategy"] = std::string(to_string(failure.strategy));
  j["fit_failure"] = failure.reason;
  return j;
}

json to_json(const FitResult& result) {
  return std::visit([](const auto& r) { return to_json(r); }, result);
}

FitResult fit_result_from_json(const json& j) {
  if (j.is_object() && j.contains("fit_failure")) {
    return guarded("fit failure", [&]() -> FitResult {
      return FitFailure{strategy_from_string(j.at("strategy").get<std::string>()),
                        j.at("fit_failure").get<std::string>()};
    });
  }
  return rule_from_json(j);
}

json to_json(const AttentionStats& s) {
  json j;
  j["N"] = s.n;
  j["N_frac"] = s.n_frac;
  j["M"] = s.m;
  j["MC"] = optional_json(s.mc);
  j["MCR"] = optional_json(s.error_rate);
  j["H"] = optional_json(s.harmonic);
  j["sanitized_rate"] = optional_json(s.sanitized_rate);
  j["fixed_rate"] = s.fixed_rate;
  return j;
}

json to_json(const StepFunction& sf) {
  json pts = json::array();
  for (std::size_t i = 0; i < sf.budgets.size(); ++i) {
    json p;
    p["budget"] = sf.budgets[i];
    p["n"] = sf.points[i] ? json(sf.points[i]->n) : json(nullptr);
    p["m"] = sf.points[i] ? json(sf.points[i]->m) : json(nullptr);
    pts.push_back(std::move(p));
  }
  return pts;
}

StepFunction step_function_from_json(const json& j) {
  return guarded("step function", [&] {
    StepFunction sf;
    for (const auto& p : j) {
      sf.budgets.push_back(p.at("budget").get<double>());
      if (p.at("n").is_null() || p.at("m").is_null()) {
        sf.points.emplace_back();
      } else {
        sf.points.push_back(StepPoint{p.at("n").get<double>(), p.at("m").get<double>()});
      }
    }
    return sf;
  });
}

void write_step_csv(const StepFunction& sf, std::ostream& out) {
  csv::write_record(out, {"budget", "n", "m"});
  for (std::size_t i = 0; i < sf.budgets.size(); ++i) {
    const auto& p = sf.points[i];
    csv::write_record(out, {csv::format_number(sf.budgets[i]), p ? csv::format_number(p->n) : "",
                            p ? csv::format_number(p->m) : ""});
  }
}

void write_file_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw DataError("write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp);
    throw DataError("cannot rename into " + path + ": " + ec.message());
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json read_json_file(const std::string& path) {
  const std::string text = read_file(path);
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw DataError(path + ": " + e.what());
  }
}

}  // namespace errloc

#include "errloc/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "errloc/csv.hpp"
#include "errloc/error.hpp"
#include "errloc/rng.hpp"

namespace errloc {

std::string_view to_string(ColumnKind kind) noexcept {
  return kind == ColumnKind::numeric ? "numeric" : "categorical";
}

ColumnKind column_kind_from_string(std::string_view text) {
  if (text == "numeric") return ColumnKind::numeric;
  if (text == "categorical") return ColumnKind::categorical;
  throw SchemaError("unknown column kind '" + std::string(text) + "'");
}

FeatureColumn FeatureColumn::make_numeric(std::string name, std::vector<double> values) {
  for (double v : values) {
    if (std::isinf(v)) throw InvalidArgument("column '" + name + "': infinite value");
  }
  FeatureColumn col;
  col.column = {std::move(name), ColumnKind::numeric};
  col.numeric = std::move(values);
  return col;
}

FeatureColumn FeatureColumn::make_categorical(std::string name,
                                              const std::vector<std::string>& values) {
  std::set<std::string> distinct;
  for (const auto& v : values) {
    if (!v.empty()) distinct.insert(v);
  }
  auto levels = std::make_shared<std::vector<std::string>>(distinct.begin(), distinct.end());
  std::unordered_map<std::string, std::int32_t> index;
  for (std::size_t i = 0; i < levels->size(); ++i) {
    index.emplace((*levels)[i], static_cast<std::int32_t>(i));
  }
  FeatureColumn col;
  col.column = {std::move(name), ColumnKind::categorical};
  col.codes.reserve(values.size());
  for (const auto& v : values) {
    col.codes.push_back(v.empty() ? kMissingCode : index.at(v));
  }
  col.levels = std::move(levels);
  return col;
}

bool FeatureColumn::is_missing(std::size_t row) const {
  return kind() == ColumnKind::numeric ? std::isnan(numeric[row]) : codes[row] == kMissingCode;
}

std::optional<std::int32_t> FeatureColumn::code_of(std::string_view level) const {
  if (!levels) return std::nullopt;
  const auto it = std::lower_bound(levels->begin(), levels->end(), level);
  if (it == levels->end() || *it != level) return std::nullopt;
  return static_cast<std::int32_t>(it - levels->begin());
}

std::string FeatureColumn::cell_text(std::size_t row) const {
  if (is_missing(row)) return {};
  if (kind() == ColumnKind::numeric) return csv::format_number(numeric[row]);
  return level(codes[row]);
}

namespace {

std::size_t infer_rows(const DatasetParts& p) {
  if (!p.features.empty()) return p.features.front().size();
  if (p.labels) return p.labels->size();
  if (p.predictions) return p.predictions->size();
  if (p.confidence) return p.confidence->size();
  return p.row_ids.size();
}

}  // namespace

Dataset::Dataset(DatasetParts parts)
    : rows_(infer_rows(parts)),
      features_(std::move(parts.features)),
      labels_(std::move(parts.labels)),
      predictions_(std::move(parts.predictions)),
      confidence_(std::move(parts.confidence)),
      row_ids_(std::move(parts.row_ids)),
      names_(std::move(parts.names)) {
  if (rows_ == 0) throw InvalidArgument("dataset must have at least one row");
  std::set<std::string> seen;
  for (const auto& f : features_) {
    if (f.size() != rows_) throw InvalidArgument("column '" + f.name() + "' has wrong length");
    if (!seen.insert(f.name()).second) {
      throw SchemaError("duplicate column name '" + f.name() + "'");
    }
    if (f.kind() == ColumnKind::categorical && !f.levels) {
      throw InvalidArgument("categorical column '" + f.name() + "' has no levels");
    }
  }
  auto check_len = [&](std::size_t n, const char* what) {
    if (n != rows_) throw InvalidArgument(std::string(what) + " vector has wrong length");
  };
  if (labels_) check_len(labels_->size(), "label");
  if (predictions_) check_len(predictions_->size(), "prediction");
  if (confidence_) {
    check_len(confidence_->size(), "confidence");
    for (double c : *confidence_) {
      if (!(c >= 0.0 && c <= 1.0)) throw InvalidArgument("confidence outside [0,1]");
    }
  }
  if (row_ids_.empty()) {
    row_ids_.resize(rows_);
    std::iota(row_ids_.begin(), row_ids_.end(), std::size_t{0});
  }
  check_len(row_ids_.size(), "row id");
}

std::optional<std::size_t> Dataset::find_feature(std::string_view name) const {
  for (std::size_t i = 0; i < features_.size(); ++i) {
    if (features_[i].name() == name) return i;
  }
  return std::nullopt;
}

std::vector<Column> Dataset::columns() const {
  std::vector<Column> out;
  out.reserve(features_.size());
  for (const auto& f : features_) out.push_back(f.column);
  return out;
}

const std::vector<std::string>& Dataset::labels() const {
  if (!labels_) throw DataError("dataset has no label column");
  return *labels_;
}

const std::vector<std::string>& Dataset::predictions() const {
  if (!predictions_) throw DataError("dataset has no prediction column");
  return *predictions_;
}

const std::vector<double>& Dataset::confidence() const {
  if (!confidence_) throw DataError("dataset has no confidence column");
  return *confidence_;
}

const std::vector<std::uint8_t>& Dataset::correct() const {
  if (!correct_) throw DataError("correctness indicator not derived (needs labels and predictions)");
  return *correct_;
}

std::size_t Dataset::error_count() const {
  const auto& z = correct();
  return static_cast<std::size_t>(std::count(z.begin(), z.end(), std::uint8_t{0}));
}

double Dataset::error_rate() const {
  return static_cast<double>(error_count()) / static_cast<double>(rows_);
}

std::size_t Dataset::error_count(std::span<const std::size_t> rows) const {
  const auto& z = correct();
  std::size_t m = 0;
  for (std::size_t r : rows) m += z.at(r) == 0;
  return m;
}

Dataset Dataset::with_predictions(std::vector<std::string> predictions,
                                  std::optional<std::vector<double>> confidence) const {
  DatasetParts parts{features_, labels_, std::move(predictions), std::move(confidence), row_ids_,
                     names_};
  return Dataset(std::move(parts));
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  if (indices.empty()) throw InvalidArgument("subset: empty index set");
  for (std::size_t i : indices) {
    if (i >= rows_) throw InvalidArgument("subset: index " + std::to_string(i) + " out of range");
  }
  auto pick = [&](const auto& v) {
    std::decay_t<decltype(v)> out;
    out.reserve(indices.size());
    for (std::size_t i : indices) out.push_back(v[i]);
    return out;
  };

  DatasetParts parts;
  parts.names = names_;
  parts.features.reserve(features_.size());
  for (const auto& f : features_) {
    FeatureColumn col;
    col.column = f.column;
    col.levels = f.levels;
    if (f.kind() == ColumnKind::numeric) {
      col.numeric = pick(f.numeric);
    } else {
      col.codes = pick(f.codes);
    }
    parts.features.push_back(std::move(col));
  }
  if (labels_) parts.labels = pick(*labels_);
  if (predictions_) parts.predictions = pick(*predictions_);
  if (confidence_) parts.confidence = pick(*confidence_);
  parts.row_ids = pick(row_ids_);
  Dataset out(std::move(parts));
  if (correct_) out.correct_ = pick(*correct_);
  return out;
}

Dataset derive_z(const Dataset& d) {
  const auto& y = d.labels();
  const auto& y_hat = d.predictions();
  Dataset out = d;
  std::vector<std::uint8_t> z(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) z[i] = y[i] == y_hat[i] ? 1 : 0;
  out.correct_ = std::move(z);
  return out;
}

// --- CSV ------------------------------------------------------------------

namespace {

std::optional<double> parse_number(std::string_view text) {
  double v = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if (first != last && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc{} || ptr != last || !std::isfinite(v)) return std::nullopt;
  return v;
}

}  // namespace

Dataset read_csv(std::istream& in, const LoadOptions& options) {
  auto records = csv::read_records(in);
  if (records.empty()) throw DataError("empty CSV file");
  const auto& header = records.front();
  const std::size_t width = header.size();
  if (width == 0 || (width == 1 && header[0].empty())) throw SchemaError("missing header row");
  if (records.size() == 1) throw DataError("CSV file has a header but no data rows");

  std::unordered_map<std::string, std::size_t> position;
  for (std::size_t c = 0; c < width; ++c) {
    const std::string name{csv::trim(header[c])};
    if (name.empty()) throw SchemaError("empty column name at position " + std::to_string(c + 1));
    if (!position.emplace(name, c).second) throw SchemaError("duplicate column '" + name + "'");
  }
  auto locate = [&](const std::string& name) -> std::optional<std::size_t> {
    const auto it = position.find(name);
    if (it == position.end()) return std::nullopt;
    return it->second;
  };

  TargetNames names;
  std::optional<std::size_t> label_pos = locate(options.label_col);
  names.label = options.label_col;
  if (!label_pos && options.require_label) {
    throw SchemaError("label column '" + options.label_col + "' not in header");
  }
  std::optional<std::size_t> pred_pos;
  if (options.pred_col) {
    pred_pos = locate(*options.pred_col);
    if (!pred_pos) throw SchemaError("prediction column '" + *options.pred_col + "' not in header");
    names.prediction = *options.pred_col;
  } else {
    pred_pos = locate(names.prediction);
  }
  std::optional<std::size_t> conf_pos;
  if (options.conf_col) {
    conf_pos = locate(*options.conf_col);
    if (!conf_pos) throw SchemaError("confidence column '" + *options.conf_col + "' not in header");
    names.confidence = *options.conf_col;
  } else {
    conf_pos = locate(names.confidence);
  }

  const std::size_t rows = records.size() - 1;
  for (std::size_t r = 1; r < records.size(); ++r) {
    if (records[r].size() != width) {
      throw ParseError(r, "expected " + std::to_string(width) + " fields, found " +
                              std::to_string(records[r].size()));
    }
  }
  auto cell = [&](std::size_t r, std::size_t c) { return csv::trim(records[r + 1][c]); };

  // Feature columns in header order.
  std::vector<std::pair<std::size_t, ColumnKind>> feature_cols;
  if (options.schema.empty()) {
    for (std::size_t c = 0; c < width; ++c) {
      if (c == label_pos || c == pred_pos || c == conf_pos) continue;
      bool numeric = true;
      for (std::size_t r = 0; r < rows && numeric; ++r) {
        const auto text = cell(r, c);
        numeric = text.empty() || parse_number(text).has_value();
      }
      feature_cols.emplace_back(c, numeric ? ColumnKind::numeric : ColumnKind::categorical);
    }
  } else {
    for (const auto& [name, kind] : options.schema) {
      const auto c = locate(name);
      if (!c) throw SchemaError("schema column '" + name + "' not in header");
      if (c == label_pos || c == pred_pos || c == conf_pos) {
        throw SchemaError("schema column '" + name + "' is also a target column");
      }
      feature_cols.emplace_back(*c, kind);
    }
    std::sort(feature_cols.begin(), feature_cols.end());
  }

  DatasetParts parts;
  parts.names = names;
  for (const auto& [c, kind] : feature_cols) {
    const std::string name{csv::trim(header[c])};
    if (kind == ColumnKind::numeric) {
      std::vector<double> values(rows);
      for (std::size_t r = 0; r < rows; ++r) {
        const auto text = cell(r, c);
        if (text.empty()) {
          values[r] = std::nan("");
          continue;
        }
        const auto v = parse_number(text);
        if (!v) {
          throw ParseError(r + 1, "column '" + name + "': cannot parse '" + std::string(text) +
                                      "' as a number");
        }
        values[r] = *v;
      }
      parts.features.push_back(FeatureColumn::make_numeric(name, std::move(values)));
    } else {
      std::vector<std::string> values(rows);
      for (std::size_t r = 0; r < rows; ++r) values[r] = std::string(cell(r, c));
      parts.features.push_back(FeatureColumn::make_categorical(name, values));
    }
  }

  auto read_tokens = [&](std::size_t c, const std::string& what) {
    std::vector<std::string> out(rows);
    for (std::size_t r = 0; r < rows; ++r) {
      out[r] = std::string(cell(r, c));
      if (out[r].empty()) throw ParseError(r + 1, "missing " + what);
    }
    return out;
  };
  if (label_pos) parts.labels = read_tokens(*label_pos, "label");
  if (pred_pos) parts.predictions = read_tokens(*pred_pos, "prediction");
  if (conf_pos) {
    std::vector<double> conf(rows);
    for (std::size_t r = 0; r < rows; ++r) {
      const auto v = parse_number(cell(r, *conf_pos));
      if (!v || *v < 0.0 || *v > 1.0) throw ParseError(r + 1, "confidence must be a number in [0,1]");
      conf[r] = *v;
    }
    parts.confidence = std::move(conf);
  }
  return Dataset(std::move(parts));
}

Dataset load_csv(const std::string& path, const LoadOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  return read_csv(in, options);
}

void write_csv(const Dataset& d, std::ostream& out) {
  std::vector<std::string> fields;
  for (const auto& f : d.features()) fields.push_back(f.name());
  if (d.has_labels()) fields.push_back(d.names().label);
  if (d.has_predictions()) fields.push_back(d.names().prediction);
  if (d.has_confidence()) fields.push_back(d.names().confidence);
  csv::write_record(out, fields);
  for (std::size_t r = 0; r < d.size(); ++r) {
    fields.clear();
    for (const auto& f : d.features()) fields.push_back(f.cell_text(r));
    if (d.has_labels()) fields.push_back(d.labels()[r]);
    if (d.has_predictions()) fields.push_back(d.predictions()[r]);
    if (d.has_confidence()) fields.push_back(csv::format_number(d.confidence()[r]));
    csv::write_record(out, fields);
  }
}

void write_csv(const Dataset& d, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path + "'");
  write_csv(d, out);
}

std::map<std::string, ColumnKind> load_schema(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open schema '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError("schema '" + path + "': " + e.what());
  }
  if (!j.is_object()) throw SchemaError("schema must be an object of column -> kind");
  std::map<std::string, ColumnKind> schema;
  for (const auto& [name, kind] : j.items()) {
    if (!kind.is_string()) throw SchemaError("schema kind for '" + name + "' must be a string");
    schema.emplace(name, column_kind_from_string(kind.get<std::string>()));
  }
  return schema;
}

// --- Splits -----------------------------------------------------------------

std::array<std::size_t, 3> split_sizes(std::size_t n, const SplitFractions& f) {
  const std::array<double, 3> fr{f.train, f.build, f.eval};
  std::array<std::size_t, 3> sizes{};
  std::array<double, 3> remainder{};
  std::size_t assigned = 0;
  for (std::size_t k = 0; k < 3; ++k) {
    const double exact = fr[k] * static_cast<double>(n);
    sizes[k] = static_cast<std::size_t>(std::floor(exact + 1e-9));
    remainder[k] = exact - static_cast<double>(sizes[k]);
    assigned += sizes[k];
  }
  std::array<std::size_t, 3> order{0, 1, 2};
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b] + 1e-12; });
  for (std::size_t i = 0; assigned < n; i = (i + 1) % 3, ++assigned) ++sizes[order[i]];
  return sizes;
}

std::vector<SplitSet> make_splits(const Dataset& d, const SplitFractions& fractions,
                                  std::size_t q, std::uint64_t seed) {
  if (q == 0) throw InvalidArgument("make_splits: Q must be at least 1");
  if (!(fractions.train > 0 && fractions.build > 0 && fractions.eval > 0)) {
    throw InvalidArgument("make_splits: fractions must be positive");
  }
  if (std::abs(fractions.train + fractions.build + fractions.eval - 1.0) > 1e-9) {
    throw InvalidArgument("make_splits: fractions must sum to 1");
  }
  const std::size_t n = d.size();
  const auto sizes = split_sizes(n, fractions);
  std::vector<SplitSet> out;
  out.reserve(q);
  for (std::size_t j = 1; j <= q; ++j) {
    SplitSet s;
    s.q = j;
    s.seed = derive_seed(seed, "split", j);
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    Rng rng(s.seed);
    rng.shuffle(std::span<std::size_t>(perm));
    auto cut = [&](std::size_t from, std::size_t count) {
      std::vector<std::size_t> part(perm.begin() + from, perm.begin() + from + count);
      std::sort(part.begin(), part.end());
      return part;
    };
    s.train = cut(0, sizes[0]);
    s.build = cut(sizes[0], sizes[1]);
    s.eval = cut(sizes[0] + sizes[1], sizes[2]);
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace errloc

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace errloc {

enum class ColumnKind { numeric, categorical };

std::string_view to_string(ColumnKind kind) noexcept;
/// Accepts "numeric" / "categorical"; throws SchemaError otherwise.
ColumnKind column_kind_from_string(std::string_view text);

struct Column {
  std::string name;
  ColumnKind kind = ColumnKind::numeric;
};

inline constexpr std::int32_t kMissingCode = -1;

/// One feature column. Numeric cells are finite doubles with NaN marking a
/// missing cell. Categorical cells are codes into `levels` (sorted
/// lexicographically) with kMissingCode marking a missing cell.
struct FeatureColumn {
  Column column;
  std::vector<double> numeric;
  std::vector<std::int32_t> codes;
  std::shared_ptr<const std::vector<std::string>> levels;

  static FeatureColumn make_numeric(std::string name, std::vector<double> values);
  /// Empty strings become missing cells.
  static FeatureColumn make_categorical(std::string name,
                                        const std::vector<std::string>& values);

  const std::string& name() const noexcept { return column.name; }
  ColumnKind kind() const noexcept { return column.kind; }
  std::size_t size() const noexcept {
    return kind() == ColumnKind::numeric ? numeric.size() : codes.size();
  }
  bool is_missing(std::size_t row) const;
  std::optional<std::int32_t> code_of(std::string_view level) const;
  const std::string& level(std::int32_t code) const { return (*levels)[code]; }
  /// CSV text of a cell: shortest round-trip number, level, or "" when missing.
  std::string cell_text(std::size_t row) const;
};

/// CSV column names of the per-row target vectors.
struct TargetNames {
  std::string label = "label";
  std::string prediction = "prediction";
  std::string confidence = "confidence";
};

struct DatasetParts {
  std::vector<FeatureColumn> features;
  std::optional<std::vector<std::string>> labels;
  std::optional<std::vector<std::string>> predictions;
  std::optional<std::vector<double>> confidence;
  /// Source-row identity of each row; empty means 0..N-1.
  std::vector<std::size_t> row_ids;
  TargetNames names;
};

/// Immutable tabular frame: features, label y, optional prediction, optional
/// confidence and the derived correctness indicator z (z_i = 1 iff y_i == y_hat_i).
class Dataset {
 public:
  /// Validates N >= 1, equal lengths, unique column names and confidence in [0,1].
  explicit Dataset(DatasetParts parts);

  std::size_t size() const noexcept { return rows_; }
  std::size_t num_features() const noexcept { return features_.size(); }
  const std::vector<FeatureColumn>& features() const noexcept { return features_; }
  const FeatureColumn& feature(std::size_t i) const { return features_.at(i); }
  std::optional<std::size_t> find_feature(std::string_view name) const;
  std::vector<Column> columns() const;

  bool has_labels() const noexcept { return labels_.has_value(); }
  bool has_predictions() const noexcept { return predictions_.has_value(); }
  bool has_confidence() const noexcept { return confidence_.has_value(); }
  bool has_correctness() const noexcept { return correct_.has_value(); }

  /// Accessors throw DataError when the vector is absent.
  const std::vector<std::string>& labels() const;
  const std::vector<std::string>& predictions() const;
  const std::vector<double>& confidence() const;
  const std::vector<std::uint8_t>& correct() const;

  const std::vector<std::size_t>& row_ids() const noexcept { return row_ids_; }
  const TargetNames& names() const noexcept { return names_; }

  /// M(D): number of rows with z = 0. Requires z.
  std::size_t error_count() const;
  /// M(D) / N(D). Requires z.
  double error_rate() const;
  /// Number of rows with z = 0 inside `rows`. Requires z.
  std::size_t error_count(std::span<const std::size_t> rows) const;

  /// Copy with the prediction/confidence vectors replaced and z dropped.
  Dataset with_predictions(std::vector<std::string> predictions,
                           std::optional<std::vector<double>> confidence) const;

  /// Row projection in the given order. Throws InvalidArgument on an
  /// out-of-range index or an empty index set.
  Dataset subset(std::span<const std::size_t> indices) const;

  friend Dataset derive_z(const Dataset& d);

 private:
  std::size_t rows_ = 0;
  std::vector<FeatureColumn> features_;
  std::optional<std::vector<std::string>> labels_;
  std::optional<std::vector<std::string>> predictions_;
  std::optional<std::vector<double>> confidence_;
  std::optional<std::vector<std::uint8_t>> correct_;
  std::vector<std::size_t> row_ids_;
  TargetNames names_;
};

/// Sets z_i = 1 iff y_i == y_hat_i (exact match; values are trimmed at load).
/// Throws DataError when labels or predictions are absent. Idempotent.
Dataset derive_z(const Dataset& d);

struct LoadOptions {
  /// Declared feature kinds. Empty: every non-target column is a feature and
  /// its kind is inferred (numeric when every present cell parses as a number).
  /// Non-empty: only the listed columns become features.
  std::map<std::string, ColumnKind> schema;
  std::string label_col = "label";
  bool require_label = true;
  /// nullopt: use a "prediction"/"confidence" column when the header has one.
  std::optional<std::string> pred_col;
  std::optional<std::string> conf_col;
};

/// Reads an RFC-4180 CSV with a header row. Empty cells are missing values.
/// Throws SchemaError for header/column problems, ParseError for bad cells
/// and DataError for an empty file.
Dataset load_csv(const std::string& path, const LoadOptions& options = {});
Dataset read_csv(std::istream& in, const LoadOptions& options = {});

/// Writes features (in order), then label, prediction and confidence columns.
void write_csv(const Dataset& d, std::ostream& out);
void write_csv(const Dataset& d, const std::string& path);

/// Loads {"column": "numeric" | "categorical", ...}.
std::map<std::string, ColumnKind> load_schema(const std::string& path);

struct SplitFractions {
  double train = 0.70;
  double build = 0.15;
  double eval = 0.15;
};

/// Row positions of one train/build/eval partition (each sorted ascending).
struct SplitSet {
  std::size_t q = 1;
  std::vector<std::size_t> train;
  std::vector<std::size_t> build;
  std::vector<std::size_t> eval;
  std::uint64_t seed = 0;
};

/// Partition sizes by largest-remainder apportionment, ties broken in
/// (train, build, eval) order.
std::array<std::size_t, 3> split_sizes(std::size_t n, const SplitFractions& f);

/// Q independent seeded permutations of 0..N-1, each cut into
/// train/build/eval. Throws InvalidArgument when fractions are not positive
/// or do not sum to 1 within 1e-9, or when Q == 0.
std::vector<SplitSet> make_splits(const Dataset& d, const SplitFractions& fractions,
                                  std::size_t q, std::uint64_t seed);

}  // namespace errloc

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "errloc/dataset.hpp"

namespace errloc {

/// Integer-coded view of one feature column used by split search.
///
/// Every row maps to a code in [0, n_codes). The last code is the missing
/// slot: for numeric columns it marks rows routed to the per-node majority
/// side, for categorical columns it is an ordinary category token. Numeric
/// codes are bins in increasing value order; categorical codes follow the
/// column's (lexicographic) level order.
struct EncodedFeature {
  std::size_t column = 0;
  ColumnKind kind = ColumnKind::numeric;
  std::vector<std::uint32_t> codes;
  std::uint32_t n_codes = 1;
  /// Numeric only: smallest / largest observed value per bin.
  std::vector<double> bin_min;
  std::vector<double> bin_max;

  std::uint32_t missing_code() const noexcept { return n_codes - 1; }
};

/// Encodes the given columns of `d`. `max_bins == 0` keeps one bin per
/// distinct numeric value (exact thresholds); otherwise numeric columns with
/// more distinct values are cut into at most `max_bins` quantile bins.
std::vector<EncodedFeature> encode_features(const Dataset& d, std::span<const std::size_t> columns,
                                            std::size_t max_bins = 0);

struct TreeParams {
  /// Root has depth 0; negative means unlimited.
  int max_depth = -1;
  std::size_t min_leaf = 1;
  /// 0 searches every feature at every node.
  std::size_t features_per_split = 0;
  std::uint64_t seed = 0;
};

struct TreeNode {
  /// Index into the encoded feature list; -1 for a leaf.
  std::int32_t feature = -1;
  /// Numeric: rows with code <= split_code go left. Categorical: rows with
  /// code == split_code go left.
  std::uint32_t split_code = 0;
  bool missing_left = false;
  /// Numeric: largest observed value on the left / smallest on the right.
  double left_max = 0.0;
  double right_min = 0.0;
  std::int32_t left = -1;
  std::int32_t right = -1;
  std::uint32_t depth = 0;
  std::size_t count = 0;
  std::vector<std::size_t> class_counts;
  std::uint32_t prediction = 0;

  bool is_leaf() const noexcept { return feature < 0; }
};

/// Binary CART classifier with Gini impurity.
///
/// Nodes are stored in depth-first pre-order (left child first), so leaves
/// appear in left-to-right order. Growth stops at max_depth, min_leaf, a pure
/// node, or when no split leaves min_leaf rows on both sides. Among equal
/// gains the earliest candidate wins: feature order, then smaller threshold
/// or lexicographically smaller category.
class DecisionTree {
 public:
  static DecisionTree fit(std::span<const EncodedFeature> features,
                          std::span<const std::uint32_t> targets, std::uint32_t n_classes,
                          std::vector<std::size_t> rows, const TreeParams& params);

  const std::vector<TreeNode>& nodes() const noexcept { return nodes_; }
  const TreeNode& root() const { return nodes_.front(); }
  std::size_t leaf_count() const noexcept;
  std::uint32_t n_classes() const noexcept { return n_classes_; }

  /// Node index of the leaf reached by row `row` of the encoded data.
  std::size_t leaf_of(std::span<const EncodedFeature> features, std::size_t row) const;

 private:
  friend class TreeBuilder;
  std::vector<TreeNode> nodes_;
  std::uint32_t n_classes_ = 0;
};

}  // namespace errloc

#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "errloc/dataset.hpp"
#include "errloc/tree.hpp"

namespace errloc {

/// One feature condition of a slice: a closed interval on a numeric feature
/// (either end may be infinite) or a value set on a categorical feature.
/// A row whose value is missing never satisfies a predicate.
struct Predicate {
  std::string feature;
  ColumnKind kind = ColumnKind::numeric;
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  std::vector<std::string> values;  // sorted, unique

  static Predicate interval(std::string feature, double lo, double hi);
  static Predicate category_set(std::string feature, std::vector<std::string> values);

  friend bool operator==(const Predicate&, const Predicate&) = default;
};

/// Conjunction of predicates on distinct features, with its statistics on
/// the build dataset it was found on.
struct Slice {
  std::vector<Predicate> predicates;
  std::size_t support = 0;
  std::size_t errors = 0;
  double accuracy = 1.0;
  double p_value = 1.0;
  double rank = 0.0;

  double error_rate() const noexcept {
    return support == 0 ? 0.0 : static_cast<double>(errors) / static_cast<double>(support);
  }
};

struct SliceTreeConfig {
  /// Negative means unlimited; leaves then stop at min_leaf or purity.
  int max_depth = -1;
  /// Defaults to the resolved min_support.
  std::optional<std::size_t> min_leaf;
};

struct SliceConfig {
  /// Largest feature-combination size, 1..3.
  int max_combo = 2;
  /// Defaults to max(20, ceil(0.005 * N(build))).
  std::optional<std::size_t> min_support;
  /// Defaults to build accuracy minus two standard errors of that accuracy.
  std::optional<double> accuracy_threshold;
  double alpha = 0.01;
  SliceTreeConfig tree;
  /// Threads used across feature combinations (0 = hardware concurrency).
  std::size_t workers = 0;
};

std::size_t default_min_support(std::size_t build_rows);
/// acc - 2 * sqrt(acc * (1 - acc) / N) with acc = 1 - MCR(build). Requires z.
double default_accuracy_threshold(const Dataset& build);

/// Row positions of `d` satisfying every predicate. Predicates are matched by
/// feature name; throws SchemaError when `d` lacks a feature or its kind differs.
std::vector<std::size_t> slice_members(const Slice& slice, const Dataset& d);
/// Membership flag per row of `d`.
std::vector<std::uint8_t> slice_mask(const Slice& slice, const Dataset& d);

/// All unordered combinations of feature positions with size 1..max_combo,
/// by size, then lexicographically.
std::vector<std::vector<std::size_t>> feature_combinations(std::size_t n_features, int max_combo);

/// CART on target z restricted to `features`, together with its encoding.
struct ErrorTree {
  std::vector<EncodedFeature> encoded;
  DecisionTree tree;
};

/// Grows the error tree (class 0 = misclassified, class 1 = correct) on the
/// given feature positions with exact numeric thresholds.
ErrorTree grow_tree(const Dataset& build, std::span<const std::size_t> features,
                    const TreeParams& params);

/// Converts the root-to-leaf path of `leaf` into predicates, one per feature:
/// numeric splits collapse into one interval, categorical splits into one
/// value set. Returns nullopt for the root or when a value set becomes empty.
std::optional<std::vector<Predicate>> leaf_predicates(const ErrorTree& tree, const Dataset& build,
                                                      std::size_t leaf);

struct SliceSearch {
  std::vector<Slice> slices;
  std::size_t trees_grown = 0;
  std::size_t leaves_examined = 0;
  std::size_t min_support = 0;
  double accuracy_threshold = 0.0;
};

/// Grows one error tree per feature combination, keeps leaves whose slice
/// meets the support, accuracy and significance filters (lower-tailed
/// hypergeometric test of the slice's correct count), removes exact
/// duplicates and ranks the survivors. Deterministic for a given input;
/// result order is (combination order, leaf order).
SliceSearch search_slices(const Dataset& build, const SliceConfig& cfg = {});
std::vector<Slice> find_slices(const Dataset& build, const SliceConfig& cfg = {});

/// Populates rank in [0,1]. A least-squares polynomial (degree <= 2) of error
/// rate against log(support) is fitted across the slices and made
/// non-increasing in support; rank is the min-max normalized residual above
/// that curve. Equal residuals give every slice 0.5. Independent of list order.
std::vector<Slice> rank_slices(std::vector<Slice> slices);

/// `(RACE ∈ {Black, White}) & (10 ≤ EXPERIENCE ≤ 13)`.
std::string render(const Predicate& p);
std::string render(const Slice& s);

}  // namespace errloc

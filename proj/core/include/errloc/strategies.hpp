#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "errloc/dataset.hpp"
#include "errloc/slicing.hpp"

namespace errloc {

enum class Strategy { set_cover, rank_order, random_order, worst_label, confidence, random_subset };

inline constexpr std::array<Strategy, 6> kAllStrategies{
    Strategy::set_cover,   Strategy::rank_order, Strategy::random_order,
    Strategy::worst_label, Strategy::confidence, Strategy::random_subset};

std::string_view to_string(Strategy s) noexcept;
/// Throws InvalidArgument for an unknown name.
Strategy strategy_from_string(std::string_view name);
/// True for the strategies built from slice unions.
bool uses_slices(Strategy s) noexcept;

/// Largest attention-set size allowed by budget b on n rows: floor(b*n),
/// with a 1e-9 allowance for binary rounding of b.
std::size_t budget_capacity(double b, std::size_t n);

/// Increasing budgets 0 < b_1 < ... < b_K = B.
struct BudgetGrid {
  std::vector<double> budgets;

  /// delta, 2*delta, ... with the last point pinned to B.
  static BudgetGrid uniform(double max_budget, double delta);
  double max_budget() const { return budgets.back(); }
  std::size_t size() const noexcept { return budgets.size(); }
};

/// Ordered slices with the size of each prefix union on the build dataset.
struct SliceUnionRule {
  std::vector<Slice> slices;
  std::vector<std::size_t> cumulative_union;
};

/// Labels in descending build error rate, with cumulative build row counts.
struct LabelRule {
  std::vector<std::string> labels;
  std::vector<double> error_rates;
  std::vector<std::size_t> cumulative_count;
};

/// Distinct build confidence values (ascending) and #rows with c <= value.
struct ConfidenceRule {
  std::vector<double> thresholds;
  std::vector<std::size_t> cumulative_count;
};

struct RandomSubsetRule {
  std::uint64_t seed = 0;
};

/// Fitted, immutable selector. Everything needed to materialize an attention
/// set at any budget b <= max_budget on any schema-compatible dataset is
/// stored here; the build dataset is not referenced.
struct AttentionRule {
  Strategy strategy = Strategy::set_cover;
  std::variant<SliceUnionRule, LabelRule, ConfidenceRule, RandomSubsetRule> body;
  double max_budget = 0.0;
  std::size_t build_rows = 0;
  std::uint64_t build_fingerprint = 0;
};

/// The strategy could not produce a budget-satisfying rule. All statistics
/// derived from it are undefined, which is different from an empty set.
struct FitFailure {
  Strategy strategy = Strategy::set_cover;
  std::string reason;
};

using FitResult = std::variant<AttentionRule, FitFailure>;

inline bool fitted(const FitResult& r) noexcept { return std::holds_alternative<AttentionRule>(r); }

/// Row positions selected on a target dataset.
struct AttentionSet {
  std::vector<std::size_t> indices;  // ascending
  double budget = 0.0;
  Strategy strategy = Strategy::set_cover;
  /// Number of leading slices / labels / thresholds in effect.
  std::size_t prefix = 0;

  std::size_t size() const noexcept { return indices.size(); }
};

/// Identity of a dataset's rows (FNV over size and row ids).
std::uint64_t fingerprint(const Dataset& d);

/// Greedy weighted set cover over the slices. Each step adds the slice with
/// the best ratio of newly covered errors (reward) to newly covered
/// non-errors (cost); zero-cost slices come first by reward. Ties: larger
/// reward, smaller support, earlier position. Slices larger than the
/// budget on their own are not candidates. Stops when no slice adds an
/// error or when the next choice would push the union above B*N(build).
FitResult fit_set_cover(const Dataset& build, std::span<const Slice> slices, double max_budget);
/// Descending rank (ties: smaller p-value, earlier position); maximal prefix
/// whose union stays within B*N(build).
FitResult fit_rank_order(const Dataset& build, std::span<const Slice> slices, double max_budget);
/// Seeded uniform permutation; same prefix rule as rank order.
FitResult fit_random_order(const Dataset& build, std::span<const Slice> slices, double max_budget,
                           std::uint64_t seed);
/// Labels by descending error rate (ties: lexicographic) while their total
/// build count stays within B*N(build).
FitResult fit_worst_label(const Dataset& build, double max_budget);
/// Largest confidence value t with 0 < #{c_i <= t} <= B*N(build).
FitResult fit_confidence(const Dataset& build, double max_budget);
FitResult fit_random_subset(const Dataset& build, double max_budget, std::uint64_t seed);

FitResult fit_strategy(Strategy s, const Dataset& build, std::span<const Slice> slices,
                       double max_budget, std::uint64_t seed);

/// Number of rule elements in effect at budget b, chosen on the build
/// dataset; 0 means the rule is undefined at b.
std::size_t active_prefix(const AttentionRule& rule, double b);

/// Attention set of `target` at budget b, or nullopt when the rule is
/// undefined at b. Slice, label and confidence rules pick their prefix on the
/// build dataset and apply it to `target`, so a non-build target may exceed
/// the budget or come back empty. Random subsets draw floor(b*N(target))
/// rows. Throws InvalidArgument when b is outside (0, max_budget] and
/// DataError when the target lacks labels (worst label) or confidences.
std::optional<AttentionSet> materialize(const AttentionRule& rule, const Dataset& target, double b);

}  // namespace errloc

#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "errloc/dataset.hpp"
#include "errloc/strategies.hpp"

namespace errloc {

/// Statistics of an attention set X(D) on its dataset D. Ratio fields are
/// nullopt where their denominator is zero.
struct AttentionStats {
  std::size_t n = 0;                          // N(X(D))
  double n_frac = 0.0;                        // N(X(D)) / N(D)
  std::size_t m = 0;                          // M(X(D))
  std::optional<double> mc;                   // M(X(D)) / M(D)
  std::optional<double> error_rate;           // M(X(D)) / N(X(D))
  std::optional<double> harmonic;             // 2 MC M̄ / (MC + M̄), 0 when both are 0
  std::optional<double> sanitized_rate;       // (M(D) - M(X(D))) / (N(D) - N(X(D)))
  double fixed_rate = 0.0;                    // (M(D) - M(X(D))) / N(D)
};

/// Requires z on `d`; indices are row positions of `d`.
AttentionStats attention_stats(const Dataset& d, std::span<const std::size_t> indices);
AttentionStats attention_stats(const Dataset& d, const AttentionSet& att);

struct StepPoint {
  double n = 0.0;  // fractional size N̄
  double m = 0.0;  // misclassification coverage MC
};

/// (N̄, MC) per grid budget; nullopt where the rule is undefined (or MC is,
/// because the dataset has no errors).
struct StepFunction {
  std::vector<double> budgets;
  std::vector<std::optional<StepPoint>> points;

  std::size_t defined() const noexcept;
};

StepFunction step_function(const AttentionRule& rule, const Dataset& d, const BudgetGrid& grid);
/// All-gap step function, used for a strategy whose fit failed.
StepFunction undefined_step_function(const BudgetGrid& grid);

/// Area under the MC step function normalized by the largest fractional size
/// reached: sum m_i (n_{i+1} - n_i) / n_K over consecutive defined points.
/// The span before the first point and gaps add no area. nullopt when the
/// grid has fewer than two budgets, no point is defined or n_K = 0.
std::optional<double> auc(const StepFunction& sf);

/// sum (m_build - m_eval)^2 / sum m_build^2 over budgets defined on both.
/// Higher means worse generalization. nullopt when the denominator is 0.
std::optional<double> generalizability(const StepFunction& build, const StepFunction& eval);

/// MC interpolated linearly along the defined points at fractional size x;
/// nullopt outside [n_first, n_last].
std::optional<double> interpolate_mc(const StepFunction& sf, double x);

/// Weighted average over budgets of the population variance of interpolated
/// MC across splits, each budget weighted by 1/sqrt(#splits defined there).
/// Budgets with no defined split are skipped. Throws InvalidArgument for
/// fewer than two step functions; nullopt when no budget has a split.
std::optional<double> stability(std::span<const StepFunction> splits);

struct MeanValue {
  std::optional<double> value;
  std::size_t undefined = 0;
};

/// Arithmetic mean of the defined values; the count of undefined ones is kept.
MeanValue mean_defined(std::span<const std::optional<double>> values);

enum class CriterionSense { benefit, cost };

/// TOPSIS closeness d- / (d+ + d-) per row of `matrix` (alternatives x
/// criteria), with vector-normalized columns. A single alternative scores 1;
/// an alternative at both the ideal and anti-ideal point scores 0.5.
std::vector<double> topsis(const std::vector<std::vector<double>>& matrix,
                           std::span<const double> weights, std::span<const CriterionSense> senses);

struct StrategyScorecard {
  Strategy strategy = Strategy::set_cover;
  MeanValue auc_build;
  MeanValue auc_eval;
  MeanValue generalizability;
  std::optional<double> stability;
  std::optional<double> topsis;
  std::size_t fit_failures = 0;
};

struct TopsisWeights {
  double performance = 0.6;
  double generalizability = 0.2;
  double stability = 0.2;
};

/// Fills `topsis` for every scorecard whose three criteria are defined
/// (AUC benefit, generalizability and stability cost); the rest stay unranked.
void score_strategies(std::vector<StrategyScorecard>& cards, const TopsisWeights& weights = {});

/// Best achievable H at fractional size n on a dataset with error rate mcr:
/// the set holds min(n, mcr) * N errors. Peaks at n = mcr with H = 1.
double best_harmonic(double n_frac, double mcr);

}  // namespace errloc
